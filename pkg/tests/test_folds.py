import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sheafnn.errors import ContractError
from sheafnn.pipeline import repeated_plans, stratified_kfold

LABELS = np.array([1] * 147 + [0] * 77)


def test_reference_sized_counts():
    plans = stratified_kfold(LABELS, 10, seed=0)
    assert len(plans) == 10
    for p in plans:
        assert 22 <= len(p.test) <= 23
        pos = int(LABELS[list(p.test)].sum())
        assert pos in (14, 15)
        assert len(p.test) - pos in (7, 8)


def test_balanced_small():
    y = np.array([0, 1] * 5)
    for p in stratified_kfold(y, 5, seed=3):
        assert sorted(y[list(p.test)].tolist()) == [0, 1]


def test_deterministic():
    assert stratified_kfold(LABELS, 10, 5) == stratified_kfold(LABELS, 10, 5)
    assert stratified_kfold(LABELS, 10, 5) != stratified_kfold(LABELS, 10, 6)


def test_small_class_rejected():
    with pytest.raises(ContractError):
        stratified_kfold(np.array([0] * 10 + [1] * 3), 5, 0)
    with pytest.raises(ContractError):
        stratified_kfold(LABELS, 1, 0)


def test_repetitions_differ_and_partition():
    plans = repeated_plans(LABELS, 10, 5, seed=1)
    assert len(plans) == 50
    for r in range(5):
        tests = np.concatenate([p.test for p in plans if p.repetition == r])
        np.testing.assert_array_equal(np.sort(tests), np.arange(224))
    assert plans[0].test != plans[10].test


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 6), st.integers(0, 40), st.integers(0, 40), st.integers(0, 2**31 - 1))
def test_plan_invariants(k, extra0, extra1, seed):
    y = np.array([0] * (k + extra0) + [1] * (k + extra1))
    n = len(y)
    plans = stratified_kfold(y, k, seed)
    tests = np.concatenate([p.test for p in plans])
    np.testing.assert_array_equal(np.sort(tests), np.arange(n))
    for p in plans:
        tr, va, te = set(p.train), set(p.valid), set(p.test)
        assert not (tr & va or tr & te or va & te)
        assert tr | va | te == set(range(n))
        for c in (0, 1):
            ideal = np.sum(y == c) / k
            assert abs(np.sum(y[list(p.test)] == c) - ideal) <= 1
            rest = np.sum(y[list(tr | va)] == c)
            n_valid = np.sum(y[list(va)] == c)
            assert n_valid == max(1, int(round(0.1 * rest)))
