import math

import numpy as np
import pytest

from sheafnn.errors import ContractError
from sheafnn.pipeline import auc_score, majority_vote, metrics, wilson_ci


def test_vote_examples():
    labels, scores = majority_vote(np.array([[1, 1, 1, 0, 0], [0, 0, 0, 0, 1], [1, 1, 1, 1, 1], [0] * 5]))
    np.testing.assert_array_equal(labels, [1, 0, 1, 0])
    np.testing.assert_allclose(scores, [0.6, 0.2, 1.0, 0.0])


def test_vote_tie_goes_to_one():
    labels, scores = majority_vote(np.array([[1, 0], [0, 1]]))
    np.testing.assert_array_equal(labels, [1, 1])


def test_vote_missing():
    with pytest.raises(ContractError):
        majority_vote(np.array([[1, -1, 0]]))
    with pytest.raises(ContractError):
        majority_vote(np.zeros((3, 0)))


def test_metrics_perfect():
    m = metrics([0, 1, 1], [0, 1, 1], [0.1, 0.9, 0.8])
    for key in ("accuracy", "precision", "recall", "f1", "auc"):
        assert m[key] == 1.0
    assert not m["precision_undefined"]


def test_metrics_confusion():
    y = [1, 1, 1, 0, 0]
    p = [1, 1, 0, 1, 0]
    m = metrics(y, p, p)
    assert m["precision"] == pytest.approx(2 / 3)
    assert m["recall"] == pytest.approx(2 / 3)
    assert m["f1"] == pytest.approx(2 / 3)
    assert m["correct"] == 3 and m["accuracy"] == 0.6


def test_metrics_constant_scores():
    assert metrics([0, 1, 0, 1], [0, 0, 0, 0], [0.5] * 4)["auc"] == 0.5


def test_metrics_no_positive_predictions():
    m = metrics([0, 1], [0, 0], [0.0, 0.0])
    assert m["precision"] == 0.0 and m["precision_undefined"]


def test_metrics_validation():
    with pytest.raises(ContractError):
        metrics([0, 1], [0], [0, 1])
    with pytest.raises(ContractError):
        metrics([0, 1], [0, 1], [0, 2])


def test_auc_oracle(rng):
    y = rng.integers(0, 2, 40)
    s = np.round(rng.random(40), 1)  # coarse grid forces ties
    pos, neg = s[y == 1], s[y == 0]
    brute = sum((a > b) + 0.5 * (a == b) for a in pos for b in neg) / (len(pos) * len(neg))
    assert auc_score(y, s) == pytest.approx(brute, abs=1e-15)
    assert math.isnan(auc_score([1, 1], [0.2, 0.3]))


def test_wilson_table_values():
    lo, hi = wilson_ci(221, 224)
    assert abs(lo - 0.961) <= 1e-3 and abs(hi - 0.995) <= 1e-3
    lo, hi = wilson_ci(208, 224)
    assert abs(lo - 0.887) <= 1e-3 and abs(hi - 0.956) <= 1e-3


def test_wilson_boundaries():
    assert wilson_ci(0, 1)[0] == 0.0
    assert wilson_ci(1, 1)[1] == 1.0
    with pytest.raises(ContractError):
        wilson_ci(3, 2)


def test_wilson_formula(rng):
    for _ in range(20):
        n = int(rng.integers(1, 500))
        k = int(rng.integers(0, n + 1))
        p, z = k / n, 1.96
        c = (p + z * z / (2 * n)) / (1 + z * z / n)
        h = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)
        lo, hi = wilson_ci(k, n)
        assert lo == pytest.approx(max(0.0, c - h)) and hi == pytest.approx(min(1.0, c + h))
