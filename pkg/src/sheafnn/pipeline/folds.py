"""Repeated stratified k-fold plans with a stratified validation hold-out."""

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError

VALID_FRACTION = 0.1


@dataclass(frozen=True)
class FoldPlan:
    repetition: int
    fold: int
    train: tuple
    valid: tuple
    test: tuple


def _rng(seed, *keys):
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def stratified_kfold(labels, k, seed, repetition=0, valid_fraction=VALID_FRACTION):
    """Split samples into ``k`` class-balanced test folds.

    Members of each class are shuffled and dealt round-robin to the folds;
    the dealing position carries over between classes so fold sizes differ
    by at most one.  The non-test part of each fold is split again, per
    class, into train and a ``valid_fraction`` validation set.
    """
    y = np.asarray(labels, dtype=np.int64)
    classes = np.unique(y)
    if k < 2:
        raise ContractError("k must be at least 2")
    for c in classes:
        if np.sum(y == c) < k:
            raise ContractError(f"class {c} has {np.sum(y == c)} members, fewer than k={k}")
    rng = _rng(seed, repetition)
    assignment = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in classes:
        members = np.flatnonzero(y == c)
        members = members[rng.permutation(len(members))]
        assignment[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    plans = []
    for fold in range(k):
        test = np.flatnonzero(assignment == fold)
        rest = np.flatnonzero(assignment != fold)
        valid = []
        for c in classes:
            members = rest[y[rest] == c]
            members = members[rng.permutation(len(members))]
            n_valid = max(1, int(round(valid_fraction * len(members))))
            valid.extend(members[:n_valid].tolist())
        valid = np.sort(np.asarray(valid, dtype=np.int64))
        train = np.setdiff1d(rest, valid)
        plans.append(
            FoldPlan(repetition, fold, tuple(train.tolist()), tuple(valid.tolist()), tuple(test.tolist()))
        )
    return plans


def repeated_plans(labels, k, repetitions, seed):
    out = []
    for r in range(repetitions):
        out.extend(stratified_kfold(labels, k, seed, repetition=r))
    return out
