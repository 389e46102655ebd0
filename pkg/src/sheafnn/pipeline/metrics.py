"""Classification metrics, majority voting and Wilson intervals."""

import math

import numpy as np

from ..errors import ContractError


def majority_vote(predictions):
    """Vote over repeated 0/1 predictions.

    ``predictions`` has shape (n_nodes, R).  Returns ``(labels, scores)``
    where ``scores`` is the fraction of positive votes; ties go to label 1.
    """
    p = np.asarray(predictions)
    if p.ndim != 2 or p.shape[1] == 0:
        raise ContractError("need a (nodes, repetitions) prediction array")
    if np.any(p < 0):
        raise ContractError("missing predictions (negative entries) in vote table")
    scores = p.sum(axis=1) / p.shape[1]
    labels = (scores >= 0.5).astype(np.int64)
    return labels, scores


def auc_score(labels, scores):
    """Area under the ROC curve by the rank statistic, ties counted half."""
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=np.float64)
    pos, neg = s[y == 1], s[y == 0]
    if len(pos) == 0 or len(neg) == 0:
        return float("nan")
    greater = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((greater + 0.5 * ties) / (len(pos) * len(neg)))


def metrics(labels, predictions, scores):
    """Accuracy, precision, recall, F1 and AUC on the positive class.

    When nothing is predicted positive, precision is reported as 0 and
    ``precision_undefined`` is set.
    """
    y = np.asarray(labels, dtype=np.int64)
    p = np.asarray(predictions, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    if not (len(y) == len(p) == len(s)):
        raise ContractError("labels, predictions and scores must have equal length")
    if np.any((s < 0) | (s > 1)):
        raise ContractError("scores must lie in [0, 1]")
    tp = int(np.sum((p == 1) & (y == 1)))
    fp = int(np.sum((p == 1) & (y == 0)))
    fn = int(np.sum((p == 0) & (y == 1)))
    correct = int(np.sum(p == y))
    undefined = tp + fp == 0
    precision = 0.0 if undefined else tp / (tp + fp)
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "accuracy": correct / len(y) if len(y) else float("nan"),
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "auc": auc_score(y, s),
        "precision_undefined": undefined,
        "correct": correct,
        "n": int(len(y)),
    }


def wilson_ci(successes, n, z=1.96):
    if n <= 0 or not 0 <= successes <= n:
        raise ContractError("need 0 <= successes <= n and n > 0")
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)
