"""Cross-validation report: aggregation and the summary/folds/votes files."""

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, ParseError
from .metrics import majority_vote, metrics, wilson_ci

FOLD_FIELDS = (
    "repetition",
    "fold",
    "config_index",
    "train_accuracy",
    "valid_accuracy",
    "test_accuracy",
    "epochs",
    "failed",
    "error",
)


@dataclass(frozen=True)
class CvReport:
    sample_ids: tuple = ()
    labels: tuple = ()
    model: str = ""
    k: int = 0
    repetitions: int = 0
    seed: int = 0
    configs: tuple = ()
    results: tuple = ()
    best_index: int = -1
    mean_valid_accuracy: tuple = ()
    parameter_counts: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def empty(self):
        return not self.results or self.best_index < 0

    def best_results(self):
        return [r for r in self.results if r.config_index == self.best_index]

    def prediction_table(self):
        """(n_nodes, repetitions) test predictions of the selected config."""
        n = len(self.labels)
        table = np.full((n, self.repetitions), -1, dtype=np.int64)
        for r in self.best_results():
            for node, pred in zip(r.test_indices, r.test_predictions):
                if table[node, r.repetition] != -1:
                    raise ContractError(
                        f"node {node} tested twice in repetition {r.repetition}"
                    )
                table[node, r.repetition] = pred
        return table


def _vote_block(labels, votes, scores):
    m = metrics(labels, votes, scores)
    lo, hi = wilson_ci(m["correct"], m["n"])
    m["ci95"] = [lo, hi]
    # a single-class label set leaves AUC undefined; JSON has no NaN
    return {k: (None if isinstance(v, float) and np.isnan(v) else v) for k, v in m.items()}


def summarize(report):
    """JSON-ready summary with a fixed key order."""
    if report.empty:
        return {
            "model": report.model,
            "k": report.k,
            "repetitions": report.repetitions,
            "seed": report.seed,
            "n_configs": len(report.configs),
            "best_config_index": None,
            "best_config": None,
            "fold_accuracy": None,
            "vote": None,
            "failed_folds": 0,
            "config_validation": [],
        }
    best = report.best_results()
    accs = np.array([r.test_accuracy for r in best])
    rep_means = np.array(
        [np.mean([r.test_accuracy for r in best if r.repetition == i]) for i in range(report.repetitions)]
    )
    table = report.prediction_table()
    votes, scores = majority_vote(table)
    return {
        "model": report.model,
        "k": report.k,
        "repetitions": report.repetitions,
        "seed": report.seed,
        "n_configs": len(report.configs),
        "best_config_index": report.best_index,
        "best_config": report.configs[report.best_index].to_dict(),
        "fold_accuracy": {
            "mean": float(accs.mean()),
            "std": float(accs.std()),
            "std_of_repetition_means": float(rep_means.std()),
            "n_folds": int(len(accs)),
        },
        "vote": _vote_block(np.asarray(report.labels), votes, scores),
        "failed_folds": int(sum(r.failed for r in best)),
        "config_validation": [
            {
                "index": i,
                "mean_valid_accuracy": None if np.isnan(m) else m,
                "parameters": report.parameter_counts[i],
            }
            for i, m in enumerate(report.mean_valid_accuracy)
        ],
    }


def folds_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FOLD_FIELDS)
    for r in report.results:
        w.writerow(
            [
                r.repetition,
                r.fold,
                r.config_index,
                repr(r.train_accuracy),
                repr(r.valid_accuracy),
                repr(r.test_accuracy),
                r.epochs,
                int(r.failed),
                r.error,
            ]
        )
    return buf.getvalue()


def votes_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "label"] + [f"pred_r{i}" for i in range(report.repetitions)] + ["vote", "score"])
    if report.empty:
        return buf.getvalue()
    table = report.prediction_table()
    votes, scores = majority_vote(table)
    for i, sid in enumerate(report.sample_ids):
        w.writerow([sid, report.labels[i]] + table[i].tolist() + [int(votes[i]), repr(float(scores[i]))])
    return buf.getvalue()


def atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(report, directory):
    """Write summary.json, folds.csv and votes.csv; returns their paths."""
    paths = {
        "summary": os.path.join(directory, "summary.json"),
        "folds": os.path.join(directory, "folds.csv"),
        "votes": os.path.join(directory, "votes.csv"),
    }
    try:
        atomic_write(paths["summary"], json.dumps(summarize(report), indent=2) + "\n")
        atomic_write(paths["folds"], folds_csv(report))
        atomic_write(paths["votes"], votes_csv(report))
    except OSError as exc:
        raise OSError(f"cannot write report to {directory}: {exc}") from exc
    return paths


def vote_metrics_from_csv(path):
    """Recompute the summary's ``vote`` block from a votes.csv file."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["id", "label"] or rows[0][-2:] != ["vote", "score"]:
        raise ParseError(f"{path}:1: not a votes.csv header")
    labels, votes, scores = [], [], []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(rows[0]):
            raise ParseError(f"{path}:{line}: expected {len(rows[0])} columns")
        try:
            labels.append(int(row[1]))
            votes.append(int(row[-2]))
            scores.append(float(row[-1]))
        except ValueError as exc:
            raise ParseError(f"{path}:{line}: {exc}") from None
    if not labels:
        raise ContractError(f"{path}: no vote rows")
    return _vote_block(np.array(labels), np.array(votes), np.array(scores))
