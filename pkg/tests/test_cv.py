import csv
import json
import os

import numpy as np
import pytest

from sheafnn.config import GridSpec, ModelConfig
from sheafnn.data import generate_synthetic
from sheafnn.pipeline import (
    CvReport,
    FoldResult,
    emit_report,
    evaluate_configs,
    grid_search,
    select_best,
    summarize,
    vote_metrics_from_csv,
)

BASE = {"epochs": 12, "n_components": 5, "hidden_dim": 8}


@pytest.fixture(scope="module")
def dataset():
    return generate_synthetic(30, seed=2, preset="noisy")


@pytest.fixture(scope="module")
def searched(dataset):
    grid = GridSpec("gcn", {"lr": [0.01, 0.05]}, BASE)
    return grid_search(dataset, grid, k=3, repetitions=3, seed=4)


def test_single_config_grid(dataset):
    grid = GridSpec("sage", {}, BASE)
    best, report = grid_search(dataset, grid, k=3, repetitions=1, seed=0)
    assert best == next(grid.configs())
    assert report.best_index == 0


def test_results_keyed_and_sorted(searched, dataset):
    _, report = searched
    keys = [(r.config_index, r.repetition, r.fold) for r in report.results]
    assert keys == sorted(keys) and len(keys) == 2 * 3 * 3
    table = report.prediction_table()
    assert table.shape == (30, 3) and np.all(table >= 0)


def _result(ci, rep, fold, valid, failed=False):
    return FoldResult(rep, fold, ci, 1.0, valid, 1.0, (), (), (), 1, failed, "")


def test_select_best_dominating():
    configs = [ModelConfig(model="gcn", hidden_dim=h) for h in (8, 16, 32)]
    results = [_result(i, 0, f, v) for i, v in enumerate((0.5, 0.9, 0.7)) for f in range(2)]
    best, means, _ = select_best(configs, results, 5)
    assert best == 1
    assert means == pytest.approx([0.5, 0.9, 0.7])


def test_select_best_ties_prefer_small_then_first():
    configs = [ModelConfig(model="gcn", hidden_dim=h) for h in (32, 8, 8)]
    results = [_result(i, 0, 0, 0.8) for i in range(3)]
    best, _, counts = select_best(configs, results, 5)
    assert counts[0] > counts[1] == counts[2]
    assert best == 1


def test_select_best_skips_failed():
    configs = [ModelConfig(model="gcn"), ModelConfig(model="gcn", hidden_dim=64)]
    results = [_result(0, 0, 0, 1.0, failed=True), _result(0, 0, 1, 0.2), _result(1, 0, 0, 0.6), _result(1, 0, 1, 0.6)]
    best, means, _ = select_best(configs, results, 5)
    assert means[0] == pytest.approx(0.2)
    assert best == 1


def test_summary_aggregates(searched):
    _, report = searched
    s = summarize(report)
    best = report.best_results()
    accs = np.array([r.test_accuracy for r in best])
    assert s["fold_accuracy"]["mean"] == pytest.approx(accs.mean())
    assert s["fold_accuracy"]["std"] == pytest.approx(accs.std(ddof=0))
    rep_means = [accs[[r.repetition == i for r in best]].mean() for i in range(3)]
    assert s["fold_accuracy"]["std_of_repetition_means"] == pytest.approx(np.std(rep_means))
    assert s["fold_accuracy"]["n_folds"] == 9
    lo, hi = s["vote"]["ci95"]
    assert lo <= s["vote"]["accuracy"] <= hi


def test_emit_report_files(searched, tmp_path):
    _, report = searched
    paths = emit_report(report, str(tmp_path / "a"))
    emit_report(report, str(tmp_path / "b"))
    for name in ("summary.json", "folds.csv", "votes.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    with open(paths["votes"]) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["id", "label", "pred_r0", "pred_r1", "pred_r2", "vote", "score"]
    assert len(rows) - 1 == 30
    with open(paths["folds"]) as fh:
        assert len(list(csv.reader(fh))) - 1 == len(report.results)
    summary = json.loads(open(paths["summary"]).read())
    recomputed = vote_metrics_from_csv(paths["votes"])
    assert recomputed == summary["vote"]
    assert not [f for f in os.listdir(tmp_path / "a") if f.startswith(".tmp")]


def test_empty_report(tmp_path):
    paths = emit_report(CvReport(repetitions=2), str(tmp_path))
    assert open(paths["folds"]).read().count("\n") == 1
    assert open(paths["votes"]).read() == "id,label,pred_r0,pred_r1,vote,score\n"
    assert json.loads(open(paths["summary"]).read())["vote"] is None


def test_votes_csv_errors(tmp_path):
    from sheafnn.errors import ContractError, ParseError

    p = tmp_path / "v.csv"
    p.write_text("a,b\n")
    with pytest.raises(ParseError):
        vote_metrics_from_csv(str(p))
    p.write_text("id,label,pred_r0,vote,score\n")
    with pytest.raises(ContractError):
        vote_metrics_from_csv(str(p))
    p.write_text("id,label,pred_r0,vote,score\nx,1,1,1\n")
    with pytest.raises(ParseError, match=":2:"):
        vote_metrics_from_csv(str(p))


def test_parallel_matches_serial(dataset):
    configs = [ModelConfig(model="sheaf_general", d=2, f=3, **BASE)]
    a = evaluate_configs(dataset, configs, k=3, repetitions=2, seed=9, jobs=1)
    b = evaluate_configs(dataset, configs, k=3, repetitions=2, seed=9, jobs=2)
    assert a == b
