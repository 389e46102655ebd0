import json
import os

import pytest

from sheafnn.cli import main
from sheafnn.data import load_csv


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("SHEAFNN_OUT", raising=False)
    return tmp_path


def write_experiment(path, **over):
    exp = {
        "dataset": {"synthetic": {"n": 30, "seed": 3, "preset": "noisy"}},
        "grid": {"model": "gcn", "space": {"lr": [0.01, 0.05]}, "base": {"epochs": 8, "n_components": 5, "hidden_dim": 8}},
        "k": 3,
        "repetitions": 2,
        "seed": 5,
        "out": "results",
    }
    exp.update(over)
    path.write_text(json.dumps(exp))
    return str(path)


def test_synth_reference_counts(workdir, capsys):
    assert main(["synth", "--n", "224", "--tumor-frac", "0.65625", "--seed", "7", "--out", "data.csv"]) == 0
    ds = load_csv("data.csv")
    assert int(ds.labels.sum()) == 147 and ds.spectra.shape == (224, 501)
    err = capsys.readouterr().err
    assert '"seed": 7' in err


def test_synth_env_default_dir(workdir, monkeypatch):
    monkeypatch.setenv("SHEAFNN_OUT", str(workdir / "envdir"))
    assert main(["synth", "--n", "20"]) == 0
    assert (workdir / "envdir" / "data.csv").exists()


def test_graph_command(workdir):
    main(["synth", "--n", "20", "--out", "d.csv"])
    assert main(["graph", "--data", "d.csv", "--n-components", "4", "--out", "g.csv"]) == 0
    lines = (workdir / "g.csv").read_text().splitlines()
    assert lines[0] == "u,v,similarity" and len(lines) >= 20


def test_train_command(workdir):
    main(["synth", "--n", "30", "--out", "d.csv"])
    (workdir / "cfg.json").write_text(json.dumps({"model": "sage", "epochs": 5, "n_components": 5}))
    assert main(["train", "--data", "d.csv", "--config", "cfg.json", "--k", "3", "--out", "t.json"]) == 0
    out = json.loads((workdir / "t.json").read_text())
    assert out["config"]["model"] == "sage" and out["epochs"] == 5


def test_cv_and_report_roundtrip(workdir, capsys):
    cfg = write_experiment(workdir / "exp.json")
    assert main(["cv", "--config", cfg]) == 0
    for name in ("summary.json", "folds.csv", "votes.csv"):
        assert (workdir / "results" / name).exists()
    capsys.readouterr()
    assert main(["report", "--votes", "results/votes.csv"]) == 0
    printed = json.loads(capsys.readouterr().out)
    summary = json.loads((workdir / "results" / "summary.json").read_text())
    assert printed == summary["vote"]
    assert main(["report", "--votes", "results/votes.csv", "--out", "m.json"]) == 0
    assert json.loads((workdir / "m.json").read_text()) == summary["vote"]


def test_cv_jobs_byte_identical(workdir):
    cfg = write_experiment(workdir / "exp.json")
    assert main(["cv", "--config", cfg, "--jobs", "1", "--out", "a"]) == 0
    assert main(["cv", "--config", cfg, "--jobs", "3", "--out", "b"]) == 0
    for name in ("summary.json", "folds.csv", "votes.csv"):
        assert (workdir / "a" / name).read_bytes() == (workdir / "b" / name).read_bytes()


def test_cv_seed_override(workdir):
    cfg = write_experiment(workdir / "exp.json")
    assert main(["cv", "--config", cfg, "--seed", "99", "--out", "s"]) == 0
    assert json.loads((workdir / "s" / "summary.json").read_text())["seed"] == 99


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["fly"],
        ["synth", "--bogus"],
        ["cv"],
        ["report", "--votes", "missing.csv"],
        ["train", "--data", "missing.csv"],
        ["synth", "--tumor-frac", "1.5", "--out", "x.csv"],
    ],
)
def test_validation_errors_exit_1(workdir, argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err


def test_bad_experiments_exit_1(workdir):
    assert main(["cv", "--config", write_experiment(workdir / "e1.json", k=1)]) == 1
    assert main(["cv", "--config", write_experiment(workdir / "e2.json", grid="stock:mlp")]) == 1
    assert main(["cv", "--config", write_experiment(workdir / "e3.json", dataset={"url": "x"})]) == 1
    (workdir / "e4.json").write_text("{not json")
    assert main(["cv", "--config", "e4.json"]) == 1
    assert main(["cv", "--config", write_experiment(workdir / "e5.json"), "--jobs", "0"]) == 1


def test_bad_model_config_exit_1(workdir):
    main(["synth", "--n", "20", "--out", "d.csv"])
    (workdir / "cfg.json").write_text(json.dumps({"model": "gcn", "learning_rate": 1}))
    assert main(["train", "--data", "d.csv", "--config", "cfg.json"]) == 1


def test_runtime_failure_exit_2(workdir):
    main(["synth", "--n", "30", "--out", "d.csv"])
    (workdir / "cfg.json").write_text(
        json.dumps({"model": "gcn", "lr": 1e300, "epochs": 5, "n_components": 5, "normalization": False})
    )
    with pytest.warns(RuntimeWarning):
        assert main(["train", "--data", "d.csv", "--config", "cfg.json", "--k", "3", "--out", "t.json"]) == 2


def test_unwritable_output_exit_2(workdir):
    (workdir / "blocker").write_text("")
    assert main(["synth", "--n", "20", "--out", os.path.join("blocker", "d.csv")]) == 2


def test_selfcheck(workdir, capsys):
    assert main(["selfcheck"]) == 0
    err = capsys.readouterr().err
    assert "FAIL" not in err and err.count("PASS") >= 10
