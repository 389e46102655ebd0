"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime or
numeric failure.  Progress and the resolved configuration go to stderr;
machine-readable outputs go to files, written atomically.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from .config import ModelConfig
from .data import dataset_to_csv, fit_scaler_pca, generate_synthetic, load_csv, transform
from .errors import ContractError, NumericError, ParseError, ShapeError
from .graph import build_similarity_graph, cosine_similarity_matrix
from .pipeline.experiment import load_experiment, run_experiment
from .pipeline.folds import stratified_kfold
from .pipeline.report import atomic_write, vote_metrics_from_csv
from .pipeline.train import model_seed, prepare_fold, train_on_fold

OUT_ENV = "SHEAFNN_OUT"

log = logging.getLogger("sheafnn")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _default_out(name):
    return os.path.join(os.environ.get(OUT_ENV, "."), name)


def _announce(command, seed, **resolved):
    payload = {"command": command, "seed": seed, **resolved}
    print("resolved: " + json.dumps(payload, sort_keys=True, default=str), file=sys.stderr)


def _dump_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2) + "\n")


def cmd_synth(args):
    _announce("synth", args.seed, n=args.n, tumor_frac=args.tumor_frac, preset=args.preset)
    ds = generate_synthetic(args.n, args.tumor_frac, args.seed, args.preset)
    out = args.out or _default_out("data.csv")
    atomic_write(out, dataset_to_csv(ds))
    log.info("wrote %d samples (%d positive) to %s", ds.n_samples, int(ds.labels.sum()), out)


def cmd_graph(args):
    _announce("graph", args.seed, data=args.data, n_components=args.n_components)
    ds = load_csv(args.data)
    k = min(args.n_components, ds.n_samples - 1, ds.n_points)
    feats = transform(fit_scaler_pca(ds.spectra, k), ds.spectra)
    g = build_similarity_graph(feats)
    sim = cosine_similarity_matrix(feats)
    lines = ["u,v,similarity"]
    for u, v in g.edges:
        lines.append(f"{ds.sample_ids[u]},{ds.sample_ids[v]},{float(sim[u, v])!r}")
    out = args.out or _default_out("graph.csv")
    atomic_write(out, "\n".join(lines) + "\n")
    log.info("graph on %d nodes with %d edges written to %s", g.num_nodes, g.num_edges, out)


def _model_config(args):
    data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{args.config}:{exc.lineno}: {exc.msg}") from None
    if args.model:
        data["model"] = args.model
    if args.epochs is not None:
        data["epochs"] = args.epochs
    return ModelConfig.from_dict(data)


def cmd_train(args):
    config = _model_config(args)
    _announce("train", args.seed, data=args.data, fold=args.fold, k=args.k, config=config.to_dict())
    ds = load_csv(args.data)
    if not 0 <= args.fold < args.k:
        raise ContractError(f"--fold must lie in [0, {args.k})")
    plan = stratified_kfold(ds.labels, args.k, args.seed)[args.fold]
    fold = prepare_fold(ds, plan, config.n_components)
    res = train_on_fold(config, fold, ds.labels, model_seed(args.seed, 0, args.fold, 0))
    out = args.out or _default_out("train.json")
    _dump_json(
        out,
        {
            "config": config.to_dict(),
            "seed": args.seed,
            "fold": args.fold,
            "k": args.k,
            "train_accuracy": res.train_accuracy,
            "valid_accuracy": res.valid_accuracy,
            "test_accuracy": res.test_accuracy,
            "epochs": res.epochs,
            "failed": res.failed,
            "error": res.error,
        },
    )
    log.info("test accuracy %.4f after %d epochs; wrote %s", res.test_accuracy, res.epochs, out)
    if res.failed:
        raise NumericError(f"training failed: {res.error}")


def cmd_cv(args):
    exp = load_experiment(args.config)
    if args.seed is not None:
        exp = type(exp)(exp.dataset, exp.grid, exp.k, exp.repetitions, args.seed, exp.out)
    out = args.out or exp.out or os.environ.get(OUT_ENV, ".")
    _announce("cv", exp.seed, jobs=args.jobs, out=out, experiment=exp.to_dict(), grid_size=exp.grid.size)
    best, report, paths = run_experiment(exp, out, jobs=args.jobs)
    log.info("best config index %d; reports in %s", report.best_index, out)


def cmd_report(args):
    _announce("report", None, votes=args.votes)
    m = vote_metrics_from_csv(args.votes)
    text = json.dumps(m, indent=2) + "\n"
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def cmd_selfcheck(args):
    from .selfcheck import run_all

    _announce("selfcheck", args.seed)
    results = run_all(args.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip(), file=sys.stderr)
    if not all(ok for _, ok, _ in results):
        raise NumericError("selfcheck failed")


def build_parser():
    p = _Parser(prog="sheafnn", description="Sheaf neural networks on spectral similarity graphs.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="write a synthetic spectra CSV")
    s.add_argument("--n", type=int, default=224)
    s.add_argument("--tumor-frac", type=float, default=147 / 224)
    s.add_argument("--preset", choices=("separable", "noisy"), default="separable")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("graph", help="build the cosine similarity graph of a dataset")
    s.add_argument("--data", required=True)
    s.add_argument("--n-components", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_graph)

    s = sub.add_parser("train", help="train one config on one fold")
    s.add_argument("--data", required=True)
    s.add_argument("--config", help="JSON file with ModelConfig fields")
    s.add_argument("--model", choices=("gcn", "sage", "gat", "sheaf_general"))
    s.add_argument("--epochs", type=int)
    s.add_argument("--k", type=int, default=10)
    s.add_argument("--fold", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("cv", help="run grid search and cross-validation from experiment.json")
    s.add_argument("--config", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--seed", type=int, help="override the experiment's master seed")
    s.add_argument("--out", help="output directory (overrides the experiment file)")
    s.set_defaults(func=cmd_cv)

    s = sub.add_parser("report", help="recompute vote metrics from votes.csv")
    s.add_argument("--votes", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("selfcheck", help="run the invariant suite")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_selfcheck)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 1
    try:
        args.func(args)
    except (ContractError, ParseError, ShapeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, ArithmeticError, OSError, np.linalg.LinAlgError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
