"""experiment.json loading and end-to-end runs."""

import json
import os
from dataclasses import dataclass

from ..config import STOCK_GRIDS, GridSpec
from ..data import generate_synthetic, load_csv
from ..errors import ContractError, ParseError
from .cv import grid_search
from .report import emit_report

EXPERIMENT_KEYS = {"dataset", "grid", "k", "repetitions", "seed", "out"}


@dataclass(frozen=True)
class Experiment:
    dataset: dict
    grid: GridSpec
    k: int = 10
    repetitions: int = 5
    seed: int = 0
    out: str = ""

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "grid": self.grid.to_dict(),
            "k": self.k,
            "repetitions": self.repetitions,
            "seed": self.seed,
            "out": self.out,
        }


def _resolve_grid(spec):
    if isinstance(spec, str):
        if not spec.startswith("stock:"):
            raise ContractError(f"grid string must look like 'stock:<kind>', got {spec!r}")
        kind = spec.split(":", 1)[1]
        if kind not in STOCK_GRIDS:
            raise ContractError(f"no stock grid for {kind!r}; expected one of {sorted(STOCK_GRIDS)}")
        return STOCK_GRIDS[kind]
    if isinstance(spec, dict):
        if "model" not in spec:
            raise ContractError("grid needs a 'model' key")
        unknown = set(spec) - {"model", "space", "base"}
        if unknown:
            raise ContractError(f"unknown grid keys: {sorted(unknown)}")
        return GridSpec.from_dict(spec)
    raise ContractError("grid must be an object or 'stock:<kind>'")


def _relative_to(base_dir, path):
    if not path or os.path.isabs(path):
        return path
    return os.path.normpath(os.path.join(base_dir, path))


def parse_experiment(data, base_dir="."):
    """Validate an experiment mapping; relative paths resolve against ``base_dir``."""
    if not isinstance(data, dict):
        raise ContractError("experiment must be a JSON object")
    unknown = set(data) - EXPERIMENT_KEYS
    if unknown:
        raise ContractError(f"unknown experiment keys: {sorted(unknown)}")
    for key in ("dataset", "grid"):
        if key not in data:
            raise ContractError(f"experiment is missing {key!r}")
    ds = data["dataset"]
    if not isinstance(ds, dict) or len(ds) != 1 or next(iter(ds)) not in ("csv", "synthetic"):
        raise ContractError("dataset must be {'csv': path} or {'synthetic': {...}}")
    if "csv" in ds:
        ds = {"csv": _relative_to(base_dir, str(ds["csv"]))}
    exp = Experiment(
        dataset=ds,
        grid=_resolve_grid(data["grid"]),
        k=int(data.get("k", 10)),
        repetitions=int(data.get("repetitions", 5)),
        seed=int(data.get("seed", 0)),
        out=_relative_to(base_dir, str(data.get("out", ""))),
    )
    if exp.k < 2 or exp.repetitions < 1:
        raise ContractError("need k >= 2 and repetitions >= 1")
    return exp


def load_experiment(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None
    return parse_experiment(data, os.path.dirname(os.path.abspath(path)))


def load_dataset(spec):
    if "csv" in spec:
        return load_csv(spec["csv"])
    opts = spec["synthetic"]
    allowed = {"n", "tumor_fraction", "seed", "preset"}
    if not isinstance(opts, dict) or set(opts) - allowed:
        raise ContractError(f"synthetic dataset options must be a subset of {sorted(allowed)}")
    return generate_synthetic(**opts)


def run_experiment(exp, out_dir=None, jobs=1):
    """Grid search + report; returns (best_config, report, written paths)."""
    dataset = load_dataset(exp.dataset)
    best, report = grid_search(dataset, exp.grid, exp.k, exp.repetitions, exp.seed, jobs)
    paths = emit_report(report, out_dir or exp.out or ".")
    return best, report, paths
