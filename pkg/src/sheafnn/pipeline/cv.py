"""Repeated cross-validation over a hyperparameter grid."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..errors import ContractError
from ..nn import build_model
from .folds import repeated_plans
from .report import CvReport
from .train import model_seed, prepare_fold, train_on_fold

log = logging.getLogger(__name__)


def _run_plan(dataset, configs, plan, seed):
    """Train every config on one (repetition, fold); the fold's PCA and graph
    are built once per distinct PCA width."""
    prepared = {}
    out = []
    for index, config in configs:
        width = config.n_components
        if width not in prepared:
            prepared[width] = prepare_fold(dataset, plan, width)
        ss = model_seed(seed, plan.repetition, plan.fold, index)
        out.append(train_on_fold(config, prepared[width], dataset.labels, ss, index))
    return out


def _run_plan_args(args):
    return _run_plan(*args)


def evaluate_configs(dataset, configs, k=10, repetitions=5, seed=0, jobs=1, plans=None):
    """Fold results for every config on every (repetition, fold), sorted by
    (config_index, repetition, fold) regardless of scheduling."""
    if plans is None:
        plans = repeated_plans(dataset.labels, k, repetitions, seed)
    indexed = list(enumerate(configs))
    tasks = [(dataset, indexed, plan, seed) for plan in plans]
    results = []
    if jobs <= 1:
        for i, task in enumerate(tasks):
            results.extend(_run_plan(*task))
            log.info("fold %d/%d done", i + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, chunk in enumerate(pool.map(_run_plan_args, tasks)):
                results.extend(chunk)
                log.info("fold %d/%d done", i + 1, len(tasks))
    results.sort(key=lambda r: (r.config_index, r.repetition, r.fold))
    return results


def parameter_count(config, in_dim):
    return build_model(config, in_dim, np.random.default_rng(0)).num_parameters()


def select_best(configs, results, in_dim):
    """Index of the config with the highest mean validation accuracy.

    Failed folds are left out of the means.  Ties go to the smaller model,
    then to the earlier config.
    """
    means = []
    for i in range(len(configs)):
        accs = [r.valid_accuracy for r in results if r.config_index == i and not r.failed]
        means.append(float(np.mean(accs)) if accs else float("nan"))
    counts = [parameter_count(c, in_dim) for c in configs]

    def key(i):
        m = means[i]
        return (-(m if not math.isnan(m) else -math.inf), counts[i], i)

    best = min(range(len(configs)), key=key)
    return best, means, counts


def grid_search(dataset, grid, k=10, repetitions=5, seed=0, jobs=1):
    """Exhaustive search; returns the best config and the full report."""
    configs = list(grid.configs())
    if not configs:
        raise ContractError("empty grid")
    plans = repeated_plans(dataset.labels, k, repetitions, seed)
    results = evaluate_configs(dataset, configs, seed=seed, jobs=jobs, plans=plans)
    min_train = min(len(p.train) for p in plans)
    in_dim = min(configs[0].n_components, min_train - 1, dataset.n_points)
    best, means, counts = select_best(configs, results, in_dim)
    report = CvReport(
        sample_ids=dataset.sample_ids,
        labels=tuple(int(v) for v in dataset.labels),
        model=grid.model,
        k=k,
        repetitions=repetitions,
        seed=seed,
        configs=tuple(configs),
        results=tuple(results),
        best_index=best,
        mean_valid_accuracy=tuple(means),
        parameter_counts=tuple(counts),
    )
    return configs[best], report
