"""Cross-validation protocol: folds, training, grid search, voting, reports."""

from .cv import evaluate_configs, grid_search, select_best
from .experiment import Experiment, load_experiment, parse_experiment, run_experiment
from .folds import FoldPlan, repeated_plans, stratified_kfold
from .metrics import auc_score, majority_vote, metrics, wilson_ci
from .report import CvReport, emit_report, summarize, vote_metrics_from_csv
from .train import FoldResult, prepare_fold, run_fold, train_on_fold

__all__ = [
    "CvReport",
    "Experiment",
    "FoldPlan",
    "FoldResult",
    "auc_score",
    "emit_report",
    "evaluate_configs",
    "grid_search",
    "load_experiment",
    "majority_vote",
    "metrics",
    "parse_experiment",
    "prepare_fold",
    "repeated_plans",
    "run_experiment",
    "run_fold",
    "select_best",
    "stratified_kfold",
    "summarize",
    "train_on_fold",
    "vote_metrics_from_csv",
    "wilson_ci",
]
