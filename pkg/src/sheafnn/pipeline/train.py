"""Per-fold preprocessing and transductive training."""

from dataclasses import dataclass, field

import numpy as np

from ..data import fit_scaler_pca, transform
from ..errors import NumericError
from ..graph import build_similarity_graph
from ..nn import GraphContext, Tape, build_model
from ..nn.tape import bce_with_logits
from ..optim import Adam, EarlyStopper, PlateauScheduler, clip_gradients


@dataclass
class FoldData:
    plan: object
    pca: object
    features: np.ndarray
    graph: object
    context: GraphContext = field(repr=False)


@dataclass
class FoldResult:
    repetition: int
    fold: int
    config_index: int
    train_accuracy: float
    valid_accuracy: float
    test_accuracy: float
    test_indices: tuple
    test_predictions: tuple
    test_scores: tuple
    epochs: int
    failed: bool = False
    error: str = ""


def prepare_fold(dataset, plan, n_components=50):
    """Fit scaler + PCA on the train rows, embed every sample, build the graph."""
    train = np.asarray(plan.train, dtype=np.int64)
    k = min(n_components, len(train) - 1, dataset.n_points)
    pca = fit_scaler_pca(dataset.spectra[train], k)
    feats = transform(pca, dataset.spectra)
    g = build_similarity_graph(feats)
    return FoldData(plan, pca, feats, g, GraphContext(g))


def model_seed(master_seed, repetition, fold, config_index):
    return np.random.SeedSequence([int(master_seed), 1, repetition, fold, config_index])


def _accuracy(pred, labels, idx):
    if len(idx) == 0:
        return float("nan")
    return float(np.mean(pred[idx] == labels[idx]))


def train_on_fold(config, fold_data, labels, seed_seq, config_index=0):
    """Train one model on the fold's train nodes and score valid/test nodes.

    The full graph and all node features are visible during training; only
    train labels enter the loss.  Parameters from the epoch with the best
    validation accuracy are restored before predicting.
    """
    plan = fold_data.plan
    y = np.asarray(labels, dtype=np.int64)
    n = len(y)
    train = np.asarray(plan.train, dtype=np.int64)
    valid = np.asarray(plan.valid, dtype=np.int64)
    test = np.asarray(plan.test, dtype=np.int64)
    train_mask = np.zeros(n, dtype=bool)
    train_mask[train] = True
    valid_mask = np.zeros(n, dtype=bool)
    valid_mask[valid] = True

    init_ss, drop_ss = seed_seq.spawn(2)
    ctx = fold_data.context
    x = fold_data.features
    model = build_model(config, x.shape[1], np.random.default_rng(init_ss))
    drop_rng = np.random.default_rng(drop_ss)
    params = model.params()
    opt = Adam(params, lr=config.lr, weight_decay=config.weight_decay)
    sched = PlateauScheduler(
        opt, factor=config.sched_factor, patience=config.sched_patience, min_lr=config.min_lr
    )
    stopper = EarlyStopper(config.patience, config.min_epochs)
    ls = config.label_smoothing
    targets = y * (1.0 - ls) + 0.5 * ls
    best_state = model.state_dict()
    epochs_run = 0
    failed, error = False, ""
    try:
        for epoch in range(config.epochs):
            tape = Tape()
            logits = model.forward(tape, ctx, x, training=True, rng=drop_rng)
            loss = bce_with_logits(logits, targets, train_mask)
            if not np.isfinite(loss.value):
                raise NumericError(f"non-finite training loss at epoch {epoch}")
            tape.backward(loss)
            if config.grad_clip > 0:
                clip_gradients(params, config.grad_clip)
            opt.step()
            epochs_run = epoch + 1

            eval_tape = Tape()
            z = model.forward(eval_tape, ctx, x, training=False)
            val_loss = float(bce_with_logits(z, y, valid_mask).value)
            if not np.isfinite(val_loss):
                raise NumericError(f"non-finite validation loss at epoch {epoch}")
            val_acc = _accuracy((z.value[:, 0] > 0).astype(np.int64), y, valid)
            sched.step(val_loss)
            if stopper.update(epoch, val_acc):
                best_state = model.state_dict()
            if stopper.should_stop(epoch):
                break
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        failed, error = True, str(exc)

    model.load_state_dict(best_state)
    logits = model.predict_logits(ctx, x)
    if not np.all(np.isfinite(logits)):
        failed, error = True, error or "non-finite logits"
        logits = np.nan_to_num(logits)
    pred = (logits > 0).astype(np.int64)
    scores = 1.0 / (1.0 + np.exp(-np.clip(logits, -500, 500)))
    return FoldResult(
        repetition=plan.repetition,
        fold=plan.fold,
        config_index=config_index,
        train_accuracy=_accuracy(pred, y, train),
        valid_accuracy=_accuracy(pred, y, valid),
        test_accuracy=_accuracy(pred, y, test),
        test_indices=tuple(test.tolist()),
        test_predictions=tuple(pred[test].tolist()),
        test_scores=tuple(float(s) for s in scores[test]),
        epochs=epochs_run,
        failed=failed,
        error=error,
    )


def run_fold(dataset, plan, config, seed=0, config_index=0):
    fold_data = prepare_fold(dataset, plan, config.n_components)
    ss = model_seed(seed, plan.repetition, plan.fold, config_index)
    return train_on_fold(config, fold_data, dataset.labels, ss, config_index)
