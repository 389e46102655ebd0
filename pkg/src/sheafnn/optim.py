"""Adam with decoupled weight decay, gradient clipping, plateau LR schedule
and early stopping."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, NumericError


class Adam:
    """Adam with bias correction and decoupled weight decay.

    ``step`` consumes ``param.grad`` for every param and zeroes it afterwards.
    """

    def __init__(self, params, lr=1e-3, weight_decay=0.0, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = float(lr)
        self.weight_decay = float(weight_decay)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        for p in self.params:
            if not np.all(np.isfinite(p.grad)):
                raise NumericError(f"non-finite gradient for parameter {p.name!r}")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            if self.weight_decay:
                p.value = p.value * (1.0 - self.lr * self.weight_decay)
            p.value = p.value - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            p.zero_grad()


def global_grad_norm(params):
    return math.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params))


def clip_gradients(params, max_norm):
    """Rescale all gradients so their joint L2 norm is at most ``max_norm``.

    Returns the scale factor applied (1.0 when no clipping was needed).
    """
    if max_norm <= 0:
        raise ContractError("max_norm must be positive")
    params = list(params)
    total = global_grad_norm(params)
    if total <= max_norm:
        return 1.0
    scale = max_norm / total
    for p in params:
        p.grad = p.grad * scale
    return scale


@dataclass
class PlateauScheduler:
    """Multiply the learning rate by ``factor`` once the monitored loss has
    not improved for more than ``patience`` epochs."""

    optimizer: Adam
    factor: float = 0.5
    patience: int = 10
    min_lr: float = 1e-6
    threshold: float = 1e-4
    best: float = math.inf
    bad_epochs: int = 0

    def __post_init__(self):
        if not 0.0 < self.factor < 1.0:
            raise ContractError("factor must lie in (0, 1)")

    def step(self, metric):
        if metric < self.best * (1.0 - self.threshold):
            self.best = metric
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
        if self.bad_epochs > self.patience:
            lr = self.optimizer.lr
            if lr > self.min_lr:
                self.optimizer.lr = max(lr * self.factor, self.min_lr)
            self.bad_epochs = 0
        return self.optimizer.lr


@dataclass
class EarlyStopper:
    """Fires once validation accuracy has stalled for more than ``patience``
    epochs, never before ``min_epochs``."""

    patience: int
    min_epochs: int = 0
    best: float = -math.inf
    best_epoch: int = -1
    history: list = field(default_factory=list)

    def update(self, epoch, metric):
        """Record ``metric``; returns True if it is a new best."""
        self.history.append(metric)
        if metric > self.best:
            self.best = metric
            self.best_epoch = epoch
            return True
        return False

    def should_stop(self, epoch):
        return epoch >= self.min_epochs and epoch - self.best_epoch > self.patience


def early_stop_check(stopper, epoch, val_metric):
    stopper.update(epoch, val_metric)
    return stopper.should_stop(epoch)
