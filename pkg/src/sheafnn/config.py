"""Model/training configuration and hyperparameter grids."""

import itertools
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import ContractError

MODEL_KINDS = ("gcn", "sage", "gat", "sheaf_general")

# per-recipe skip weight and hidden activation
DEFAULT_ALPHA = {"gcn": 1.0, "sage": 0.05, "gat": 1.0, "sheaf_general": 1.0}
DEFAULT_ACTIVATION = {"gcn": "relu", "sage": "relu", "gat": "elu", "sheaf_general": "elu"}


@dataclass(frozen=True)
class ModelConfig:
    model: str = "sheaf_general"
    hidden_dim: int = 32
    num_layers: int = 2
    dropout: float = 0.1
    lr: float = 0.01
    weight_decay: float = 1e-4
    patience: int = 80
    min_epochs: int = 0
    sched_patience: int = 10
    sched_factor: float = 0.5
    min_lr: float = 1e-6
    grad_clip: float = 0.0
    heads: int = 2
    d: int = 4
    f: int = 12
    activation: str = ""
    alpha: float = -1.0
    label_smoothing: float = 0.0
    normalization: bool = True
    laplacian: str = "normalized"
    sheaf_eps: float = 1e-6
    epochs: int = 400
    n_components: int = 50

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ContractError(f"unknown model {self.model!r}; expected one of {MODEL_KINDS}")
        if self.num_layers < 1:
            raise ContractError("num_layers must be >= 1")
        if self.model == "gat" and self.hidden_dim % self.heads:
            raise ContractError(
                f"hidden_dim {self.hidden_dim} must be divisible by heads {self.heads}"
            )
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ContractError("label_smoothing must lie in [0, 1)")

    @property
    def hidden_activation(self):
        return self.activation or DEFAULT_ACTIVATION[self.model]

    @property
    def skip_alpha(self):
        return self.alpha if self.alpha >= 0.0 else DEFAULT_ALPHA[self.model]

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ContractError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def with_updates(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class GridSpec:
    """Cartesian product of named hyperparameter lists for one model kind."""

    model: str
    space: dict = field(default_factory=dict)
    base: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ContractError(f"unknown model {self.model!r}")
        known = {f.name for f in fields(ModelConfig)}
        bad = (set(self.space) | set(self.base)) - known
        if bad:
            raise ContractError(f"unknown hyperparameters: {sorted(bad)}")
        for name, values in self.space.items():
            if not isinstance(values, (list, tuple)) or not values:
                raise ContractError(f"grid entry {name!r} must be a non-empty list")

    @property
    def size(self):
        total = 1
        for values in self.space.values():
            total *= len(values)
        return total

    def configs(self):
        """Enumerate configs, last-listed hyperparameter varying fastest."""
        names = list(self.space)
        for combo in itertools.product(*(self.space[n] for n in names)):
            params = dict(self.base)
            params.update(zip(names, combo))
            params["model"] = self.model
            yield ModelConfig(**params)

    def to_dict(self):
        return {"model": self.model, "space": {k: list(v) for k, v in self.space.items()}, "base": dict(self.base)}

    @classmethod
    def from_dict(cls, data):
        return cls(data["model"], dict(data.get("space", {})), dict(data.get("base", {})))


STOCK_GRIDS = {
    "sage": GridSpec(
        "sage",
        {
            "hidden_dim": [16, 32, 64],
            "num_layers": [2, 3, 4],
            "dropout": [0.1, 0.2, 0.3],
            "lr": [0.001, 0.002, 0.005, 0.01, 0.05],
            "weight_decay": [1e-5, 1e-4, 2e-4],
        },
    ),
    "gcn": GridSpec(
        "gcn",
        {
            "hidden_dim": [32, 64, 128],
            "num_layers": [2, 3, 4],
            "dropout": [0.1, 0.2, 0.3],
            "lr": [0.002, 0.005, 0.01, 0.05, 0.2, 0.5],
            "weight_decay": [1e-5, 1e-4],
            "patience": [80],
            "min_epochs": [200],
            "sched_patience": [40],
            "grad_clip": [1.0, 2.0, 3.0],
        },
    ),
    "gat": GridSpec(
        "gat",
        {
            "hidden_dim": [32, 64, 128],
            "num_layers": [2, 3, 4],
            "dropout": [0.1, 0.2, 0.3],
            "lr": [0.001, 0.002, 0.005, 0.01, 0.05, 0.2, 0.5],
            "weight_decay": [1e-5, 1e-4],
            "patience": [80],
            "min_epochs": [200],
            "sched_patience": [40],
            "grad_clip": [2.0],
            "heads": [2, 4],
        },
    ),
    "sheaf_general": GridSpec(
        "sheaf_general",
        {
            "d": [4, 6, 8],
            "f": [12, 16, 24],
            "num_layers": [2, 4],
            "dropout": [0.1, 0.2, 0.3],
            "lr": [0.05, 0.1, 0.2, 0.25],
            "weight_decay": [1e-3, 1e-4],
            "activation": ["elu"],
            "patience": [100],
            "grad_clip": [1.0],
        },
    ),
}

# reference best configurations for the clinical spectra
STOCK_BEST = {
    "sheaf_general": ModelConfig(
        model="sheaf_general", d=8, f=24, num_layers=2, activation="elu", dropout=0.2,
        lr=0.01, weight_decay=1e-3, sched_factor=0.5, patience=50, grad_clip=0.5,
    ),
    "sage": ModelConfig(
        model="sage", hidden_dim=32, num_layers=2, dropout=0.1, lr=0.005, weight_decay=1e-4,
        patience=80, min_epochs=100, sched_patience=40, label_smoothing=0.1, grad_clip=2.0,
    ),
    "gat": ModelConfig(
        model="gat", hidden_dim=32, num_layers=4, heads=2, dropout=0.1, lr=0.002,
        weight_decay=1e-5, patience=80, min_epochs=200, sched_patience=40, grad_clip=2.0,
    ),
    "gcn": ModelConfig(
        model="gcn", hidden_dim=32, num_layers=3, dropout=0.2, lr=0.002, weight_decay=1e-5,
        patience=80, min_epochs=200, sched_patience=40, grad_clip=1.0,
    ),
}
