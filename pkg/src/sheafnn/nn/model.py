"""Node classifiers assembled from layer stacks."""

import numpy as np

from ..errors import ShapeError
from .layers import GraphContext, LayerSpec, glorot, make_layer
from .tape import Param, Tape


class Model:
    """Stack of layers followed by a linear read-out to one logit per node.

    Sheaf models first lift the input to ``d * f`` features per node and
    view them as ``d`` stalk rows of ``f`` channels.
    """

    def __init__(self, layers, in_dim, rng, stalk_dim=None):
        self.layers = layers
        self.in_dim = in_dim
        self.stalk_dim = stalk_dim
        self.lift_w = self.lift_b = None
        if stalk_dim is not None:
            width = stalk_dim * layers[0].spec.in_dim
            self.lift_w = Param(glorot(rng, in_dim, width), "lift.weight")
            self.lift_b = Param(np.zeros(width), "lift.bias")
            out_width = stalk_dim * layers[-1].spec.out_dim
        else:
            out_width = layers[-1].spec.out_dim
        self.read_w = Param(glorot(rng, out_width, 1), "readout.weight")
        self.read_b = Param(np.zeros(1), "readout.bias")

    @property
    def specs(self):
        return [layer.spec for layer in self.layers]

    def params(self):
        out = []
        if self.lift_w is not None:
            out += [self.lift_w, self.lift_b]
        for layer in self.layers:
            out += layer.params()
        out += [self.read_w, self.read_b]
        return out

    def num_parameters(self):
        return int(sum(p.size for p in self.params()))

    def zero_grad(self):
        for p in self.params():
            p.zero_grad()

    def forward(self, tape, ctx, x, training=False, rng=None):
        """Logits of shape (n, 1) recorded on ``tape``."""
        if not hasattr(x, "tape"):
            x = tape.const(x)
        if x.shape != (ctx.n, self.in_dim):
            raise ShapeError(f"expected input of shape {(ctx.n, self.in_dim)}, got {x.shape}")
        h = x
        if self.lift_w is not None:
            d = self.stalk_dim
            h = h @ tape.watch(self.lift_w) + tape.watch(self.lift_b)
            h = h.reshape(ctx.n * d, h.shape[1] // d)
        for layer in self.layers:
            h = layer.forward(tape, ctx, h, training, rng)
        if self.lift_w is not None:
            h = h.reshape(ctx.n, h.shape[0] // ctx.n * h.shape[1])
        return h @ tape.watch(self.read_w) + tape.watch(self.read_b)

    def predict_logits(self, ctx, x):
        return self.forward(Tape(), ctx, x, training=False).value[:, 0]

    def state_dict(self):
        state = {"params": [p.value.copy() for p in self.params()], "norms": []}
        for layer in self.layers:
            if layer.norm is not None:
                state["norms"].append(layer.norm.state())
        return state

    def load_state_dict(self, state):
        for p, v in zip(self.params(), state["params"]):
            p.value = v.copy()
        norms = iter(state["norms"])
        for layer in self.layers:
            if layer.norm is not None:
                layer.norm.load_state(next(norms))


def layer_specs(config, in_dim):
    """Layer list for a model recipe.

    Hidden layers carry the recipe's activation, skip weight and
    normalisation.  For the GNN recipes the last layer is a plain
    convolution (identity activation, no normalisation, no skip).
    """
    kind = config.model
    act = config.hidden_activation
    alpha = config.skip_alpha
    norm = "batch_then_layer" if config.normalization else "none"
    q = config.num_layers
    specs = []
    if kind == "sheaf_general":
        for i in range(q):
            last = i == q - 1
            specs.append(
                LayerSpec(
                    "sheaf_general", config.f, config.f,
                    alpha=alpha,
                    activation="identity" if last else act,
                    dropout=config.dropout,
                    normalization="none" if last else norm,
                    stalk_dim=config.d,
                    laplacian=config.laplacian,
                    eps=config.sheaf_eps,
                )
            )
        return specs
    for i in range(q):
        last = i == q - 1
        specs.append(
            LayerSpec(
                kind,
                in_dim if i == 0 else config.hidden_dim,
                config.hidden_dim,
                alpha=0.0 if last else alpha,
                activation="identity" if last else act,
                dropout=config.dropout,
                normalization="none" if last else norm,
                heads=config.heads if kind == "gat" else 1,
            )
        )
    return specs


def build_model(config, in_dim, rng):
    specs = layer_specs(config, in_dim)
    layers = [make_layer(spec, rng, f"layer{i}") for i, spec in enumerate(specs)]
    stalk = config.d if config.model == "sheaf_general" else None
    return Model(layers, in_dim, rng, stalk_dim=stalk)


__all__ = ["Model", "GraphContext", "build_model", "layer_specs"]
