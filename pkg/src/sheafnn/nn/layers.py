"""Graph convolutions, the sheaf diffusion layer and their parameter holders.

Every layer follows the residual template

    out = act(norm(conv(h)) + alpha * h @ W_skip)

with ``W_skip`` fixed to the identity when input and output widths agree.
The sheaf layer replaces ``conv`` by a learned sheaf Laplacian acting on
``d``-dimensional stalks with ``f`` channels each.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, ShapeError
from ..graph import adjacency, degrees, laplacian
from . import tape as T
from .tape import Param

KINDS = ("gcn", "sage", "gat", "sheaf_general", "simple")
ACTIVATIONS = {"relu": T.relu, "elu": T.elu, "identity": T.identity}
NORM_FLOOR = 1e-5


class GraphContext:
    """Graph-derived constants shared by all layers of one forward pass."""

    def __init__(self, g):
        self.graph = g
        self.n = g.num_nodes
        e = g.edge_array()
        self.us = e[:, 0].copy()
        self.vs = e[:, 1].copy()
        A = adjacency(g)
        deg = degrees(g).astype(np.float64)
        self.laplacian = laplacian(g)
        d_tilde = (deg + 1.0) ** -0.5
        self.gcn_prop = d_tilde[:, None] * (A + np.eye(self.n)) * d_tilde[None, :]
        with np.errstate(divide="ignore"):
            inv_deg = np.where(deg > 0, 1.0 / np.maximum(deg, 1.0), 0.0)
        self.mean_agg = inv_deg[:, None] * A
        loops = np.arange(self.n)
        # message j -> i for every neighbour plus self-loops
        self.att_src = np.concatenate([self.us, self.vs, loops])
        self.att_dst = np.concatenate([self.vs, self.us, loops])


def glorot(rng, fan_in, fan_out, shape=None, scale=1.0):
    limit = scale * np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


# ---------------------------------------------------------------------------
# Convolutions (functional form; h is a Var)
# ---------------------------------------------------------------------------


def simple_laplacian_conv(ctx, h, w):
    """``(D - A) h W``: each node gets deg * own features minus neighbour sum."""
    if h.shape[0] != ctx.n:
        raise ShapeError(f"features have {h.shape[0]} rows for {ctx.n} nodes")
    return h.tape.const(ctx.laplacian) @ (h @ w)


def gcn_conv(ctx, h, w, b=None):
    out = h.tape.const(ctx.gcn_prop) @ (h @ w)
    return out if b is None else out + b


def sage_conv(ctx, h, w, b=None, normalize=True):
    agg = h.tape.const(ctx.mean_agg) @ h
    out = T.concat([h, agg], axis=1) @ w
    if b is not None:
        out = out + b
    if normalize:
        norm = T.sqrt(T.maximum((out * out).sum(axis=1, keepdims=True), 1e-24))
        out = out / norm
    return out


def gat_attention(ctx, z, att_src, att_dst, slope=0.2):
    """Per-message attention weights, shape (messages, heads).

    ``z`` is (n, heads, c).  Weights are softmax-normalised over each target
    node's neighbourhood including itself.
    """
    s_src = (z * att_src).sum(axis=2)
    s_dst = (z * att_dst).sum(axis=2)
    logits = T.leaky_relu(T.take(s_src, ctx.att_src) + T.take(s_dst, ctx.att_dst), slope)
    shift = np.full((ctx.n, logits.shape[1]), -np.inf)
    np.maximum.at(shift, ctx.att_dst, logits.value)
    ex = T.exp(logits - shift[ctx.att_dst])
    denom = T.segment_sum(ex, ctx.att_dst, ctx.n)
    return ex / T.take(denom, ctx.att_dst)


def gat_conv(ctx, h, w, att_src, att_dst, heads, b=None):
    out_dim = w.shape[1]
    if out_dim % heads:
        raise ContractError(f"hidden_dim {out_dim} must be divisible by heads {heads}")
    c = out_dim // heads
    z = (h @ w).reshape(ctx.n, heads, c)
    att = gat_attention(ctx, z, att_src, att_dst)
    msg = T.take(z, ctx.att_src) * att.reshape(att.shape[0], heads, 1)
    out = T.segment_sum(msg, ctx.att_dst, ctx.n).reshape(ctx.n, out_dim)
    return out if b is None else out + b


def dropout(h, rate, training, rng):
    if not training or rate <= 0.0:
        return h
    mask = (rng.random(h.shape) >= rate) / (1.0 - rate)
    return h * mask


# ---------------------------------------------------------------------------
# Normalisation
# ---------------------------------------------------------------------------


class BatchThenLayerNorm:
    """Feature-wise batch standardisation followed by row-wise layer norm."""

    def __init__(self, width, name="norm", momentum=0.1):
        self.gamma_b = Param(np.ones(width), f"{name}.batch_scale")
        self.beta_b = Param(np.zeros(width), f"{name}.batch_shift")
        self.gamma_l = Param(np.ones(width), f"{name}.layer_scale")
        self.beta_l = Param(np.zeros(width), f"{name}.layer_shift")
        self.running_mean = np.zeros(width)
        self.running_var = np.ones(width)
        self.momentum = momentum

    def params(self):
        return [self.gamma_b, self.beta_b, self.gamma_l, self.beta_l]

    def __call__(self, tape, h, training):
        if training:
            mu = h.mean(axis=0, keepdims=True)
            centered = h - mu
            var = (centered * centered).mean(axis=0, keepdims=True)
            n = h.shape[0]
            unbiased = var.value[0] * (n / max(n - 1, 1))
            m = self.momentum
            self.running_mean = (1 - m) * self.running_mean + m * mu.value[0]
            self.running_var = (1 - m) * self.running_var + m * unbiased
            xb = centered / T.sqrt(T.maximum(var, NORM_FLOOR))
        else:
            xb = (h - self.running_mean) / np.sqrt(np.maximum(self.running_var, NORM_FLOOR))
        xb = xb * tape.watch(self.gamma_b) + tape.watch(self.beta_b)
        mu = xb.mean(axis=1, keepdims=True)
        centered = xb - mu
        var = (centered * centered).mean(axis=1, keepdims=True)
        xl = centered / T.sqrt(T.maximum(var, NORM_FLOOR))
        return xl * tape.watch(self.gamma_l) + tape.watch(self.beta_l)

    def state(self):
        return {"running_mean": self.running_mean.copy(), "running_var": self.running_var.copy()}

    def load_state(self, state):
        self.running_mean = state["running_mean"].copy()
        self.running_var = state["running_var"].copy()


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_dim: int
    out_dim: int
    alpha: float = 0.0
    activation: str = "identity"
    dropout: float = 0.0
    normalization: str = "none"
    heads: int = 1
    stalk_dim: int = 1
    laplacian: str = "normalized"
    eps: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"unknown layer kind {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ContractError(f"unknown activation {self.activation!r}")
        if self.normalization not in ("batch_then_layer", "none"):
            raise ContractError(f"unknown normalization {self.normalization!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ContractError("dropout rate must lie in [0, 1)")
        if self.kind == "gat" and self.out_dim % self.heads:
            raise ContractError(
                f"hidden_dim {self.out_dim} must be divisible by heads {self.heads}"
            )
        if self.kind == "sheaf_general" and self.laplacian not in ("normalized", "plain"):
            raise ContractError(f"unknown laplacian {self.laplacian!r}")


class GNNLayer:
    """Residual graph convolution layer (gcn, sage, gat or simple Laplacian)."""

    def __init__(self, spec, rng, name="layer"):
        self.spec = spec
        self.name = name
        i, o = spec.in_dim, spec.out_dim
        self.bias = None
        if spec.kind == "sage":
            self.weight = Param(glorot(rng, 2 * i, o), f"{name}.weight")
        else:
            self.weight = Param(glorot(rng, i, o), f"{name}.weight")
        if spec.kind in ("gcn", "sage", "gat"):
            self.bias = Param(np.zeros(o), f"{name}.bias")
        if spec.kind == "gat":
            c = o // spec.heads
            self.att_src = Param(glorot(rng, c, 1, (spec.heads, c)), f"{name}.att_src")
            self.att_dst = Param(glorot(rng, c, 1, (spec.heads, c)), f"{name}.att_dst")
        self.skip = None
        if spec.alpha != 0.0 and i != o:
            self.skip = Param(glorot(rng, i, o), f"{name}.skip")
        self.norm = (
            BatchThenLayerNorm(o, f"{name}.norm")
            if spec.normalization == "batch_then_layer"
            else None
        )

    def params(self):
        out = [self.weight]
        if self.bias is not None:
            out.append(self.bias)
        if self.spec.kind == "gat":
            out += [self.att_src, self.att_dst]
        if self.skip is not None:
            out.append(self.skip)
        if self.norm is not None:
            out += self.norm.params()
        return out

    def conv(self, tape, ctx, h):
        kind = self.spec.kind
        w = tape.watch(self.weight)
        b = tape.watch(self.bias) if self.bias is not None else None
        if kind == "simple":
            return simple_laplacian_conv(ctx, h, w)
        if kind == "gcn":
            return gcn_conv(ctx, h, w, b)
        if kind == "sage":
            return sage_conv(ctx, h, w, b)
        return gat_conv(
            ctx, h, w, tape.watch(self.att_src), tape.watch(self.att_dst), self.spec.heads, b
        )

    def forward(self, tape, ctx, h, training=False, rng=None):
        spec = self.spec
        if h.shape[1] != spec.in_dim:
            raise ShapeError(f"{self.name}: expected {spec.in_dim} input columns, got {h.shape[1]}")
        out = self.conv(tape, ctx, h)
        if self.norm is not None:
            out = self.norm(tape, out, training)
        if spec.alpha != 0.0:
            skip = h @ tape.watch(self.skip) if self.skip is not None else h
            out = out + skip * spec.alpha
        out = ACTIVATIONS[spec.activation](out)
        return dropout(out, spec.dropout, training, rng)


def learn_restriction_maps(ctx, x, gen_w, gen_b, d):
    """Restriction maps from concatenated endpoint features.

    ``x`` holds one flattened feature row per node.  For edge (u, v) the map
    on the u side is ``reshape([x_u | x_v] @ gen_w + gen_b, (d, d))`` and the
    v side uses ``[x_v | x_u]``.  Returns Vars of shape (E, d, d).
    """
    width = x.shape[1]
    # [x_a | x_b] @ W == x_a @ W_top + x_b @ W_bottom, evaluated per node
    own = x @ T.take(gen_w, np.arange(width))
    other = x @ T.take(gen_w, np.arange(width, 2 * width))
    e = len(ctx.us)
    fu = (T.take(own, ctx.us) + T.take(other, ctx.vs) + gen_b).reshape(e, d, d)
    fv = (T.take(own, ctx.vs) + T.take(other, ctx.us) + gen_b).reshape(e, d, d)
    return fu, fv


def sheaf_diffusion(ctx, y, fu, fv, normalized=True, eps=1e-6):
    """Apply the (normalised) sheaf Laplacian to stacked stalk data y (n, d, f).

    The Laplacian is assembled densely; the normalised variant conjugates it
    with the inverse square roots of its own d x d diagonal blocks.
    """
    n, d, f = y.shape
    lap = T.sheaf_laplacian(fu, fv, ctx.us, ctx.vs, n)
    if normalized:
        s = T.sym_inv_sqrt(T.diagonal_blocks(lap, d), eps)
        y = s @ y
    out = (lap @ y.reshape(n * d, f)).reshape(n, d, f)
    if normalized:
        out = s @ out
    return out


class SheafLayer:
    """Sheaf diffusion layer on (n*d, f) stalk features.

    out = act(norm(Lap_F (I kron W1) h W2) + alpha * h W3), with the sheaf F
    regenerated from the current features on every call.
    """

    def __init__(self, spec, rng, name="sheaf", gen_scale=0.1):
        self.spec = spec
        self.name = name
        d = spec.stalk_dim
        f_in, f_out = spec.in_dim, spec.out_dim
        self.gen_w = Param(
            glorot(rng, 2 * d * f_in, d * d, scale=gen_scale), f"{name}.restriction_weight"
        )
        self.gen_b = Param(np.zeros(d * d), f"{name}.restriction_bias")
        self.w1 = Param(glorot(rng, d, d), f"{name}.stalk_weight")
        self.w2 = Param(glorot(rng, f_in, f_out), f"{name}.channel_weight")
        self.w3 = None
        if spec.alpha != 0.0 and f_in != f_out:
            self.w3 = Param(glorot(rng, f_in, f_out), f"{name}.skip")
        self.norm = (
            BatchThenLayerNorm(d * f_out, f"{name}.norm")
            if spec.normalization == "batch_then_layer"
            else None
        )

    def params(self):
        out = [self.gen_w, self.gen_b, self.w1, self.w2]
        if self.w3 is not None:
            out.append(self.w3)
        if self.norm is not None:
            out += self.norm.params()
        return out

    def restriction_maps(self, tape, ctx, h):
        d = self.spec.stalk_dim
        x = h.reshape(ctx.n, d * self.spec.in_dim)
        return learn_restriction_maps(ctx, x, tape.watch(self.gen_w), tape.watch(self.gen_b), d)

    def forward(self, tape, ctx, h, training=False, rng=None):
        spec = self.spec
        d, f_in, f_out, n = spec.stalk_dim, spec.in_dim, spec.out_dim, ctx.n
        if h.shape != (n * d, f_in):
            raise ShapeError(f"{self.name}: expected features of shape {(n * d, f_in)}, got {h.shape}")
        fu, fv = self.restriction_maps(tape, ctx, h)
        y = tape.watch(self.w1) @ h.reshape(n, d, f_in)
        y = sheaf_diffusion(ctx, y, fu, fv, spec.laplacian == "normalized", spec.eps)
        out = y.reshape(n * d, f_in) @ tape.watch(self.w2)
        if self.norm is not None:
            out = self.norm(tape, out.reshape(n, d * f_out), training).reshape(n * d, f_out)
        if spec.alpha != 0.0:
            skip = h @ tape.watch(self.w3) if self.w3 is not None else h
            out = out + skip * spec.alpha
        out = ACTIVATIONS[spec.activation](out)
        return dropout(out, spec.dropout, training, rng)


def make_layer(spec, rng, name):
    if spec.kind == "sheaf_general":
        return SheafLayer(spec, rng, name)
    return GNNLayer(spec, rng, name)
