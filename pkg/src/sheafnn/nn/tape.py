"""Reverse-mode differentiation over numpy arrays.

A :class:`Tape` records every operation in execution order, so the list is
already topologically sorted and the backward pass is a single reverse scan.
Operations broadcast like numpy; gradients are summed back to each input's
shape.
"""

import numpy as np

from .. import _kernels
from ..errors import ContractError, NumericError, ShapeError
from ..linalg import batched_sym_eig, NEG_EIG_TOL


class Param:
    """Trainable array with an accumulated gradient of the same shape."""

    def __init__(self, value, name=""):
        self.value = np.array(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    @property
    def size(self):
        return self.value.size

    def zero_grad(self):
        self.grad = np.zeros_like(self.value)

    def __repr__(self):
        return f"Param({self.name!r}, shape={self.value.shape})"


class Var:
    __slots__ = ("tape", "value", "grad", "parents", "backward_fn", "param")
    __array_priority__ = 100

    def __init__(self, tape, value, parents=(), backward_fn=None, param=None):
        self.tape = tape
        self.value = value
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.param = param

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def _lift(self, other):
        if isinstance(other, Var):
            return other
        return self.tape.const(other)

    def __add__(self, other):
        return add(self, self._lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, self._lift(other))

    def __rsub__(self, other):
        return sub(self._lift(other), self)

    def __mul__(self, other):
        return mul(self, self._lift(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, self._lift(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, self._lift(other))

    def __rmatmul__(self, other):
        return matmul(self._lift(other), self)

    @property
    def T(self):
        return transpose(self)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return reshape(self, shape)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def __repr__(self):
        return f"Var(shape={self.value.shape})"


class Tape:
    def __init__(self):
        self.nodes = []
        self.leaves = []
        self._consumed = False

    def const(self, value):
        return Var(self, np.asarray(value, dtype=np.float64))

    def watch(self, param):
        """Leaf whose gradient flows into ``param.grad`` on backward."""
        v = Var(self, param.value, param=param)
        self.leaves.append(v)
        return v

    def record(self, value, parents, backward_fn):
        v = Var(self, value, parents, backward_fn)
        self.nodes.append(v)
        return v

    def backward(self, loss):
        if not self.nodes or loss.tape is not self or loss.backward_fn is None:
            raise ContractError("backward called before any forward computation was recorded")
        if self._consumed:
            raise ContractError("tape already consumed by a backward pass")
        if loss.value.size != 1:
            raise ShapeError(f"loss must be scalar, got shape {loss.value.shape}")
        self._consumed = True
        loss.grad = np.ones_like(loss.value)
        for node in reversed(self.nodes):
            if node.grad is None:
                continue
            grads = node.backward_fn(node.grad)
            for parent, g in zip(node.parents, grads):
                if g is None:
                    continue
                if parent.grad is None:
                    parent.grad = g
                else:
                    parent.grad = parent.grad + g
        for leaf in self.leaves:
            if leaf.grad is not None:
                leaf.param.grad = leaf.param.grad + leaf.grad


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _tape(*xs):
    for x in xs:
        if isinstance(x, Var):
            return x.tape
    raise ContractError("no Var operand")


# -- elementwise ------------------------------------------------------------


def add(a, b):
    sa, sb = a.shape, b.shape
    return a.tape.record(
        a.value + b.value, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb))
    )


def sub(a, b):
    sa, sb = a.shape, b.shape
    return a.tape.record(
        a.value - b.value, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb))
    )


def mul(a, b):
    av, bv = a.value, b.value
    return a.tape.record(
        av * bv,
        (a, b),
        lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)),
    )


def div(a, b):
    av, bv = a.value, b.value
    out = av / bv
    return a.tape.record(
        out,
        (a, b),
        lambda g: (_unbroadcast(g / bv, av.shape), _unbroadcast(-g * out / bv, bv.shape)),
    )


def neg(a):
    return a.tape.record(-a.value, (a,), lambda g: (-g,))


def exp(a):
    out = np.exp(a.value)
    return a.tape.record(out, (a,), lambda g: (g * out,))


def log(a):
    av = a.value
    return a.tape.record(np.log(av), (a,), lambda g: (g / av,))


def sqrt(a):
    out = np.sqrt(a.value)
    return a.tape.record(out, (a,), lambda g: (0.5 * g / out,))


def maximum(a, floor):
    """``max(a, floor)`` for a constant ``floor``; no gradient where clamped."""
    mask = a.value > floor
    return a.tape.record(np.where(mask, a.value, floor), (a,), lambda g: (g * mask,))


def relu(a):
    mask = a.value > 0
    return a.tape.record(a.value * mask, (a,), lambda g: (g * mask,))


def leaky_relu(a, slope=0.2):
    av = a.value
    factor = np.where(av > 0, 1.0, slope)
    return a.tape.record(av * factor, (a,), lambda g: (g * factor,))


def elu(a):
    av = a.value
    neg_part = np.expm1(np.minimum(av, 0.0))
    out = np.where(av > 0, av, neg_part)
    dout = np.where(av > 0, 1.0, neg_part + 1.0)
    return a.tape.record(out, (a,), lambda g: (g * dout,))


def identity(a):
    return a


def sigmoid(a):
    out = _sigmoid(a.value)
    return a.tape.record(out, (a,), lambda g: (g * out * (1.0 - out),))


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# -- reductions and shape ---------------------------------------------------


def sum_(a, axis=None, keepdims=False):
    shape = a.shape
    out = a.value.sum(axis=axis, keepdims=keepdims)

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return a.tape.record(np.asarray(out), (a,), back)


def mean(a, axis=None, keepdims=False):
    count = a.value.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return sum_(a, axis, keepdims) * (1.0 / count)


def reshape(a, shape):
    old = a.shape
    return a.tape.record(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))


def transpose(a, axes=None):
    if axes is None:
        axes = tuple(range(a.ndim))[::-1]
    inv = np.argsort(axes)
    return a.tape.record(np.transpose(a.value, axes), (a,), lambda g: (np.transpose(g, inv),))


def swap_last(a):
    axes = tuple(range(a.ndim - 2)) + (a.ndim - 1, a.ndim - 2)
    return transpose(a, axes)


def concat(xs, axis=-1):
    tape = _tape(*xs)
    xs = [x if isinstance(x, Var) else tape.const(x) for x in xs]
    sizes = [x.shape[axis] for x in xs]
    splits = np.cumsum(sizes)[:-1]
    return tape.record(
        np.concatenate([x.value for x in xs], axis=axis),
        tuple(xs),
        lambda g: tuple(np.split(g, splits, axis=axis)),
    )


def scatter_rows(values, index, num_segments):
    """numpy-level row scatter-add: ``out[index[i]] += values[i]``."""
    tail = values.shape[1:]
    flat = np.ascontiguousarray(values.reshape(values.shape[0], -1))
    out = _kernels.segment_sum(flat, index, num_segments)
    return out.reshape((num_segments,) + tail)


def take(a, index):
    """Rows ``a[index]`` along the first axis."""
    index = np.asarray(index, dtype=np.int64)
    rows = a.shape[0]
    return a.tape.record(a.value[index], (a,), lambda g: (scatter_rows(g, index, rows),))


def segment_sum(a, index, num_segments):
    """Sum rows of ``a`` into ``num_segments`` buckets given by ``index``."""
    index = np.asarray(index, dtype=np.int64)
    out = scatter_rows(a.value, index, num_segments)
    return a.tape.record(out, (a,), lambda g: (g[index],))


# -- linear algebra ---------------------------------------------------------


def matmul(a, b):
    """numpy ``@`` semantics, including stacked (batched) operands."""
    av, bv = a.value, b.value
    if av.ndim < 2 or bv.ndim < 2:
        raise ShapeError("matmul operands must have at least 2 dimensions")
    if av.shape[-1] != bv.shape[-2]:
        raise ShapeError(f"cannot multiply {av.shape} by {bv.shape}")

    if av.ndim == 3 and bv.ndim == 3 and av.shape[0] == bv.shape[0]:
        mm = _kernels.batched_matmul
    else:
        mm = np.matmul

    def back(g):
        ga = mm(g, np.swapaxes(bv, -1, -2))
        gb = mm(np.swapaxes(av, -1, -2), g)
        return _unbroadcast(ga, av.shape), _unbroadcast(gb, bv.shape)

    return a.tape.record(mm(av, bv), (a, b), back)


def sheaf_laplacian(fu, fv, us, vs, num_nodes):
    """Dense sheaf Laplacian (n*d, n*d) from per-edge restriction maps (E, d, d)."""
    us = np.ascontiguousarray(us, dtype=np.int64)
    vs = np.ascontiguousarray(vs, dtype=np.int64)
    fuv = np.ascontiguousarray(fu.value)
    fvv = np.ascontiguousarray(fv.value)
    L = _kernels.assemble_laplacian(num_nodes, us, vs, fuv, fvv)

    def back(g):
        return _kernels.laplacian_map_grads(np.ascontiguousarray(g), us, vs, fuv, fvv)

    return fu.tape.record(L, (fu, fv), back)


def diagonal_blocks(a, d):
    """The d x d diagonal blocks of a (n*d, n*d) matrix, shape (n, d, d)."""
    n = a.shape[0] // d
    idx = np.arange(n)
    shape = a.shape

    def back(g):
        out = np.zeros((n, d, n, d))
        out[idx, :, idx, :] = g
        return (out.reshape(shape),)

    return a.tape.record(a.value.reshape(n, d, n, d)[idx, :, idx, :], (a,), back)


def sym_inv_sqrt(a, eps):
    """Inverse square root of a stack of symmetric PSD matrices (b, d, d).

    The backward pass uses the divided-difference (Daleckii-Krein) formula
    on the eigenbasis, falling back to the derivative on near-equal
    eigenvalues.
    """
    av = 0.5 * (a.value + np.swapaxes(a.value, -1, -2))
    w, V = batched_sym_eig(av)
    scale = np.maximum(1.0, np.abs(w).max(axis=1, keepdims=True)) if w.size else w
    if w.size and np.any(w < -NEG_EIG_TOL * scale):
        raise ContractError("block is not positive semi-definite")
    lam = np.maximum(w, 0.0) + eps
    if np.any(lam <= 0.0):
        raise NumericError("singular block with eps=0")
    f = lam ** -0.5
    out = np.einsum("bij,bj,bkj->bik", V, f, V)

    li = lam[:, :, None]
    lj = lam[:, None, :]
    diff = li - lj
    close = np.abs(diff) <= 1e-10 * np.maximum(np.abs(li), np.abs(lj)) + 1e-300
    safe = np.where(close, 1.0, diff)
    mid = 0.5 * (li + lj)
    kernel = np.where(close, -0.5 * mid ** -1.5, (f[:, :, None] - f[:, None, :]) / safe)

    def back(g):
        gs = 0.5 * (g + np.swapaxes(g, -1, -2))
        inner = np.swapaxes(V, -1, -2) @ gs @ V
        return (V @ (kernel * inner) @ np.swapaxes(V, -1, -2),)

    return a.tape.record(out, (a,), back)


# -- losses -----------------------------------------------------------------


def bce_with_logits(z, targets, mask):
    """Mean binary cross-entropy over rows where ``mask`` is true.

    ``z`` has shape (n, 1); ``targets`` are soft labels in [0, 1].
    """
    zv = z.value[:, 0]
    t = np.asarray(targets, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    count = int(m.sum())
    if count == 0:
        raise ContractError("loss mask selects no rows")
    per = np.maximum(zv, 0.0) - zv * t + np.log1p(np.exp(-np.abs(zv)))
    value = np.array(per[m].sum() / count)
    p = _sigmoid(zv)

    def back(g):
        gz = np.where(m, (p - t) / count, 0.0) * g
        return (gz[:, None],)

    return z.tape.record(value, (z,), back)
