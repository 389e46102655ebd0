import numpy as np
import pytest

from sheafnn.errors import ContractError, ShapeError
from sheafnn.nn import Param, Tape
from sheafnn.nn import tape as T

from gradcheck import check_params


def test_linear_grad():
    x = np.array([[1.0], [2.0], [3.0]])
    W = Param(np.ones((2, 3)), "W")
    t = Tape()
    t.backward((t.watch(W) @ t.const(x)).sum())
    np.testing.assert_array_equal(W.grad, np.ones((2, 1)) @ x.T)


def test_quadratic_grad(rng):
    W = Param(rng.normal(size=(3, 2)), "W")
    t = Tape()
    w = t.watch(W)
    t.backward((w * w).sum() * 0.5)
    np.testing.assert_allclose(W.grad, W.value)


def test_backward_before_forward():
    with pytest.raises(ContractError):
        t = Tape()
        t.backward(t.const(1.0))


def test_backward_twice():
    W = Param(np.ones(2))
    t = Tape()
    loss = (t.watch(W) * 2.0).sum()
    t.backward(loss)
    with pytest.raises(ContractError):
        t.backward(loss)


def test_nonscalar_loss():
    W = Param(np.ones(2))
    t = Tape()
    with pytest.raises(ShapeError):
        t.backward(t.watch(W) * 2.0)


def test_grads_accumulate_over_reuse(rng):
    W = Param(rng.normal(size=3))
    t = Tape()
    w = t.watch(W)
    t.backward((w * w).sum() + w.sum())
    np.testing.assert_allclose(W.grad, 2 * W.value + 1)


UNARY = {
    "exp": T.exp,
    "log": lambda a: T.log(T.exp(a) + 1.0),
    "sqrt": lambda a: T.sqrt(a * a + 1.0),
    "relu": T.relu,
    "leaky_relu": T.leaky_relu,
    "elu": T.elu,
    "sigmoid": T.sigmoid,
    "neg": T.neg,
    "maximum": lambda a: T.maximum(a, 0.1),
    "transpose": lambda a: T.transpose(a),
    "reshape": lambda a: a.reshape(2, 6),
    "mean_axis": lambda a: a.mean(axis=0, keepdims=True),
}


@pytest.mark.parametrize("name", sorted(UNARY))
def test_unary_ops(rng, name):
    # keep away from relu's kink
    v = rng.normal(size=(3, 4))
    v[np.abs(v) < 0.05] = 0.3
    A = Param(v, "A")
    R = rng.normal(size=UNARY[name](Tape().const(v)).shape)

    def loss(t):
        return (UNARY[name](t.watch(A)) * R).sum()

    assert check_params(loss, [A]) == []


BINARY = {
    "add_broadcast": lambda a, b: a + b.sum(axis=0, keepdims=True),
    "sub": lambda a, b: a - b,
    "mul_broadcast": lambda a, b: a * b.mean(axis=1, keepdims=True),
    "div": lambda a, b: a / (b * b + 1.0),
    "matmul": lambda a, b: a @ T.transpose(b),
    "concat": lambda a, b: T.concat([a, b], axis=1),
}


@pytest.mark.parametrize("name", sorted(BINARY))
def test_binary_ops(rng, name):
    A = Param(rng.normal(size=(3, 4)), "A")
    B = Param(rng.normal(size=(3, 4)), "B")
    t0 = Tape()
    R = rng.normal(size=BINARY[name](t0.const(A.value), t0.const(B.value)).shape)

    def loss(t):
        return (BINARY[name](t.watch(A), t.watch(B)) * R).sum()

    assert check_params(loss, [A, B]) == []


def test_batched_matmul_grad(rng):
    A = Param(rng.normal(size=(5, 3, 3)), "A")
    B = Param(rng.normal(size=(5, 3, 2)), "B")
    R = rng.normal(size=(5, 3, 2))
    assert check_params(lambda t: ((t.watch(A) @ t.watch(B)) * R).sum(), [A, B]) == []


def test_broadcast_matmul_grad(rng):
    A = Param(rng.normal(size=(3, 3)), "A")
    B = Param(rng.normal(size=(5, 3, 2)), "B")
    R = rng.normal(size=(5, 3, 2))
    assert check_params(lambda t: ((t.watch(A) @ t.watch(B)) * R).sum(), [A, B]) == []


def test_take_and_segment_sum(rng):
    A = Param(rng.normal(size=(4, 3)), "A")
    idx = np.array([0, 2, 2, 3, 1, 0])
    R = rng.normal(size=(5, 3))

    def loss(t):
        return (T.segment_sum(T.take(t.watch(A), idx), np.array([4, 0, 1, 1, 3, 2]), 5) * R).sum()

    assert check_params(loss, [A]) == []


def test_sheaf_laplacian_op(rng):
    us, vs = np.array([0, 0, 1, 2]), np.array([1, 2, 3, 3])
    FU = Param(rng.normal(size=(4, 2, 2)), "fu")
    FV = Param(rng.normal(size=(4, 2, 2)), "fv")
    R = rng.normal(size=(8, 8))
    assert check_params(lambda t: (T.sheaf_laplacian(t.watch(FU), t.watch(FV), us, vs, 4) * R).sum(), [FU, FV]) == []


def test_diagonal_blocks_op(rng):
    A = Param(rng.normal(size=(6, 6)), "A")
    R = rng.normal(size=(3, 2, 2))
    assert check_params(lambda t: (T.diagonal_blocks(t.watch(A), 2) * R).sum(), [A]) == []


def test_sym_inv_sqrt_op(rng):
    M = Param(rng.normal(size=(4, 3, 3)), "M")
    R = rng.normal(size=(4, 3, 3))

    def loss(t):
        m = t.watch(M)
        spd = m @ T.swap_last(m) + np.eye(3) * 0.5
        return (T.sym_inv_sqrt(spd, 1e-6) * R).sum()

    assert check_params(loss, [M]) == []


def test_sym_inv_sqrt_repeated_eigenvalues():
    # a scalar multiple of the identity hits the equal-eigenvalue branch
    S = Param(np.array([[[1.0]]]), "s")
    R = np.array([[1.0, 0.2], [0.2, -0.5]])

    def loss(t):
        s = t.watch(S)
        return (T.sym_inv_sqrt(s * np.eye(2) + 1.0, 0.0) * R).sum()

    assert check_params(loss, [S]) == []


def test_sym_inv_sqrt_value(rng):
    t = Tape()
    a = np.array([[[4.0, 0.0], [0.0, 9.0]]])
    np.testing.assert_allclose(T.sym_inv_sqrt(t.const(a), 0.0).value[0], np.diag([0.5, 1 / 3]), atol=1e-14)


def test_bce_value_and_grad(rng):
    Z = Param(rng.normal(size=(6, 1)), "z")
    y = np.array([0, 1, 1, 0, 1, 0], dtype=float)
    mask = np.array([1, 1, 0, 1, 1, 0], dtype=bool)
    t = Tape()
    val = float(T.bce_with_logits(t.watch(Z), y, mask).value)
    p = 1 / (1 + np.exp(-Z.value[:, 0]))
    ref = -np.mean((y * np.log(p) + (1 - y) * np.log(1 - p))[mask])
    assert abs(val - ref) < 1e-12
    assert check_params(lambda t: T.bce_with_logits(t.watch(Z), y, mask), [Z]) == []


def test_bce_empty_mask():
    t = Tape()
    with pytest.raises(ContractError):
        T.bce_with_logits(t.const(np.zeros((2, 1))), np.zeros(2), np.zeros(2, dtype=bool))


def test_bce_stable_for_large_logits():
    t = Tape()
    z = t.const(np.array([[800.0], [-800.0]]))
    val = T.bce_with_logits(z, np.array([1.0, 0.0]), np.ones(2, dtype=bool)).value
    assert np.isfinite(val) and val < 1e-12
