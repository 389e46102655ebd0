"""Dense float64 linear algebra on 2-D numpy arrays.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 (row-major).
The helpers here add shape checking and the symmetric eigensolver used for
PCA, normalized Laplacians and kernel computations.
"""

import numpy as np

from . import _kernels
from .errors import ContractError, NumericError, ShapeError

SYM_TOL = 1e-10
NEG_EIG_TOL = 1e-8


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float64 array."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError(f"{name} contains non-finite entries")
    return m


def matmul(a, b):
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def kron(a, b):
    """Kronecker product; block (i, j) of the result is ``a[i, j] * b``."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    return np.kron(a, b)


def check_symmetric(a, tol=SYM_TOL):
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.T)) > tol * scale:
        raise ContractError("matrix is not symmetric")
    return a


def sym_eig(a):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, V)`` with eigenvalues ``w`` in ascending order and the
    matching orthonormal eigenvectors as the columns of ``V``.
    """
    a = check_symmetric(a)
    a = 0.5 * (a + a.T)
    if a.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0))
    w, V, sweeps = _kernels.jacobi_eigh(a, _kernels.JACOBI_TOL, _kernels.JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise NumericError(
            f"Jacobi iteration did not converge in {_kernels.JACOBI_MAX_SWEEPS} sweeps"
        )
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def batched_sym_eig(blocks):
    """``sym_eig`` over a stack of symmetric matrices of shape (b, n, n)."""
    blocks = np.asarray(blocks, dtype=np.float64)
    blocks = 0.5 * (blocks + blocks.transpose(0, 2, 1))
    if blocks.shape[0] == 0:
        n = blocks.shape[1]
        return np.zeros((0, n)), np.zeros((0, n, n))
    w, V, sweeps = _kernels.batched_jacobi_eigh(
        np.ascontiguousarray(blocks), _kernels.JACOBI_TOL, _kernels.JACOBI_MAX_SWEEPS
    )
    if sweeps < 0:
        raise NumericError("batched Jacobi iteration did not converge")
    if not np.all(np.isfinite(w)):
        raise NumericError("non-finite eigenvalues")
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return w, V


def _inv_sqrt_values(w, eps):
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if w.size and w.min() < -NEG_EIG_TOL * scale:
        raise ContractError(f"matrix is not positive semi-definite (eigenvalue {w.min():.3e})")
    shifted = np.maximum(w, 0.0) + eps
    if np.any(shifted <= 0.0):
        raise NumericError("singular matrix: zero eigenvalue with eps=0")
    return shifted ** -0.5


def inv_sqrt_psd(a, eps=0.0):
    """``V diag((w + eps)^(-1/2)) V^T`` for a symmetric PSD matrix."""
    w, V = sym_eig(a)
    f = _inv_sqrt_values(w, eps)
    out = (V * f) @ V.T
    return 0.5 * (out + out.T)


def batched_inv_sqrt_psd(blocks, eps=0.0):
    w, V = batched_sym_eig(blocks)
    f = _inv_sqrt_values(w.ravel(), eps).reshape(w.shape)
    out = np.einsum("bij,bj,bkj->bik", V, f, V)
    return 0.5 * (out + out.transpose(0, 2, 1))
