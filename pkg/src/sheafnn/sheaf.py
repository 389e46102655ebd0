"""Cellular sheaves of real vector spaces on graphs.

A sheaf here has the same stalk dimension ``d`` on every vertex and edge, so
each restriction map is a ``d x d`` matrix.  Cochains are stored as stacked
blocks: node ``k`` owns rows ``k*d:(k+1)*d`` of a 0-cochain.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractError, ShapeError
from .graph import Graph
from .linalg import batched_inv_sqrt_psd, sym_eig


@dataclass(frozen=True)
class CellularSheaf:
    """Stalk dimension plus two restriction maps per edge.

    ``maps_u[e]`` is the map from the stalk of the lower endpoint of edge
    ``e`` into the edge stalk, ``maps_v[e]`` the one from the upper endpoint.
    """

    graph: Graph
    stalk_dim: int
    maps_u: np.ndarray
    maps_v: np.ndarray

    def __post_init__(self):
        d = int(self.stalk_dim)
        if d < 1:
            raise ContractError("stalk dimension must be at least 1")
        shape = (self.graph.num_edges, d, d)
        mu = np.asarray(self.maps_u, dtype=np.float64).reshape(shape)
        mv = np.asarray(self.maps_v, dtype=np.float64).reshape(shape)
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(mv))):
            raise ContractError("restriction maps must be finite")
        object.__setattr__(self, "maps_u", mu)
        object.__setattr__(self, "maps_v", mv)

    def restriction(self, edge, side):
        """Map ``F_{x <= e}`` for ``side`` in {"u", "v"}."""
        if side == "u":
            return self.maps_u[edge]
        if side == "v":
            return self.maps_v[edge]
        raise ValueError(f"side must be 'u' or 'v', got {side!r}")


def constant_sheaf(g, d=1):
    if d < 1:
        raise ContractError("stalk dimension must be at least 1")
    eye = np.broadcast_to(np.eye(d), (g.num_edges, d, d))
    return CellularSheaf(g, d, eye.copy(), eye.copy())


def coboundary(s):
    """Dense coboundary ``delta`` of shape (E*d, V*d)."""
    d, g = s.stalk_dim, s.graph
    delta = np.zeros((g.num_edges * d, g.num_nodes * d))
    for e, (u, v) in enumerate(g.edges):
        rows = slice(e * d, (e + 1) * d)
        delta[rows, u * d:(u + 1) * d] = s.maps_u[e]
        delta[rows, v * d:(v + 1) * d] = -s.maps_v[e]
    return delta


def sheaf_laplacian(s):
    """``delta^T delta`` assembled block-wise without forming ``delta``."""
    e = s.graph.edge_array()
    return _kernels.assemble_laplacian(
        s.graph.num_nodes,
        np.ascontiguousarray(e[:, 0]),
        np.ascontiguousarray(e[:, 1]),
        s.maps_u,
        s.maps_v,
    )


def diagonal_blocks(L, d):
    n = L.shape[0] // d
    if n * d != L.shape[0]:
        raise ShapeError(f"Laplacian of size {L.shape[0]} is not a multiple of d={d}")
    blocks = L.reshape(n, d, n, d)
    idx = np.arange(n)
    return blocks[idx, :, idx, :].copy()


def normalized_sheaf_laplacian(s, eps=1e-6):
    """``D^{-1/2} L D^{-1/2}`` with ``D`` the d x d block diagonal of ``L``."""
    L = sheaf_laplacian(s)
    d, n = s.stalk_dim, s.graph.num_nodes
    inv = batched_inv_sqrt_psd(diagonal_blocks(L, d), eps)
    S = np.zeros_like(L)
    for k in range(n):
        S[k * d:(k + 1) * d, k * d:(k + 1) * d] = inv[k]
    out = S @ L @ S
    return 0.5 * (out + out.T)


def global_sections(s, tol=1e-8):
    """Orthonormal basis (as columns) of the kernel of the sheaf Laplacian.

    ``tol`` is relative to the largest eigenvalue (absolute when that is < 1).
    """
    L = sheaf_laplacian(s)
    if L.shape[0] == 0:
        return np.zeros((0, 0))
    w, V = sym_eig(L)
    cutoff = tol * max(1.0, float(np.max(np.abs(w))))
    return V[:, w < cutoff]
