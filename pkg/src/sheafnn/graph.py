"""Undirected graphs with canonical ``u < v`` edge orientation."""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ContractError, ShapeError


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph.

    ``edges`` keeps insertion order, which the similarity builder relies on:
    its last edge is the one that made the graph connected.
    """

    num_nodes: int
    edges: tuple = ()

    def __post_init__(self):
        canon = []
        seen = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ContractError(f"self-loop at node {u}")
            if u > v:
                u, v = v, u
            if not (0 <= u and v < self.num_nodes):
                raise ContractError(f"edge ({u}, {v}) out of range for {self.num_nodes} nodes")
            if (u, v) in seen:
                raise ContractError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            canon.append((u, v))
        object.__setattr__(self, "edges", tuple(canon))

    @property
    def num_edges(self):
        return len(self.edges)

    def edge_array(self):
        """Edges as an int64 array of shape (E, 2)."""
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)

    def neighbors(self, v):
        _check_node(self, v)
        out = []
        for a, b in self.edges:
            if a == v:
                out.append(b)
            elif b == v:
                out.append(a)
        return sorted(out)

    def relabel(self, perm):
        """Graph with node ``i`` renamed to ``perm[i]``."""
        perm = [int(p) for p in perm]
        return Graph(self.num_nodes, tuple((perm[u], perm[v]) for u, v in self.edges))

    def without_last_edge(self):
        return Graph(self.num_nodes, self.edges[:-1])


@dataclass(frozen=True)
class FeaturedGraph:
    graph: Graph
    features: np.ndarray
    labels: np.ndarray = field(default=None)

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] != self.graph.num_nodes:
            raise ShapeError(
                f"features shape {feats.shape} does not match {self.graph.num_nodes} nodes"
            )
        object.__setattr__(self, "features", feats)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (self.graph.num_nodes,):
                raise ShapeError("labels must have one entry per node")
            if not np.all((labels == 0) | (labels == 1)):
                raise ContractError("labels must be 0 or 1")
            object.__setattr__(self, "labels", labels)


def _check_node(g, v):
    if not 0 <= v < g.num_nodes:
        raise IndexError(f"node {v} out of range for graph with {g.num_nodes} nodes")


def degree(g, v):
    _check_node(g, v)
    return sum(1 for a, b in g.edges if a == v or b == v)


def degrees(g):
    deg = np.zeros(g.num_nodes, dtype=np.int64)
    e = g.edge_array()
    np.add.at(deg, e[:, 0], 1)
    np.add.at(deg, e[:, 1], 1)
    return deg


def adjacency(g):
    A = np.zeros((g.num_nodes, g.num_nodes))
    e = g.edge_array()
    A[e[:, 0], e[:, 1]] = 1.0
    A[e[:, 1], e[:, 0]] = 1.0
    return A


def degree_matrix(g):
    return np.diag(degrees(g).astype(np.float64))


def laplacian(g):
    """Combinatorial graph Laplacian ``D - A``."""
    return degree_matrix(g) - adjacency(g)


def connected_components(g):
    """Component id per node, numbered in order of first appearance."""
    parent = list(range(g.num_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in g.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    labels = {}
    out = np.empty(g.num_nodes, dtype=np.int64)
    for v in range(g.num_nodes):
        out[v] = labels.setdefault(find(v), len(labels))
    return out


def num_components(g):
    return int(connected_components(g).max()) + 1 if g.num_nodes else 0


def is_connected(g):
    if g.num_nodes < 1:
        raise ContractError("graph has no nodes")
    return num_components(g) == 1


def cosine_similarity_matrix(features):
    x = np.asarray(features, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ContractError(f"feature row {int(zero[0])} has zero norm")
    xn = x / norms[:, None]
    return xn @ xn.T


def ranked_pairs(features):
    """All pairs ``u < v`` ordered by cosine similarity, highest first.

    Equal similarities are ordered lexicographically by ``(u, v)``.
    """
    sims = cosine_similarity_matrix(features)
    us, vs = np.triu_indices(sims.shape[0], 1)
    s = sims[us, vs]
    order = np.lexsort((vs, us, -s))
    return us[order], vs[order], s[order]


def build_similarity_graph(features):
    """Insert edges by descending cosine similarity until the graph is connected."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ContractError("need a 2-D feature matrix with at least two rows")
    us, vs, _ = ranked_pairs(x)
    count = _kernels.edges_until_connected(
        x.shape[0], np.ascontiguousarray(us, dtype=np.int64), np.ascontiguousarray(vs, dtype=np.int64)
    )
    return Graph(x.shape[0], tuple(zip(us[:count].tolist(), vs[:count].tolist())))
