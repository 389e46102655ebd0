import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sheafnn.errors import ContractError, ShapeError
from sheafnn.graph import (
    FeaturedGraph,
    Graph,
    adjacency,
    build_similarity_graph,
    degree,
    degree_matrix,
    is_connected,
    laplacian,
    num_components,
)

from conftest import EDGE, TRIANGLE, path_graph, random_graph


def test_edges_are_canonical():
    g = Graph(3, ((2, 0), (1, 2)))
    assert g.edges == ((0, 2), (1, 2))


@pytest.mark.parametrize("edges", [((0, 0),), ((0, 1), (1, 0)), ((0, 3),)])
def test_invalid_edges(edges):
    with pytest.raises(ContractError):
        Graph(3, edges)


def test_degree():
    assert [degree(TRIANGLE, v) for v in range(3)] == [2, 2, 2]
    assert degree(EDGE, 0) == 1
    star = Graph(7, tuple((0, i) for i in range(1, 7)))
    assert degree(star, 0) == 6
    with pytest.raises(IndexError):
        degree(EDGE, 2)


def test_is_connected_examples():
    assert is_connected(Graph(1))
    assert not is_connected(Graph(2))
    assert is_connected(path_graph(3))
    with pytest.raises(ContractError):
        is_connected(Graph(0))


def test_adjacency_and_degree_matrix():
    np.testing.assert_array_equal(adjacency(EDGE), [[0, 1], [1, 0]])
    np.testing.assert_array_equal(degree_matrix(EDGE), np.eye(2))
    np.testing.assert_array_equal(adjacency(TRIANGLE), np.ones((3, 3)) - np.eye(3))
    np.testing.assert_array_equal(degree_matrix(TRIANGLE), 2 * np.eye(3))
    np.testing.assert_array_equal(adjacency(Graph(2)), np.zeros((2, 2)))
    np.testing.assert_array_equal(degree_matrix(Graph(2)), np.zeros((2, 2)))


def test_adjacency_properties(rng):
    for _ in range(20):
        g = random_graph(rng, int(rng.integers(1, 12)))
        A = adjacency(g)
        np.testing.assert_array_equal(A, A.T)
        assert np.all(np.diag(A) == 0)
        np.testing.assert_array_equal(np.diag(degree_matrix(g)), A.sum(axis=1))
        assert np.all(laplacian(g).sum(axis=1) == 0)


def test_similarity_graph_examples():
    r = 1 / np.sqrt(2)
    g = build_similarity_graph(np.array([[1.0, 0.0], [0.0, 1.0], [r, r]]))
    assert g.edges == ((0, 2), (1, 2))
    g = build_similarity_graph(np.array([[1.0, 2.0], [1.0, 2.0]]))
    assert g.edges == ((0, 1),)
    g = build_similarity_graph(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]]))
    assert g.edges == ((0, 2), (1, 2))


def test_similarity_graph_zero_row():
    with pytest.raises(ContractError, match="row 1"):
        build_similarity_graph(np.array([[1.0, 0.0], [0.0, 0.0], [1.0, 1.0]]))


def test_similarity_graph_ties_lexicographic():
    # all four points equally similar to each other pairwise at 0
    x = np.eye(4)
    g = build_similarity_graph(x)
    assert g.edges == ((0, 1), (0, 2), (0, 3))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 25), st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_similarity_graph_minimal_prefix(n, dim, seed):
    x = np.random.default_rng(seed).normal(size=(n, dim))
    g = build_similarity_graph(x)
    assert is_connected(g)
    assert g.num_edges >= n - 1
    assert not is_connected(g.without_last_edge())


def test_similarity_graph_oracle(rng):
    """Brute-force reference: sort all pairs, add until connected."""
    x = rng.normal(size=(12, 3))
    xn = x / np.linalg.norm(x, axis=1, keepdims=True)
    pairs = sorted(
        ((-(xn[u] @ xn[v]), u, v) for u in range(12) for v in range(u + 1, 12))
    )
    edges = []
    for _, u, v in pairs:
        edges.append((u, v))
        if num_components(Graph(12, tuple(edges))) == 1:
            break
    assert build_similarity_graph(x).edges == tuple(edges)


def test_featured_graph_validation():
    FeaturedGraph(EDGE, np.zeros((2, 3)), [0, 1])
    with pytest.raises(ShapeError):
        FeaturedGraph(EDGE, np.zeros((3, 3)))
    with pytest.raises(ContractError):
        FeaturedGraph(EDGE, np.zeros((2, 3)), [0, 2])


def test_relabel_preserves_degrees(rng):
    g = random_graph(rng, 8)
    perm = rng.permutation(8)
    h = g.relabel(perm)
    for v in range(8):
        assert degree(g, v) == degree(h, perm[v])
