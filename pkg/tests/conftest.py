import sys
import numpy as np
import pytest

from sheafnn.graph import Graph


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_graph(rng, n, p=0.4):
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Graph(n, tuple(edges))


def path_graph(n):
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


TRIANGLE = Graph(3, ((0, 1), (1, 2), (0, 2)))
EDGE = Graph(2, ((0, 1),))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
