import numpy as np
import pytest

from sdpclust import Graph


@pytest.fixture
def triangle():
    return Graph(n=3, edges=[(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def k4():
    return Graph(n=4, edges=[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])


def random_graph(n, p, rng):
    """Erdos-Renyi helper for oracle tests."""
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Graph(n=n, edges=edges)


def dense_adjacency(g):
    a = np.zeros((g.n, g.n))
    for i, j in g.edges:
        a[i, j] = a[j, i] = 1.0
    return a
