import warnings

import numpy as np
import pytest

from sepne import GraphStore
from sepne.datasets import planted_partition


def make_graph(edges, directed=False, nodes=()):
    return GraphStore.from_edges([(str(u), str(v)) for u, v in edges], directed=directed,
                                 nodes=[str(v) for v in nodes])


def random_graph(n, seed, directed=True, avg_degree=4.0, blocks=3):
    return planted_partition(n, blocks, avg_degree, 0.7, directed, seed).graph


def dense_transition(g):
    n = g.node_count
    a = np.zeros((n, n))
    for i in range(n):
        nbrs = g.out_neighbors(i)
        if len(nbrs):
            a[i, nbrs] = 1.0 / len(nbrs)
    return a


def dense_proximity(g, order):
    """Independent dense M built with explicit loops over edges."""
    a = dense_transition(g)
    return a + a @ a if order == "second" else np.eye(g.node_count) + a


@pytest.fixture
def triangle():
    return make_graph([(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def star():
    return make_graph([(0, 1), (0, 2), (0, 3), (0, 4)])


@pytest.fixture
def two_triangles():
    return make_graph([(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])


@pytest.fixture(autouse=True)
def _quiet_null_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*singular values of M00 are zero.*")
        yield
