import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepne import DataError, load_partition, partition_interested, partition_louvain, partition_random

from conftest import make_graph, random_graph


def path_graph(n):
    return make_graph([(i, i + 1) for i in range(n - 1)])


def test_random_balanced():
    plan = partition_random(path_graph(10), [], 3, seed=0)
    assert sorted(len(s) for s in plan.sets) == [3, 3, 4]


def test_random_deterministic_and_single():
    g = path_graph(10)
    a, b = partition_random(g, [2], 3, seed=9), partition_random(g, [2], 3, seed=9)
    assert all(np.array_equal(x, y) for x, y in zip(a.sets, b.sets))
    one = partition_random(g, [2], 1, seed=0)
    assert one.sets[0].tolist() == [0, 1, 3, 4, 5, 6, 7, 8, 9]


def test_random_too_many_sets():
    with pytest.raises(DataError):
        partition_random(path_graph(3), [0], 3)


def test_interested_chunks_and_landmark_overlap():
    g = path_graph(20)
    plan = partition_interested(g, [0], [5, 1, 3, 9, 7], max_set_size=1000)
    assert plan.s == 1 and plan.sets[0].tolist() == [1, 3, 5, 7, 9]
    plan = partition_interested(g, [3], [5, 1, 3, 9, 7, 11], max_set_size=2)
    assert [s.tolist() for s in plan.sets] == [[1, 5], [7, 9], [11]]
    assert plan.dropped == 1
    with pytest.raises(DataError):
        partition_interested(g, [3], [3])


def _modularity_oracle(g):
    """Best split of 6 nodes into 2 groups by enumeration."""
    nxg = nx.Graph(list(zip(*np.nonzero(np.triu(g.adjacency().toarray())))))
    best = None
    for mask in range(1, 2 ** 5):
        a = {0} | {v for v in range(1, 6) if mask >> (v - 1) & 1}
        if len(a) == 6:
            continue
        q = nx.community.modularity(nxg, [a, set(range(6)) - a])
        if best is None or q > best[0]:
            best = (q, a)
    return best


def test_louvain_two_triangles(two_triangles):
    plan = partition_louvain(two_triangles, [], seed=0)
    assert [s.tolist() for s in plan.sets] == [[0, 1, 2], [3, 4, 5]]
    q, best = _modularity_oracle(two_triangles)
    assert best == {0, 1, 2}


def test_louvain_single_triangle(triangle):
    assert partition_louvain(triangle, [], seed=0).s == 1


def test_louvain_deterministic_and_chunks():
    g = random_graph(120, 4, avg_degree=5)
    a = partition_louvain(g, [0, 1], seed=3, max_set_size=15)
    b = partition_louvain(g, [0, 1], seed=3, max_set_size=15)
    assert all(np.array_equal(x, y) for x, y in zip(a.sets, b.sets))
    assert max(len(s) for s in a.sets) <= 15


def test_louvain_no_edges_warns(caplog):
    g = make_graph([(0, 1)], nodes=["x", "y"])
    plan = partition_louvain(g, [g.id_map["0"]], seed=0)
    assert plan.s == 1 and "no edges" in caplog.text


def test_louvain_isolated_gathered():
    g = make_graph([(0, 1), (1, 2), (2, 0)], nodes=["p", "q"])
    plan = partition_louvain(g, [], seed=0)
    assert plan.sets[-1].tolist() == [0, 1]  # "p", "q" were registered first


def test_external_file(tmp_path, triangle):
    p = tmp_path / "part.txt"
    p.write_text("# plan\n0 a\n1 b\n2 b\n")
    plan = load_partition(p, triangle, [])
    assert plan.s == 2
    plan = load_partition(p, triangle, [0])
    assert plan.s == 1 and plan.dropped == 1


def test_external_conflict_names_node(tmp_path, triangle):
    p = tmp_path / "part.txt"
    p.write_text("0 1\n1 1\n0 2\n")
    with pytest.raises(DataError, match="'0'"):
        load_partition(p, triangle, [])
    p.write_text("zz 1\n")
    with pytest.raises(DataError, match="unknown"):
        load_partition(p, triangle, [])


@given(seed=st.integers(0, 5000), mode=st.sampled_from(["random", "louvain", "io"]),
       n_exc=st.integers(0, 5))
@settings(max_examples=40, deadline=None)
def test_plan_invariants(seed, mode, n_exc):
    g = random_graph(40, seed, directed=bool(seed % 2))
    rng = np.random.default_rng(seed)
    excluded = rng.choice(40, n_exc, replace=False)
    if mode == "random":
        plan = partition_random(g, excluded, 4, seed)
    elif mode == "louvain":
        plan = partition_louvain(g, excluded, seed, max_set_size=12)
    else:
        req = rng.choice(40, 15, replace=False)
        plan = partition_interested(g, excluded, req, max_set_size=4)
    nodes = plan.nodes()
    assert len(np.unique(nodes)) == len(nodes)
    assert all(len(s) for s in plan.sets)
    assert not np.isin(nodes, excluded).any()
    if mode == "io":
        np.testing.assert_array_equal(np.sort(nodes), np.setdiff1d(req, excluded))
    else:
        np.testing.assert_array_equal(np.sort(nodes), np.setdiff1d(np.arange(40), excluded))


@given(seed=st.integers(0, 5000))
@settings(max_examples=20, deadline=None)
def test_louvain_beats_singletons(seed):
    g = random_graph(50, seed, directed=False)
    plan = partition_louvain(g, [], seed, max_set_size=10 ** 6)
    nxg = nx.from_scipy_sparse_array(g.undirected_adjacency())
    if nxg.number_of_edges() == 0:
        return
    comms = [set(s.tolist()) for s in plan.sets]
    singletons = [{v} for v in range(g.node_count)]
    assert nx.community.modularity(nxg, comms) >= nx.community.modularity(nxg, singletons)
