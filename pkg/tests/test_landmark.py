import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from sepne import DataError, select_dd, select_dp, select_gds, select_uf
from sepne.landmark import read_landmarks, resolve_strategy, write_landmarks

from conftest import make_graph, random_graph


def test_dd_star(star):
    assert select_dd(star, 1).nodes.tolist() == [0]
    assert select_dd(star, 2).nodes.tolist() == [0, 1]


def test_dd_k_too_large(star):
    with pytest.raises(DataError):
        select_dd(star, 6)


def test_uf_all_nodes(star):
    assert sorted(select_uf(star, 5, seed=3).nodes.tolist()) == [0, 1, 2, 3, 4]


def test_seeded_strategies_are_deterministic():
    g = random_graph(50, 1)
    for fn in (select_dp, select_uf):
        np.testing.assert_array_equal(fn(g, 10, seed=4).nodes, fn(g, 10, seed=4).nodes)


def test_dp_frequencies_follow_degree():
    # node 0 touches every edge but one
    edges = [(0, v) for v in range(1, 6)] + [(6, 7)]
    g = make_graph(edges)
    deg = g.total_degree.astype(float)
    counts = np.bincount([select_dp(g, 1, seed=s).nodes[0] for s in range(1000)], minlength=g.node_count)
    assert counts.argmax() == 0
    expected = 1000 * deg / deg.sum()
    assert stats.chisquare(counts, expected).pvalue > 0.01


def test_dp_needs_enough_positive_degree():
    g = make_graph([(0, 1)], nodes=["a", "b", "c"])
    with pytest.raises(DataError):
        select_dp(g, 3)


def test_dp_uniform_when_degrees_equal(triangle):
    counts = np.bincount([select_dp(triangle, 1, seed=s).nodes[0] for s in range(900)], minlength=3)
    assert stats.chisquare(counts).pvalue > 0.01


def test_uf_uniform():
    g = random_graph(8, 2)
    counts = np.bincount([select_uf(g, 1, seed=s).nodes[0] for s in range(1000)], minlength=8)
    assert stats.chisquare(counts).pvalue > 0.01


def test_gds_star(star):
    assert select_gds(star, 3).nodes.tolist() == [0]


def test_gds_two_triangles(two_triangles):
    # every degree is 2; pops 0 (take), 1, 2 (dominated), 3 (take)
    trace = []
    assert select_gds(two_triangles, 2, trace).nodes.tolist() == [0, 3]
    assert trace == [(0, True), (1, False), (2, False), (3, True)]


@given(seed=st.integers(0, 10_000), directed=st.booleans())
@settings(max_examples=40, deadline=None)
def test_gds_exhaustion_dominates_and_replay(seed, directed):
    g = random_graph(40, seed, directed=directed, avg_degree=2.0)
    trace = []
    lms = select_gds(g, g.node_count, trace)
    covered = np.zeros(g.node_count, dtype=bool)
    for v, selected in trace:
        # a node is selected exactly when it is not yet dominated
        assert selected == (not covered[v])
        if selected:
            covered[v] = True
            covered[g.neighbors(v)] = True
    assert covered.all()
    assert len(np.unique(lms.nodes)) == lms.k


def test_gds_fallback_rule():
    assert resolve_strategy("gds", "first", 200, 128) == "DD"
    assert resolve_strategy("GDS", "first", 128, 128) == "GDS"
    assert resolve_strategy("GDS", "second", 200, 128) == "GDS"


def test_landmark_file_roundtrip(tmp_path, star):
    lms = select_dd(star, 3)
    write_landmarks(tmp_path / "lm.txt", star, lms)
    np.testing.assert_array_equal(read_landmarks(tmp_path / "lm.txt", star).nodes, lms.nodes)
