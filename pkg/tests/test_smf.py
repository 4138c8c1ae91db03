import warnings

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from sepne import (
    DataError,
    NumericalError,
    ProximityBlockSet,
    ProximityConfig,
    SectionBuilder,
    SmfConfig,
    embed_landmarks,
    evaluate_loss,
    loss_gradient,
    partition_interested,
    partition_random,
    run_pipeline,
    select_dd,
    select_uf,
    solve_set,
)
from sepne.partition import PartitionPlan
from sepne.proximity import ComplementProducts

from conftest import dense_proximity, random_graph


def oracle_residual(m, d):
    s = sla.svdvals(m)
    return float(np.sqrt(np.sum(s[d:] ** 2)))


# --- landmark factorization -------------------------------------------------

def test_identity_factorization():
    lm = embed_landmarks(np.eye(2), 2)
    np.testing.assert_allclose(lm.phi.T @ lm.psi, np.eye(2), atol=1e-15)


def test_diagonal_truncation():
    lm = embed_landmarks(np.diag([4.0, 1.0]), 1)
    np.testing.assert_allclose(lm.p_matrix, np.diag([4.0, 0.0]), atol=1e-15)
    assert np.linalg.norm(np.diag([4.0, 1.0]) - lm.p_matrix) == pytest.approx(1.0)


def test_random_matches_oracle_residual():
    m = np.random.default_rng(0).random((20, 20))
    lm = embed_landmarks(sp.csr_matrix(m), 8)
    assert np.linalg.norm(m - lm.phi.T @ lm.psi) == pytest.approx(oracle_residual(m, 8), abs=1e-9)
    assert np.all(np.diff(lm.sigma) <= 0) and np.all(lm.sigma >= 0)


def test_landmark_errors():
    with pytest.raises(DataError):
        embed_landmarks(np.eye(3), 4)
    with pytest.raises(DataError):
        embed_landmarks(np.ones((2, 3)), 1)


def test_null_representation_warning():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        lm = embed_landmarks(np.diag([1.0, 0.0, 0.0]), 2)
    assert any("1 of the top 2" in str(w.message) for w in caught)
    assert not lm.phi[1].any()


# --- loss and gradient -------------------------------------------------------

def section(n=30, k=6, n_i=5, d=3, order="second", seed=0, directed=True):
    g = random_graph(n, seed, directed=directed)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    lm_nodes, tgt = perm[:k], np.sort(perm[k:k + n_i])
    sb = SectionBuilder(g, ProximityConfig(order), lm_nodes)
    lm = embed_landmarks(sb.m00(), d)
    return g, lm_nodes, tgt, sb.blocks(tgt), lm


def dense_loss(g, order, lm_nodes, tgt, lm, lam, eta, a, b):
    m = dense_proximity(g, order)
    ib = np.setdiff1d(np.arange(g.node_count), np.concatenate([lm_nodes, tgt]))
    p = lm.phi.T @ lm.psi
    blk = lambda r, c: m[np.ix_(r, c)]
    fro2 = lambda x: float(np.sum(x ** 2))
    local = 0.5 * fro2(blk(tgt, tgt) - a.T @ p @ b)
    landmark = 0.5 * fro2(blk(lm_nodes, tgt) - p @ b) + 0.5 * fro2(blk(tgt, lm_nodes) - a.T @ p)
    glob = 0.5 * (fro2(blk(tgt, ib) - a.T @ blk(lm_nodes, ib)) + fro2(blk(ib, tgt) - blk(ib, lm_nodes) @ b))
    ridge = 0.5 * eta * (fro2(a) + fro2(b))
    return local + landmark + lam * glob + ridge, local, landmark, glob, ridge


def test_zero_coefficients_baseline():
    g, lm_nodes, tgt, blocks, lm = section()
    cfg = SmfConfig(d=3, k=6, lam=0.7, eta=0.3)
    z = np.zeros((6, 5))
    total, local, landmark, glob, ridge = evaluate_loss(blocks, lm, cfg, z, z)
    assert local == pytest.approx(0.5 * (blocks.m_ii.toarray() ** 2).sum())
    assert landmark == pytest.approx(0.5 * ((blocks.m_0i.toarray() ** 2).sum() + (blocks.m_i0.toarray() ** 2).sum()))
    assert ridge == 0.0
    cfg0 = SmfConfig(d=3, k=6, lam=0.7, eta=0.0)
    assert evaluate_loss(blocks, lm, cfg0, z, z)[0] == total


@pytest.mark.parametrize("order", ["first", "second"])
@pytest.mark.parametrize("seed", range(4))
def test_loss_matches_dense_oracle(order, seed):
    g, lm_nodes, tgt, blocks, lm = section(order=order, seed=seed)
    rng = np.random.default_rng(seed + 100)
    a, b = rng.normal(size=(6, 5)), rng.normal(size=(6, 5))
    cfg = SmfConfig(d=3, k=6, lam=0.4, eta=0.1, proximity=ProximityConfig(order))
    got = evaluate_loss(blocks, lm, cfg, a, b)
    want = dense_loss(g, order, lm_nodes, tgt, lm, 0.4, 0.1, a, b)
    np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-9)


def fd_gradient(blocks, lm, cfg, a, b, h=1e-5):
    ga, gb = np.zeros_like(a), np.zeros_like(b)
    for mat, grad, which in ((a, ga, 0), (b, gb, 1)):
        for idx in np.ndindex(mat.shape):
            plus, minus = [a.copy(), b.copy()], [a.copy(), b.copy()]
            plus[which][idx] += h
            minus[which][idx] -= h
            grad[idx] = (evaluate_loss(blocks, lm, cfg, *plus)[0]
                         - evaluate_loss(blocks, lm, cfg, *minus)[0]) / (2 * h)
    return ga, gb


@pytest.mark.parametrize("lam,eta", [(0.0, 0.1), (0.4, 1.0), (50.0, 0.1)])
def test_gradient_matches_finite_differences(lam, eta):
    _, _, _, blocks, lm = section(seed=7)
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(6, 5)), rng.normal(size=(6, 5))
    cfg = SmfConfig(d=3, k=6, lam=lam, eta=eta)
    ga, gb = loss_gradient(blocks, lm, cfg, a, b)
    fa, fb = fd_gradient(blocks, lm, cfg, a, b)
    scale = max(1.0, np.abs(fa).max(), np.abs(fb).max())
    assert np.abs(ga - fa).max() <= 1e-5 * scale
    assert np.abs(gb - fb).max() <= 1e-5 * scale


# --- solver ------------------------------------------------------------------

def synthetic_blocks(k, n_i, d, seed):
    """Blocks whose targets are exactly reproduced by known coefficients."""
    rng = np.random.default_rng(seed)
    lm = embed_landmarks(rng.random((k, k)), d)
    p = lm.p_matrix
    a_star, b_star = rng.normal(size=(k, n_i)), rng.normal(size=(k, n_i))
    blocks = ProximityBlockSet(
        nodes=np.arange(n_i),
        m_ii=sp.csr_matrix(a_star.T @ p @ b_star),
        m_0i=sp.csr_matrix(p @ b_star),
        m_i0=sp.csr_matrix(a_star.T @ p),
        products=ComplementProducts.zeros(k, n_i),
    )
    return blocks, lm


def test_realizable_targets_recovered():
    blocks, lm = synthetic_blocks(k=8, n_i=6, d=4, seed=3)
    cfg = SmfConfig(d=4, k=8, lam=0.0, eta=1e-8, iters=300)
    sol = solve_set(blocks, lm, cfg)
    targets = blocks.target_norm() ** 2
    assert sol.component_losses["total"] <= 1e-6 * targets
    np.testing.assert_allclose(sol.a_mat.T @ lm.p_matrix @ sol.b_mat, blocks.m_ii.toarray(),
                               atol=1e-3 * np.sqrt(targets))


@given(seed=st.integers(0, 10_000), lam=st.sampled_from([0.0, 0.4, 50.0]),
       eta=st.sampled_from([0.1, 1.0]), order=st.sampled_from(["first", "second"]))
@settings(max_examples=30, deadline=None)
def test_descent_is_monotone_over_half_steps(seed, lam, eta, order):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 9))
    d = int(rng.integers(1, k + 1))
    _, _, _, blocks, lm = section(n=30, k=k, n_i=int(rng.integers(1, 9)), d=d, order=order, seed=seed)
    cfg = SmfConfig(d=d, k=k, lam=lam, eta=eta, iters=15, proximity=ProximityConfig(order))
    sol = solve_set(blocks, lm, cfg, record_half_steps=True)
    tr = sol.half_step_trace
    assert np.all(tr[1:] <= tr[:-1] + 1e-9 * np.maximum(1.0, np.abs(tr[:-1])))
    assert np.array_equal(sol.w_mat, lm.phi @ sol.a_mat)
    assert np.array_equal(sol.c_mat, lm.psi @ sol.b_mat)


def test_early_stop():
    _, _, _, blocks, lm = section(seed=2)
    sol = solve_set(blocks, lm, SmfConfig(d=3, k=6, iters=1000, tol=1e-10))
    assert sol.iterations < 1000
    assert len(sol.loss_trace) == sol.iterations + 1


def test_solver_rejects_bad_inputs():
    _, _, _, blocks, lm = section()
    with pytest.raises(ValueError):
        solve_set(blocks, lm, SmfConfig(d=3, k=6, eta=0.0))
    with pytest.raises(DataError):
        solve_set(blocks, lm, SmfConfig(d=2, k=6))
    blocks.products.gram_row = -1e6 * np.eye(6)
    with pytest.raises(NumericalError, match="smallest eigenvalue"):
        solve_set(blocks, lm, SmfConfig(d=3, k=6, lam=1.0))


def test_config_invariants():
    with pytest.raises(ValueError):
        SmfConfig(d=10, k=5)
    with pytest.raises(ValueError):
        SmfConfig(iters=0)
    assert SmfConfig(proximity="first").proximity.order == "first"


def test_document_network_defaults():
    cfg = SmfConfig()
    assert (cfg.iters, cfg.lam, cfg.eta, cfg.k, cfg.proximity.order) == (100, 0.4, 0.1, 200, "second")


# --- pipeline ----------------------------------------------------------------

def test_io_mode_coverage():
    g = random_graph(1000, 5, avg_degree=6)
    lms = select_dd(g, 20)
    req = np.setdiff1d(np.arange(1000), lms.nodes)[[3, 50, 400, 700, 900]]
    plan = partition_interested(g, lms.nodes, req)
    res = run_pipeline(g, plan, lms, SmfConfig(d=8, k=20, iters=10))
    assert len(res) == 5 + 20
    assert set(res.nodes.tolist()) == set(req.tolist()) | set(lms.nodes.tolist())


def test_single_set_sanity():
    g = random_graph(60, 8)
    lms = select_dd(g, 10)
    plan = partition_random(g, lms.nodes, 1, seed=0)
    res = run_pipeline(g, plan, lms, SmfConfig(d=4, k=10, iters=20))
    assert len(res) == 60
    np.testing.assert_array_equal(res.vectors[:10], res.landmark_embedding.phi.T)


def _fixed_target_plans(g, lms, target, splits, seed):
    rest = np.setdiff1d(np.setdiff1d(np.arange(g.node_count), lms.nodes), target)
    perm = np.random.default_rng(seed).permutation(rest)
    return PartitionPlan((target,) + tuple(np.sort(c) for c in np.array_split(perm, splits)), "external")


@pytest.mark.parametrize("order", ["first", "second"])
def test_refinement_invariance(order):
    g = random_graph(120, 11)
    lms = select_dd(g, 12)
    target = np.sort(np.setdiff1d(np.arange(120), lms.nodes)[:15])
    cfg = SmfConfig(d=5, k=12, iters=30, proximity=ProximityConfig(order))
    one = run_pipeline(g, _fixed_target_plans(g, lms, target, 1, 0), lms, cfg)
    many = run_pipeline(g, _fixed_target_plans(g, lms, target, 6, 1), lms, cfg)
    np.testing.assert_allclose(one.vectors[12:27], many.vectors[12:27], atol=1e-9, rtol=0)


def test_order_and_concurrency_independence():
    g = random_graph(150, 13)
    lms = select_uf(g, 15, seed=1)
    plan = partition_random(g, lms.nodes, 5, seed=2)
    cfg = SmfConfig(d=6, k=15, iters=20)
    seq = run_pipeline(g, plan, lms, cfg, workers=1)
    par = run_pipeline(g, plan, lms, cfg, workers=4)
    np.testing.assert_allclose(seq.vectors, par.vectors, atol=1e-12, rtol=0)
    rev = PartitionPlan(plan.sets[::-1], "external")
    out = run_pipeline(g, rev, lms, cfg).as_dict()
    for lab, vec in seq.as_dict().items():
        np.testing.assert_allclose(out[lab], vec, atol=1e-12, rtol=0)


def test_global_rank_bound():
    g = random_graph(80, 17)
    lms = select_dd(g, 16)
    res = run_pipeline(g, partition_random(g, lms.nodes, 3, 0), lms, SmfConfig(d=5, k=16, iters=20))
    w, c = res.factors()
    assert np.linalg.matrix_rank(w.T @ c) <= 5


def test_best_effort_skips_failing_section(monkeypatch):
    import sepne.smf as smf

    g = random_graph(60, 19)
    lms = select_dd(g, 8)
    plan = partition_random(g, lms.nodes, 3, 0)
    real = smf.solve_set

    def flaky(blocks, lm, cfg, **kw):
        if 0 in blocks.nodes or blocks.nodes[0] == plan.sets[1][0]:
            raise NumericalError("boom")
        return real(blocks, lm, cfg, **kw)

    monkeypatch.setattr(smf, "solve_set", flaky)
    cfg = SmfConfig(d=4, k=8, iters=5)
    with pytest.raises(NumericalError):
        run_pipeline(g, plan, lms, cfg)
    res = run_pipeline(g, plan, lms, cfg, best_effort=True)
    assert res.sections[1].error == "boom"
    assert len(res) < 60


def test_pipeline_rejects_landmarks_in_plan():
    g = random_graph(30, 1)
    lms = select_dd(g, 5)
    with pytest.raises(DataError):
        run_pipeline(g, PartitionPlan((np.arange(30),), "external"), lms, SmfConfig(d=2, k=5))
