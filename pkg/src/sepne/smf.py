"""Separated matrix factorization.

Landmarks ``V0`` are factorized once by truncated SVD, ``M00 ~ Phi^T Psi``.
Every other node set ``V_i`` is then embedded on its own as ``W_i = Phi A_i``
and ``C_i = Psi B_i``, where ``(A_i, B_i)`` minimize

    L(A, B) = 1/2 |M_ii - A^T P B|^2
            + 1/2 |M_0i - P B|^2 + 1/2 |M_i0 - A^T P|^2
            + lam/2 (|M_iI - A^T M_0I|^2 + |M_Ii - M_I0 B|^2)
            + eta/2 (|A|^2 + |B|^2)

with ``P = Phi^T Psi`` and ``I`` the nodes outside ``V0 u V_i``. The terms in
``I`` enter only through the k x k / k x n_i products in
:class:`~sepne.proximity.ComplementProducts`, so a section never needs the
results of any other section.
"""
from __future__ import annotations

import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import DataError, NumericalError, SepneError
from .graph import GraphStore
from .landmark import LandmarkSet
from .partition import PartitionPlan
from .proximity import (
    ComplementProducts,
    ProximityConfig,
    ProximityOperator,
    SparseBlock,
)

_logger = logging.getLogger(__name__)

__all__ = [
    "SmfConfig",
    "LandmarkEmbedding",
    "ProximityBlockSet",
    "SectionBuilder",
    "SetSolution",
    "SectionReport",
    "EmbeddingResult",
    "embed_landmarks",
    "solve_set",
    "evaluate_loss",
    "loss_gradient",
    "run_pipeline",
]


@dataclass(frozen=True)
class SmfConfig:
    """Hyper-parameters of one SMF run.

    ``lam`` weights the global loss and ``eta`` the ridge penalty. ``tol``
    enables early stopping on relative loss improvement (off by default).
    """

    d: int = 128
    k: int = 200
    lam: float = 0.4
    eta: float = 0.1
    iters: int = 100
    proximity: ProximityConfig = field(default_factory=ProximityConfig)
    tol: float | None = None
    track_loss: bool = True

    def __post_init__(self):
        if self.d < 1 or self.k < 1:
            raise ValueError("d and k must be positive")
        if self.d > self.k:
            raise ValueError(f"d={self.d} must not exceed k={self.k}")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.iters < 1:
            raise ValueError("iters must be at least 1")
        if isinstance(self.proximity, str):
            object.__setattr__(self, "proximity", ProximityConfig(self.proximity))


@dataclass(frozen=True, eq=False)
class LandmarkEmbedding:
    phi: np.ndarray  # d x k
    psi: np.ndarray  # d x k
    sigma: np.ndarray
    p_matrix: np.ndarray  # Phi^T Psi, k x k

    @property
    def d(self) -> int:
        return self.phi.shape[0]

    @property
    def k(self) -> int:
        return self.phi.shape[1]


def embed_landmarks(m00, d: int) -> LandmarkEmbedding:
    """Rank-``d`` factorization ``Phi = sqrt(S_d) U_d^T``, ``Psi = sqrt(S_d) V_d^T`` of ``M00``.

    Zero singular values inside the top ``d`` give zero rows in both factors
    (null representations for the affected directions) and a warning.
    """
    if isinstance(m00, SparseBlock):
        m00 = m00.matrix
    dense = m00.toarray() if sp.issparse(m00) else np.asarray(m00, dtype=np.float64)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise DataError(f"M00 must be square, got shape {dense.shape}")
    k = dense.shape[0]
    if k < d:
        raise DataError(f"k={k} landmarks cannot support d={d} dimensions")
    u, s, vt = np.linalg.svd(dense)
    s = s[:d]
    cutoff = (s[0] if s.size else 0.0) * k * np.finfo(float).eps
    null = int(np.count_nonzero(s <= cutoff))
    if null:
        s = np.where(s <= cutoff, 0.0, s)
        warnings.warn(f"{null} of the top {d} singular values of M00 are zero; "
                      "the corresponding landmark directions are null", RuntimeWarning, stacklevel=2)
    root = np.sqrt(s)[:, None]
    phi = root * u[:, :d].T
    psi = root * vt[:d]
    return LandmarkEmbedding(phi, psi, s, phi.T @ psi)


@dataclass(eq=False)
class ProximityBlockSet:
    """All M-derived inputs of one section."""

    nodes: np.ndarray
    m_ii: sp.csr_matrix  # n_i x n_i
    m_0i: sp.csr_matrix  # k x n_i
    m_i0: sp.csr_matrix  # n_i x k
    products: ComplementProducts

    @property
    def n_i(self) -> int:
        return len(self.nodes)

    def target_norm(self, lam: float = 0.0) -> float:
        """Frobenius norm of everything the section tries to reconstruct."""
        sq = sum(float(m.multiply(m).sum()) for m in (self.m_ii, self.m_0i, self.m_i0))
        return float(np.sqrt(sq + lam * (self.products.sq_row + self.products.sq_col)))


def _sqnorm(m) -> float:
    return float(m.multiply(m).sum()) if sp.issparse(m) else float(np.vdot(m, m))


class SectionBuilder:
    """Shared landmark-side precomputation for building section blocks.

    The full Gram matrices of the landmark rows and columns are computed
    once; a section subtracts the contribution of ``V0 u V_i`` instead of
    summing over its complement, so the per-section cost depends only on the
    section's own neighbourhood and not on the size of the graph.
    """

    def __init__(self, g: GraphStore, cfg: ProximityConfig, landmarks):
        self.graph = g
        self.op = ProximityOperator(g, cfg)
        self.landmarks = np.asarray(landmarks, dtype=np.int64)
        self.r0 = self.op.rows(self.landmarks)           # M[V0, :]
        self.r0_t = self.r0.T.tocsr()                    # M[V0, :]^T
        self.c0 = self.op.cols_t(self.landmarks).T.tocsr()  # M[:, V0]
        self.gram_row_full = (self.r0 @ self.r0.T).toarray()
        self.gram_col_full = (self.c0.T @ self.c0).toarray()

    def m00(self) -> SparseBlock:
        lm = self.landmarks
        mat = self.r0_t[lm].T.tocsr()
        mat.sort_indices()
        return SparseBlock(lm, lm, mat)

    def blocks(self, target) -> ProximityBlockSet:
        target = np.asarray(target, dtype=np.int64)
        lm = self.landmarks
        if np.intersect1d(lm, target).size:
            raise DataError("section overlaps the landmark set")
        k, n_i = len(lm), len(target)
        ri = self.op.rows(target)          # M[Vi, :]
        ci_t = self.op.cols_t(target)      # M[:, Vi]^T
        m_ii = ri[:, target].tocsr()
        m_i0 = ri[:, lm].tocsr()
        m_0i = self.r0_t[target].T.tocsr()

        if k + n_i == self.graph.node_count:
            products = ComplementProducts.zeros(k, n_i)
        else:
            sset = np.concatenate([lm, target])
            r0_s = self.r0_t[sset]           # M[V0, S]^T
            ri_s = ri[:, sset]
            c0_s = self.c0[sset]             # M[S, V0]
            ci_s = ci_t[:, sset]             # M[S, Vi]^T
            products = ComplementProducts(
                gram_row=self.gram_row_full - (r0_s.T @ r0_s).toarray(),
                gram_col=self.gram_col_full - (c0_s.T @ c0_s).toarray(),
                cross_row=((ri @ self.r0_t) - (ri_s @ r0_s)).toarray().T,
                cross_col=((ci_t @ self.c0) - (ci_s @ c0_s)).toarray().T,
                sq_row=_sqnorm(ri) - _sqnorm(ri_s),
                sq_col=_sqnorm(ci_t) - _sqnorm(ci_s),
            ).symmetrize()
        return ProximityBlockSet(target, m_ii, m_0i, m_i0, products)


@dataclass(eq=False)
class SetSolution:
    a_mat: np.ndarray
    b_mat: np.ndarray
    w_mat: np.ndarray
    c_mat: np.ndarray
    loss_trace: np.ndarray
    component_losses: dict
    iterations: int
    half_step_trace: np.ndarray | None = None


def _check_shapes(blocks: ProximityBlockSet, lm: LandmarkEmbedding, a=None, b=None) -> None:
    k, n_i = lm.k, blocks.n_i
    expected = {"m_ii": (n_i, n_i), "m_0i": (k, n_i), "m_i0": (n_i, k)}
    for name, shape in expected.items():
        if getattr(blocks, name).shape != shape:
            raise DataError(f"{name} has shape {getattr(blocks, name).shape}, expected {shape}")
    pr = blocks.products
    for name, shape in (("gram_row", (k, k)), ("gram_col", (k, k)),
                        ("cross_row", (k, n_i)), ("cross_col", (k, n_i))):
        if getattr(pr, name).shape != shape:
            raise DataError(f"{name} has shape {getattr(pr, name).shape}, expected {shape}")
    for name, mat in (("A", a), ("B", b)):
        if mat is not None and mat.shape != (k, n_i):
            raise DataError(f"{name} has shape {mat.shape}, expected {(k, n_i)}")


class _Normal:
    """Constant parts of the two normal-equation systems of a section."""

    def __init__(self, blocks: ProximityBlockSet, lm: LandmarkEmbedding, lam: float, eta: float):
        p = lm.p_matrix
        k = lm.k
        pr = blocks.products
        self.p = p
        self.m_ii = blocks.m_ii
        self.m_ii_t = blocks.m_ii.T.tocsr()
        ridge = eta * np.eye(k)
        self.sys_a = p @ p.T + lam * pr.gram_row + ridge
        self.sys_b = p.T @ p + lam * pr.gram_col + ridge
        # P M_i0^T and P^T M_0i
        self.rhs_a = (blocks.m_i0 @ p.T).T + lam * pr.cross_row
        self.rhs_b = (blocks.m_0i.T @ p).T + lam * pr.cross_col

    def system_a(self, b: np.ndarray):
        q = self.p @ b
        return self.sys_a + q @ q.T, self.rhs_a + (self.m_ii @ q.T).T

    def system_b(self, a: np.ndarray):
        r_t = self.p.T @ a  # (A^T P)^T
        return self.sys_b + r_t @ r_t.T, self.rhs_b + (self.m_ii_t @ r_t.T).T


def _cholesky_solve(h: np.ndarray, rhs: np.ndarray, which: str) -> np.ndarray:
    h = 0.5 * (h + h.T)
    try:
        factor = sla.cho_factor(h, lower=True, check_finite=False)
    except sla.LinAlgError as exc:
        pivot = float(np.linalg.eigvalsh(h)[0])
        raise NumericalError(f"Cholesky failed in the {which}-step ({exc}); "
                             f"smallest eigenvalue {pivot:.3e}") from None
    return sla.cho_solve(factor, rhs, check_finite=False)


def evaluate_loss(blocks: ProximityBlockSet, lm: LandmarkEmbedding, cfg: SmfConfig,
                  a_mat: np.ndarray, b_mat: np.ndarray) -> tuple[float, float, float, float, float]:
    """Return ``(total, local, landmark, global, ridge)``.

    ``global`` is the unweighted global loss; ``total`` adds it scaled by
    ``cfg.lam``. ``ridge`` already includes ``cfg.eta``.
    """
    _check_shapes(blocks, lm, a_mat, b_mat)
    p = lm.p_matrix
    pr = blocks.products
    r_t = p.T @ a_mat  # (A^T P)^T
    # |M_ii - R B|^2 expanded so no n_i x n_i dense product is formed
    inner = float(np.sum(b_mat * (blocks.m_ii.T @ r_t.T).T))
    quad = float(np.sum(b_mat * ((r_t @ r_t.T) @ b_mat)))
    local = 0.5 * (_sqnorm(blocks.m_ii) - 2.0 * inner + quad)
    landmark = 0.5 * (_sqnorm(blocks.m_0i.toarray() - p @ b_mat)
                      + _sqnorm(blocks.m_i0.toarray() - r_t.T))
    glob = 0.5 * (pr.sq_row - 2.0 * float(np.sum(a_mat * pr.cross_row))
                  + float(np.sum(a_mat * (pr.gram_row @ a_mat)))
                  + pr.sq_col - 2.0 * float(np.sum(b_mat * pr.cross_col))
                  + float(np.sum(b_mat * (pr.gram_col @ b_mat))))
    ridge = 0.5 * cfg.eta * (_sqnorm(a_mat) + _sqnorm(b_mat))
    total = local + landmark + cfg.lam * glob + ridge
    return total, local, landmark, glob, ridge


def loss_gradient(blocks: ProximityBlockSet, lm: LandmarkEmbedding, cfg: SmfConfig,
                  a_mat: np.ndarray, b_mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient ``(dL/dA, dL/dB)`` of the section objective."""
    _check_shapes(blocks, lm, a_mat, b_mat)
    ne = _Normal(blocks, lm, cfg.lam, cfg.eta)
    h_a, rhs_a = ne.system_a(b_mat)
    h_b, rhs_b = ne.system_b(a_mat)
    return h_a @ a_mat - rhs_a, h_b @ b_mat - rhs_b


def solve_set(blocks: ProximityBlockSet, lm: LandmarkEmbedding, cfg: SmfConfig,
              record_half_steps: bool = False) -> SetSolution:
    """Alternating exact minimization over ``A`` then ``B``, starting from zero.

    Each half-step zeroes the corresponding gradient by solving a k x k
    symmetric positive-definite system (Cholesky) with ``n_i`` right-hand
    sides.
    """
    if cfg.eta <= 0:
        raise ValueError("eta must be positive for the normal equations to be definite")
    if lm.k != cfg.k or lm.d != cfg.d:
        raise DataError(f"landmark embedding is {lm.d}x{lm.k}, config expects {cfg.d}x{cfg.k}")
    _check_shapes(blocks, lm)
    k, n_i = lm.k, blocks.n_i
    a = np.zeros((k, n_i))
    b = np.zeros((k, n_i))
    ne = _Normal(blocks, lm, cfg.lam, cfg.eta)
    track = cfg.track_loss or cfg.tol is not None or record_half_steps
    trace = [evaluate_loss(blocks, lm, cfg, a, b)[0]] if track else []
    half = list(trace) if record_half_steps else None

    it = 0
    for it in range(1, cfg.iters + 1):
        a = _cholesky_solve(*ne.system_a(b), "A")
        if record_half_steps:
            half.append(evaluate_loss(blocks, lm, cfg, a, b)[0])
        b = _cholesky_solve(*ne.system_b(a), "B")
        if track:
            loss = evaluate_loss(blocks, lm, cfg, a, b)[0]
            if record_half_steps:
                half.append(loss)
            prev = trace[-1]
            trace.append(loss)
            if cfg.tol is not None and prev - loss <= cfg.tol * max(abs(prev), 1e-300):
                break

    total, local, landmark, glob, ridge = evaluate_loss(blocks, lm, cfg, a, b)
    return SetSolution(
        a_mat=a,
        b_mat=b,
        w_mat=lm.phi @ a,
        c_mat=lm.psi @ b,
        loss_trace=np.asarray(trace),
        component_losses={"total": total, "local": local, "landmark": landmark,
                          "global": glob, "ridge": ridge},
        iterations=it,
        half_step_trace=None if half is None else np.asarray(half),
    )


@dataclass
class SectionReport:
    index: int
    size: int
    iterations: int = 0
    seconds: float = 0.0
    losses: dict = field(default_factory=dict)
    error: str | None = None


@dataclass(eq=False)
class EmbeddingResult:
    """Embeddings of landmarks followed by every section, in plan order."""

    nodes: np.ndarray
    labels: list[str]
    vectors: np.ndarray  # rows are W columns
    context: np.ndarray  # rows are C columns
    landmark_embedding: LandmarkEmbedding
    sections: list[SectionReport]
    timings: dict

    def __len__(self) -> int:
        return len(self.nodes)

    def as_dict(self) -> dict[str, np.ndarray]:
        return dict(zip(self.labels, self.vectors))

    def factors(self) -> tuple[np.ndarray, np.ndarray]:
        """``(W, C)`` as ``d x n_out`` matrices aligned with :attr:`nodes`."""
        return self.vectors.T, self.context.T


def run_pipeline(g: GraphStore, plan: PartitionPlan, lms: LandmarkSet, cfg: SmfConfig,
                 workers: int = 1, best_effort: bool = False) -> EmbeddingResult:
    """Embed the landmarks, then every set of ``plan`` independently.

    Sections run on up to ``workers`` threads; results are assembled in
    plan order so output does not depend on scheduling. With
    ``best_effort`` a failing section is logged and left out instead of
    aborting the run.
    """
    if lms.k != cfg.k:
        raise DataError(f"{lms.k} landmarks given but config has k={cfg.k}")
    if np.intersect1d(plan.nodes(), lms.nodes).size:
        raise DataError("partition plan contains landmark nodes")

    t0 = time.perf_counter()
    builder = SectionBuilder(g, cfg.proximity, lms.nodes)
    lm = embed_landmarks(builder.m00(), cfg.d)
    t_prep = time.perf_counter() - t0

    def run(idx: int):
        start = time.perf_counter()
        nodes = plan.sets[idx]
        report = SectionReport(idx, len(nodes))
        try:
            sol = solve_set(builder.blocks(nodes), lm, cfg)
        except (SepneError, np.linalg.LinAlgError) as exc:
            if not best_effort:
                raise
            _logger.error("section %d failed: %s", idx, exc)
            report.error = str(exc)
            return report, None
        report.iterations = sol.iterations
        report.losses = sol.component_losses
        report.seconds = time.perf_counter() - start
        _logger.debug("section %d (%d nodes): loss %.6g", idx, len(nodes), sol.component_losses["total"])
        return report, sol

    t1 = time.perf_counter()
    if workers > 1 and plan.s > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, range(plan.s)))
    else:
        outcomes = [run(i) for i in range(plan.s)]
    t_opt = time.perf_counter() - t1

    nodes = [lms.nodes]
    vecs = [lm.phi.T]
    ctx = [lm.psi.T]
    for (report, sol), ids in zip(outcomes, plan.sets):
        if sol is None:
            continue
        nodes.append(ids)
        vecs.append(sol.w_mat.T)
        ctx.append(sol.c_mat.T)
    nodes = np.concatenate(nodes)
    return EmbeddingResult(
        nodes=nodes,
        labels=[g.labels[v] for v in nodes],
        vectors=np.vstack(vecs),
        context=np.vstack(ctx),
        landmark_embedding=lm,
        sections=[rep for rep, _ in outcomes],
        timings={"landmark_svd": t_prep, "optimization": t_opt},
    )
