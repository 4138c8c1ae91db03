"""Reconstruction scores, low-rank baselines and the node-classification harness."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, log_softmax, softmax

from .errors import DataError
from .graph import GraphStore, iter_data_lines
from .landmark import LandmarkSet
from .proximity import ProximityConfig, ProximityOperator, SparseBlock

_logger = logging.getLogger(__name__)

__all__ = [
    "ReconstructionReport",
    "full_proximity",
    "r_scores",
    "nystrom_factors",
    "nystrom_baseline",
    "svd_oracle",
    "LabeledSplit",
    "labeled_split",
    "read_labels",
    "stratified_split",
    "LogisticRegression",
    "micro_f1",
    "classify",
]

DENSE_GUARD = 20_000
ROW_CHUNK = 1024


@dataclass(frozen=True)
class ReconstructionReport:
    r_all: float
    r_nz: float
    frobenius_residual: float


def full_proximity(g: GraphStore, cfg: ProximityConfig) -> sp.csr_matrix:
    """The whole of M as a sparse matrix; evaluation-only."""
    if g.node_count > DENSE_GUARD:
        raise DataError(f"n={g.node_count} exceeds the evaluation guard of {DENSE_GUARD} nodes")
    return ProximityOperator(g, cfg).rows(np.arange(g.node_count))


def _as_csr(m) -> sp.csr_matrix:
    if isinstance(m, SparseBlock):
        m = m.matrix
    m = sp.csr_matrix(m, dtype=np.float64)
    m.eliminate_zeros()
    return m


def r_scores(m, w: np.ndarray, c: np.ndarray) -> ReconstructionReport:
    """R^2-style scores of ``W^T C`` against ``M``.

    ``r_nz`` only charges residuals at the non-zero entries of ``M`` but is
    normalized by the full ``|M|_F^2``.
    """
    m = _as_csr(m)
    w = np.asarray(w, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    n_rows, n_cols = m.shape
    if w.ndim != 2 or c.ndim != 2 or w.shape[0] != c.shape[0] \
            or w.shape[1] != n_rows or c.shape[1] != n_cols:
        raise DataError(f"factor shapes {w.shape}, {c.shape} do not match M {m.shape}")
    total = float(m.data @ m.data)
    if total == 0.0:
        raise DataError("M is identically zero")
    resid_all = 0.0
    resid_nz = 0.0
    for start in range(0, n_rows, ROW_CHUNK):
        stop = min(start + ROW_CHUNK, n_rows)
        approx = w[:, start:stop].T @ c
        block = m[start:stop]
        diff = approx - block.toarray()
        resid_all += float(np.vdot(diff, diff))
        coo = block.tocoo()
        at_nz = approx[coo.row, coo.col] - coo.data
        resid_nz += float(at_nz @ at_nz)
    return ReconstructionReport(1.0 - resid_all / total, 1.0 - resid_nz / total,
                                float(np.sqrt(resid_all)))


def nystrom_factors(m, landmarks, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Factors of ``M[:, V0] pinv_d(M[V0, V0]) M[V0, :]`` as ``(W, C)`` with ``W^T C`` the approximation."""
    m = _as_csr(m)
    lm = np.asarray(landmarks.nodes if isinstance(landmarks, LandmarkSet) else landmarks, dtype=np.int64)
    if len(lm) < d:
        raise DataError(f"k={len(lm)} landmarks cannot support d={d}")
    core = m[lm][:, lm].toarray()
    u, s, vt = np.linalg.svd(core)
    tol = (s[0] if s.size else 0.0) * max(core.shape) * np.finfo(float).eps
    rank = int(np.count_nonzero(s[:d] > tol))
    if rank == 0:
        raise DataError("landmark core block has rank 0")
    inv_root = 1.0 / np.sqrt(s[:rank])
    left = m[:, lm] @ (vt[:rank].T * inv_root)          # n x r
    right = (u[:, :rank] * inv_root).T @ m[lm].toarray()  # r x n
    return np.asarray(left).T, np.asarray(right)


def nystrom_baseline(m, landmarks, d: int) -> ReconstructionReport:
    w, c = nystrom_factors(m, landmarks, d)
    return r_scores(m, w, c)


def svd_oracle(m, d: int, svd_cache: tuple | None = None) -> ReconstructionReport:
    """Scores of the best rank-``d`` approximation.

    ``svd_cache`` may hold a precomputed ``(U, S, Vt)`` of the dense matrix
    to amortize one decomposition over several ``d``.
    """
    m = _as_csr(m)
    if max(m.shape) > DENSE_GUARD:
        raise DataError(f"matrix of shape {m.shape} too large to densify; sample a subgraph first")
    if svd_cache is None:
        svd_cache = np.linalg.svd(m.toarray())
    u, s, vt = svd_cache
    d = min(d, len(s))
    root = np.sqrt(s[:d])
    return r_scores(m, (u[:, :d] * root).T, root[:, None] * vt[:d])


# --------------------------------------------------------------------------
# classification


@dataclass(frozen=True, eq=False)
class LabeledSplit:
    train_nodes: list[str]
    test_nodes: list[str]
    labels: Mapping[str, Sequence[str]]
    train_fraction: float
    seed: int | None


def read_labels(path) -> dict[str, list[str]]:
    """``node_label class_id`` lines; repeated nodes carry multiple labels."""
    labels: dict[str, list[str]] = {}
    for lineno, tok in iter_data_lines(path):
        if len(tok) < 2:
            raise DataError(f"{path}:{lineno}: expected 'node_label class_id'")
        for cls in tok[1:]:
            have = labels.setdefault(tok[0], [])
            if cls not in have:
                have.append(cls)
    if not labels:
        raise DataError(f"{path}: no labels")
    return labels


def stratified_split(y: np.ndarray, train_fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split of sample indices; ``y`` holds one class per sample."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    train, test = [], []
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        n_train = int(round(train_fraction * len(idx)))
        if len(idx) > 1:
            n_train = min(max(n_train, 1), len(idx) - 1)
        train.append(idx[:n_train])
        test.append(idx[n_train:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


class LogisticRegression:
    """L2-penalized logistic regression fitted by full-batch gradient descent.

    The objective is ``sum_i loss_i + penalty/2 * |W|^2`` (bias unpenalized),
    softmax cross-entropy for ``multilabel=False`` and independent sigmoid
    losses for ``multilabel=True``. Step sizes come from an Armijo
    backtracking line search that is allowed to grow again after a success.
    """

    def __init__(self, penalty: float = 1.0, max_epochs: int = 500, tol: float = 1e-6,
                 multilabel: bool = False):
        self.penalty = penalty
        self.max_epochs = max_epochs
        self.tol = tol
        self.multilabel = multilabel

    def _loss_grad(self, x, y, w, b):
        z = x @ w + b
        if self.multilabel:
            loss = float(np.sum(np.logaddexp(0.0, z) - y * z))
            err = expit(z) - y
        else:
            loss = float(-np.sum(y * log_softmax(z, axis=1)))
            err = softmax(z, axis=1) - y
        loss += 0.5 * self.penalty * float(np.vdot(w, w))
        return loss, x.T @ err + self.penalty * w, err.sum(axis=0)

    def fit(self, x: np.ndarray, y: np.ndarray) -> "LogisticRegression":
        """``y`` is a 0/1 indicator matrix (one column per class)."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        w = np.zeros((x.shape[1], y.shape[1]))
        b = np.zeros(y.shape[1])
        loss, gw, gb = self._loss_grad(x, y, w, b)
        step = 1.0 / max(len(x), 1)
        for epoch in range(self.max_epochs):
            gnorm2 = float(np.vdot(gw, gw) + gb @ gb)
            while True:
                w_new, b_new = w - step * gw, b - step * gb
                new_loss, ngw, ngb = self._loss_grad(x, y, w_new, b_new)
                if new_loss <= loss - 0.5 * step * gnorm2 or step < 1e-12:
                    break
                step *= 0.5
            converged = loss - new_loss <= self.tol * max(abs(loss), 1.0)
            w, b, loss, gw, gb = w_new, b_new, new_loss, ngw, ngb
            step *= 2.0
            if converged:
                break
        self.coef_, self.intercept_, self.epochs_ = w, b, epoch + 1
        return self

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.coef_ + self.intercept_

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Indicator matrix of predicted classes."""
        z = self.decision_function(x)
        if self.multilabel:
            return (z > 0.0).astype(np.int8)  # sigmoid(z) > 0.5
        out = np.zeros_like(z, dtype=np.int8)
        out[np.arange(len(z)), np.argmax(z, axis=1)] = 1
        return out


def micro_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    tp = float(np.sum((y_true == 1) & (y_pred == 1)))
    fp = float(np.sum((y_true == 0) & (y_pred == 1)))
    fn = float(np.sum((y_true == 1) & (y_pred == 0)))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def _primary_classes(nodes, labels) -> np.ndarray:
    # the first label drives stratification
    classes = sorted({labels[v][0] for v in nodes})
    index = {c: j for j, c in enumerate(classes)}
    return np.array([index[labels[v][0]] for v in nodes], dtype=np.int64)


def labeled_split(labels: Mapping[str, Sequence[str]], train_fraction: float,
                  seed: int | None = None, attempts: int = 20) -> LabeledSplit:
    """Stratified train/test split of the labeled nodes.

    Re-draws until every class appears in training, up to ``attempts`` times.
    """
    nodes = list(labels)
    if any(not labels[v] for v in nodes):
        raise DataError("every labeled node needs at least one class")
    strat = _primary_classes(nodes, labels)
    all_classes = {c for v in nodes for c in labels[v]}
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        train, test = stratified_split(strat, train_fraction, rng)
        if len(test) and {c for i in train for c in labels[nodes[i]]} == all_classes:
            return LabeledSplit([nodes[i] for i in train], [nodes[i] for i in test], labels,
                                train_fraction, seed)
    raise DataError("could not draw a split with every class present in training")


def classify(
    embeddings: Mapping[str, np.ndarray],
    labels: Mapping[str, Sequence[str]] | str,
    train_fraction: float,
    seed: int = 0,
    runs: int = 10,
    penalty: float = 1.0,
    return_runs: bool = False,
):
    """Micro-F1 of logistic regression on L2-normalized embeddings, averaged over ``runs``.

    ``labels`` is a mapping ``node -> classes`` or a path to a labels file.
    A node with several labels switches to one-vs-rest multi-label mode.
    """
    if isinstance(labels, str) or hasattr(labels, "__fspath__"):
        labels = read_labels(labels)
    nodes = list(labels)
    missing = [v for v in nodes if v not in embeddings]
    if missing:
        raise DataError(f"labeled node {missing[0]!r} has no embedding ({len(missing)} missing)")
    classes = sorted({c for v in nodes for c in labels[v]})
    col = {c: j for j, c in enumerate(classes)}
    row = {v: i for i, v in enumerate(nodes)}
    y = np.zeros((len(nodes), len(classes)), dtype=np.int8)
    for i, v in enumerate(nodes):
        for c in labels[v]:
            y[i, col[c]] = 1
    multilabel = bool((y.sum(axis=1) > 1).any())
    x = _normalize_rows(np.vstack([np.asarray(embeddings[v], dtype=np.float64) for v in nodes]))

    scores = []
    for run_seed in np.random.SeedSequence(seed).generate_state(runs):
        split = labeled_split(labels, train_fraction, int(run_seed))
        train = np.array([row[v] for v in split.train_nodes])
        test = np.array([row[v] for v in split.test_nodes])
        clf = LogisticRegression(penalty=penalty, multilabel=multilabel).fit(x[train], y[train])
        scores.append(micro_f1(y[test], clf.predict(x[test])))
    mean = float(np.mean(scores))
    return (mean, scores) if return_runs else mean
