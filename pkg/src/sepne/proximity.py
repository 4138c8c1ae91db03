"""Blocks of the transition-based proximity matrix.

Two metrics are supported: ``first`` gives ``M = I + A`` and ``second`` gives
``M = A + A @ A``, where ``A`` is the row-stochastic transition matrix
(``A[i, j] = 1 / out_degree(i)`` on edges). ``M`` itself is never formed;
callers request row, column or rectangular blocks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.sparse as sp

from .errors import DataError
from .graph import GraphStore

__all__ = [
    "ProximityConfig",
    "SparseBlock",
    "ComplementProducts",
    "ProximityOperator",
    "transition_matrix",
    "transition_row",
    "proximity_block",
    "complement_products",
]

Order = Literal["first", "second"]
STREAM_CHUNK = 4096


@dataclass(frozen=True)
class ProximityConfig:
    order: Order = "second"

    def __post_init__(self):
        if self.order not in ("first", "second"):
            raise ValueError(f"proximity order must be 'first' or 'second', got {self.order!r}")


@dataclass(frozen=True, eq=False)
class SparseBlock:
    """A ``len(rows) x len(cols)`` block of M with its node lists."""

    rows: np.ndarray
    cols: np.ndarray
    matrix: sp.csr_matrix

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(eq=False)
class ComplementProducts:
    """Products of M blocks against the complement set ``ibar``.

    ``ibar`` is every node that is neither a landmark nor in the target set.
    With ``R0 = M[V0, ibar]``, ``Ri = M[Vi, ibar]``, ``C0 = M[ibar, V0]`` and
    ``Ci = M[ibar, Vi]``:

    - ``gram_row = R0 R0^T`` and ``cross_row = R0 Ri^T``
    - ``gram_col = C0^T C0`` and ``cross_col = C0^T Ci``
    - ``sq_row = |Ri|_F^2`` and ``sq_col = |Ci|_F^2`` (only needed for loss values)
    """

    gram_row: np.ndarray
    gram_col: np.ndarray
    cross_row: np.ndarray
    cross_col: np.ndarray
    sq_row: float = 0.0
    sq_col: float = 0.0

    @classmethod
    def zeros(cls, k: int, n_i: int) -> "ComplementProducts":
        return cls(np.zeros((k, k)), np.zeros((k, k)), np.zeros((k, n_i)), np.zeros((k, n_i)))

    def symmetrize(self) -> "ComplementProducts":
        self.gram_row = 0.5 * (self.gram_row + self.gram_row.T)
        self.gram_col = 0.5 * (self.gram_col + self.gram_col.T)
        return self


def transition_matrix(g: GraphStore) -> sp.csr_matrix:
    """Row-stochastic transition matrix; rows of dangling nodes are zero."""
    deg = g.out_degree
    inv = np.zeros(g.node_count)
    np.divide(1.0, deg, out=inv, where=deg > 0)
    data = np.repeat(inv, deg)
    n = g.node_count
    return sp.csr_matrix((data, g.out_indices.copy(), g.out_indptr.copy()), shape=(n, n))


def transition_row(g: GraphStore, node: int) -> sp.csr_matrix:
    """Row ``node`` of the transition matrix as a ``1 x n`` sparse row."""
    nbrs = g.out_neighbors(node)
    vals = np.full(len(nbrs), 1.0 / len(nbrs)) if len(nbrs) else np.zeros(0)
    return sp.csr_matrix((vals, nbrs, [0, len(nbrs)]), shape=(1, g.node_count))


def _as_ids(nodes, n: int, what: str) -> np.ndarray:
    ids = np.asarray(nodes, dtype=np.int64).ravel()
    if ids.size == 0:
        raise DataError(f"{what} node set is empty")
    if ids.min() < 0 or ids.max() >= n:
        raise IndexError(f"{what} node ids out of range [0, {n})")
    return ids


class ProximityOperator:
    """On-demand row and column slices of M for one graph.

    Holds the transition matrix and its transpose; second-order rows are
    expanded per request (``A[R] + A[R] @ A``) so ``A @ A`` is never built.
    """

    def __init__(self, g: GraphStore, cfg: ProximityConfig | None = None):
        self.graph = g
        self.cfg = cfg or ProximityConfig()
        self.n = g.node_count
        self.a = transition_matrix(g)
        self.a_t = self.a.T.tocsr()

    def _expand(self, base: sp.csr_matrix, ids: np.ndarray, right: sp.csr_matrix) -> sp.csr_matrix:
        part = base[ids]
        if self.cfg.order == "second":
            out = part + part @ right
        else:
            eye = sp.csr_matrix((np.ones(len(ids)), (np.arange(len(ids)), ids)),
                                shape=(len(ids), self.n))
            out = part + eye
        out = out.tocsr()
        out.sum_duplicates()
        out.eliminate_zeros()
        out.sort_indices()
        return out

    def rows(self, ids) -> sp.csr_matrix:
        """``M[ids, :]`` as CSR."""
        ids = _as_ids(ids, self.n, "row")
        return self._expand(self.a, ids, self.a)

    def cols_t(self, ids) -> sp.csr_matrix:
        """``M[:, ids]`` transposed, i.e. rows of ``M^T``, as CSR."""
        ids = _as_ids(ids, self.n, "column")
        return self._expand(self.a_t, ids, self.a_t)

    def block(self, rows, cols) -> SparseBlock:
        rows = _as_ids(rows, self.n, "row")
        cols = _as_ids(cols, self.n, "column")
        if len(cols) < len(rows):
            mat = self.cols_t(cols)[:, rows].T.tocsr()
        else:
            mat = self.rows(rows)[:, cols].tocsr()
        mat.sort_indices()
        return SparseBlock(rows, cols, mat)


def proximity_block(g: GraphStore, cfg: ProximityConfig, rows, cols) -> SparseBlock:
    """The ``rows x cols`` sub-block of M."""
    return ProximityOperator(g, cfg).block(rows, cols)


def complement_nodes(n: int, *exclude) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    for ids in exclude:
        mask[np.asarray(ids, dtype=np.int64)] = False
    return np.flatnonzero(mask)


def complement_products(
    g: GraphStore,
    cfg: ProximityConfig,
    landmarks,
    target,
    op: ProximityOperator | None = None,
    chunk: int = STREAM_CHUNK,
) -> ComplementProducts:
    """Accumulate the complement products by streaming over chunks of ``ibar``.

    Only sparse ``k x chunk`` and ``n_i x chunk`` slices exist at any time.
    """
    op = op or ProximityOperator(g, cfg)
    landmarks = _as_ids(landmarks, g.node_count, "landmark")
    target = _as_ids(target, g.node_count, "target")
    if np.intersect1d(landmarks, target).size:
        raise DataError("landmark and target sets overlap")
    k, n_i = len(landmarks), len(target)
    out = ComplementProducts.zeros(k, n_i)
    ibar = complement_nodes(g.node_count, landmarks, target)
    if ibar.size == 0:
        return out
    r0 = op.rows(landmarks)
    ri = op.rows(target)
    c0 = op.cols_t(landmarks)
    ci = op.cols_t(target)
    for start in range(0, len(ibar), chunk):
        cols = ibar[start:start + chunk]
        r0c, ric = r0[:, cols], ri[:, cols]
        c0c, cic = c0[:, cols], ci[:, cols]
        out.gram_row += (r0c @ r0c.T).toarray()
        out.cross_row += (r0c @ ric.T).toarray()
        out.gram_col += (c0c @ c0c.T).toarray()
        out.cross_col += (c0c @ cic.T).toarray()
        out.sq_row += float(ric.multiply(ric).sum())
        out.sq_col += float(cic.multiply(cic).sum())
    return out.symmetrize()
