"""Immutable sparse graph storage and edge-list ingestion."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from os import PathLike
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DataError, UnsupportedFeatureError

_logger = logging.getLogger(__name__)

__all__ = ["GraphStore", "load_edge_list", "iter_data_lines"]


def iter_data_lines(path: str | PathLike):
    """Yield ``(line_number, tokens)`` for every non-blank, non-comment line."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line.split()


@dataclass(frozen=True, eq=False)
class GraphStore:
    """Unweighted graph on contiguous ids ``0..n-1``.

    Adjacency is kept twice in CSR form (outgoing and incoming neighbours) so
    both row and column slices of the transition matrix are cheap. For
    undirected graphs every edge is stored in both directions and the two
    structures coincide.
    """

    labels: tuple[str, ...]
    directed: bool
    out_indptr: np.ndarray
    out_indices: np.ndarray
    in_indptr: np.ndarray
    in_indices: np.ndarray
    self_loops_dropped: int = 0
    _index: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[str, str]],
        directed: bool = False,
        nodes: Sequence[str] = (),
    ) -> "GraphStore":
        """Build a graph from label pairs.

        Ids are assigned in first-seen order, starting with ``nodes`` (which
        lets callers register isolated nodes). Self-loops are dropped and
        duplicate edges collapsed.
        """
        index: dict[str, int] = {}
        labels: list[str] = []

        def intern(label) -> int:
            label = str(label)
            i = index.get(label)
            if i is None:
                i = index[label] = len(labels)
                labels.append(label)
            return i

        for node in nodes:
            intern(node)
        src, dst = [], []
        loops = 0
        for u, v in edges:
            iu, iv = intern(u), intern(v)
            if iu == iv:
                loops += 1
                continue
            src.append(iu)
            dst.append(iv)
        if not labels:
            raise DataError("graph has no nodes")
        if loops:
            _logger.warning("dropped %d self-loop(s)", loops)
        return cls._from_arrays(labels, index, np.asarray(src, dtype=np.int64),
                                np.asarray(dst, dtype=np.int64), directed, loops)

    @classmethod
    def _from_arrays(cls, labels, index, src, dst, directed, loops=0):
        n = len(labels)
        if not directed:
            src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
        ones = np.ones(len(src), dtype=np.int8)
        adj = sp.csr_matrix((ones, (src, dst)), shape=(n, n))
        adj.sum_duplicates()
        adj.sort_indices()
        adj_t = adj.T.tocsr()
        adj_t.sort_indices()
        return cls(
            labels=tuple(labels),
            directed=directed,
            out_indptr=adj.indptr.astype(np.int64),
            out_indices=adj.indices.astype(np.int64),
            in_indptr=adj_t.indptr.astype(np.int64),
            in_indices=adj_t.indices.astype(np.int64),
            self_loops_dropped=loops,
            _index=dict(index),
        )

    @classmethod
    def from_id_arrays(cls, n: int, src, dst, directed: bool = False) -> "GraphStore":
        """Fast constructor for integer edge arrays; labels are ``str(id)``."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        keep = src != dst
        labels = [str(i) for i in range(n)]
        index = {lab: i for i, lab in enumerate(labels)}
        return cls._from_arrays(labels, index, src[keep], dst[keep], directed,
                                int((~keep).sum()))

    @property
    def node_count(self) -> int:
        return len(self.labels)

    n = node_count

    @property
    def id_map(self) -> dict[str, int]:
        return self._index

    @property
    def edge_count(self) -> int:
        """Directed arcs for directed graphs, unordered edges otherwise."""
        arcs = len(self.out_indices)
        return arcs if self.directed else arcs // 2

    @property
    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_indptr)

    @property
    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_indptr)

    @property
    def total_degree(self) -> np.ndarray:
        if self.directed:
            return self.out_degree + self.in_degree
        return self.out_degree

    def degree(self, node: int, mode: str = "total") -> int:
        self._check(node)
        if mode == "out":
            return int(self.out_indptr[node + 1] - self.out_indptr[node])
        if mode == "in":
            return int(self.in_indptr[node + 1] - self.in_indptr[node])
        if mode == "total":
            return int(self.total_degree[node])
        raise ValueError(f"unknown degree mode {mode!r}")

    def out_neighbors(self, node: int) -> np.ndarray:
        self._check(node)
        return self.out_indices[self.out_indptr[node]:self.out_indptr[node + 1]]

    def in_neighbors(self, node: int) -> np.ndarray:
        self._check(node)
        return self.in_indices[self.in_indptr[node]:self.in_indptr[node + 1]]

    def neighbors(self, node: int) -> np.ndarray:
        """Undirected neighbour view (union of in- and out-neighbours)."""
        if not self.directed:
            return self.out_neighbors(node)
        return np.union1d(self.out_neighbors(node), self.in_neighbors(node))

    def adjacency(self) -> sp.csr_matrix:
        """0/1 adjacency as a float CSR matrix (rows are sources)."""
        n = self.node_count
        data = np.ones(len(self.out_indices))
        return sp.csr_matrix((data, self.out_indices, self.out_indptr), shape=(n, n))

    def undirected_adjacency(self) -> sp.csr_matrix:
        adj = self.adjacency()
        if self.directed:
            adj = ((adj + adj.T) > 0).astype(np.float64).tocsr()
        return adj

    def ids(self, labels: Iterable[str]) -> np.ndarray:
        try:
            return np.fromiter((self._index[str(lab)] for lab in labels), dtype=np.int64)
        except KeyError as exc:
            raise DataError(f"unknown node label {exc.args[0]!r}") from None

    def symmetrized(self) -> "GraphStore":
        if not self.directed:
            return self
        src = np.repeat(np.arange(self.node_count), self.out_degree)
        return GraphStore._from_arrays(list(self.labels), self._index, src,
                                       self.out_indices, False, self.self_loops_dropped)

    def _check(self, node: int) -> None:
        if not 0 <= node < self.node_count:
            raise IndexError(f"node id {node} out of range [0, {self.node_count})")


def load_edge_list(path: str | PathLike, directed: bool = False) -> GraphStore:
    """Read a whitespace-separated edge list.

    Each data line holds ``src dst`` and optionally a weight, which must be
    ``1``. Lines starting with ``#`` are comments.

    Raises
    ------
    DataError
        On a malformed line (the message carries the line number) or when
        the file contains no edges.
    UnsupportedFeatureError
        When a weight other than 1 is present.
    """
    edges = []
    for lineno, tok in iter_data_lines(path):
        if len(tok) not in (2, 3):
            raise DataError(f"{path}:{lineno}: expected 'src dst [1]', got {len(tok)} tokens")
        if len(tok) == 3:
            try:
                weight = float(tok[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: weight {tok[2]!r} is not numeric") from None
            if weight != 1.0:
                raise UnsupportedFeatureError(
                    f"{path}:{lineno}: weighted edges are not supported (weight={tok[2]})")
        edges.append((tok[0], tok[1]))
    if not edges:
        raise DataError(f"{path}: edge list is empty")
    g = GraphStore.from_edges(edges, directed=directed)
    _logger.info("loaded %s: n=%d, |E|=%d, self-loops dropped=%d",
                 path, g.node_count, g.edge_count, g.self_loops_dropped)
    return g
