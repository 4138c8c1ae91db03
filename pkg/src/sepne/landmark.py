"""Landmark selection strategies."""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from os import PathLike

import numpy as np

from .errors import DataError
from .graph import GraphStore, iter_data_lines

_logger = logging.getLogger(__name__)

__all__ = [
    "LandmarkSet",
    "select_dd",
    "select_dp",
    "select_uf",
    "select_gds",
    "select_landmarks",
    "resolve_strategy",
    "write_landmarks",
    "read_landmarks",
]

STRATEGIES = ("DD", "DP", "UF", "GDS")


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    nodes: np.ndarray
    strategy: str
    seed: int | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.int64)
        if nodes.size == 0:
            raise DataError("landmark set is empty")
        if len(np.unique(nodes)) != len(nodes):
            raise DataError("landmark set contains duplicates")
        object.__setattr__(self, "nodes", nodes)

    @property
    def k(self) -> int:
        return len(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)


def _check_k(g: GraphStore, k: int) -> None:
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > g.node_count:
        raise DataError(f"k={k} exceeds node count {g.node_count}")


def _by_degree(g: GraphStore) -> np.ndarray:
    """Node ids ordered by total degree descending, ties by smaller id."""
    deg = g.total_degree
    return np.lexsort((np.arange(g.node_count), -deg))


def select_dd(g: GraphStore, k: int) -> LandmarkSet:
    """The ``k`` nodes of highest total degree."""
    _check_k(g, k)
    return LandmarkSet(_by_degree(g)[:k], "DD")


def select_dp(g: GraphStore, k: int, seed: int | None = 0) -> LandmarkSet:
    """Sample ``k`` distinct nodes with probability proportional to total degree."""
    _check_k(g, k)
    deg = g.total_degree.astype(np.float64)
    if np.count_nonzero(deg) < k:
        raise DataError(f"only {np.count_nonzero(deg)} nodes have positive degree, need k={k}")
    rng = np.random.default_rng(seed)
    nodes = rng.choice(g.node_count, size=k, replace=False, p=deg / deg.sum())
    return LandmarkSet(nodes, "DP", seed)


def select_uf(g: GraphStore, k: int, seed: int | None = 0) -> LandmarkSet:
    _check_k(g, k)
    rng = np.random.default_rng(seed)
    return LandmarkSet(rng.choice(g.node_count, size=k, replace=False), "UF", seed)


def select_gds(g: GraphStore, k: int, trace: list | None = None) -> LandmarkSet:
    """Greedy dominating set driven by a max-degree heap.

    Pops nodes in (degree desc, id asc) order; a popped node already equal or
    adjacent (undirected view) to a chosen landmark is discarded. Stops once
    ``k`` nodes are chosen or the heap is empty, in which case the result
    dominates the whole graph and may hold fewer than ``k`` nodes.

    If ``trace`` is a list, each pop is appended as ``(node, selected)``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    deg = g.total_degree
    heap = [(-int(deg[v]), v) for v in range(g.node_count)]
    heapq.heapify(heap)
    dominated = np.zeros(g.node_count, dtype=bool)
    chosen: list[int] = []
    while heap and len(chosen) < k:
        _, v = heapq.heappop(heap)
        selected = not dominated[v]
        if trace is not None:
            trace.append((v, selected))
        if not selected:
            continue
        chosen.append(v)
        dominated[v] = True
        dominated[g.neighbors(v)] = True
    if len(chosen) < k:
        _logger.info("GDS: heap exhausted with %d of %d landmarks (graph dominated)", len(chosen), k)
    return LandmarkSet(np.asarray(chosen, dtype=np.int64), "GDS")


def resolve_strategy(strategy: str, order: str, k: int, d: int) -> str:
    """GDS is only meaningful with second-order proximity or ``k == d``; fall back to DD."""
    strategy = strategy.upper()
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown landmark strategy {strategy!r}; choose from {STRATEGIES}")
    if strategy == "GDS" and order != "second" and k != d:
        _logger.warning("GDS landmarks with first-order proximity and k != d make M00 diagonal "
                        "and yield null representations; falling back to DD")
        return "DD"
    return strategy


def select_landmarks(g: GraphStore, k: int, strategy: str = "DD", seed: int | None = 0) -> LandmarkSet:
    strategy = strategy.upper()
    if strategy == "DD":
        return select_dd(g, k)
    if strategy == "DP":
        return select_dp(g, k, seed)
    if strategy == "UF":
        return select_uf(g, k, seed)
    if strategy == "GDS":
        return select_gds(g, k)
    raise ValueError(f"unknown landmark strategy {strategy!r}; choose from {STRATEGIES}")


def write_landmarks(path: str | PathLike, g: GraphStore, lms: LandmarkSet) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# strategy={lms.strategy} seed={lms.seed}\n")
        for v in lms.nodes:
            fh.write(f"{g.labels[v]}\n")


def read_landmarks(path: str | PathLike, g: GraphStore) -> LandmarkSet:
    labels = [tok[0] for _, tok in iter_data_lines(path)]
    return LandmarkSet(g.ids(labels), "external")
