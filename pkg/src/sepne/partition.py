"""Partition setups: random, interested-only, Louvain communities, or external file."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from os import PathLike

import networkx as nx
import numpy as np

from .errors import DataError
from .graph import GraphStore, iter_data_lines

_logger = logging.getLogger(__name__)

__all__ = [
    "PartitionPlan",
    "partition_random",
    "partition_interested",
    "partition_louvain",
    "load_partition",
    "write_partition",
]

MODES = ("louvain", "random", "interested_only", "external")


@dataclass(frozen=True, eq=False)
class PartitionPlan:
    """Disjoint, non-empty node-id sets ``V_1 .. V_s`` (landmarks excluded)."""

    sets: tuple[np.ndarray, ...]
    mode: str
    seed: int | None = None
    dropped: int = field(default=0, compare=False)

    def __post_init__(self):
        sets = tuple(np.asarray(s, dtype=np.int64) for s in self.sets)
        if not sets:
            raise DataError("partition plan has no sets")
        if any(s.size == 0 for s in sets):
            raise DataError("partition plan contains an empty set")
        allnodes = np.concatenate(sets)
        if len(np.unique(allnodes)) != len(allnodes):
            raise DataError("partition sets are not disjoint")
        object.__setattr__(self, "sets", sets)

    @property
    def s(self) -> int:
        return len(self.sets)

    def nodes(self) -> np.ndarray:
        return np.concatenate(self.sets)

    def __len__(self) -> int:
        return len(self.sets)


def _candidates(g: GraphStore, excluded) -> np.ndarray:
    mask = np.ones(g.node_count, dtype=bool)
    mask[np.asarray(excluded, dtype=np.int64)] = False
    return np.flatnonzero(mask)


def _chunk(ids: np.ndarray, max_size: int) -> list[np.ndarray]:
    if max_size < 1:
        raise ValueError("max_set_size must be at least 1")
    n_chunks = math.ceil(len(ids) / max_size)
    return [ids[i * max_size:(i + 1) * max_size] for i in range(n_chunks)]


def partition_random(g: GraphStore, excluded, s: int, seed: int | None = 0) -> PartitionPlan:
    """Shuffle the candidates with a seeded generator and deal them round-robin into ``s`` sets."""
    if s < 1:
        raise ValueError("s must be at least 1")
    cand = _candidates(g, excluded)
    if len(cand) < s:
        raise DataError(f"cannot split {len(cand)} nodes into {s} non-empty sets")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(cand)
    return PartitionPlan(tuple(np.sort(perm[j::s]) for j in range(s)), "random", seed)


def partition_interested(g: GraphStore, excluded, requested, max_set_size: int = 2000) -> PartitionPlan:
    """Chunk the requested non-landmark nodes (sorted by id); everything else is left out."""
    requested = np.unique(np.asarray(requested, dtype=np.int64))
    if requested.size == 0:
        raise DataError("no requested nodes")
    keep = np.setdiff1d(requested, np.asarray(excluded, dtype=np.int64))
    if keep.size == 0:
        raise DataError("every requested node is a landmark; nothing to embed beyond landmarks")
    dropped = len(requested) - len(keep)
    if dropped:
        _logger.info("%d requested node(s) are landmarks and are served from the landmark factors", dropped)
    return PartitionPlan(tuple(_chunk(keep, max_set_size)), "interested_only", None, dropped)


def partition_louvain(g: GraphStore, excluded, seed: int | None = 0, max_set_size: int = 2000,
                      threshold: float = 1e-7) -> PartitionPlan:
    """Louvain communities of the undirected view restricted to non-excluded nodes.

    Communities larger than ``max_set_size`` are chunked; nodes with no edge
    inside the candidate set are gathered into trailing set(s).
    """
    cand = _candidates(g, excluded)
    if cand.size == 0:
        raise DataError("no candidate nodes to partition")
    sub = g.undirected_adjacency()[cand][:, cand].tocoo()
    upper = sub.row < sub.col
    nxg = nx.Graph()
    nxg.add_nodes_from(range(len(cand)))
    nxg.add_edges_from(zip(sub.row[upper].tolist(), sub.col[upper].tolist()))
    if nxg.number_of_edges() == 0:
        _logger.warning("no edges among candidate nodes; using a single set")
        return PartitionPlan(tuple(_chunk(cand, max_set_size)), "louvain", seed)

    isolated = np.array(sorted(v for v, dgr in nxg.degree() if dgr == 0), dtype=np.int64)
    nxg.remove_nodes_from(isolated.tolist())
    comms = nx.community.louvain_communities(nxg, threshold=threshold, seed=seed)
    comms = sorted((np.sort(np.fromiter(c, dtype=np.int64)) for c in comms), key=lambda c: c[0])
    sets: list[np.ndarray] = []
    for c in comms:
        sets.extend(_chunk(cand[c], max_set_size))
    if isolated.size:
        sets.extend(_chunk(cand[isolated], max_set_size))
    _logger.info("louvain: %d communities -> %d sets", len(comms), len(sets))
    return PartitionPlan(tuple(sets), "louvain", seed)


def load_partition(path: str | PathLike, g: GraphStore, excluded) -> PartitionPlan:
    """Read ``node_label set_index`` lines; landmark nodes are dropped with a warning."""
    excluded = set(np.asarray(excluded, dtype=np.int64).tolist())
    assignment: dict[int, str] = {}
    for lineno, tok in iter_data_lines(path):
        if len(tok) != 2:
            raise DataError(f"{path}:{lineno}: expected 'node_label set_index'")
        label, set_idx = tok
        node = g.id_map.get(label)
        if node is None:
            raise DataError(f"{path}:{lineno}: unknown node label {label!r}")
        prev = assignment.get(node)
        if prev is not None and prev != set_idx:
            raise DataError(f"{path}:{lineno}: node {label!r} assigned to sets {prev} and {set_idx}")
        assignment[node] = set_idx
    dropped = sum(1 for v in assignment if v in excluded)
    if dropped:
        _logger.warning("dropped %d landmark node(s) from the partition file", dropped)
    groups: dict[str, list[int]] = {}
    for node, set_idx in assignment.items():
        if node not in excluded:
            groups.setdefault(set_idx, []).append(node)

    def order(key: str):
        return (0, int(key), key) if key.lstrip("-").isdigit() else (1, 0, key)

    sets = tuple(np.sort(np.asarray(groups[key], dtype=np.int64)) for key in sorted(groups, key=order))
    return PartitionPlan(sets, "external", None, dropped)


def write_partition(path: str | PathLike, g: GraphStore, plan: PartitionPlan) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# mode={plan.mode} seed={plan.seed}\n")
        for j, nodes in enumerate(plan.sets):
            for v in nodes:
                fh.write(f"{g.labels[v]} {j}\n")
