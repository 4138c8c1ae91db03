"""Loaders for the document networks (Wiki, Cora, Citeseer) and a synthetic generator.

The benchmark networks are not bundled. Point ``SEPNE_DATA`` (default:
``./data``) at a directory holding one sub-directory per dataset, with
either

* ``edges.txt`` (``src dst``) and ``labels.txt`` (``node class``), or
* the LINQS release files ``<name>.cites`` (``cited citing``) and
  ``<name>.content`` (``id features... class``), or
* the OpenNE Wiki release ``Wiki_edgelist.txt`` and ``Wiki_category.txt``.

Edges point from the citing/linking document to the referenced one.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .graph import GraphStore, iter_data_lines

__all__ = ["Dataset", "data_root", "load_dataset", "planted_partition"]


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    graph: GraphStore
    labels: dict[str, list[str]]


def data_root() -> Path:
    return Path(os.environ.get("SEPNE_DATA", "data"))


def _labels_file(path: Path) -> dict[str, list[str]]:
    labels: dict[str, list[str]] = {}
    for _, tok in iter_data_lines(path):
        labels.setdefault(tok[0], [])
        for cls in tok[1:]:
            if cls not in labels[tok[0]]:
                labels[tok[0]].append(cls)
    return labels


def load_dataset(name: str, root: str | os.PathLike | None = None, directed: bool = True) -> Dataset:
    """Load a benchmark network by name; labeled nodes without edges become isolated nodes."""
    base = Path(root) if root is not None else data_root()
    folder = base / name.lower()
    candidates = [folder, base]
    for d in candidates:
        edges_txt, labels_txt = d / "edges.txt", d / "labels.txt"
        if edges_txt.exists() and labels_txt.exists():
            labels = _labels_file(labels_txt)
            edges = [(t[0], t[1]) for _, t in iter_data_lines(edges_txt)]
            return Dataset(name, GraphStore.from_edges(edges, directed, nodes=list(labels)), labels)
        cites, content = d / f"{name.lower()}.cites", d / f"{name.lower()}.content"
        if cites.exists() and content.exists():
            labels = {t[0]: [t[-1]] for _, t in iter_data_lines(content)}
            edges = [(t[1], t[0]) for _, t in iter_data_lines(cites)]
            return Dataset(name, GraphStore.from_edges(edges, directed, nodes=list(labels)), labels)
        wiki_edges, wiki_cat = d / "Wiki_edgelist.txt", d / "Wiki_category.txt"
        if name.lower() == "wiki" and wiki_edges.exists() and wiki_cat.exists():
            labels = _labels_file(wiki_cat)
            edges = [(t[0], t[1]) for _, t in iter_data_lines(wiki_edges)]
            return Dataset(name, GraphStore.from_edges(edges, directed, nodes=list(labels)), labels)
    raise DataError(f"dataset {name!r} not found under {base.resolve()} "
                    "(set SEPNE_DATA; see sepne.datasets for accepted layouts)")


def planted_partition(n: int, blocks: int, avg_degree: float = 10.0, p_in: float = 0.8,
                      directed: bool = True, seed: int | None = 0) -> Dataset:
    """Random graph with ``blocks`` planted communities.

    Each node draws a Poisson(``avg_degree``) number of out-edges; each edge
    stays inside the node's community with probability ``p_in`` and
    otherwise lands on a uniformly random node. Community ids are returned
    as labels.
    """
    rng = np.random.default_rng(seed)
    member = rng.integers(0, blocks, size=n)
    order = np.argsort(member, kind="stable")
    starts = np.searchsorted(member[order], np.arange(blocks + 1))
    out_deg = rng.poisson(avg_degree, size=n)
    src = np.repeat(np.arange(n), out_deg)
    inside = rng.random(len(src)) < p_in
    dst = rng.integers(0, n, size=len(src))
    comm = member[src[inside]]
    lo, hi = starts[comm], starts[comm + 1]
    dst[inside] = order[lo + (rng.random(len(comm)) * (hi - lo)).astype(np.int64)]
    g = GraphStore.from_id_arrays(n, src, dst, directed=directed)
    labels = {str(v): [str(member[v])] for v in range(n)}
    return Dataset(f"planted-{n}", g, labels)
