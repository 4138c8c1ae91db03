import numpy as np
import pytest

from sepne import DataError
from sepne.datasets import load_dataset, planted_partition


def test_linqs_layout(tmp_path):
    d = tmp_path / "cora"
    d.mkdir()
    (d / "cora.content").write_text("10 0 1 A\n20 1 0 B\n30 1 1 A\n40 0 0 B\n")
    (d / "cora.cites").write_text("10 20\n10 30\n")
    ds = load_dataset("Cora", root=tmp_path)
    g = ds.graph
    assert g.node_count == 4 and ds.labels["40"] == ["B"]
    assert list(g.out_neighbors(g.id_map["20"])) == [g.id_map["10"]]
    assert g.degree(g.id_map["40"], "total") == 0


def test_wiki_and_plain_layouts(tmp_path):
    w = tmp_path / "wiki"
    w.mkdir()
    (w / "Wiki_edgelist.txt").write_text("0 1\n1 2\n")
    (w / "Wiki_category.txt").write_text("0 3\n1 3\n2 5\n")
    assert load_dataset("wiki", root=tmp_path).graph.edge_count == 2
    p = tmp_path / "toy"
    p.mkdir()
    (p / "edges.txt").write_text("a b\n")
    (p / "labels.txt").write_text("a x\nb y\nb z\n")
    assert load_dataset("toy", root=tmp_path, directed=False).labels["b"] == ["y", "z"]


def test_missing_dataset(tmp_path, monkeypatch):
    monkeypatch.setenv("SEPNE_DATA", str(tmp_path))
    with pytest.raises(DataError, match="citeseer"):
        load_dataset("citeseer")


def test_planted_partition_is_seeded_and_mostly_internal():
    a, b = planted_partition(300, 5, seed=3), planted_partition(300, 5, seed=3)
    assert a.labels == b.labels and a.graph.edge_count == b.graph.edge_count
    g = a.graph
    same = sum(a.labels[str(u)] == a.labels[str(v)] for u in range(300) for v in g.out_neighbors(u))
    assert same / g.edge_count > 0.7
