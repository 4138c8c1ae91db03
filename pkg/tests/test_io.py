import numpy as np
import pytest

from sepne import DataError
from sepne.io import read_binary, read_embeddings, read_text, write_binary, write_text


def sample(n=7, d=4, seed=0):
    rng = np.random.default_rng(seed)
    return [f"n{i}" for i in range(n)], rng.normal(size=(n, d))


def test_text_round_trip(tmp_path):
    labels, vec = sample()
    p = tmp_path / "e.txt"
    write_text(p, labels, vec)
    assert p.read_text().splitlines()[0] == "7 4"
    got_labels, got = read_text(p)
    assert got_labels == labels
    np.testing.assert_allclose(got, vec, rtol=1e-5, atol=1e-12)


def test_binary_round_trip(tmp_path):
    labels, vec = sample(5, 3, 1)
    p = tmp_path / "e.bin"
    write_binary(p, labels, vec)
    raw = p.read_bytes()
    assert raw[:4] == b"SNEB" and len(raw) == 16 + 5 * 3 * 4 + len("\n".join(labels))
    got_labels, got = read_binary(p)
    assert got_labels == labels
    np.testing.assert_array_equal(got, vec.astype(np.float32))


def test_auto_detect(tmp_path):
    labels, vec = sample(3, 2)
    write_text(tmp_path / "a", labels, vec)
    write_binary(tmp_path / "b", labels, vec)
    a, b = read_embeddings(tmp_path / "a"), read_embeddings(tmp_path / "b")
    assert list(a) == list(b) == labels
    np.testing.assert_allclose(a["n1"], b["n1"], rtol=1e-5)


def test_empty_binary(tmp_path):
    write_binary(tmp_path / "z", [], np.zeros((0, 3)))
    labels, mat = read_binary(tmp_path / "z")
    assert labels == [] and mat.shape == (0, 3)


def test_bad_files(tmp_path):
    with pytest.raises(DataError):
        write_text(tmp_path / "x", ["a b"], np.zeros((1, 2)))
    (tmp_path / "h").write_text("3\n")
    with pytest.raises(DataError, match="header"):
        read_text(tmp_path / "h")
    (tmp_path / "f").write_text("1 2\na 1.0\n")
    with pytest.raises(DataError, match=":2:"):
        read_text(tmp_path / "f")
    (tmp_path / "b").write_bytes(b"SNEB\x02\x00\x00\x00" + b"\x00" * 8)
    with pytest.raises(DataError, match="version"):
        read_binary(tmp_path / "b")
