"""Embedding files: word2vec-style text and a compact binary format.

Binary layout (little-endian)::

    bytes 0-3    magic b"SNEB"
    bytes 4-7    uint32 format version (1)
    bytes 8-11   uint32 row count n
    bytes 12-15  uint32 dimension d
    n*d float32  row-major matrix
    rest         UTF-8 labels, one per line
"""
from __future__ import annotations

import struct
from os import PathLike

import numpy as np

from .errors import DataError

__all__ = ["write_text", "read_text", "write_binary", "read_binary", "read_embeddings"]

MAGIC = b"SNEB"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def _check_labels(labels) -> list[str]:
    labels = [str(lab) for lab in labels]
    for lab in labels:
        if not lab or any(ch.isspace() for ch in lab):
            raise DataError(f"label {lab!r} cannot be written (empty or contains whitespace)")
    return labels


def write_text(path: str | PathLike, labels, vectors: np.ndarray) -> None:
    labels = _check_labels(labels)
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or len(labels) != len(vectors):
        raise DataError("labels and vectors disagree in length")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(labels)} {vectors.shape[1]}\n")
        for lab, row in zip(labels, vectors):
            fh.write(lab + " " + " ".join(f"{x:.6g}" for x in row) + "\n")


def read_text(path: str | PathLike) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError(f"{path}: bad header, expected 'n d'")
        n, d = int(header[0]), int(header[1])
        labels, rows = [], []
        for lineno, line in enumerate(fh, start=2):
            tok = line.split()
            if not tok:
                continue
            if len(tok) != d + 1:
                raise DataError(f"{path}:{lineno}: expected {d + 1} fields, got {len(tok)}")
            labels.append(tok[0])
            rows.append([float(t) for t in tok[1:]])
    if len(labels) != n:
        raise DataError(f"{path}: header says {n} rows, found {len(labels)}")
    return labels, np.asarray(rows, dtype=np.float64).reshape(n, d)


def write_binary(path: str | PathLike, labels, vectors: np.ndarray) -> None:
    labels = _check_labels(labels)
    mat = np.ascontiguousarray(vectors, dtype="<f4")
    if mat.ndim != 2 or len(labels) != len(mat):
        raise DataError("labels and vectors disagree in length")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, mat.shape[0], mat.shape[1]))
        fh.write(mat.tobytes())
        fh.write("\n".join(labels).encode("utf-8"))


def read_binary(path: str | PathLike) -> tuple[list[str], np.ndarray]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated header")
    magic, version, n, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DataError(f"{path}: not a binary embedding file")
    if version != VERSION:
        raise DataError(f"{path}: unsupported format version {version}")
    end = _HEADER.size + 4 * n * d
    mat = np.frombuffer(raw, dtype="<f4", count=n * d, offset=_HEADER.size).reshape(n, d)
    labels = raw[end:].decode("utf-8").split("\n") if n else []
    if len(labels) != n:
        raise DataError(f"{path}: {n} rows but {len(labels)} labels")
    return labels, mat.astype(np.float64)


def read_embeddings(path: str | PathLike) -> dict[str, np.ndarray]:
    """Load either format into a ``label -> vector`` mapping."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    labels, mat = read_binary(path) if magic == MAGIC else read_text(path)
    return dict(zip(labels, mat))
