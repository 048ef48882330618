"""Frozen user/word/entity embedding tables and mention vectors.

Text format (word2vec style)::

    <count> <dim>
    <id> <f1> ... <fdim>
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

KINDS = ("user", "word", "entity")


class EmbeddingError(ValueError):
    pass


@dataclass
class EmbeddingTable:
    kind: str
    ids: list[str]
    matrix: np.ndarray
    vocab: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise EmbeddingError(f"unknown embedding kind {self.kind!r}")
        self.matrix = np.array(self.matrix, dtype=np.float64, order="C")
        if self.matrix.ndim != 2 or self.matrix.shape[1] <= 0:
            raise EmbeddingError(f"matrix must be V x dim with dim > 0, got {self.matrix.shape}")
        if self.matrix.shape[0] != len(self.ids):
            raise EmbeddingError(f"{len(self.ids)} ids for {self.matrix.shape[0]} rows")
        if not np.all(np.isfinite(self.matrix)):
            raise EmbeddingError("non-finite embedding values")
        self.vocab = {}
        for i, key in enumerate(self.ids):
            if key in self.vocab:
                raise EmbeddingError(f"duplicate id {key!r}")
            self.vocab[key] = i
        self.matrix.setflags(write=False)

    @classmethod
    def from_mapping(cls, kind: str, vectors: Mapping[str, np.ndarray]) -> "EmbeddingTable":
        ids = list(vectors)
        return cls(kind, ids, np.array([np.asarray(vectors[i], dtype=np.float64) for i in ids]))

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, key: str) -> bool:
        return key in self.vocab


def lookup(table: EmbeddingTable, key: str) -> np.ndarray:
    """Row for ``key``; a zero vector for unknown ids."""
    row = table.vocab.get(key)
    if row is None:
        return np.zeros(table.dim)
    return table.matrix[row]


def mention_vector(mention, table: EmbeddingTable) -> np.ndarray:
    """Average of the word vectors; OOV words add zero but still count.

    ``mention`` is a MentionCandidate or any iterable of tokens.
    """
    words = list(getattr(mention, "words", mention))
    total = np.zeros(table.dim)
    if not words:
        return total
    for w in words:
        row = table.vocab.get(w)
        if row is not None:
            total = total + table.matrix[row]
    return total / len(words)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_embedding_block(fh, table.ids, table.matrix, fmt="%.9g")


def write_embedding_block(fh, ids, matrix: np.ndarray, fmt: str = "%.9g", header: str = "") -> None:
    fh.write(f"{header}{matrix.shape[0]} {matrix.shape[1]}\n")
    for key, row in zip(ids, matrix):
        fh.write(key + " " + " ".join(fmt % v for v in row) + "\n")


def read_embedding_block(lines, first_lineno: int = 1) -> tuple[list[str], np.ndarray]:
    """Parse ``<count> <dim>`` plus ``count`` rows from an iterator of lines."""
    header = next(lines, None)
    if header is None:
        raise EmbeddingError(f"line {first_lineno}: missing '<count> <dim>' header")
    try:
        count, dim = (int(x) for x in header.split())
    except ValueError:
        raise EmbeddingError(f"line {first_lineno}: bad header {header.strip()!r}") from None
    if count < 0 or dim <= 0:
        raise EmbeddingError(f"line {first_lineno}: bad header {header.strip()!r}")
    ids, rows = [], np.empty((count, dim))
    for i in range(count):
        lineno = first_lineno + 1 + i
        line = next(lines, None)
        if line is None:
            raise EmbeddingError(f"line {lineno}: expected {count} rows, file ended after {i}")
        parts = line.rstrip("\n").split(" ")
        if len(parts) != dim + 1:
            raise EmbeddingError(f"line {lineno}: expected {dim} values, got {len(parts) - 1}")
        try:
            rows[i] = [float(x) for x in parts[1:]]
        except ValueError:
            raise EmbeddingError(f"line {lineno}: non-numeric value") from None
        ids.append(parts[0])
    return ids, rows


def load_embeddings(path: str | Path, kind: str) -> EmbeddingTable:
    with open(path, encoding="utf-8") as fh:
        lines = iter(fh)
        ids, matrix = read_embedding_block(lines)
        extra = [ln for ln in lines if ln.strip()]
        if extra:
            raise EmbeddingError(f"{path}: {len(extra)} rows beyond declared count")
    dup = len(ids) - len(set(ids))
    if dup:
        raise EmbeddingError(f"{path}: {dup} duplicate ids")
    return EmbeddingTable(kind, ids, matrix)
