"""Exhaustive cosine-similarity retrieval over precomputed embeddings.

Embeddings are an input artifact produced outside this package (for example
by the scorer sidecar's embed mode). File format: first line `#dim D`, then
one `id<TAB>v1 v2 ... vD` line per vector, UTF-8, decimal floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, DuplicateId, MalformedVector, ValidationError, ZeroNorm
from .ranking import STAGE_RETRIEVAL, RankedList, rank_entries

DEFAULT_K = 100


@dataclass
class EmbeddingStore:
    dim: int
    ids: tuple[str, ...]
    matrix: np.ndarray  # shape (n, dim), float64
    kind: str = "document"

    def __post_init__(self):
        if self.matrix.shape != (len(self.ids), self.dim):
            raise DimensionMismatch(
                f"matrix shape {self.matrix.shape} does not match {len(self.ids)} ids x dim {self.dim}"
            )
        self._by_id = {id_: i for i, id_ in enumerate(self.ids)}
        if len(self._by_id) != len(self.ids):
            raise ValidationError("duplicate ids in embedding store")
        self._norms = np.linalg.norm(self.matrix, axis=1)

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, id_: str) -> bool:
        return id_ in self._by_id

    def vector(self, id_: str) -> np.ndarray:
        return self.matrix[self._by_id[id_]]


def load_embeddings(path: str | Path, kind: str = "document") -> EmbeddingStore:
    """Load an embedding file, enforcing uniform dimension and finite values."""
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip()
        parts = header.split()
        if len(parts) != 2 or parts[0] != "#dim":
            raise ValidationError(f"embedding file must start with '#dim D', got {header!r}")
        try:
            dim = int(parts[1])
        except ValueError:
            raise ValidationError(f"bad dimension in header: {header!r}") from None
        if dim < 1:
            raise ValidationError("embedding dimension must be >= 1")

        ids: list[str] = []
        rows: list[np.ndarray] = []
        seen: set[str] = set()
        for row_no, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            id_, sep, payload = line.partition("\t")
            if not sep or not id_:
                raise MalformedVector(id_ or f"row {row_no}", "expected id<TAB>components")
            if id_ in seen:
                raise DuplicateId(id_, row_no)
            seen.add(id_)
            try:
                vec = np.array([float(x) for x in payload.split()], dtype=np.float64)
            except ValueError as exc:
                raise MalformedVector(id_, str(exc)) from None
            if vec.shape[0] != dim:
                raise DimensionMismatch(f"id {id_!r} has {vec.shape[0]} components, expected {dim}")
            if not np.all(np.isfinite(vec)):
                raise MalformedVector(id_, "NaN or Inf component")
            if not np.any(vec):
                raise ZeroNorm(f"vector for id {id_!r} has zero norm")
            ids.append(id_)
            rows.append(vec)

    matrix = np.vstack(rows) if rows else np.zeros((0, dim))
    return EmbeddingStore(dim=dim, ids=tuple(ids), matrix=matrix, kind=kind)


def save_embeddings(store: EmbeddingStore, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"#dim {store.dim}\n")
        for id_, row in zip(store.ids, store.matrix):
            f.write(id_ + "\t" + " ".join(repr(float(x)) for x in row) + "\n")


def cosine(u, v) -> float:
    """Cosine similarity of two vectors; both must be nonzero and same length."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"{u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroNorm()
    return float(np.dot(u, v) / (nu * nv))


def dense_retrieve(
    docs: EmbeddingStore,
    query_vec,
    k: int = DEFAULT_K,
    query_id: str = "",
) -> RankedList:
    """Top-k document ids by cosine similarity, exhaustive over the store."""
    if k < 1:
        raise ValueError("k must be >= 1")
    q = np.asarray(query_vec, dtype=np.float64)
    if q.shape != (docs.dim,):
        raise DimensionMismatch(f"query has shape {q.shape}, store dim is {docs.dim}")
    qnorm = np.linalg.norm(q)
    if qnorm == 0.0:
        raise ZeroNorm("query vector has zero norm")
    if len(docs) == 0:
        return RankedList(query_id=query_id, entries=(), stage=STAGE_RETRIEVAL)
    sims = (docs.matrix @ q) / (docs._norms * qnorm)
    scored = ((docs.ids[i], float(sims[i])) for i in range(len(docs)))
    return rank_entries(query_id, scored, STAGE_RETRIEVAL, k=k)
