"""Model backends: the built-in echo/hash test models plus hub-resolved ones.

The `echo` model makes every integration test runnable with zero ML
dependencies: rerank scores are candidate indices, embeddings are
deterministic hashes of the text. Any other model_id is passed through to
sentence-transformers (CrossEncoder for reranking, SentenceTransformer for
embedding); anything that yields one scalar per (query, text) pair or one
fixed-size vector per text is conformant.
"""

from __future__ import annotations

import hashlib

from .config import SidecarConfig

ECHO_MODEL = "echo"


class EchoReranker:
    """Test model: score of candidate i is i."""

    def score_pairs(self, query: str, texts: list[str]) -> list[float]:
        return [float(i) for i in range(len(texts))]


class HashEmbedder:
    """Test model: deterministic pseudo-embeddings derived from sha256(text)."""

    def __init__(self, dim: int):
        self.dim = dim

    def embed(self, texts: list[str]) -> list[list[float]]:
        return [self._one(text) for text in texts]

    def _one(self, text: str) -> list[float]:
        components: list[float] = []
        block = 0
        seed = text.encode("utf-8")
        while len(components) < self.dim:
            digest = hashlib.sha256(seed + block.to_bytes(4, "big")).digest()
            components.extend((byte - 127.5) / 127.5 for byte in digest)
            block += 1
        return components[: self.dim]


class CrossEncoderReranker:
    def __init__(self, cfg: SidecarConfig):
        from sentence_transformers import CrossEncoder  # deferred heavy import

        self.model = CrossEncoder(cfg.model_id, device=cfg.device)
        self.max_batch = cfg.max_batch

    def score_pairs(self, query: str, texts: list[str]) -> list[float]:
        scores: list[float] = []
        for start in range(0, len(texts), self.max_batch):
            batch = [(query, text) for text in texts[start : start + self.max_batch]]
            scores.extend(float(s) for s in self.model.predict(batch))
        return scores


class SentenceEmbedder:
    def __init__(self, cfg: SidecarConfig):
        from sentence_transformers import SentenceTransformer  # deferred heavy import

        self.model = SentenceTransformer(cfg.model_id, device=cfg.device)
        self.max_batch = cfg.max_batch

    def embed(self, texts: list[str]) -> list[list[float]]:
        vectors: list[list[float]] = []
        for start in range(0, len(texts), self.max_batch):
            batch = texts[start : start + self.max_batch]
            encoded = self.model.encode(batch, batch_size=self.max_batch, convert_to_numpy=True)
            vectors.extend([float(x) for x in row] for row in encoded)
        return vectors


def load_reranker(cfg: SidecarConfig):
    if cfg.model_id == ECHO_MODEL:
        return EchoReranker()
    return CrossEncoderReranker(cfg)


def load_embedder(cfg: SidecarConfig):
    if cfg.model_id == ECHO_MODEL:
        return HashEmbedder(cfg.echo_dim)
    return SentenceEmbedder(cfg)
