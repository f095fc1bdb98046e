"""Deterministic text normalization shared by queries and documents.

The pipeline is fixed: lowercase, split on whitespace, strip edge
punctuation, drop short tokens, drop stopwords. The stopword list ships
with the package so results never drift with external library versions.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    """The versioned English stopword list shipped in claim_anchor/data."""
    text = resources.files("claim_anchor").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Load a one-token-per-line UTF-8 stopword file."""
    with open(path, encoding="utf-8") as f:
        return frozenset(line.strip() for line in f if line.strip())


def stopword_hash(stopwords: frozenset[str]) -> str:
    """Stable sha256 over the sorted list; echoed in reports and index snapshots."""
    joined = "\n".join(sorted(stopwords)).encode("utf-8")
    return hashlib.sha256(joined).hexdigest()


@dataclass(frozen=True)
class PreprocessConfig:
    lowercase: bool = True
    strip_edge_punct: bool = True
    stopwords: frozenset[str] = field(default_factory=default_stopwords)
    min_token_len: int = 1

    def __post_init__(self):
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")

    def summary(self) -> dict:
        """Config echo for reports; the stopword list itself is summarized by hash."""
        return {
            "lowercase": self.lowercase,
            "strip_edge_punct": self.strip_edge_punct,
            "min_token_len": self.min_token_len,
            "n_stopwords": len(self.stopwords),
            "stopword_hash": stopword_hash(self.stopwords),
        }


def _strip_edges(token: str) -> str:
    start, end = 0, len(token)
    while start < end and not token[start].isalnum():
        start += 1
    while end > start and not token[end - 1].isalnum():
        end -= 1
    return token[start:end]


def preprocess(text: str, cfg: PreprocessConfig | None = None) -> list[str]:
    """Tokenize `text` for lexical retrieval.

    Steps, in order: (1) lowercase, (2) split on Unicode whitespace,
    (3) strip leading/trailing non-alphanumeric characters, (4) drop
    tokens shorter than min_token_len, (5) drop stopwords. Steps 1 and 3
    honor the config toggles. Pure and deterministic.
    """
    if cfg is None:
        cfg = PreprocessConfig()
    if cfg.lowercase:
        text = text.lower()
    tokens = []
    for raw in text.split():
        token = _strip_edges(raw) if cfg.strip_edge_punct else raw
        if len(token) < cfg.min_token_len or not token:
            continue
        if token in cfg.stopwords:
            continue
        tokens.append(token)
    return tokens
