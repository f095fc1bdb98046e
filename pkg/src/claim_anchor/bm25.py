"""Inverted index with Okapi BM25 scoring and top-k retrieval.

Scoring uses the non-negative idf variant, idf(t) = ln((N - df + 0.5) /
(df + 0.5) + 1), with defaults k1=1.5, b=0.75. Every parameter lives in
Bm25Params and is echoed in experiment reports and index snapshots.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus, document_text
from .errors import PositionOutOfRange, ValidationError
from .ranking import STAGE_RETRIEVAL, RankedList, rank_entries
from .textprep import PreprocessConfig, preprocess

INDEX_FORMAT = "claim-anchor-index"
INDEX_VERSION = 1

DEFAULT_K = 100


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.5
    b: float = 0.75
    idf_floor: float = 0.0

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError("k1 must be >= 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must be in [0, 1]")
        if self.idf_floor < 0:
            raise ValueError("idf_floor must be >= 0")

    def as_dict(self) -> dict:
        return {"k1": self.k1, "b": self.b, "idf_floor": self.idf_floor}


@dataclass
class InvertedIndex:
    postings: dict[str, list[tuple[int, int]]]  # term -> [(doc_position, tf)], position-sorted
    doc_len: list[int]
    avg_doc_len: float
    n_docs: int
    doc_ids: tuple[str, ...]
    params: Bm25Params
    preproc: PreprocessConfig = field(repr=False)

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def idf(self, term: str) -> float:
        df = self.df(term)
        value = math.log((self.n_docs - df + 0.5) / (df + 0.5) + 1.0)
        return max(value, self.params.idf_floor)

    def tf(self, term: str, doc_position: int) -> int:
        postings = self.postings.get(term)
        if not postings:
            return 0
        i = bisect_left(postings, doc_position, key=lambda e: e[0])
        if i < len(postings) and postings[i][0] == doc_position:
            return postings[i][1]
        return 0

    def config_hash(self) -> str:
        return _config_hash(self.params, self.preproc)


def build_index(
    corpus: Corpus,
    cfg: PreprocessConfig | None = None,
    params: Bm25Params | None = None,
) -> InvertedIndex:
    """Index document_text of every document in corpus order."""
    cfg = cfg if cfg is not None else PreprocessConfig()
    params = params if params is not None else Bm25Params()

    postings: dict[str, list[tuple[int, int]]] = {}
    doc_len: list[int] = []
    for position, doc in enumerate(corpus.docs):
        tokens = preprocess(document_text(doc), cfg)
        doc_len.append(len(tokens))
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((position, tf))

    n_docs = len(corpus.docs)
    avg_doc_len = sum(doc_len) / n_docs if n_docs else 0.0
    return InvertedIndex(
        postings=postings,
        doc_len=doc_len,
        avg_doc_len=avg_doc_len,
        n_docs=n_docs,
        doc_ids=tuple(doc.cord_uid for doc in corpus.docs),
        params=params,
        preproc=cfg,
    )


def _unique(tokens: list[str]) -> list[str]:
    return list(dict.fromkeys(tokens))


def _term_weight(tf: int, doc_len: int, index: InvertedIndex) -> float:
    k1, b = index.params.k1, index.params.b
    norm = 1.0 - b + b * doc_len / index.avg_doc_len
    return tf * (k1 + 1.0) / (tf + k1 * norm)


def bm25_score(index: InvertedIndex, query_tokens: list[str], doc_position: int) -> float:
    """BM25 score of one document for a query; terms absent from the index add 0."""
    if not 0 <= doc_position < index.n_docs:
        raise PositionOutOfRange(doc_position, index.n_docs)
    if index.avg_doc_len == 0:
        return 0.0
    score = 0.0
    doc_len = index.doc_len[doc_position]
    for term in _unique(query_tokens):
        tf = index.tf(term, doc_position)
        if tf == 0:
            continue
        score += index.idf(term) * _term_weight(tf, doc_len, index)
    return score


def retrieve(
    index: InvertedIndex,
    query_tokens: list[str],
    k: int = DEFAULT_K,
    query_id: str = "",
) -> RankedList:
    """Top-k documents with positive BM25 score.

    Lists may be shorter than k: zero-score documents are never padded in,
    so ranks stay deterministic.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    scores: dict[int, float] = {}
    if index.avg_doc_len > 0:
        for term in _unique(query_tokens):
            postings = index.postings.get(term)
            if not postings:
                continue
            idf = index.idf(term)
            for position, tf in postings:
                weight = idf * _term_weight(tf, index.doc_len[position], index)
                scores[position] = scores.get(position, 0.0) + weight
    scored = ((index.doc_ids[pos], s) for pos, s in scores.items() if s > 0.0)
    return rank_entries(query_id, scored, STAGE_RETRIEVAL, k=k)


def _config_hash(params: Bm25Params, cfg: PreprocessConfig) -> str:
    payload = {
        "params": params.as_dict(),
        "preprocess": cfg.summary(),
    }
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _open(path: str | Path, mode: str):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def save_index(index: InvertedIndex, path: str | Path) -> None:
    """Snapshot the index as a self-describing JSON container (.gz supported)."""
    payload = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "config_hash": index.config_hash(),
        "params": index.params.as_dict(),
        "preprocess": {
            "lowercase": index.preproc.lowercase,
            "strip_edge_punct": index.preproc.strip_edge_punct,
            "min_token_len": index.preproc.min_token_len,
            "stopwords": sorted(index.preproc.stopwords),
        },
        "doc_ids": list(index.doc_ids),
        "doc_len": index.doc_len,
        "avg_doc_len": index.avg_doc_len,
        "postings": {term: [[p, tf] for p, tf in plist] for term, plist in index.postings.items()},
    }
    with _open(path, "w") as f:
        json.dump(payload, f, ensure_ascii=False)


def load_index(path: str | Path) -> InvertedIndex:
    """Load a snapshot, verifying container version and embedded config hash."""
    with _open(path, "r") as f:
        payload = json.load(f)
    if payload.get("format") != INDEX_FORMAT:
        raise ValidationError(f"not an index snapshot: {path}")
    if payload.get("version") != INDEX_VERSION:
        raise ValidationError(f"unsupported index version {payload.get('version')!r}")
    params = Bm25Params(**payload["params"])
    pp = payload["preprocess"]
    cfg = PreprocessConfig(
        lowercase=pp["lowercase"],
        strip_edge_punct=pp["strip_edge_punct"],
        stopwords=frozenset(pp["stopwords"]),
        min_token_len=pp["min_token_len"],
    )
    if _config_hash(params, cfg) != payload.get("config_hash"):
        raise ValidationError("index snapshot config hash mismatch; file corrupt or edited")
    index = InvertedIndex(
        postings={term: [(int(p), int(tf)) for p, tf in plist] for term, plist in payload["postings"].items()},
        doc_len=[int(n) for n in payload["doc_len"]],
        avg_doc_len=float(payload["avg_doc_len"]),
        n_docs=len(payload["doc_ids"]),
        doc_ids=tuple(payload["doc_ids"]),
        params=params,
        preproc=cfg,
    )
    return index
