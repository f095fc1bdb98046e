"""Reciprocal-rank evaluation and run/prediction file IO.

MRR@k averages 1/rank of the gold document over all gold queries; a gold
document outside the top k (or a query missing from the run) scores 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyGold, MalformedRow, ValidationError
from .ranking import RankedList

DEFAULT_EVAL_K = 5
PREDICTIONS_DEPTH = 5


@dataclass(frozen=True)
class Run:
    """All ranked lists of one pipeline stage, keyed by post_id."""

    stage: str
    lists: dict[str, RankedList]

    def __post_init__(self):
        for post_id, ranked in self.lists.items():
            if ranked.query_id != post_id:
                raise ValidationError(f"ranked list id {ranked.query_id!r} filed under key {post_id!r}")


@dataclass(frozen=True)
class EvalReport:
    k: int
    mrr: float
    per_query: dict[str, float]
    n_queries: int

    def as_dict(self) -> dict:
        return {"k": self.k, "mrr": self.mrr, "n_queries": self.n_queries, "per_query": self.per_query}


def reciprocal_rank(ranked: RankedList, gold: str, k: int) -> float:
    """1/rank of `gold` within the top k entries (1-based), else 0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    for position, (doc_id, _) in enumerate(ranked.entries[:k], start=1):
        if doc_id == gold:
            return 1.0 / position
    return 0.0


def mrr_at_k(run: Run, gold: dict[str, str], k: int = DEFAULT_EVAL_K) -> EvalReport:
    """Mean reciprocal rank over every gold query; absent queries count as 0."""
    if not gold:
        raise EmptyGold()
    per_query: dict[str, float] = {}
    for post_id, gold_id in gold.items():
        ranked = run.lists.get(post_id)
        per_query[post_id] = reciprocal_rank(ranked, gold_id, k) if ranked is not None else 0.0
    mrr = sum(per_query.values()) / len(per_query)
    return EvalReport(k=k, mrr=mrr, per_query=per_query, n_queries=len(per_query))


def write_predictions(run: Run, path: str | Path) -> None:
    """Submission-format TSV: `post_id<TAB>preds` with a JSON array of top-5 ids.

    Rows are written in post_id-ascending order with LF line endings so the
    file is byte-identical across platforms for identical runs.
    """
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("post_id\tpreds\n")
        for post_id in sorted(run.lists):
            top = run.lists[post_id].doc_ids()[:PREDICTIONS_DEPTH]
            f.write(post_id + "\t" + json.dumps(top, ensure_ascii=False, separators=(",", ":")) + "\n")


def read_predictions(path: str | Path, stage: str = "retrieval") -> Run:
    """Read a predictions TSV back into a Run (scores synthesized from rank)."""
    with open(path, encoding="utf-8") as f:
        lines = [line.rstrip("\r\n") for line in f]
    if not lines or lines[0].split("\t")[:2] != ["post_id", "preds"]:
        raise MalformedRow(0, "predictions file must start with 'post_id\\tpreds'")
    lists: dict[str, RankedList] = {}
    for row_no, line in enumerate(lines[1:], start=1):
        if not line:
            continue
        post_id, sep, payload = line.partition("\t")
        if not sep or not post_id:
            raise MalformedRow(row_no, "expected post_id<TAB>preds")
        try:
            doc_ids = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise MalformedRow(row_no, f"preds cell is not a JSON array: {exc}") from None
        if not isinstance(doc_ids, list) or not all(isinstance(d, str) for d in doc_ids):
            raise MalformedRow(row_no, "preds must be a JSON array of strings")
        entries = tuple((doc_id, float(len(doc_ids) - i)) for i, doc_id in enumerate(doc_ids))
        lists[post_id] = RankedList(query_id=post_id, entries=entries, stage=stage)
    return Run(stage=stage, lists=lists)


def write_run(run: Run, path: str | Path) -> None:
    """Full-depth run as JSONL, one ranked list per line, post_id ascending."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        for post_id in sorted(run.lists):
            ranked = run.lists[post_id]
            obj = {
                "post_id": post_id,
                "stage": ranked.stage,
                "entries": [[doc_id, score] for doc_id, score in ranked.entries],
            }
            f.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n")


def read_run(path: str | Path) -> Run:
    lists: dict[str, RankedList] = {}
    stage = "retrieval"
    with open(path, encoding="utf-8") as f:
        for row_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRow(row_no, f"not JSON: {exc}") from None
            try:
                stage = obj["stage"]
                entries = tuple((str(d), float(s)) for d, s in obj["entries"])
                lists[obj["post_id"]] = RankedList(query_id=obj["post_id"], entries=entries, stage=stage)
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedRow(row_no, f"bad run record: {exc}") from None
    return Run(stage=stage, lists=lists)
