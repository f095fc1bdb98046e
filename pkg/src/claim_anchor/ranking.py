"""Ranked candidate lists shared by the retrieval and rerank stages."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

STAGE_RETRIEVAL = "retrieval"
STAGE_RERANK = "rerank"


@dataclass(frozen=True)
class RankedList:
    """Ordered (doc_id, score) candidates for one query at one pipeline stage.

    Scores are non-increasing; ties are broken by doc_id ascending so ranks
    are deterministic across platforms. No doc_id appears twice.
    """

    query_id: str
    entries: tuple[tuple[str, float], ...]
    stage: str

    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def rank_entries(
    query_id: str,
    scored: Iterable[tuple[str, float]],
    stage: str,
    k: int | None = None,
) -> RankedList:
    """Sort scored candidates into a RankedList, enforcing its invariants."""
    entries = sorted(scored, key=lambda e: (-e[1], e[0]))
    if k is not None:
        entries = entries[:k]
    seen = set()
    for doc_id, _ in entries:
        if doc_id in seen:
            raise ValueError(f"duplicate doc_id in ranked list: {doc_id!r}")
        seen.add(doc_id)
    return RankedList(query_id=query_id, entries=tuple(entries), stage=stage)
