"""Query-text augmentation from externally generated rewrite tables.

Rewrites (formal rewrite, formal English rewrite, keyword list) are
produced offline by any generator and ingested from TSV files keyed by
post_id. A missing rewrite for a requested mode is a hard error; queries
are never silently passed through unaugmented.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import Query, QuerySet
from .errors import DuplicateId, MalformedRow, MissingColumn, MissingRewrite, NotUtf8, ValidationError

REWRITE_KINDS = ("formal", "english_formal", "keywords")

MODE_NONE = "none"
ALL_MODES = (
    MODE_NONE,
    "replace_formal",
    "replace_english_formal",
    "concat_formal",
    "concat_english_formal",
    "concat_all",
    "replace_keywords",
)

# Rewrite kinds each mode needs an entry for.
MODE_REQUIRES = {
    MODE_NONE: (),
    "replace_formal": ("formal",),
    "replace_english_formal": ("english_formal",),
    "concat_formal": ("formal",),
    "concat_english_formal": ("english_formal",),
    "concat_all": ("english_formal", "formal"),
    "replace_keywords": ("keywords",),
}

# Prompts used to generate each rewrite kind, for operators regenerating tables.
GENERATION_PROMPTS = {
    "formal": "Rewrite the input using formal language",
    "english_formal": "Rewrite the input using formal English language",
    "keywords": "Return a list of only science-related keywords in the tweet",
}


@dataclass(frozen=True)
class RewriteTable:
    kind: str
    entries: dict[str, str]

    def __post_init__(self):
        if self.kind not in REWRITE_KINDS:
            raise ValidationError(f"unknown rewrite kind {self.kind!r}; expected one of {REWRITE_KINDS}")
        for post_id, text in self.entries.items():
            if not text:
                raise ValidationError(f"empty rewrite for post_id {post_id!r}")


def load_rewrites(path: str | Path, kind: str) -> RewriteTable:
    """Load a rewrite table: TSV with header `post_id<TAB>text`."""
    try:
        with open(path, encoding="utf-8") as f:
            lines = [line.rstrip("\r\n") for line in f]
    except UnicodeDecodeError as exc:
        raise NotUtf8(str(path)) from exc
    if not lines or not lines[0]:
        raise MalformedRow(0, "rewrite file has no header row")
    header = lines[0].split("\t")
    for col in ("post_id", "text"):
        if col not in header:
            raise MissingColumn(col)
    id_col, text_col = header.index("post_id"), header.index("text")

    entries: dict[str, str] = {}
    for row_no, line in enumerate(lines[1:], start=1):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != len(header):
            raise MalformedRow(row_no, f"expected {len(header)} fields, got {len(fields)}")
        post_id = fields[id_col].strip()
        if not post_id:
            raise MalformedRow(row_no, "empty post_id")
        if post_id in entries:
            raise DuplicateId(post_id, row_no)
        text = fields[text_col]
        if not text:
            raise MalformedRow(row_no, "empty rewrite text")
        entries[post_id] = text
    return RewriteTable(kind=kind, entries=entries)


def _as_mapping(tables) -> Mapping[str, RewriteTable]:
    if isinstance(tables, Mapping):
        return tables
    return {t.kind: t for t in tables}


def _rewrite(tables: Mapping[str, RewriteTable], kind: str, post_id: str) -> str:
    table = tables.get(kind)
    if table is None or post_id not in table.entries:
        raise MissingRewrite(post_id, kind)
    return table.entries[post_id]


def augment_query(q: Query, mode: str, tables: Mapping[str, RewriteTable] | Iterable[RewriteTable]) -> str:
    """Augmented query text for one tweet. Pure; concat separator is one space.

    concat_all order is: original, English-formal rewrite, formal rewrite.
    """
    if mode not in ALL_MODES:
        raise ValidationError(f"unknown augment mode {mode!r}; expected one of {ALL_MODES}")
    if mode == MODE_NONE:
        return q.tweet_text
    tables = _as_mapping(tables)
    if mode == "replace_formal":
        return _rewrite(tables, "formal", q.post_id)
    if mode == "replace_english_formal":
        return _rewrite(tables, "english_formal", q.post_id)
    if mode == "replace_keywords":
        return _rewrite(tables, "keywords", q.post_id)
    if mode == "concat_formal":
        return q.tweet_text + " " + _rewrite(tables, "formal", q.post_id)
    if mode == "concat_english_formal":
        return q.tweet_text + " " + _rewrite(tables, "english_formal", q.post_id)
    # concat_all
    return (
        q.tweet_text
        + " "
        + _rewrite(tables, "english_formal", q.post_id)
        + " "
        + _rewrite(tables, "formal", q.post_id)
    )


def augment_queryset(
    queries: QuerySet,
    mode: str,
    tables: Mapping[str, RewriteTable] | Iterable[RewriteTable],
) -> QuerySet:
    """Apply augment_query to every tweet, keeping ids and gold labels."""
    augmented = tuple(
        Query(post_id=q.post_id, tweet_text=augment_query(q, mode, tables), gold_cord_uid=q.gold_cord_uid)
        for q in queries.queries
    )
    return QuerySet(queries=augmented, labeled=queries.labeled)
