"""Loading and validation of the paper collection and tweet query sets.

Canonical on-disk formats are UTF-8 CSV (RFC-4180 quoting) and TSV with a
mandatory header row. Tabs, carriage returns, and newlines inside text
fields are collapsed to single spaces at ingestion so every loaded value
survives a TSV round trip.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DuplicateId, MalformedRow, MissingColumn, NotUtf8, ValidationError

_CONTROL_WS = re.compile(r"[\t\r\n]+")

CORPUS_COLUMNS = ("cord_uid", "title", "abstract")
QUERY_COLUMNS = ("post_id", "tweet_text")
GOLD_COLUMN = "cord_uid"


@dataclass(frozen=True)
class Document:
    """One collection paper. Extra source columns ride along in `extra`."""

    cord_uid: str
    title: str
    abstract: str = ""
    extra: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Query:
    post_id: str
    tweet_text: str
    gold_cord_uid: str | None = None


@dataclass(frozen=True)
class Corpus:
    docs: tuple[Document, ...]
    by_id: dict[str, int]

    def __len__(self) -> int:
        return len(self.docs)

    def __getitem__(self, cord_uid: str) -> Document:
        return self.docs[self.by_id[cord_uid]]

    def __contains__(self, cord_uid: str) -> bool:
        return cord_uid in self.by_id


@dataclass(frozen=True)
class QuerySet:
    queries: tuple[Query, ...]
    labeled: bool

    def __post_init__(self):
        if self.labeled and any(not q.gold_cord_uid for q in self.queries):
            raise ValidationError("labeled query set has queries without a gold cord_uid")

    def __len__(self) -> int:
        return len(self.queries)

    def gold(self) -> dict[str, str]:
        """post_id -> gold cord_uid; only meaningful for labeled sets."""
        return {q.post_id: q.gold_cord_uid for q in self.queries if q.gold_cord_uid}


def document_text(doc: Document) -> str:
    """Searchable text of a document: title and abstract joined by one space."""
    return " ".join(part for part in (doc.title, doc.abstract) if part)


def make_corpus(docs: list[Document]) -> Corpus:
    by_id: dict[str, int] = {}
    for row, doc in enumerate(docs, start=1):
        if not doc.cord_uid:
            raise MalformedRow(row, "empty cord_uid")
        if doc.cord_uid in by_id:
            raise DuplicateId(doc.cord_uid, row)
        by_id[doc.cord_uid] = row - 1
    return Corpus(docs=tuple(docs), by_id=by_id)


def _clean(value: str) -> str:
    return _CONTROL_WS.sub(" ", value)


def _sniff_format(path: str | Path, format: str | None) -> str:
    if format is not None:
        if format not in ("csv", "tsv"):
            raise ValidationError(f"unsupported format {format!r}; expected 'csv' or 'tsv'")
        return format
    suffix = Path(path).suffix.lower()
    return "tsv" if suffix == ".tsv" else "csv"


def _read_rows(path: str | Path, format: str) -> list[list[str]]:
    try:
        # newline="" lets the csv module handle CRLF vs LF itself
        with open(path, encoding="utf-8", newline="") as f:
            if format == "csv":
                return [list(row) for row in csv.reader(f)]
            return [line.rstrip("\r\n").split("\t") for line in f if line.rstrip("\r\n")]
    except UnicodeDecodeError as exc:
        raise NotUtf8(str(path)) from exc


def _header_index(header: list[str], required: tuple[str, ...]) -> dict[str, int]:
    index = {name.strip(): i for i, name in enumerate(header)}
    for name in required:
        if name not in index:
            raise MissingColumn(name)
    return index


def load_corpus(path: str | Path, format: str | None = None) -> Corpus:
    """Load the paper collection from a CSV or TSV file.

    Requires cord_uid, title, abstract columns; other columns are kept on
    Document.extra but ignored by retrieval. Missing abstract becomes "".
    """
    format = _sniff_format(path, format)
    rows = _read_rows(path, format)
    if not rows:
        raise MalformedRow(0, "file has no header row")
    header = rows[0]
    index = _header_index(header, CORPUS_COLUMNS)
    extra_cols = [(name.strip(), i) for i, name in enumerate(header) if name.strip() not in CORPUS_COLUMNS]

    docs: list[Document] = []
    for row_no, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise MalformedRow(row_no, f"expected {len(header)} fields, got {len(row)}")
        extra = {name: _clean(row[i]) for name, i in extra_cols}
        docs.append(
            Document(
                cord_uid=_clean(row[index["cord_uid"]]).strip(),
                title=_clean(row[index["title"]]),
                abstract=_clean(row[index["abstract"]]),
                extra=extra,
            )
        )
    return make_corpus(docs)


def load_queries(path: str | Path, format: str | None = None, labeled: bool = True) -> QuerySet:
    """Load tweets from a CSV or TSV file.

    With labeled=True the cord_uid column is required and must be non-empty
    on every row; with labeled=False any cord_uid column is ignored.
    """
    format = _sniff_format(path, format)
    rows = _read_rows(path, format)
    if not rows:
        raise MalformedRow(0, "file has no header row")
    header = rows[0]
    index = _header_index(header, QUERY_COLUMNS + ((GOLD_COLUMN,) if labeled else ()))

    queries: list[Query] = []
    seen: set[str] = set()
    for row_no, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise MalformedRow(row_no, f"expected {len(header)} fields, got {len(row)}")
        post_id = _clean(row[index["post_id"]]).strip()
        if not post_id:
            raise MalformedRow(row_no, "empty post_id")
        if post_id in seen:
            raise DuplicateId(post_id, row_no)
        seen.add(post_id)
        gold = None
        if labeled:
            gold = _clean(row[index[GOLD_COLUMN]]).strip()
            if not gold:
                raise MalformedRow(row_no, "empty cord_uid in labeled file")
        queries.append(Query(post_id=post_id, tweet_text=_clean(row[index["tweet_text"]]), gold_cord_uid=gold))
    return QuerySet(queries=tuple(queries), labeled=labeled)


def _write_rows(path: str | Path, format: str, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        if format == "csv":
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        else:
            f.write("\t".join(header) + "\n")
            for row in rows:
                f.write("\t".join(row) + "\n")


def save_corpus(corpus: Corpus, path: str | Path, format: str | None = None) -> None:
    format = _sniff_format(path, format)
    rows = [[d.cord_uid, d.title, d.abstract] for d in corpus.docs]
    _write_rows(path, format, list(CORPUS_COLUMNS), rows)


def save_queries(queries: QuerySet, path: str | Path, format: str | None = None) -> None:
    format = _sniff_format(path, format)
    header = list(QUERY_COLUMNS) + ([GOLD_COLUMN] if queries.labeled else [])
    rows = []
    for q in queries.queries:
        row = [q.post_id, q.tweet_text]
        if queries.labeled:
            row.append(q.gold_cord_uid or "")
        rows.append(row)
    _write_rows(path, format, header, rows)
