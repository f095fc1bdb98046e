"""Second-stage reordering of retrieval candidates via pluggable scorers.

Built-in scorers (identity, lexical_overlap) keep the pipeline testable
without any model. External scorers speak newline-delimited JSON over a
subprocess's stdin/stdout or a TCP stream:

    request:  {"id": str, "query": str, "candidates": [{"doc_id": str, "text": str}, ...]}
    response: {"id": str, "scores": [number, ...]}  or  {"id": str, "error": str}

One line per frame, LF-terminated, UTF-8, one response per request in
request order. Failure policy is fail-fast: a broken scorer aborts the
run instead of silently falling back to retrieval order.
"""

from __future__ import annotations

import json
import math
import os
import select
import shlex
import socket
import subprocess
import time
from dataclasses import dataclass

from .corpus import Corpus, Query, document_text
from .errors import (
    ProtocolError,
    RemoteError,
    ScorerFailure,
    ScorerTimeout,
    UnknownDocId,
    ValidationError,
)
from .ranking import STAGE_RERANK, RankedList, rank_entries
from .textprep import PreprocessConfig, preprocess

SCORER_KINDS = ("identity", "lexical_overlap", "external")
DEFAULT_TIMEOUT_MS = 30_000


@dataclass(frozen=True)
class Scorer:
    """Scorer spec: which scoring backend to use and how to reach it."""

    kind: str
    endpoint: str | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in SCORER_KINDS:
            raise ValidationError(f"unknown scorer kind {self.kind!r}; expected one of {SCORER_KINDS}")
        if self.kind == "external" and not self.endpoint:
            raise ValidationError("external scorer requires an endpoint")
        if not self.name:
            object.__setattr__(self, "name", self.kind)


@dataclass(frozen=True)
class ScoreRequest:
    id: str
    query: str
    candidates: tuple[tuple[str, str], ...]  # (doc_id, text) in rank order

    def __post_init__(self):
        if not self.candidates:
            raise ValidationError("score request needs at least one candidate")
        ids = [doc_id for doc_id, _ in self.candidates]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate doc_id in score request")


@dataclass(frozen=True)
class ScoreResponse:
    id: str
    scores: tuple[float, ...]


def lexical_overlap_score(query_tokens: list[str], doc_tokens: list[str]) -> float:
    """Fraction of unique query tokens that appear in the document, in [0, 1]."""
    unique_query = set(query_tokens)
    overlap = len(unique_query & set(doc_tokens))
    return overlap / max(1, len(unique_query))


class LexicalOverlapScorer:
    """Deterministic built-in baseline; needs no model or network."""

    name = "lexical_overlap"

    def __init__(self, cfg: PreprocessConfig | None = None):
        self.cfg = cfg if cfg is not None else PreprocessConfig()

    def score_candidates(self, request_id: str, query_text: str, candidates) -> list[float]:
        query_tokens = preprocess(query_text, self.cfg)
        return [lexical_overlap_score(query_tokens, preprocess(text, self.cfg)) for _, text in candidates]

    def close(self):
        pass


def encode_frame(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def parse_endpoint(descriptor: str):
    """`tcp:HOST:PORT` connects a socket; anything else is a command line to spawn."""
    if descriptor.startswith("tcp:"):
        rest = descriptor[len("tcp:"):]
        host, sep, port = rest.rpartition(":")
        if not sep or not host:
            raise ValidationError(f"bad tcp endpoint {descriptor!r}; expected tcp:HOST:PORT")
        try:
            return ("tcp", host, int(port))
        except ValueError:
            raise ValidationError(f"bad tcp port in {descriptor!r}") from None
    argv = shlex.split(descriptor)
    if not argv:
        raise ValidationError("empty scorer endpoint")
    return ("cmd", argv)


class _StdioTransport:
    def __init__(self, argv: list[str]):
        try:
            # stderr inherited: scorer diagnostics stay visible to the operator
            self.proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        except OSError as exc:
            raise ProtocolError(f"cannot start scorer process {argv!r}: {exc}") from exc
        self._buf = b""

    def send_line(self, line: str) -> None:
        try:
            self.proc.stdin.write(line.encode("utf-8") + b"\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"scorer process closed its input: {exc}") from exc

    def read_line(self, timeout_ms: int) -> str:
        deadline = time.monotonic() + timeout_ms / 1000.0
        fd = self.proc.stdout.fileno()
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ScorerTimeout(timeout_ms)
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                raise ScorerTimeout(timeout_ms)
            chunk = os.read(fd, 65536)
            if not chunk:
                raise ProtocolError("scorer process closed its output before responding")
            self._buf += chunk
        line, _, self._buf = self._buf.partition(b"\n")
        return line.decode("utf-8")

    def close(self) -> None:
        try:
            if self.proc.stdin:
                self.proc.stdin.close()
            self.proc.wait(timeout=5)
        except Exception:
            self.proc.kill()
            self.proc.wait()


class _TcpTransport:
    def __init__(self, host: str, port: int, timeout_ms: int):
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout_ms / 1000.0)
        except OSError as exc:
            raise ProtocolError(f"cannot connect to scorer at {host}:{port}: {exc}") from exc
        self._buf = b""

    def send_line(self, line: str) -> None:
        try:
            self.sock.sendall(line.encode("utf-8") + b"\n")
        except OSError as exc:
            raise ProtocolError(f"scorer connection closed: {exc}") from exc

    def read_line(self, timeout_ms: int) -> str:
        deadline = time.monotonic() + timeout_ms / 1000.0
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ScorerTimeout(timeout_ms)
            self.sock.settimeout(remaining)
            try:
                chunk = self.sock.recv(65536)
            except socket.timeout:
                raise ScorerTimeout(timeout_ms) from None
            except OSError as exc:
                raise ProtocolError(f"scorer connection error: {exc}") from exc
            if not chunk:
                raise ProtocolError("scorer closed the connection before responding")
            self._buf += chunk
        line, _, self._buf = self._buf.partition(b"\n")
        return line.decode("utf-8")

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class ExternalScorer:
    """Client for one external scoring connection; one request in flight at a time."""

    def __init__(self, endpoint: str, timeout_ms: int = DEFAULT_TIMEOUT_MS, name: str = "external"):
        self.endpoint = endpoint
        self.timeout_ms = timeout_ms
        self.name = name
        parsed = parse_endpoint(endpoint)
        if parsed[0] == "tcp":
            self._transport = _TcpTransport(parsed[1], parsed[2], timeout_ms)
        else:
            self._transport = _StdioTransport(parsed[1])

    def score(self, req: ScoreRequest) -> ScoreResponse:
        frame = {
            "id": req.id,
            "query": req.query,
            "candidates": [{"doc_id": doc_id, "text": text} for doc_id, text in req.candidates],
        }
        self._transport.send_line(encode_frame(frame))
        line = self._transport.read_line(self.timeout_ms)
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"response is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ProtocolError(f"response frame must be a JSON object, got {type(obj).__name__}")
        if "error" in obj:
            raise RemoteError(str(obj["error"]))
        if obj.get("id") != req.id:
            raise ProtocolError(f"response id {obj.get('id')!r} does not match request id {req.id!r}")
        scores = obj.get("scores")
        if not isinstance(scores, list):
            raise ProtocolError("response frame has no 'scores' list")
        if len(scores) != len(req.candidates):
            raise ProtocolError(f"got {len(scores)} scores for {len(req.candidates)} candidates")
        values = []
        for s in scores:
            if not isinstance(s, (int, float)) or isinstance(s, bool) or math.isnan(float(s)):
                raise ProtocolError(f"non-numeric or NaN score in response: {s!r}")
            values.append(float(s))
        return ScoreResponse(id=req.id, scores=tuple(values))

    def score_candidates(self, request_id: str, query_text: str, candidates) -> list[float]:
        resp = self.score(ScoreRequest(id=request_id, query=query_text, candidates=tuple(candidates)))
        return list(resp.scores)

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def score_external(endpoint: str, req: ScoreRequest, timeout_ms: int = DEFAULT_TIMEOUT_MS) -> ScoreResponse:
    """One-shot scoring over a fresh connection; see ExternalScorer for reuse."""
    with ExternalScorer(endpoint, timeout_ms=timeout_ms) as scorer:
        return scorer.score(req)


def resolve_scorer(scorer, cfg: PreprocessConfig | None = None, timeout_ms: int = DEFAULT_TIMEOUT_MS):
    """Turn a Scorer spec into a live scoring object; pass through duck-typed scorers."""
    if hasattr(scorer, "score_candidates"):
        return scorer
    if not isinstance(scorer, Scorer):
        raise ValidationError(f"not a scorer: {scorer!r}")
    if scorer.kind == "lexical_overlap":
        return LexicalOverlapScorer(cfg)
    if scorer.kind == "external":
        return ExternalScorer(scorer.endpoint, timeout_ms=timeout_ms, name=scorer.name)
    raise ValidationError(f"scorer kind {scorer.kind!r} has no live backend")


def rerank(
    query: Query,
    candidates: RankedList,
    corpus: Corpus,
    scorer,
    cfg: PreprocessConfig | None = None,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
) -> RankedList:
    """Reorder candidates by scorer scores; output is a permutation of the input.

    `scorer` is a Scorer spec or any object with score_candidates(). The
    query text sent to the scorer is query.tweet_text (augmented upstream if
    augmentation is configured); candidate text is title + abstract.
    """
    for doc_id in candidates.doc_ids():
        if doc_id not in corpus:
            raise UnknownDocId(doc_id)

    if isinstance(scorer, Scorer) and scorer.kind == "identity":
        return RankedList(query_id=candidates.query_id, entries=candidates.entries, stage=STAGE_RERANK)
    if not candidates.entries:
        return RankedList(query_id=candidates.query_id, entries=(), stage=STAGE_RERANK)

    resolved = resolve_scorer(scorer, cfg, timeout_ms)
    transient = resolved is not scorer
    texts = [(doc_id, document_text(corpus[doc_id])) for doc_id in candidates.doc_ids()]
    try:
        scores = resolved.score_candidates(query.post_id, query.tweet_text, texts)
    except (ProtocolError, RemoteError, ScorerTimeout, OSError) as exc:
        raise ScorerFailure(str(exc)) from exc
    finally:
        if transient:
            resolved.close()

    if len(scores) != len(texts):
        raise ScorerFailure(f"scorer returned {len(scores)} scores for {len(texts)} candidates")
    cleaned = []
    for s in scores:
        if not isinstance(s, (int, float)) or isinstance(s, bool) or math.isnan(float(s)):
            raise ScorerFailure(f"scorer returned non-numeric or NaN score: {s!r}")
        cleaned.append(float(s))
    scored = zip((doc_id for doc_id, _ in texts), cleaned)
    return rank_entries(candidates.query_id, scored, STAGE_RERANK)
