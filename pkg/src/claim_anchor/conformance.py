"""Conformance harness for external scoring endpoints.

Drives an endpoint with randomized well-formed requests plus deliberate
protocol abuse (malformed JSON, missing fields) and checks the responses:
matching ids, score lists aligned with candidate lists, finite numbers,
error frames that never kill the stream.
"""

from __future__ import annotations

import json
import random

from .errors import ClaimAnchorError, ProtocolError
from .rerank import DEFAULT_TIMEOUT_MS, ExternalScorer, ScoreRequest, encode_frame

_WORDS = (
    "covid", "vaccine", "antibody", "bile", "salts", "risk", "patients",
    "transmission", "récupération", "liver", "β-cell", "影響", "spike",
)


class ConformanceFailure(ClaimAnchorError):
    def __init__(self, detail: str):
        super().__init__(f"scorer endpoint failed conformance: {detail}")


def _random_text(rng: random.Random, max_words: int = 8) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randint(1, max_words)))


def random_request(rng: random.Random, request_no: int) -> ScoreRequest:
    n = rng.randint(1, 8)
    candidates = tuple((f"doc{request_no}_{j}", _random_text(rng)) for j in range(n))
    return ScoreRequest(
        id=f"conf-{request_no}-{rng.randrange(10**9)}",
        query=_random_text(rng),
        candidates=candidates,
    )


def _expect_error_frame(scorer: ExternalScorer, expected_id: str, what: str) -> None:
    line = scorer._transport.read_line(scorer.timeout_ms)
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ConformanceFailure(f"{what}: response is not JSON: {exc}") from exc
    if "error" not in obj or not str(obj.get("error", "")):
        raise ConformanceFailure(f"{what}: expected an error frame, got {obj!r}")
    if obj.get("id") != expected_id:
        raise ConformanceFailure(f"{what}: error frame id {obj.get('id')!r}, expected {expected_id!r}")


def check_scorer_endpoint(
    endpoint: str,
    n_requests: int = 100,
    seed: int = 0,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
    error_cases: bool = True,
) -> dict:
    """Run the conformance suite against `endpoint`; raises ConformanceFailure.

    Returns a summary dict on success so callers can log what was covered.
    """
    rng = random.Random(seed)
    checked = 0
    with ExternalScorer(endpoint, timeout_ms=timeout_ms) as scorer:
        for i in range(n_requests):
            req = random_request(rng, i)
            try:
                resp = scorer.score(req)  # validates id match, score count, NaN
            except ProtocolError as exc:
                raise ConformanceFailure(str(exc)) from exc
            if resp.id != req.id:
                raise ConformanceFailure(f"id mismatch: {resp.id!r} != {req.id!r}")
            checked += 1

        abuse = 0
        if error_cases:
            # Malformed JSON: the endpoint cannot know the id, must answer "unknown".
            scorer._transport.send_line('{"this is": not json')
            _expect_error_frame(scorer, "unknown", "malformed JSON line")
            abuse += 1

            # Well-formed JSON missing required fields: id is known, echo it back.
            scorer._transport.send_line(encode_frame({"id": "conf-missing-fields", "query": "q"}))
            _expect_error_frame(scorer, "conf-missing-fields", "frame without candidates")
            abuse += 1

            # The stream must survive both abuses.
            req = random_request(rng, n_requests)
            try:
                scorer.score(req)
            except ProtocolError as exc:
                raise ConformanceFailure(f"stream did not survive error frames: {exc}") from exc
            checked += 1

    return {"endpoint": endpoint, "requests_ok": checked, "error_cases_ok": abuse}
