"""Request loop answering scoring/embedding frames, one response per request.

Frames are newline-delimited JSON, UTF-8, LF-terminated:

    rerank_scores: {"id", "query", "candidates": [{"doc_id", "text"}, ...]} -> {"id", "scores": [...]}
    embed:         {"id", "texts": [...]}                                   -> {"id", "vectors": [[...], ...]}

A bad request produces an error frame `{"id", "error"}` (id "unknown" when
the line is not even JSON) and never tears down the stream.
"""

from __future__ import annotations

import json
import socketserver
import sys

from .config import SidecarConfig
from .models import load_embedder, load_reranker


def _encode(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _error(frame_id, message: str) -> str:
    return _encode({"id": frame_id if isinstance(frame_id, str) and frame_id else "unknown", "error": message})


def _score_frame(backend, frame: dict) -> dict:
    query = frame["query"]
    candidates = frame["candidates"]
    if not isinstance(query, str):
        raise ValueError("'query' must be a string")
    if not isinstance(candidates, list) or not candidates:
        raise ValueError("'candidates' must be a non-empty list")
    texts = []
    for cand in candidates:
        if not isinstance(cand, dict) or "doc_id" not in cand or "text" not in cand:
            raise ValueError("each candidate needs 'doc_id' and 'text'")
        texts.append(str(cand["text"]))
    scores = backend.score_pairs(query, texts)
    if len(scores) != len(texts):
        raise RuntimeError(f"model produced {len(scores)} scores for {len(texts)} candidates")
    return {"id": frame["id"], "scores": scores}


def _embed_frame(backend, frame: dict) -> dict:
    texts = frame["texts"]
    if not isinstance(texts, list):
        raise ValueError("'texts' must be a list")
    vectors = backend.embed([str(t) for t in texts])
    dims = {len(v) for v in vectors}
    if len(vectors) != len(texts) or len(dims) > 1:
        raise RuntimeError("model produced mismatched vectors")
    return {"id": frame["id"], "vectors": vectors}


class FrameHandler:
    """Stateless per-line dispatch shared by the stdio and TCP transports."""

    def __init__(self, cfg: SidecarConfig):
        self.cfg = cfg
        self.backend = load_reranker(cfg) if cfg.mode == "rerank_scores" else load_embedder(cfg)

    def respond(self, raw_line: str) -> str | None:
        line = raw_line.strip()
        if not line:
            return None
        try:
            frame = json.loads(line)
        except json.JSONDecodeError:
            return _error("unknown", "request is not valid JSON")
        if not isinstance(frame, dict):
            return _error("unknown", "request frame must be a JSON object")
        frame_id = frame.get("id")
        if not isinstance(frame_id, str) or not frame_id:
            return _error(None, "request frame needs a string 'id'")
        try:
            if self.cfg.mode == "rerank_scores":
                if "query" not in frame or "candidates" not in frame:
                    raise ValueError("rerank frame needs 'query' and 'candidates'")
                return _encode(_score_frame(self.backend, frame))
            if "texts" not in frame:
                raise ValueError("embed frame needs 'texts'")
            return _encode(_embed_frame(self.backend, frame))
        except Exception as exc:  # one bad request must not kill the stream
            return _error(frame_id, f"{type(exc).__name__}: {exc}")


def serve_stdio(cfg: SidecarConfig) -> int:
    handler = FrameHandler(cfg)
    print(f"sidecar ready: model={cfg.model_id} mode={cfg.mode} transport=stdio", file=sys.stderr)
    for raw in sys.stdin:
        response = handler.respond(raw)
        if response is not None:
            sys.stdout.write(response + "\n")
            sys.stdout.flush()
    return 0


class _TcpHandler(socketserver.StreamRequestHandler):
    def handle(self):
        handler: FrameHandler = self.server.frame_handler  # type: ignore[attr-defined]
        for raw in self.rfile:
            response = handler.respond(raw.decode("utf-8"))
            if response is not None:
                self.wfile.write((response + "\n").encode("utf-8"))
                self.wfile.flush()


def build_tcp_server(cfg: SidecarConfig, host: str = "127.0.0.1", port: int = 0) -> socketserver.ThreadingTCPServer:
    """Bound-but-not-running server; callers drive serve_forever themselves."""
    server = socketserver.ThreadingTCPServer((host, port), _TcpHandler)
    server.daemon_threads = True
    server.frame_handler = FrameHandler(cfg)  # type: ignore[attr-defined]
    return server


def serve(cfg: SidecarConfig, transport: str = "stdio", host: str = "127.0.0.1", port: int = 0) -> int:
    if transport == "stdio":
        return serve_stdio(cfg)
    if transport != "tcp":
        raise ValueError(f"transport must be 'stdio' or 'tcp', got {transport!r}")
    server = build_tcp_server(cfg, host=host, port=port)
    bound_port = server.server_address[1]
    print(f"sidecar ready: model={cfg.model_id} mode={cfg.mode} transport=tcp port={bound_port}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0
