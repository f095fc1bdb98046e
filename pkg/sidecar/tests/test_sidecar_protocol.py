import json
import socket
import threading

import pytest

from claim_anchor_sidecar.config import SidecarConfig
from claim_anchor_sidecar.server import FrameHandler, build_tcp_server


def respond(handler, frame) -> dict:
    raw = frame if isinstance(frame, str) else json.dumps(frame)
    return json.loads(handler.respond(raw))


@pytest.fixture
def rerank_handler():
    return FrameHandler(SidecarConfig(model_id="echo", mode="rerank_scores"))


@pytest.fixture
def embed_handler():
    return FrameHandler(SidecarConfig(model_id="echo", mode="embed", echo_dim=8))


class TestRerankFrames:
    def test_echo_scores_are_candidate_indices(self, rerank_handler):
        out = respond(
            rerank_handler,
            {"id": "r1", "query": "q", "candidates": [{"doc_id": "a", "text": "x"}, {"doc_id": "b", "text": "y"}]},
        )
        assert out == {"id": "r1", "scores": [0.0, 1.0]}

    def test_malformed_json_answers_unknown(self, rerank_handler):
        out = respond(rerank_handler, '{"broken": ')
        assert out["id"] == "unknown"
        assert out["error"]

    def test_missing_fields_echo_the_id(self, rerank_handler):
        out = respond(rerank_handler, {"id": "r2", "query": "only a query"})
        assert out["id"] == "r2"
        assert "candidates" in out["error"]

    def test_missing_id_answers_unknown(self, rerank_handler):
        out = respond(rerank_handler, {"query": "q", "candidates": [{"doc_id": "a", "text": "x"}]})
        assert out["id"] == "unknown"

    def test_empty_candidates_is_an_error_frame(self, rerank_handler):
        out = respond(rerank_handler, {"id": "r3", "query": "q", "candidates": []})
        assert out["id"] == "r3" and "error" in out

    def test_blank_line_ignored(self, rerank_handler):
        assert rerank_handler.respond("   \n") is None

    def test_stream_survives_bad_requests(self, rerank_handler):
        respond(rerank_handler, "garbage")
        respond(rerank_handler, {"id": "x"})
        out = respond(
            rerank_handler, {"id": "r4", "query": "q", "candidates": [{"doc_id": "a", "text": "t"}]}
        )
        assert out == {"id": "r4", "scores": [0.0]}

    def test_unicode_round_trip(self, rerank_handler):
        out = respond(
            rerank_handler,
            {"id": "ré-1", "query": "β-cell 影響", "candidates": [{"doc_id": "d", "text": "récupération"}]},
        )
        assert out["id"] == "ré-1"
        assert out["scores"] == [0.0]


class TestEmbedFrames:
    def test_three_texts_three_vectors_same_dim(self, embed_handler):
        out = respond(embed_handler, {"id": "e1", "texts": ["a", "b", "c"]})
        assert out["id"] == "e1"
        assert len(out["vectors"]) == 3
        assert {len(v) for v in out["vectors"]} == {8}

    def test_embedding_is_deterministic_per_text(self, embed_handler):
        first = respond(embed_handler, {"id": "e1", "texts": ["same text"]})
        second = respond(embed_handler, {"id": "e2", "texts": ["same text"]})
        assert first["vectors"] == second["vectors"]

    def test_rerank_frame_in_embed_mode_is_error(self, embed_handler):
        out = respond(embed_handler, {"id": "e3", "query": "q", "candidates": []})
        assert out["id"] == "e3" and "texts" in out["error"]

    def test_empty_texts_allowed(self, embed_handler):
        out = respond(embed_handler, {"id": "e4", "texts": []})
        assert out == {"id": "e4", "vectors": []}


class TestTcpTransport:
    def test_scores_over_tcp(self):
        server = build_tcp_server(SidecarConfig(model_id="echo", mode="rerank_scores"))
        port = server.server_address[1]
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            with socket.create_connection(("127.0.0.1", port), timeout=10) as sock:
                reader = sock.makefile("rb")
                for i in range(3):
                    frame = {"id": f"t{i}", "query": "q", "candidates": [{"doc_id": "a", "text": "x"}] * 1}
                    frame["candidates"] = [{"doc_id": f"d{j}", "text": "x"} for j in range(i + 1)]
                    sock.sendall((json.dumps(frame) + "\n").encode("utf-8"))
                    out = json.loads(reader.readline())
                    assert out["id"] == f"t{i}"
                    assert out["scores"] == [float(j) for j in range(i + 1)]
        finally:
            server.shutdown()
            server.server_close()


def test_config_validation():
    with pytest.raises(ValueError):
        SidecarConfig(mode="classify")
    with pytest.raises(ValueError):
        SidecarConfig(max_batch=0)
