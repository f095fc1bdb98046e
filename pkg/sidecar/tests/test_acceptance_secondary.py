"""Secondary acceptance: protocol conformance of the sidecar, driven entirely
through the primary engine's external interfaces (wire protocol, CLI, file
formats)."""

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from claim_anchor.conformance import check_scorer_endpoint
from claim_anchor.corpus import save_corpus, save_queries
from claim_anchor.dense import load_embeddings
from claim_anchor.experiment import config_from_dict, run_experiment
from sidecar_helpers import sidecar_endpoint

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))
from synthetic import signature_corpus, signature_queries  # noqa: E402


def test_c9_echo_sidecar_passes_conformance_harness():
    summary = check_scorer_endpoint(sidecar_endpoint(), n_requests=100, seed=2025, timeout_ms=30_000)
    assert summary["requests_ok"] == 101
    assert summary["error_cases_ok"] == 2
    print("acceptance criterion 9: PASS (echo sidecar conformant over 100 randomized requests)")


def test_echo_sidecar_reranks_inside_full_experiment(tmp_path):
    from claim_anchor.corpus import Query, QuerySet

    # shared noise keeps every candidate list longer than one entry, so the
    # echo scorer's reversal actually moves the gold document
    save_corpus(signature_corpus(n_docs=15, noise="coronavirus research"), tmp_path / "corpus.csv")
    base = signature_queries(n_docs=15)
    noisy = QuerySet(
        queries=tuple(
            Query(q.post_id, q.tweet_text + " coronavirus research", q.gold_cord_uid) for q in base.queries
        ),
        labeled=True,
    )
    save_queries(noisy, tmp_path / "queries.tsv")
    config = {
        "corpus": str(tmp_path / "corpus.csv"),
        "queries": str(tmp_path / "queries.tsv"),
        "output_dir": str(tmp_path / "out"),
        "retrieval_k": 10,
        "figures": False,
        "rerank": {"scorer": "external", "endpoint": sidecar_endpoint(), "name": "sidecar-echo"},
    }
    report = run_experiment(config_from_dict(config))
    assert report.mrr_after_retrieval == 1.0
    # echo scores are candidate indices, so reranking reverses each list
    assert report.mrr_after_rerank is not None
    assert report.mrr_after_rerank < report.mrr_after_retrieval
    assert (tmp_path / "out" / "predictions_rerank.tsv").exists()


def test_sidecar_embeddings_drive_dense_retrieval_end_to_end(tmp_path):
    corpus = signature_corpus(n_docs=10)
    queries = signature_queries(n_docs=10, n_terms=5)  # query text == gold title
    save_corpus(corpus, tmp_path / "corpus.csv")
    save_queries(queries, tmp_path / "queries.tsv")

    doc_texts = tmp_path / "doc_texts.tsv"
    doc_texts.write_text(
        "id\ttext\n" + "".join(f"{d.cord_uid}\t{d.title}\n" for d in corpus.docs), encoding="utf-8"
    )
    query_texts = tmp_path / "query_texts.tsv"
    query_texts.write_text(
        "id\ttext\n" + "".join(f"{q.post_id}\t{q.tweet_text}\n" for q in queries.queries), encoding="utf-8"
    )

    for src, dst in ((doc_texts, "docs.emb"), (query_texts, "queries.emb")):
        result = subprocess.run(
            [sys.executable, "-m", "claim_anchor_sidecar", "dump-embeddings",
             "--model", "echo", "--input", str(src), "--output", str(tmp_path / dst), "--dim", "24"],
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert result.returncode == 0, result.stderr

    assert load_embeddings(tmp_path / "docs.emb").dim == 24
    config = {
        "corpus": str(tmp_path / "corpus.csv"),
        "queries": str(tmp_path / "queries.tsv"),
        "output_dir": str(tmp_path / "out"),
        "retrieval": "dense",
        "retrieval_k": 10,
        "figures": False,
        "dense": {
            "doc_embeddings": str(tmp_path / "docs.emb"),
            "query_embeddings": str(tmp_path / "queries.emb"),
        },
    }
    report = run_experiment(config_from_dict(config))
    # identical text hashes to the identical vector, so gold ranks first
    assert report.mrr_after_retrieval == 1.0


def test_c10_real_cross_encoder_band():
    if not os.environ.get("CLAIM_ANCHOR_MODELS_OK"):
        pytest.skip(
            "criterion 10 needs downloadable rerank models and the CLEF dev set; "
            "set CLAIM_ANCHOR_MODELS_OK=1 with data under data/clef to run it"
        )
    clef_dir = Path(os.environ.get("CLAIM_ANCHOR_CLEF_DIR", Path(__file__).parents[2] / "data" / "clef"))
    papers = next((p for p in (clef_dir / "papers.csv", clef_dir / "papers.tsv") if p.exists()), None)
    dev = next((p for p in (clef_dir / "dev.csv", clef_dir / "dev.tsv") if p.exists()), None)
    if papers is None or dev is None:
        pytest.skip(f"CLEF dev data not found under {clef_dir}")

    endpoint = (
        f"{sys.executable} -m claim_anchor_sidecar serve "
        f"--model cross-encoder/ms-marco-MiniLM-L-6-v2 --mode rerank_scores"
    )
    config = {
        "corpus": str(papers),
        "queries": str(dev),
        "output_dir": str(clef_dir / "out_c10"),
        "retrieval_k": 100,
        "figures": False,
        "rerank": {"scorer": "external", "endpoint": endpoint, "timeout_ms": 600_000},
    }
    report = run_experiment(config_from_dict(config))
    assert 0.6474 - 0.05 <= report.mrr_after_rerank <= 0.6474 + 0.05
    print(f"acceptance criterion 10: PASS (cross-encoder rerank MRR@5 = {report.mrr_after_rerank:.4f})")
