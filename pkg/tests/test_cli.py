import json
import subprocess
import sys

import pytest

from claim_anchor.cli import cli
from claim_anchor.corpus import save_corpus, save_queries
from conftest import stub_endpoint
from synthetic import signature_corpus, signature_queries


@pytest.fixture
def dataset(tmp_path):
    save_corpus(signature_corpus(n_docs=10), tmp_path / "corpus.csv")
    save_queries(signature_queries(n_docs=10), tmp_path / "queries.tsv")
    return tmp_path


def test_unknown_subcommand_exits_1_with_synopsis(capsys):
    assert cli(["frobnicate"]) == 1
    err = capsys.readouterr().err
    assert "usage:" in err


def test_no_subcommand_exits_1(capsys):
    assert cli([]) == 1
    assert "usage:" in capsys.readouterr().err


def test_missing_required_flag_exits_1(capsys):
    assert cli(["index", "--corpus", "x.csv"]) == 1  # no --output
    assert "usage:" in capsys.readouterr().err


def test_missing_input_file_exits_1(tmp_path, capsys):
    assert cli(["index", "--corpus", str(tmp_path / "nope.csv"), "--output", str(tmp_path / "i.json")]) == 1
    assert "error:" in capsys.readouterr().err


def test_index_retrieve_rerank_evaluate_chain(dataset, capsys):
    corpus = str(dataset / "corpus.csv")
    queries = str(dataset / "queries.tsv")
    index = str(dataset / "index.json.gz")
    run = str(dataset / "run.jsonl")
    run2 = str(dataset / "run2.jsonl")
    preds = str(dataset / "preds.tsv")

    assert cli(["index", "--corpus", corpus, "--output", index]) == 0
    assert cli(["retrieve", "--index", index, "--queries", queries, "--k", "10", "--run", run]) == 0
    assert (
        cli(
            ["rerank", "--run", run, "--corpus", corpus, "--queries", queries,
             "--scorer", "lexical_overlap", "--run-out", run2, "--predictions", preds]
        )
        == 0
    )
    capsys.readouterr()
    assert cli(["evaluate", "--run", preds, "--gold", queries, "--k", "5"]) == 0
    out = capsys.readouterr().out.strip()
    assert out.startswith("mrr@5=")
    assert float(out.split("=", 1)[1]) == 1.0


def test_evaluate_accepts_run_jsonl(dataset, capsys):
    corpus = str(dataset / "corpus.csv")
    queries = str(dataset / "queries.tsv")
    run = str(dataset / "run.jsonl")
    assert cli(["retrieve", "--corpus", corpus, "--queries", queries, "--run", run]) == 0
    capsys.readouterr()
    assert cli(["evaluate", "--run", run, "--gold", queries, "--k", "5"]) == 0
    assert capsys.readouterr().out.startswith("mrr@5=")


def test_retrieve_needs_exactly_one_source(dataset, capsys):
    queries = str(dataset / "queries.tsv")
    assert cli(["retrieve", "--queries", queries, "--run", str(dataset / "r.jsonl")]) == 1
    assert (
        cli(
            ["retrieve", "--corpus", str(dataset / "corpus.csv"), "--index", "i.json",
             "--queries", queries, "--run", str(dataset / "r.jsonl")]
        )
        == 1
    )


def test_experiment_command(dataset, capsys):
    config = {
        "corpus": "corpus.csv",
        "queries": "queries.tsv",
        "output_dir": "out",
        "retrieval_k": 10,
        "figures": False,
        "rerank": {"scorer": "identity"},
    }
    config_path = dataset / "exp.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    assert cli(["experiment", "--config", str(config_path)]) == 0
    err = capsys.readouterr().err
    assert "mrr_after_retrieval=1.0" in err
    assert (dataset / "out" / "report.json").exists()
    assert (dataset / "out" / "predictions_rerank.tsv").exists()


def test_experiment_flag_overrides(dataset):
    config = {
        "corpus": "corpus.csv",
        "queries": "queries.tsv",
        "output_dir": "out",
        "retrieval_k": 10,
        "figures": False,
    }
    config_path = dataset / "exp.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    out2 = dataset / "elsewhere"
    assert cli(["experiment", "--config", str(config_path), "--output-dir", str(out2), "--scorer", "lexical_overlap"]) == 0
    report = json.loads((out2 / "report.json").read_text("utf-8"))
    assert report["config"]["rerank"]["scorer"] == "lexical_overlap"
    assert report["mrr_after_rerank"] is not None


def test_experiment_stage_error_exits_2(dataset, capsys):
    config = {
        "corpus": "corpus.csv",
        "queries": "queries.tsv",
        "output_dir": "out",
        "retrieval_k": 10,
        "figures": False,
        "rerank": {"scorer": "external", "endpoint": stub_endpoint("error")},
    }
    config_path = dataset / "exp.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    assert cli(["experiment", "--config", str(config_path)]) == 2
    assert "[rerank]" in capsys.readouterr().err


def test_experiment_bad_config_exits_1(dataset, capsys):
    config_path = dataset / "exp.json"
    config_path.write_text(json.dumps({"corpus": "corpus.csv"}), encoding="utf-8")
    assert cli(["experiment", "--config", str(config_path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_augment_command_writes_tsv(dataset, capsys):
    rewrites = dataset / "formal.tsv"
    lines = ["post_id\ttext"] + [f"q{i:03d}\textra words" for i in range(10)]
    rewrites.write_text("\n".join(lines) + "\n", encoding="utf-8")
    out = dataset / "augmented.tsv"
    assert (
        cli(
            ["augment", "--queries", str(dataset / "queries.tsv"), "--mode".replace("--mode", "--augment-mode"),
             "concat_formal", "--formal", str(rewrites), "--output", str(out)]
        )
        == 0
    )
    body = out.read_text("utf-8")
    assert body.splitlines()[0] == "post_id\ttweet_text\tcord_uid"
    assert "extra words" in body


def test_augment_show_prompts(capsys):
    assert cli(["augment", "--show-prompts"]) == 0
    out = capsys.readouterr().out
    assert len(out.strip().splitlines()) == 3
    assert "formal" in out and "keywords" in out


def test_augment_missing_table_flag_exits_1(dataset, capsys):
    assert (
        cli(["augment", "--queries", str(dataset / "queries.tsv"), "--augment-mode", "concat_formal",
             "--output", str(dataset / "a.tsv")])
        == 1
    )
    assert "needs --formal" in capsys.readouterr().err


def test_rerank_external_via_cli(dataset, capsys):
    corpus = str(dataset / "corpus.csv")
    queries = str(dataset / "queries.tsv")
    run = str(dataset / "run.jsonl")
    assert cli(["retrieve", "--corpus", corpus, "--queries", queries, "--k", "5", "--run", run]) == 0
    assert (
        cli(
            ["rerank", "--run", run, "--corpus", corpus, "--queries", queries, "--scorer", "external",
             "--endpoint", stub_endpoint("by-id"), "--run-out", str(dataset / "rr.jsonl")]
        )
        == 0
    )


def test_module_entrypoint_version():
    result = subprocess.run(
        [sys.executable, "-m", "claim_anchor", "--version"],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert result.returncode == 0
    assert "claim-anchor" in result.stdout
