import subprocess
import sys

import pytest

from claim_anchor_sidecar.cli import cli
from claim_anchor_sidecar.config import SidecarConfig
from claim_anchor_sidecar.embeddings import dump_embeddings, read_texts


def write_texts(tmp_path, rows, name="texts.tsv"):
    path = tmp_path / name
    path.write_text("id\ttext\n" + "".join(f"{i}\t{t}\n" for i, t in rows), encoding="utf-8")
    return path


CFG = SidecarConfig(model_id="echo", mode="embed", echo_dim=16)


class TestDumpEmbeddings:
    def test_five_rows_make_five_vectors_with_header(self, tmp_path):
        rows = [(f"t{i}", f"text number {i}") for i in range(5)]
        out = tmp_path / "emb.tsv"
        assert dump_embeddings(CFG, write_texts(tmp_path, rows), out) == 5
        lines = out.read_text("utf-8").splitlines()
        assert lines[0] == "#dim 16"
        assert len(lines) == 6
        assert all(len(line.split("\t")[1].split()) == 16 for line in lines[1:])

    def test_duplicate_id_rejected(self, tmp_path):
        path = write_texts(tmp_path, [("a", "x"), ("a", "y")])
        with pytest.raises(ValueError, match="duplicate id"):
            dump_embeddings(CFG, path, tmp_path / "emb.tsv")

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "texts.tsv"
        path.write_text("a\tx\n", encoding="utf-8")
        with pytest.raises(ValueError, match="header"):
            read_texts(path)

    def test_two_runs_are_byte_identical(self, tmp_path):
        path = write_texts(tmp_path, [(f"t{i}", f"text {i}") for i in range(4)])
        out1, out2 = tmp_path / "emb1.tsv", tmp_path / "emb2.tsv"
        dump_embeddings(CFG, path, out1)
        dump_embeddings(CFG, path, out2)
        assert out1.read_bytes() == out2.read_bytes()

    def test_output_loads_in_the_retrieval_engine(self, tmp_path):
        from claim_anchor.dense import dense_retrieve, load_embeddings

        rows = [(f"d{i}", f"document body {i}") for i in range(6)]
        out = tmp_path / "emb.tsv"
        dump_embeddings(CFG, write_texts(tmp_path, rows), out)
        store = load_embeddings(out)
        assert store.dim == 16 and len(store) == 6
        result = dense_retrieve(store, store.vector("d3"), k=3)
        assert result.doc_ids()[0] == "d3"


class TestCli:
    def test_dump_via_cli(self, tmp_path):
        path = write_texts(tmp_path, [("a", "x"), ("b", "y")])
        out = tmp_path / "emb.tsv"
        assert cli(["dump-embeddings", "--input", str(path), "--output", str(out), "--dim", "8"]) == 0
        assert out.read_text("utf-8").splitlines()[0] == "#dim 8"

    def test_duplicate_id_exits_nonzero(self, tmp_path, capsys):
        path = write_texts(tmp_path, [("a", "x"), ("a", "y")])
        assert cli(["dump-embeddings", "--input", str(path), "--output", str(tmp_path / "e.tsv")]) == 1
        assert "duplicate" in capsys.readouterr().err

    def test_subprocess_entrypoint(self, tmp_path):
        path = write_texts(tmp_path, [("a", "x")])
        out = tmp_path / "emb.tsv"
        result = subprocess.run(
            [sys.executable, "-m", "claim_anchor_sidecar", "dump-embeddings",
             "--input", str(path), "--output", str(out)],
            capture_output=True,
            text=True,
            timeout=60,
        )
        assert result.returncode == 0, result.stderr
        assert out.exists()
