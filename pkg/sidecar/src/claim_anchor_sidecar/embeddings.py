"""Batch export of embeddings in the retrieval engine's file format.

Input: TSV with header `id<TAB>text`. Output: `#dim D` header followed by
`id<TAB>v1 v2 ... vD` lines. Runs with the echo model are byte-identical
across invocations; for hub models, pass deterministic=True to pin seeds.
"""

from __future__ import annotations

from pathlib import Path

from .config import SidecarConfig
from .models import load_embedder


def read_texts(path: str | Path) -> list[tuple[str, str]]:
    with open(path, encoding="utf-8") as f:
        lines = [line.rstrip("\r\n") for line in f]
    if not lines or lines[0].split("\t")[:2] != ["id", "text"]:
        raise ValueError("input must be a TSV with header 'id\\ttext'")
    rows: list[tuple[str, str]] = []
    seen: set[str] = set()
    for row_no, line in enumerate(lines[1:], start=1):
        if not line:
            continue
        id_, sep, text = line.partition("\t")
        if not sep or not id_:
            raise ValueError(f"row {row_no}: expected id<TAB>text")
        if id_ in seen:
            raise ValueError(f"row {row_no}: duplicate id {id_!r}")
        seen.add(id_)
        rows.append((id_, text))
    return rows


def _pin_seeds() -> None:
    try:
        import torch

        torch.manual_seed(0)
        torch.use_deterministic_algorithms(True, warn_only=True)
    except ImportError:
        pass


def dump_embeddings(cfg: SidecarConfig, texts_path: str | Path, out_path: str | Path) -> int:
    """Embed every row of texts_path and write the embedding file. Returns row count."""
    rows = read_texts(texts_path)
    if cfg.deterministic:
        _pin_seeds()
    embedder = load_embedder(cfg)
    vectors = embedder.embed([text for _, text in rows])
    dims = {len(v) for v in vectors}
    if len(dims) > 1:
        raise RuntimeError(f"model produced mixed dimensions: {sorted(dims)}")
    dim = dims.pop() if dims else cfg.echo_dim
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        f.write(f"#dim {dim}\n")
        for (id_, _), vector in zip(rows, vectors):
            f.write(id_ + "\t" + " ".join(repr(float(x)) for x in vector) + "\n")
    return len(rows)
