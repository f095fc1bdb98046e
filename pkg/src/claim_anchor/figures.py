"""Report figures rendered next to the prediction files.

Kept in its own module so matplotlib is only imported when figures are
actually requested.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)


def _rr_bins(eval_k: int):
    """One bin per attainable reciprocal rank (0, 1/k, ..., 1) for small k."""
    if eval_k > 10:
        return 20
    values = [0.0] + [1.0 / rank for rank in range(eval_k, 0, -1)]
    edges = [value - 0.01 for value in values]
    edges.append(1.01)
    return edges


def render_figures(report, out_dir: str | Path) -> list[Path]:
    """Render MRR-by-stage bars and the per-query reciprocal-rank histogram."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    stages = [("retrieval", report.mrr_after_retrieval)]
    if report.mrr_after_rerank is not None:
        stages.append(("rerank", report.mrr_after_rerank))

    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    names = [name for name, _ in stages]
    values = [value for _, value in stages]
    bars = ax.bar(names, values, color=["#4878cf", "#d65f5f"][: len(stages)], width=0.55)
    ax.bar_label(bars, fmt="%.4f", padding=2, fontsize=9)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel(f"MRR@{report.eval_k}")
    ax.set_title("Mean reciprocal rank by stage")
    fig.tight_layout()
    path = out_dir / "mrr_by_stage.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(4.8, 3.2))
    bins = _rr_bins(report.eval_k)
    for (stage, _), color in zip(stages, ("#4878cf", "#d65f5f")):
        values = [rr.get(f"{stage}_rr", 0.0) for rr in report.per_query.values()]
        ax.hist(values, bins=bins, alpha=0.6, label=stage, color=color)
    ax.set_xlabel("reciprocal rank")
    ax.set_ylabel("queries")
    ax.set_title("Per-query reciprocal ranks")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "reciprocal_ranks.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    return paths
