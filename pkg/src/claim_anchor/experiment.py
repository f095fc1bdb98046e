"""Config-driven experiment orchestration: load, augment, retrieve, rerank, evaluate.

The config file (TOML or JSON) is the single source of truth; CLI flags
are overrides. Given the same config and inputs, two runs produce
byte-identical prediction files (timings are the only nondeterministic
report fields).
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .augment import ALL_MODES, MODE_NONE, MODE_REQUIRES, RewriteTable, augment_queryset, load_rewrites
from .bm25 import Bm25Params, build_index, retrieve
from .corpus import load_corpus, load_queries
from .dense import dense_retrieve, load_embeddings
from .errors import StageError, ValidationError
from .evaluation import Run, mrr_at_k, write_predictions, write_run
from .ranking import STAGE_RERANK, STAGE_RETRIEVAL
from .rerank import DEFAULT_TIMEOUT_MS, Scorer, rerank, resolve_scorer
from .textprep import PreprocessConfig, load_stopwords, preprocess

ENDPOINT_ENV_VAR = "CLAIM_ANCHOR_SCORER"

RETRIEVAL_METHODS = ("bm25", "dense")


@dataclass
class ExperimentConfig:
    corpus_path: str
    queries_path: str
    output_dir: str
    retrieval_method: str = "bm25"
    retrieval_k: int = 100
    eval_k: int = 5
    bm25: Bm25Params = dc_field(default_factory=Bm25Params)
    preprocess: PreprocessConfig = dc_field(default_factory=PreprocessConfig)
    doc_embeddings: str | None = None
    query_embeddings: str | None = None
    scorer: Scorer | None = None
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    augment_mode: str = MODE_NONE
    rewrite_paths: dict[str, str] = dc_field(default_factory=dict)
    figures: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.retrieval_method not in RETRIEVAL_METHODS:
            raise ValidationError(f"retrieval must be one of {RETRIEVAL_METHODS}, got {self.retrieval_method!r}")
        if self.retrieval_k < 1 or self.eval_k < 1:
            raise ValidationError("retrieval_k and eval_k must be >= 1")
        if self.retrieval_k < self.eval_k:
            raise ValidationError(f"retrieval_k ({self.retrieval_k}) must be >= eval_k ({self.eval_k})")
        if self.augment_mode not in ALL_MODES:
            raise ValidationError(f"unknown augment mode {self.augment_mode!r}")
        for kind in MODE_REQUIRES[self.augment_mode]:
            if kind not in self.rewrite_paths:
                raise ValidationError(f"augment mode {self.augment_mode!r} needs a {kind!r} rewrite table")
        if self.retrieval_method == "dense":
            if not self.doc_embeddings or not self.query_embeddings:
                raise ValidationError("dense retrieval needs doc_embeddings and query_embeddings paths")

    def echo(self) -> dict:
        """Everything needed to re-run the experiment, echoed into the report."""
        return {
            "version": __version__,
            "corpus": self.corpus_path,
            "queries": self.queries_path,
            "retrieval": self.retrieval_method,
            "retrieval_k": self.retrieval_k,
            "eval_k": self.eval_k,
            "bm25": self.bm25.as_dict(),
            "preprocess": self.preprocess.summary(),
            "dense": {"doc_embeddings": self.doc_embeddings, "query_embeddings": self.query_embeddings},
            "rerank": None
            if self.scorer is None
            else {"scorer": self.scorer.kind, "name": self.scorer.name, "endpoint": self.scorer.endpoint},
            "augment": {"mode": self.augment_mode, "tables": dict(sorted(self.rewrite_paths.items()))},
        }


def _take(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ValidationError(f"unknown config keys in {where}: {', '.join(sorted(unknown))}")


def config_from_dict(data: dict, base_dir: str | Path = ".") -> ExperimentConfig:
    """Build a validated config; relative paths resolve against base_dir."""
    base = Path(base_dir)

    def path_of(value: str | None) -> str | None:
        if value is None:
            return None
        p = Path(value)
        return str(p if p.is_absolute() else base / p)

    _take(
        data,
        {"corpus", "queries", "output_dir", "retrieval", "retrieval_k", "eval_k",
         "figures", "bm25", "preprocess", "dense", "rerank", "augment"},
        "config",
    )
    for key in ("corpus", "queries", "output_dir"):
        if key not in data:
            raise ValidationError(f"config is missing required key {key!r}")

    bm25_raw = dict(data.get("bm25", {}))
    _take(bm25_raw, {"k1", "b", "idf_floor"}, "[bm25]")
    try:
        params = Bm25Params(**bm25_raw)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad [bm25] section: {exc}") from None

    pp_raw = dict(data.get("preprocess", {}))
    _take(pp_raw, {"lowercase", "strip_edge_punct", "min_token_len", "stopwords"}, "[preprocess]")
    stopwords_path = pp_raw.pop("stopwords", None)
    if stopwords_path is not None:
        pp_raw["stopwords"] = load_stopwords(path_of(stopwords_path))
    try:
        preproc = PreprocessConfig(**pp_raw)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad [preprocess] section: {exc}") from None

    dense_raw = dict(data.get("dense", {}))
    _take(dense_raw, {"doc_embeddings", "query_embeddings"}, "[dense]")

    rerank_raw = dict(data.get("rerank", {}))
    _take(rerank_raw, {"scorer", "endpoint", "name", "timeout_ms"}, "[rerank]")
    scorer = None
    timeout_ms = int(rerank_raw.get("timeout_ms", DEFAULT_TIMEOUT_MS))
    kind = rerank_raw.get("scorer", "none")
    if kind != "none":
        endpoint = rerank_raw.get("endpoint") or os.environ.get(ENDPOINT_ENV_VAR)
        scorer = Scorer(kind=kind, endpoint=endpoint, name=rerank_raw.get("name", ""))

    augment_raw = dict(data.get("augment", {}))
    _take(augment_raw, {"mode", "formal", "english_formal", "keywords"}, "[augment]")
    mode = augment_raw.pop("mode", MODE_NONE)
    rewrite_paths = {kind: path_of(p) for kind, p in augment_raw.items()}

    return ExperimentConfig(
        corpus_path=path_of(data["corpus"]),
        queries_path=path_of(data["queries"]),
        output_dir=path_of(data["output_dir"]),
        retrieval_method=data.get("retrieval", "bm25"),
        retrieval_k=int(data.get("retrieval_k", 100)),
        eval_k=int(data.get("eval_k", 5)),
        bm25=params,
        preprocess=preproc,
        doc_embeddings=path_of(dense_raw.get("doc_embeddings")),
        query_embeddings=path_of(dense_raw.get("query_embeddings")),
        scorer=scorer,
        timeout_ms=timeout_ms,
        augment_mode=mode,
        rewrite_paths=rewrite_paths,
        figures=bool(data.get("figures", True)),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(path.read_text("utf-8"))
        else:
            with open(path, "rb") as f:
                data = tomllib.load(f)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config root must be a table/object")
    return config_from_dict(data, base_dir=path.parent)


@dataclass
class ExperimentReport:
    config: dict
    eval_k: int
    n_queries: int
    mrr_after_retrieval: float
    mrr_after_rerank: float | None
    per_query: dict[str, dict[str, float]]
    timings: dict[str, float]
    outputs: dict[str, str]

    def as_dict(self) -> dict:
        return {
            "config": self.config,
            "eval_k": self.eval_k,
            "n_queries": self.n_queries,
            "mrr_after_retrieval": self.mrr_after_retrieval,
            "mrr_after_rerank": self.mrr_after_rerank,
            "per_query": self.per_query,
            "outputs": self.outputs,
            "timings_s": self.timings,
        }


class _StageTimer:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self._stage = None
        self._t0 = 0.0

    def __call__(self, stage: str):
        self._stage = stage
        return self

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self._stage] = round(time.perf_counter() - self._t0, 6)
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self._stage, exc) from exc
        return False


def run_experiment(cfg: ExperimentConfig, log=None) -> ExperimentReport:
    """Execute the full pipeline and write report, predictions, and figures.

    Stage errors are re-raised as StageError tagging the failing stage.
    """
    def say(msg: str) -> None:
        if log is not None:
            print(msg, file=log)

    timer = _StageTimer()
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, str] = {}

    with timer("load"):
        corpus = load_corpus(cfg.corpus_path)
        queries = load_queries(cfg.queries_path, labeled=True)
        say(f"loaded {len(corpus)} documents, {len(queries)} labeled queries")

    with timer("augment"):
        if cfg.augment_mode != MODE_NONE:
            tables: dict[str, RewriteTable] = {
                kind: load_rewrites(path, kind) for kind, path in cfg.rewrite_paths.items()
            }
            queries = augment_queryset(queries, cfg.augment_mode, tables)
            say(f"augmented queries with mode {cfg.augment_mode}")

    with timer("retrieve"):
        lists = {}
        if cfg.retrieval_method == "bm25":
            index = build_index(corpus, cfg.preprocess, cfg.bm25)
            for q in queries.queries:
                tokens = preprocess(q.tweet_text, cfg.preprocess)
                lists[q.post_id] = retrieve(index, tokens, k=cfg.retrieval_k, query_id=q.post_id)
        else:
            doc_store = load_embeddings(cfg.doc_embeddings, kind="document")
            query_store = load_embeddings(cfg.query_embeddings, kind="query")
            for q in queries.queries:
                if q.post_id not in query_store:
                    raise ValidationError(f"no embedding for query {q.post_id!r} in {cfg.query_embeddings}")
                lists[q.post_id] = dense_retrieve(
                    doc_store, query_store.vector(q.post_id), k=cfg.retrieval_k, query_id=q.post_id
                )
        retrieval_run = Run(stage=STAGE_RETRIEVAL, lists=lists)
        say(f"retrieval done ({cfg.retrieval_method}, k={cfg.retrieval_k})")

    rerank_run = None
    with timer("rerank"):
        if cfg.scorer is not None:
            # identity is short-circuited inside rerank(); everything else gets
            # one live scorer object shared across queries (one connection).
            if cfg.scorer.kind == "identity":
                scorer_obj = cfg.scorer
            else:
                scorer_obj = resolve_scorer(cfg.scorer, cfg.preprocess, cfg.timeout_ms)
            try:
                reranked = {
                    q.post_id: rerank(q, retrieval_run.lists[q.post_id], corpus, scorer_obj, cfg.preprocess)
                    for q in queries.queries
                }
            finally:
                if hasattr(scorer_obj, "close"):
                    scorer_obj.close()
            rerank_run = Run(stage=STAGE_RERANK, lists=reranked)
            say(f"reranked with scorer {cfg.scorer.name}")

    with timer("evaluate"):
        gold = queries.gold()
        retrieval_eval = mrr_at_k(retrieval_run, gold, k=cfg.eval_k)
        rerank_eval = mrr_at_k(rerank_run, gold, k=cfg.eval_k) if rerank_run is not None else None

    with timer("write"):
        write_run(retrieval_run, out_dir / "run_retrieval.jsonl")
        write_predictions(retrieval_run, out_dir / "predictions_retrieval.tsv")
        outputs["run_retrieval"] = "run_retrieval.jsonl"
        outputs["predictions_retrieval"] = "predictions_retrieval.tsv"
        if rerank_run is not None:
            write_run(rerank_run, out_dir / "run_rerank.jsonl")
            write_predictions(rerank_run, out_dir / "predictions_rerank.tsv")
            outputs["run_rerank"] = "run_rerank.jsonl"
            outputs["predictions_rerank"] = "predictions_rerank.tsv"

    per_query = {}
    for post_id in sorted(retrieval_eval.per_query):
        row = {"retrieval_rr": retrieval_eval.per_query[post_id]}
        if rerank_eval is not None:
            row["rerank_rr"] = rerank_eval.per_query[post_id]
        per_query[post_id] = row

    report = ExperimentReport(
        config=cfg.echo(),
        eval_k=cfg.eval_k,
        n_queries=retrieval_eval.n_queries,
        mrr_after_retrieval=retrieval_eval.mrr,
        mrr_after_rerank=None if rerank_eval is None else rerank_eval.mrr,
        per_query=per_query,
        timings=timer.timings,
        outputs=outputs,
    )

    if cfg.figures:
        from .figures import render_figures  # deferred: matplotlib is heavy

        for fig_path in render_figures(report, out_dir / "figures"):
            outputs[fig_path.stem] = str(Path("figures") / fig_path.name)

    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report.as_dict(), indent=2, ensure_ascii=False) + "\n", "utf-8")
    outputs["report"] = "report.json"
    say(f"report written to {report_path}")
    return report
