"""Command-line surface: index, retrieve, rerank, evaluate, experiment, augment.

Exit codes: 0 success, 1 usage/validation error, 2 runtime or stage error.
Diagnostics go to stderr; results go to files or stdout only.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .augment import ALL_MODES, GENERATION_PROMPTS, MODE_REQUIRES, augment_queryset, load_rewrites
from .bm25 import Bm25Params, build_index, load_index, retrieve, save_index
from .corpus import load_corpus, load_queries, save_queries
from .errors import ClaimAnchorError, StageError, ValidationError
from .evaluation import Run, mrr_at_k, read_predictions, read_run, write_predictions, write_run
from .experiment import ENDPOINT_ENV_VAR, config_from_dict, load_config, run_experiment
from .ranking import STAGE_RERANK
from .rerank import DEFAULT_TIMEOUT_MS, Scorer, rerank, resolve_scorer
from .textprep import PreprocessConfig, load_stopwords, preprocess


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _preproc_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("preprocessing")
    group.add_argument("--no-lowercase", action="store_true", help="keep original casing")
    group.add_argument("--keep-edge-punct", action="store_true", help="do not strip edge punctuation")
    group.add_argument("--min-token-len", type=int, default=1)
    group.add_argument("--stopwords", metavar="PATH", help="one-token-per-line stopword file (default: shipped list)")


def _bm25_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("bm25 parameters")
    group.add_argument("--k1", type=float, default=1.5)
    group.add_argument("--b", type=float, default=0.75)
    group.add_argument("--idf-floor", type=float, default=0.0)


def _augment_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("augmentation")
    group.add_argument("--augment-mode", choices=ALL_MODES, default="none")
    group.add_argument("--formal", metavar="TSV", help="formal rewrite table")
    group.add_argument("--english-formal", metavar="TSV", help="English formal rewrite table")
    group.add_argument("--keywords", metavar="TSV", help="keyword table")


def _build_preproc(args) -> PreprocessConfig:
    kwargs = {
        "lowercase": not args.no_lowercase,
        "strip_edge_punct": not args.keep_edge_punct,
        "min_token_len": args.min_token_len,
    }
    if args.stopwords:
        kwargs["stopwords"] = load_stopwords(args.stopwords)
    return PreprocessConfig(**kwargs)


def _load_tables(args) -> dict:
    paths = {"formal": args.formal, "english_formal": args.english_formal, "keywords": args.keywords}
    needed = MODE_REQUIRES[args.augment_mode]
    for kind in needed:
        if not paths.get(kind):
            raise ValidationError(f"augment mode {args.augment_mode!r} needs --{kind.replace('_', '-')}")
    return {kind: load_rewrites(paths[kind], kind) for kind in needed}


def _maybe_augment(queries, args):
    if args.augment_mode == "none":
        return queries
    return augment_queryset(queries, args.augment_mode, _load_tables(args))


def build_parser() -> _Parser:
    parser = _Parser(prog="claim-anchor", description="Match social-media claims to the papers they cite.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("index", parents=[], help="build a BM25 index snapshot")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output", required=True, help="snapshot path (.json or .json.gz)")
    _preproc_flags(p)
    _bm25_flags(p)

    p = sub.add_parser("retrieve", help="first-stage BM25 retrieval")
    p.add_argument("--corpus", help="corpus file (builds the index on the fly)")
    p.add_argument("--index", help="prebuilt index snapshot (alternative to --corpus)")
    p.add_argument("--queries", required=True)
    p.add_argument("--unlabeled", action="store_true", help="query file has no cord_uid column")
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--run", required=True, help="output run file (JSONL)")
    p.add_argument("--predictions", help="also write submission-format TSV")
    _preproc_flags(p)
    _bm25_flags(p)
    _augment_flags(p)

    p = sub.add_parser("rerank", help="second-stage reranking of a run")
    p.add_argument("--run", required=True, help="input run file (JSONL)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--unlabeled", action="store_true")
    p.add_argument("--scorer", choices=("identity", "lexical_overlap", "external"), default="lexical_overlap")
    p.add_argument("--endpoint", help=f"external scorer endpoint (default: ${ENDPOINT_ENV_VAR})")
    p.add_argument("--timeout-ms", type=int, default=DEFAULT_TIMEOUT_MS)
    p.add_argument("--run-out", required=True, help="output run file (JSONL)")
    p.add_argument("--predictions", help="also write submission-format TSV")
    _preproc_flags(p)
    _augment_flags(p)

    p = sub.add_parser("evaluate", help="MRR@k of a run or predictions file")
    p.add_argument("--run", required=True, help="run JSONL or predictions TSV")
    p.add_argument("--gold", required=True, help="labeled query file")
    p.add_argument("--k", type=int, default=5)

    p = sub.add_parser("augment", help="apply rewrite tables to a query file")
    p.add_argument("--queries")
    p.add_argument("--unlabeled", action="store_true")
    p.add_argument("--output", help="augmented query TSV")
    p.add_argument("--show-prompts", action="store_true", help="print the rewrite-generation prompts and exit")
    _augment_flags(p)

    p = sub.add_parser("experiment", help="run a full config-driven experiment")
    p.add_argument("--config", required=True, help="TOML or JSON experiment config")
    p.add_argument("--corpus", help="override config corpus path")
    p.add_argument("--queries", help="override config queries path")
    p.add_argument("--output-dir", help="override config output_dir")
    p.add_argument("--retrieval-k", type=int)
    p.add_argument("--eval-k", type=int)
    p.add_argument("--scorer", help="override rerank scorer kind (or 'none')")
    p.add_argument("--endpoint", help="override external scorer endpoint")
    p.add_argument("--augment-mode", choices=ALL_MODES)
    p.add_argument("--no-figures", action="store_true")

    return parser


def _cmd_index(args) -> int:
    corpus = load_corpus(args.corpus)
    cfg = _build_preproc(args)
    params = Bm25Params(k1=args.k1, b=args.b, idf_floor=args.idf_floor)
    index = build_index(corpus, cfg, params)
    save_index(index, args.output)
    print(f"indexed {index.n_docs} documents -> {args.output}", file=sys.stderr)
    return 0


def _cmd_retrieve(args) -> int:
    if bool(args.corpus) == bool(args.index):
        raise ValidationError("exactly one of --corpus or --index is required")
    if args.index:
        index = load_index(args.index)
        cfg = index.preproc
    else:
        cfg = _build_preproc(args)
        index = build_index(load_corpus(args.corpus), cfg, Bm25Params(k1=args.k1, b=args.b, idf_floor=args.idf_floor))
    queries = load_queries(args.queries, labeled=not args.unlabeled)
    queries = _maybe_augment(queries, args)
    lists = {}
    for q in queries.queries:
        lists[q.post_id] = retrieve(index, preprocess(q.tweet_text, cfg), k=args.k, query_id=q.post_id)
    run = Run(stage="retrieval", lists=lists)
    write_run(run, args.run)
    print(f"retrieved top-{args.k} for {len(lists)} queries -> {args.run}", file=sys.stderr)
    if args.predictions:
        write_predictions(run, args.predictions)
        print(f"predictions -> {args.predictions}", file=sys.stderr)
    return 0


def _cmd_rerank(args) -> int:
    corpus = load_corpus(args.corpus)
    queries = load_queries(args.queries, labeled=not args.unlabeled)
    queries = _maybe_augment(queries, args)
    run_in = read_run(args.run)
    cfg = _build_preproc(args)
    endpoint = args.endpoint or os.environ.get(ENDPOINT_ENV_VAR)
    spec = Scorer(kind=args.scorer, endpoint=endpoint if args.scorer == "external" else None)
    scorer = spec if spec.kind == "identity" else resolve_scorer(spec, cfg, args.timeout_ms)
    by_id = {q.post_id: q for q in queries.queries}
    lists = {}
    try:
        for post_id in sorted(run_in.lists):
            if post_id not in by_id:
                raise ValidationError(f"run contains post_id {post_id!r} missing from {args.queries}")
            lists[post_id] = rerank(by_id[post_id], run_in.lists[post_id], corpus, scorer, cfg)
    finally:
        if hasattr(scorer, "close"):
            scorer.close()
    run_out = Run(stage=STAGE_RERANK, lists=lists)
    write_run(run_out, args.run_out)
    print(f"reranked {len(lists)} queries with {spec.name} -> {args.run_out}", file=sys.stderr)
    if args.predictions:
        write_predictions(run_out, args.predictions)
        print(f"predictions -> {args.predictions}", file=sys.stderr)
    return 0


def _cmd_evaluate(args) -> int:
    gold = load_queries(args.gold, labeled=True).gold()
    path = Path(args.run)
    with open(path, encoding="utf-8") as f:
        first = f.readline()
    if first.startswith("post_id\t"):
        run = read_predictions(path)
    else:
        run = read_run(path)
    report = mrr_at_k(run, gold, k=args.k)
    print(f"mrr@{report.k}={report.mrr}")
    return 0


def _cmd_augment(args) -> int:
    if args.show_prompts:
        for kind in ("formal", "english_formal", "keywords"):
            print(f"{kind}\t{GENERATION_PROMPTS[kind]}")
        return 0
    if not args.queries or not args.output:
        raise ValidationError("augment needs --queries and --output (or --show-prompts)")
    queries = load_queries(args.queries, labeled=not args.unlabeled)
    augmented = _maybe_augment(queries, args)
    save_queries(augmented, args.output, format="tsv")
    print(f"augmented {len(augmented)} queries (mode {args.augment_mode}) -> {args.output}", file=sys.stderr)
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    data_overrides = {
        "corpus_path": args.corpus,
        "queries_path": args.queries,
        "output_dir": args.output_dir,
        "retrieval_k": args.retrieval_k,
        "eval_k": args.eval_k,
        "augment_mode": args.augment_mode,
    }
    for attr, value in data_overrides.items():
        if value is not None:
            setattr(cfg, attr, value)
    if args.scorer is not None:
        if args.scorer == "none":
            cfg.scorer = None
        else:
            endpoint = args.endpoint or (cfg.scorer.endpoint if cfg.scorer else None) or os.environ.get(ENDPOINT_ENV_VAR)
            cfg.scorer = Scorer(kind=args.scorer, endpoint=endpoint if args.scorer == "external" else None)
    elif args.endpoint is not None and cfg.scorer is not None:
        cfg.scorer = Scorer(kind=cfg.scorer.kind, endpoint=args.endpoint, name=cfg.scorer.name)
    if args.no_figures:
        cfg.figures = False
    cfg.validate()
    report = run_experiment(cfg, log=sys.stderr)
    line = f"mrr_after_retrieval={report.mrr_after_retrieval}"
    if report.mrr_after_rerank is not None:
        line += f" mrr_after_rerank={report.mrr_after_rerank}"
    print(line, file=sys.stderr)
    return 0


_COMMANDS = {
    "index": _cmd_index,
    "retrieve": _cmd_retrieve,
    "rerank": _cmd_rerank,
    "evaluate": _cmd_evaluate,
    "augment": _cmd_augment,
    "experiment": _cmd_experiment,
}


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            print("error: a subcommand is required", file=sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1 if isinstance(exc.cause, (ValidationError, FileNotFoundError)) else 2
    except (ClaimAnchorError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(cli())
