"""Sidecar CLI: `serve` hosts a model behind the wire protocol,
`dump-embeddings` batch-exports an embedding file."""

from __future__ import annotations

import argparse
import sys

from .config import MODES, SidecarConfig
from .embeddings import dump_embeddings
from .server import serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="claim-anchor-sidecar")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="answer scoring/embedding frames on stdio or TCP")
    p.add_argument("--model", default="echo", help="model id, or 'echo' for the built-in test model")
    p.add_argument("--mode", choices=MODES, default="rerank_scores")
    p.add_argument("--transport", choices=("stdio", "tcp"), default="stdio")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--max-batch", type=int, default=32)
    p.add_argument("--device", default="cpu")
    p.add_argument("--dim", type=int, default=32, help="embedding dimension of the echo model")

    p = sub.add_parser("dump-embeddings", help="embed a TSV of (id, text) rows into an embedding file")
    p.add_argument("--model", default="echo")
    p.add_argument("--input", required=True, help="TSV with header id<TAB>text")
    p.add_argument("--output", required=True)
    p.add_argument("--max-batch", type=int, default=32)
    p.add_argument("--device", default="cpu")
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--deterministic", action="store_true", help="pin RNG seeds before embedding")

    return parser


def cli(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        cfg = SidecarConfig(
            model_id=args.model,
            mode=args.mode,
            device=args.device,
            max_batch=args.max_batch,
            echo_dim=args.dim,
        )
        return serve(cfg, transport=args.transport, host=args.host, port=args.port)

    cfg = SidecarConfig(
        model_id=args.model,
        mode="embed",
        device=args.device,
        max_batch=args.max_batch,
        echo_dim=args.dim,
        deterministic=args.deterministic,
    )
    try:
        count = dump_embeddings(cfg, args.input, args.output)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"embedded {count} texts -> {args.output}", file=sys.stderr)
    return 0


def main() -> None:
    raise SystemExit(cli())
