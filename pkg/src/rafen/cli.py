"""Command-line entry point.

Subcommands mirror the pipeline stages; each one runs its dependencies
first (cheap thanks to the artifact cache) and finishes by writing the run
manifest. Errors print a stage-tagged line to stderr; configuration and
input problems exit with status 2, runtime failures with 1.
"""

from __future__ import annotations

import argparse
import sys

from .errors import (
    ConfigurationError,
    ContractViolationError,
    EmptyGraphError,
    GraphParseError,
    PipelineStageError,
)
from .pipeline import Pipeline, load_config

_USAGE_ERRORS = (ConfigurationError, GraphParseError, EmptyGraphError, ContractViolationError)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rafen",
        description="Dynamic-graph node embeddings with in-training alignment.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run config JSON")
    common.add_argument("--out", default="rafen_out", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override config seed")
    common.add_argument(
        "--threads", type=int, default=None, help="worker count (1 = deterministic)"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("ingest", "parse the edge list and report graph statistics"),
        ("snapshot", "split the graph into snapshots"),
        ("embed", "train/align per-snapshot embeddings for every method"),
        ("align-posthoc", "compute post-hoc aligned embedding chains"),
        ("aggregate", "combine snapshot embeddings per aggregation"),
        ("evaluate", "run the link-prediction evaluation and report"),
        ("study-prevnext", "score embeddings against neighboring snapshots"),
        ("pipeline", "run every stage through evaluation"),
    ):
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _execute(args) -> int:
    config = load_config(args.config, seed_override=args.seed, threads_override=args.threads)
    pipe = Pipeline(config, args.out)
    cmd = args.command
    if cmd == "ingest":
        pipe.ensure_graph()
    elif cmd == "snapshot":
        pipe.ensure_snapshots()
    elif cmd in ("embed", "align-posthoc"):
        # post-hoc chains are part of the per-method embedding stage
        pipe.ensure_embeddings()
    elif cmd == "aggregate":
        pipe.stage_aggregate()
    elif cmd == "evaluate":
        pipe.stage_evaluate()
    elif cmd == "study-prevnext":
        pipe.stage_study()
    else:  # pipeline
        pipe.stage_aggregate()
        pipe.stage_evaluate()
    pipe.write_manifest()
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _execute(args)
    except PipelineStageError as exc:
        print(f"[{exc.stage}] {exc.cause}", file=sys.stderr)
        if isinstance(exc.cause, _USAGE_ERRORS):
            return 2
        return 1
    except _USAGE_ERRORS as exc:
        print(f"[config] {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"[io] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
