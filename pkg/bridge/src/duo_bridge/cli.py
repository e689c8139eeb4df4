"""Batch scoring entry point: read a task file, emit a score file."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .models import BridgeError, load_scorer
from .protocol import ProtocolError, run_bridge


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="duo-bridge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="score a JSONL task file")
    run.add_argument("--tasks", required=True, help="input task JSONL")
    run.add_argument("--output", required=True, help="output score JSONL")
    run.add_argument(
        "--model",
        required=True,
        help="stub:equal | stub:gap=<float> | duoprompt:<checkpoint> | duot5:<checkpoint>",
    )
    run.add_argument("--batch-size", type=int, default=8)
    args = parser.parse_args(argv)

    if not Path(args.tasks).is_file():
        print(f"error: task file not found: {args.tasks}", file=sys.stderr)
        return 2
    try:
        scorer = load_scorer(args.model)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        count = run_bridge(args.tasks, args.output, scorer, args.batch_size)
    except (ProtocolError, BridgeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"scored {count} tasks -> {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
