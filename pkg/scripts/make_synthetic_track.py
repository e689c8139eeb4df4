#!/usr/bin/env python3
"""Write a synthetic track (corpus, queries, qrels, runs, embeddings) to disk.

The emitted directory is ready for the CLI: it includes a config.json whose
paths point at the generated files.
"""

import argparse
import json
from pathlib import Path

from holefill import synthetic


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--queries", type=int, default=20)
    parser.add_argument("--docs", type=int, default=200)
    parser.add_argument("--systems", type=int, default=10)
    args = parser.parse_args()

    track = synthetic.make_track(
        seed=args.seed, n_queries=args.queries, n_docs=args.docs, n_systems=args.systems
    )
    paths = synthetic.write_track(track, args.out_dir)
    config = dict(
        paths,
        full_qrels=paths["qrels"],
        cache=str(args.out_dir / "cache.jsonl"),
        output_dir=str(args.out_dir / "out"),
        labeler="maxrep-bm25",
    )
    config_path = args.out_dir / "config.json"
    config_path.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")
    print(f"track written to {args.out_dir} ({args.queries} queries, "
          f"{args.docs} docs, {args.systems} systems); config at {config_path}")


if __name__ == "__main__":
    main()
