"""CLI: extract attention dumps for a dataset shard.

Exit codes: 0 success (skips are reported but tolerated), 1 flag/dataset
validation, 2 runtime failure (model load, I/O).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .extract import DatasetError, ExtractionConfig, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attnbridge", description=__doc__)
    parser.add_argument("--model", required=True, help="model identifier or local path")
    parser.add_argument("--dataset", required=True, help="eval-item JSONL path")
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--max-length", type=int, default=1024)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--sep", default="\n")
    parser.add_argument("--shard-index", type=int, default=0)
    parser.add_argument("--shard-count", type=int, default=1)
    parser.add_argument("--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = ExtractionConfig(
            model_id=args.model,
            dataset_path=args.dataset,
            out_dir=args.out_dir,
            max_length=args.max_length,
            device=args.device,
            sep=args.sep,
            shard_index=args.shard_index,
            shard_count=args.shard_count,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        report = extract(config)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(report.written)} dumps to {args.out_dir}")
    for item_id, reason in report.skipped:
        print(f"skipped {item_id}: {reason}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
