"""Command-line entry point: `runner_shim <script> --dataset <path> --wall <sec> --mem <bytes>`."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import ShimConfig, shim_main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="runner_shim",
        description="Run a generated analysis script under wall/memory limits.",
    )
    parser.add_argument("script", type=Path)
    parser.add_argument("--dataset", type=Path, required=True)
    parser.add_argument("--wall", type=float, default=60.0, help="wall-clock limit, seconds")
    parser.add_argument("--mem", type=int, default=1 << 30, help="address-space limit, bytes")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ShimConfig(
            script_path=args.script,
            dataset_path=args.dataset,
            wall_time=args.wall,
            memory=args.mem,
        )
    except (FileNotFoundError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return 2
    return shim_main(config)


if __name__ == "__main__":
    raise SystemExit(main())
