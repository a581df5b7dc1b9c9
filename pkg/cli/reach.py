#!/usr/bin/env python3
"""
Anytime Reach - ellipsoidal reachability with deadline-aware direction budgets

Usage:
    python reach.py propagate -o snapshots.json          # Reach-set snapshots
    python reach.py fuse snapshots.json -o tube.json     # One outer ellipsoid per snapshot
    python reach.py benchmark --timings t.csv --model-out model.json
    python reach.py anytime --trace trace.txt --model model.json -o report.json
    python reach.py check snapshots.json                 # Monte-Carlo containment verdict
    python reach.py quadrotor-demo --plot tube.html      # Full case study

Exit codes: 0 success, 1 containment check failed, 2 usage or configuration
error, 3 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from cli import anytime, benchmark, check, fuse, propagate, quadrotor_demo
from utils.errors import ConfigError, NumericalError
from utils.logging_utils import setup_logger

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

COMMANDS = (propagate, fuse, benchmark, anytime, check, quadrotor_demo)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='reach',
        description='Ellipsoidal reach sets of uncertain linear time-varying systems',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s propagate -n 10 --snapshots 10 -o snaps.json   Quadrotor preset, N=10 on [0, 1]
  %(prog)s fuse snaps.json --coords 0,1,2 -o tube.json    Fuse the (x, y, z) projection
  %(prog)s check snaps.json --samples 2000                Sampled containment verdict
  %(prog)s anytime -c run.json --trace trace.txt --model model.json -o report.json
        """
    )
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    subparsers.required = True
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK

    setup_logger(level=logging.DEBUG if args.verbose else logging.INFO)
    try:
        return args.handler(args)
    except NumericalError as exc:
        print(f"Numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
