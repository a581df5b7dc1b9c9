"""
Shared flags and helpers for the reach subcommands.
"""
import argparse
from typing import Any, Dict, List, Optional

from data.config_loader import RunConfig, apply_overrides, load_run_config
from utils.errors import ConfigError

BANNER = "=" * 70

# Flag destination -> RunConfig field
OVERRIDES = {
    "workers": "workers",
    "seed": "seed",
    "coords": "coords",
    "step_size": "step_size",
    "horizon": "horizon",
    "steps": "steps",
    "n_directions": "n_directions",
    "n_cap": "n_cap",
    "snapshots": "snapshots",
    "samples": "samples",
    "reps": "reps",
    "trace": "trace",
    "model": "model",
    "disturbance_model": "disturbance_model",
    "t_end": "t_end",
}


def parse_int_list(text: str) -> List[int]:
    """'0,1,2' -> [0, 1, 2]."""
    try:
        return [int(c) for c in text.split(",") if c.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text}") from exc


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('-c', '--config', metavar='PATH', help='Run configuration JSON')
    parser.add_argument('-w', '--workers', type=int, help='Worker threads (default: CPU count)')
    parser.add_argument('--seed', type=int, help='Seed for directions and sampling')
    parser.add_argument('--coords', type=parse_int_list, metavar='I,J,..',
                        help='Project onto these state coordinates')
    parser.add_argument('--step-size', dest='step_size', type=float, help='RK4 step h')
    parser.add_argument('--disturbance-model', dest='disturbance_model',
                        choices=['additive', 'counteracting'], help='Disturbance term of the shape equation')
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')


def resolve_config(args: argparse.Namespace, extra: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Config file (or defaults) with command line overrides applied."""
    config = load_run_config(getattr(args, "config", None))
    overrides = {field: getattr(args, dest) for dest, field in OVERRIDES.items() if hasattr(args, dest)}
    overrides.update(extra or {})
    return apply_overrides(config, overrides)


def require(value: Optional[str], what: str) -> str:
    if not value:
        raise ConfigError(f"No {what} given")
    return value


def print_header(title: str) -> None:
    print(f"\n{BANNER}")
    print(title)
    print(BANNER)
