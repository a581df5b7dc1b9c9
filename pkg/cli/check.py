"""
reach check - Monte-Carlo containment verdict for snapshots or an anytime report.

Exits 0 when every sampled state lies inside its sets (form <= 1 + tol), 1 otherwise.

Usage:
    python cli/reach.py check snapshots.json --samples 2000
    python cli/reach.py check report.json --tol 1e-3
"""
import json
from pathlib import Path

from algorithms.anytime import AnytimeReport
from algorithms.containment import DEFAULT_CHECK_TOL, check_containment
from cli.common import add_common_arguments, print_header, resolve_config
from data.config_loader import build_system
from data.results_io import read_report, read_snapshots, write_summary
from utils.errors import ConfigError


def register(subparsers) -> None:
    parser = subparsers.add_parser('check', help='Falsify a snapshot file or report with sampled trajectories')
    parser.add_argument('results', help='Snapshot file (.json/.csv) or anytime report (.json)')
    add_common_arguments(parser)
    parser.add_argument('--samples', type=int, help='Number of sampled trajectories')
    parser.add_argument('--tol', type=float, default=DEFAULT_CHECK_TOL, help='Pass threshold 1 + tol (default: 1e-3)')
    parser.add_argument('-o', '--output', help='Optional verdict JSON')
    parser.set_defaults(handler=run)


def _is_report(path: str) -> bool:
    if Path(path).suffix.lower() != ".json":
        return False
    try:
        with open(path) as f:
            return isinstance(json.load(f), dict)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"Cannot read '{path}': {exc}") from exc


def _verdicts(args, config, system, uncertainty):
    common = dict(step=config.h, count=config.samples, seed=config.seed, tol=args.tol)
    if _is_report(args.results):
        report: AnytimeReport = read_report(args.results)
        if not report.records:
            raise ConfigError("Report holds no steps")
        times = [r.t_end for r in report.records]
        t_start = report.records[0].t_start
        verdicts = [("full state", check_containment(
            system, uncertainty, times, [[r.state] for r in report.records], t_start=t_start, **common))]
        if report.coords is not None:
            verdicts.append(("projected", check_containment(
                system, uncertainty, times, [[r.fused.ellipsoid] for r in report.records],
                coords=report.coords, t_start=t_start, **common)))
        return verdicts

    snapshots = read_snapshots(args.results)
    return [("snapshots", check_containment(
        system, uncertainty, [s.time for s in snapshots], [s.ellipsoids() for s in snapshots],
        coords=config.coords, t_start=config.t_start, **common))]


def run(args) -> int:
    config = resolve_config(args)
    system, uncertainty, _ = build_system(config)
    verdicts = _verdicts(args, config, system, uncertainty)

    print_header("CONTAINMENT CHECK")
    passed = True
    for label, verdict in verdicts:
        print(f"[{label}] {verdict.samples} samples, tolerance 1 + {verdict.tol:g}")
        print(f"{'t':>10} {'max form':>12} {'sample':>8} {'set':>5}")
        for snap in verdict.snapshots:
            flag = "" if snap.max_form <= 1.0 + verdict.tol else "  VIOLATION"
            print(f"{snap.time:>10.4f} {snap.max_form:>12.6f} {snap.worst_sample:>8d} {snap.worst_set:>5d}{flag}")
        passed = passed and verdict.passed
    print(f"\nVerdict: {'PASS' if passed else 'FAIL'}")
    if args.output:
        write_summary({"passed": passed, "checks": {label: v.to_dict() for label, v in verdicts}}, args.output)
    return 0 if passed else 1
