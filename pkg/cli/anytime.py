"""
reach anytime - chained prediction steps sized to an availability trace.

Usage:
    python cli/reach.py anytime --trace trace.txt --model model.json -o report.json --csv report.csv
"""
from algorithms.anytime import AnytimeSupervisor
from cli.common import add_common_arguments, print_header, require, resolve_config
from data.config_loader import build_system
from data.results_io import read_timing_model, read_trace, write_report
from utils.errors import ConfigError


def register(subparsers) -> None:
    parser = subparsers.add_parser('anytime', help='Run the deadline-aware supervisor over K steps')
    add_common_arguments(parser)
    parser.add_argument('--trace', help='Availability trace, one value in seconds per line')
    parser.add_argument('--model', help='Timing model JSON written by benchmark')
    parser.add_argument('--horizon', type=float, help='Prediction step length')
    parser.add_argument('--steps', type=int, help='Expected number of steps K (defaults to the trace length)')
    parser.add_argument('--n-cap', dest='n_cap', type=int, help='Largest direction count')
    parser.add_argument('-o', '--output', required=True, help='Report JSON')
    parser.add_argument('--csv', help='Optional report CSV')
    parser.set_defaults(handler=run)


def run(args) -> int:
    trace = read_trace(require(args.trace, "availability trace (--trace)"))
    config = resolve_config(args, {"steps": args.steps or len(trace)})
    if config.steps != len(trace):
        raise ConfigError(f"Availability trace has {len(trace)} entries, config expects {config.steps}")
    model = read_timing_model(require(config.model, "timing model (--model)"))
    system, uncertainty, preset_coords = build_system(config)
    coords = config.coords if config.coords is not None else preset_coords

    supervisor = AnytimeSupervisor(
        system, uncertainty, model, config.n_cap, step=config.h, coords=coords,
        workers=config.workers, seed=config.seed, disturbance_model=config.disturbance_model,
        fusion_tol=config.fusion_tol, max_iterations=config.max_iterations,
    )
    report = supervisor.run_horizon(uncertainty.x0, config.horizon, trace, config.steps)
    write_report(report, args.output)
    if args.csv:
        write_report(report, args.csv)

    print_header("ANYTIME SUPERVISION")
    print(f"{'k':>3} {'t_avail':>9} {'N_hat':>8} {'N_max':>6} {'wall_s':>9} {'volume':>13} {'cert':>5}")
    print("-" * 59)
    for row in report.rows():
        print(f"{row['k']:>3d} {row['t_available']:>9.4f} {row['N_hat']:>8.3f} {row['N_max']:>6d} "
              f"{row['wall_s']:>9.4f} {row['volume']:>13.5e} {str(row['certified']):>5}")
    print(f"\nWritten to: {args.output}" + (f", {args.csv}" if args.csv else ""))
    return 0
