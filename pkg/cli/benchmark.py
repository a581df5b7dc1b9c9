"""
reach benchmark - measure pipeline timings and fit the quartic time model.

Usage:
    python cli/reach.py benchmark --ns 1,2,3,4,5,6,7,8,9,10 --timings timings.csv --model-out model.json
    python cli/reach.py benchmark --from-timings timings.csv --model-out model.json
"""
from algorithms.anytime import benchmark, fit_timing_model
from cli.common import add_common_arguments, parse_int_list, print_header, require, resolve_config
from data.config_loader import build_system
from data.results_io import read_timings, write_timing_model, write_timings
from models.system import TimeGrid


def register(subparsers) -> None:
    parser = subparsers.add_parser('benchmark', help='Time the pipeline for several N and fit f_hat(N)')
    add_common_arguments(parser)
    parser.add_argument('--ns', type=parse_int_list, default=list(range(1, 11)),
                        help='Direction counts to time (default: 1..10)')
    parser.add_argument('--reps', type=int, help='Repetitions per N (at least 3)')
    parser.add_argument('--horizon', type=float, help='Length of one prediction step')
    parser.add_argument('--timings', help='Timing CSV output (required when measuring)')
    parser.add_argument('--from-timings', dest='from_timings', metavar='PATH',
                        help='Refit f_hat from a saved timing CSV instead of measuring')
    parser.add_argument('--model-out', dest='model_out', required=True, help='Fitted model JSON output')
    parser.set_defaults(handler=run)


def measure(args):
    config = resolve_config(args)
    system, uncertainty, preset_coords = build_system(config)
    coords = config.coords if config.coords is not None else preset_coords
    grid = TimeGrid.uniform(config.t_start, config.t_start + config.horizon, config.h, 2)
    timings_path = require(args.timings, "timing table output (--timings)")

    samples = benchmark(system, uncertainty, grid, args.ns, config.reps, config.workers,
                        config.seed, coords, config.disturbance_model)
    write_timings(samples, timings_path)
    return samples


def run(args) -> int:
    if args.from_timings:
        samples = read_timings(args.from_timings)
    else:
        samples = measure(args)
    model = fit_timing_model(samples)
    write_timing_model(model, args.model_out)

    print_header("PIPELINE TIMINGS")
    print(f"{'N':>4} {'t_center':>10} {'t_shape':>10} {'t_prop':>10} {'t_opt':>10} {'t_total':>10}")
    print("-" * 59)
    for s in samples:
        print(f"{s.n_directions:>4d} {s.t_center:>10.4f} {s.t_shape:>10.4f} {s.t_propagation:>10.4f} "
              f"{s.t_opt:>10.4f} {s.t_total:>10.4f}")
    coefficients = ", ".join(f"{c:.4e}" for c in model.coefficients)
    print(f"\nf_hat coefficients (ascending): [{coefficients}]")
    print(f"Residual norm: {model.residual_norm:.4e}")
    outputs = [args.model_out] if args.from_timings else [args.timings, args.model_out]
    print(f"Written to: {', '.join(outputs)}")
    return 0
