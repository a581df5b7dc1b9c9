"""
reach propagate - reach-set snapshots of the configured system.

Usage:
    python cli/reach.py propagate -o snapshots.json
    python cli/reach.py propagate -c run.json -n 5 --snapshots 4 -o snapshots.csv
"""
from algorithms.propagation import EllipsoidalReachPropagator, default_directions
from cli.common import add_common_arguments, print_header, require, resolve_config
from data.config_loader import build_system
from data.results_io import write_snapshots


def register(subparsers) -> None:
    parser = subparsers.add_parser('propagate', help='Propagate a family of reach-set ellipsoids')
    add_common_arguments(parser)
    parser.add_argument('-n', '--n-directions', dest='n_directions', type=int, help='Number of directions N')
    parser.add_argument('--snapshots', type=int, help='Equispaced snapshot count (endpoints included)')
    parser.add_argument('--t-end', dest='t_end', type=float, help='Final time')
    parser.add_argument('-o', '--output', required=True, help='Snapshot file (.json or .csv)')
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = resolve_config(args)
    output = require(args.output, "output path")
    system, uncertainty, _ = build_system(config)
    grid = config.grid()
    directions = default_directions(system.n, config.n_directions, config.seed)

    propagator = EllipsoidalReachPropagator(system, uncertainty, config.disturbance_model, config.workers)
    snapshots = propagator.propagate(directions, grid)
    write_snapshots(snapshots, output)

    stats = propagator.get_run_stats()
    print_header("REACH SET PROPAGATION")
    print(f"State dimension:  {system.n}")
    print(f"Directions:       {stats['n_directions']}")
    print(f"Interval:         [{grid.t_start:g}, {grid.t_end:g}], h = {grid.step:g} ({grid.steps} steps)")
    print(f"Snapshots:        {len(snapshots)}")
    print(f"Workers:          {stats['workers']}")
    print(f"Propagation time: {stats['t_propagation']:.3f} s")
    print(f"Clamp events:     {stats['clamp_events']}")
    print(f"Written to:       {output}")
    return 0
