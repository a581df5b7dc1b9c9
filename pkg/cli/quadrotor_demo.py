"""
reach quadrotor-demo - full hover-tracking case study.

Designs the LQ tracking law, propagates N ellipsoids of the 12-D closed loop on
[0, T], fuses the (x, y, z) projection at every snapshot and checks both against
sampled closed-loop trajectories.

Usage:
    python cli/reach.py quadrotor-demo
    python cli/reach.py quadrotor-demo -n 10 --snapshots 10 --plot tube.html
"""
from algorithms.containment import DEFAULT_CHECK_TOL, check_containment
from algorithms.fusion import fuse_snapshot
from algorithms.propagation import EllipsoidalReachPropagator, default_directions
from cli.common import add_common_arguments, print_header, resolve_config
from data.config_loader import build_quadrotor_study
from data.results_io import write_fused_tube, write_snapshots
from models.ellipsoid import volume
from models.system import TimeGrid, sample_trajectories
from visualization.tube_plotter import plot_reach_tube, save_reach_tube


def register(subparsers) -> None:
    parser = subparsers.add_parser('quadrotor-demo', help='Run the quadrotor reachability case study')
    add_common_arguments(parser)
    parser.add_argument('-n', '--n-directions', dest='n_directions', type=int, help='Number of directions N')
    parser.add_argument('--snapshots', type=int, help='Equispaced snapshot count (endpoints included)')
    parser.add_argument('--samples', type=int, help='Monte-Carlo trajectories for the containment check')
    parser.add_argument('--t-end', dest='t_end', type=float, help='Final time (default: horizon x steps)')
    parser.add_argument('--snapshots-out', dest='snapshots_out', help='Write 12-D snapshots (.json/.csv)')
    parser.add_argument('--tube-out', dest='tube_out', help='Write the fused projected tube JSON')
    parser.add_argument('--plot', help='Write an HTML rendering of the projected tube')
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = resolve_config(args)
    study = build_quadrotor_study(config)
    coords = config.coords if config.coords is not None else list(study.coords)
    grid = TimeGrid.uniform(config.t_start, config.end_time, config.h, config.snapshots)

    print("Designing tracking controller and propagating...")
    directions = default_directions(study.system.n, config.n_directions, config.seed)
    propagator = EllipsoidalReachPropagator(study.system, study.uncertainty,
                                            config.disturbance_model, config.workers)
    snapshots = propagator.propagate(directions, grid)
    fused = [fuse_snapshot(s, coords, config.fusion_tol, config.max_iterations) for s in snapshots]

    times = [s.time for s in snapshots]
    full_check = check_containment(study.system, study.uncertainty, times, [s.ellipsoids() for s in snapshots],
                                   step=config.h, count=config.samples, seed=config.seed,
                                   tol=DEFAULT_CHECK_TOL, t_start=config.t_start)
    fused_check = check_containment(study.system, study.uncertainty, times, [[r.ellipsoid] for r in fused],
                                    step=config.h, count=config.samples, seed=config.seed,
                                    coords=coords, tol=DEFAULT_CHECK_TOL, t_start=config.t_start)

    stats = propagator.get_run_stats()
    print_header("QUADROTOR REACHABILITY CASE STUDY")
    print(f"Directions: {stats['n_directions']}   Workers: {stats['workers']}   "
          f"Propagation: {stats['t_propagation']:.3f} s")
    print(f"Projection coordinates: {coords}")
    print(f"\n{'t':>8} {'fused volume':>14} {'certified':>10} {'max form 12-D':>14} {'max form fused':>15}")
    print("-" * 65)
    for t, result, a, b in zip(times, fused, full_check.snapshots, fused_check.snapshots):
        print(f"{t:>8.3f} {volume(result.ellipsoid):>14.6e} {str(result.certified):>10} "
              f"{a.max_form:>14.6f} {b.max_form:>15.6f}")
    passed = full_check.passed and fused_check.passed
    print(f"\nContainment over {config.samples} trajectories: {'PASS' if passed else 'FAIL'}")

    if args.snapshots_out:
        write_snapshots(snapshots, args.snapshots_out)
        print(f"Snapshots written to {args.snapshots_out}")
    if args.tube_out:
        write_fused_tube(times, fused, args.tube_out)
        print(f"Fused tube written to {args.tube_out}")
    if args.plot:
        if len(coords) != 3:
            print("Plot skipped: the projection is not three-dimensional")
        else:
            path = sample_trajectories(study.system, study.uncertainty, grid, min(config.samples, 200),
                                       config.seed)
            fig = plot_reach_tube([r.ellipsoid for r in fused], times, path.states[:, :, coords],
                                  title=f"Quadrotor reach tube, N = {config.n_directions}")
            save_reach_tube(fig, args.plot)
            print(f"Plot written to {args.plot}")
    print()
    return 0 if passed else 1
