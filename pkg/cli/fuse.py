"""
reach fuse - one outer ellipsoid per snapshot.

Usage:
    python cli/reach.py fuse snapshots.json -o tube.json
    python cli/reach.py fuse snapshots.csv --coords 0,1,2 -o tube_xyz.json
"""
from algorithms.fusion import fuse_snapshot
from cli.common import add_common_arguments, print_header, resolve_config
from data.results_io import read_snapshots, write_fused_tube
from models.ellipsoid import validate_coords, volume
from utils.errors import ConfigError


def register(subparsers) -> None:
    parser = subparsers.add_parser('fuse', help='Fuse each snapshot into a single outer ellipsoid')
    parser.add_argument('snapshots_file', metavar='snapshots', help='Snapshot file written by propagate')
    add_common_arguments(parser)
    parser.add_argument('-o', '--output', required=True, help='Fused tube JSON')
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = resolve_config(args)
    snapshots = read_snapshots(args.snapshots_file)
    coords = config.coords
    if coords is not None:
        try:
            coords = validate_coords(coords, snapshots[0].center.size)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    results = [fuse_snapshot(s, coords, config.fusion_tol, config.max_iterations) for s in snapshots]
    write_fused_tube([s.time for s in snapshots], results, args.output)

    print_header("ELLIPSOID FUSION")
    print(f"{'t':>10} {'N':>4} {'iterations':>11} {'volume':>14} {'certified':>10}")
    print("-" * 53)
    for snap, result in zip(snapshots, results):
        print(f"{snap.time:>10.4f} {snap.n_directions:>4d} {result.iterations:>11d} "
              f"{volume(result.ellipsoid):>14.6e} {str(result.certified):>10}")
    print(f"\nWritten to: {args.output}")
    return 0
