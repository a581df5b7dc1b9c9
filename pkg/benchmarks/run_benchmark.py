"""
Benchmark runner for the reachability pipeline.

This script:
1. Builds the quadrotor hover-tracking closed loop
2. Times propagation and fusion for several direction counts on one prediction step
3. Compares the serial timing model t_center + N * t_shape with the measured propagation time
4. Exports results to txt, json, and csv formats
"""

import sys
from pathlib import Path
from datetime import datetime
import argparse

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from algorithms.anytime import benchmark
from data.results_io import write_summary, write_timings
from models.quadrotor import build_case_study
from models.system import TimeGrid


# Direction counts to time
TEST_COUNTS = [1, 2, 3, 5, 8, 10]
HORIZON = 0.1
STEP = HORIZON / 200
SERIAL_TOLERANCE = 0.2


def run_benchmark(reps: int = 3, workers: int = 1, seed: int = 0):
    """Time the pipeline on [0, HORIZON] for every entry of TEST_COUNTS."""
    print("\n" + "=" * 80)
    print("ANYTIME REACH PIPELINE BENCHMARK")
    print("=" * 80)
    print(f"Timestamp: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    print(f"Prediction step: [0, {HORIZON}] with h = {STEP:g}, workers = {workers}, reps = {reps}")
    print("=" * 80)

    study = build_case_study()
    grid = TimeGrid.uniform(0.0, HORIZON, STEP, 2)
    samples = benchmark(study.system, study.uncertainty, grid, TEST_COUNTS, reps, workers, seed, study.coords)

    results = []
    for sample in samples:
        serial = sample.t_center + sample.n_directions * sample.t_shape
        ratio = sample.t_propagation / serial if serial > 0 else float('nan')
        print(f"\n[N = {sample.n_directions}]")
        print("-" * 80)
        print(f"  t_center:       {sample.t_center:.6f}s")
        print(f"  t_shape:        {sample.t_shape:.6f}s")
        print(f"  t_propagation:  {sample.t_propagation:.6f}s (serial model ratio {ratio:.3f})")
        print(f"  t_opt:          {sample.t_opt:.6f}s")
        print(f"  t_total:        {sample.t_total:.6f}s")
        results.append({
            'n_directions': sample.n_directions,
            't_center_seconds': sample.t_center,
            't_shape_seconds': sample.t_shape,
            't_propagation_seconds': sample.t_propagation,
            't_opt_seconds': sample.t_opt,
            't_total_seconds': sample.t_total,
            'serial_model_ratio': ratio,
            'serial_model_within_tolerance': abs(ratio - 1.0) <= SERIAL_TOLERANCE,
            'opt_below_propagation': sample.t_opt < sample.t_propagation,
            'workers': sample.workers,
        })

    return samples, results


def export_results_txt(results, output_path):
    """Export results to plain text format."""
    with open(output_path, 'w') as f:
        f.write("=" * 80 + "\n")
        f.write("ANYTIME REACH PIPELINE BENCHMARK RESULTS\n")
        f.write("=" * 80 + "\n")
        f.write(f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n")
        f.write(f"Direction counts: {len(results)}\n")
        f.write("=" * 80 + "\n\n")

        for result in results:
            f.write(f"N = {result['n_directions']}\n")
            f.write("-" * 80 + "\n")
            f.write(f"  Center IVP:      {result['t_center_seconds']:.6f}s\n")
            f.write(f"  One shape IVP:   {result['t_shape_seconds']:.6f}s\n")
            f.write(f"  Propagation:     {result['t_propagation_seconds']:.6f}s\n")
            f.write(f"  Fusion:          {result['t_opt_seconds']:.6f}s\n")
            f.write(f"  Total:           {result['t_total_seconds']:.6f}s\n")
            f.write(f"  Serial ratio:    {result['serial_model_ratio']:.3f}\n")
            f.write("\n" + "=" * 80 + "\n\n")

    print(f"\nExported text results to: {output_path}")


def export_results_json(results, output_path):
    """Export the per-N summary with the run settings as JSON."""
    write_summary({
        'timestamp': datetime.now().isoformat(),
        'horizon': HORIZON,
        'step': STEP,
        'results': results,
    }, output_path)
    print(f"Exported JSON results to: {output_path}")


def export_results_csv(samples, output_path):
    """Export the raw timing table; `reach benchmark --from-timings` refits f_hat from it."""
    write_timings(samples, output_path)
    print(f"Exported CSV results to: {output_path}")


def main():
    """Main benchmark execution."""
    parser = argparse.ArgumentParser(description='Time the reachability pipeline on the quadrotor')
    parser.add_argument('--reps', type=int, default=3, help='Repetitions per N (default: 3)')
    parser.add_argument('--workers', type=int, default=1, help='Worker threads (default: 1)')
    args = parser.parse_args()

    print("\n[1/2] Running benchmarks...")
    samples, results = run_benchmark(args.reps, args.workers)

    print("\n[2/2] Exporting results...")
    benchmarks_dir = Path(__file__).parent
    timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')

    export_results_txt(results, benchmarks_dir / f'results_{timestamp}.txt')
    export_results_json(results, benchmarks_dir / f'results_{timestamp}.json')
    export_results_csv(samples, benchmarks_dir / f'results_{timestamp}.csv')

    print("\n" + "=" * 80)
    print("BENCHMARK COMPLETE")
    print("=" * 80)
    print(f"Results saved to: {benchmarks_dir}")

    within = sum(r['serial_model_within_tolerance'] for r in results if r['n_directions'] > 1)
    multi = sum(1 for r in results if r['n_directions'] > 1)
    print(f"\nSerial timing model within {SERIAL_TOLERANCE:.0%}: {within}/{multi} direction counts")
    print(f"Fusion faster than propagation: "
          f"{sum(r['opt_below_propagation'] for r in results if r['n_directions'] > 1)}/{multi}")
    print("=" * 80)


if __name__ == "__main__":
    main()
