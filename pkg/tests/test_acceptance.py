"""
Monte-Carlo acceptance checks on the quadrotor case study.

Sample counts and step sizes are reduced by default; set ANYTIME_REACH_FULL=1
for 2000 trajectories, h = 5e-4 and the full tracking grid.
"""
import os
import unittest
import sys
from pathlib import Path

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from algorithms.anytime import TimingModel, run_horizon
from algorithms.containment import check_containment
from algorithms.fusion import FusionInput, check_certificate, fuse_snapshot
from algorithms.propagation import EllipsoidalReachPropagator, ReachSnapshot, default_directions
from models.ellipsoid import normalized_distance, sample, support, volume
from models.quadrotor import POSITION_COORDS, build_case_study
from models.system import TimeGrid, sample_trajectories

FULL = os.environ.get("ANYTIME_REACH_FULL") == "1"
SAMPLES = 2000 if FULL else 200
STEP = 5e-4 if FULL else 1e-3
INTERVALS = 2000 if FULL else 1000
N_DIRECTIONS = 10
SNAPSHOTS = 10


class TestQuadrotorAcceptance(unittest.TestCase):
    """Containment, tightness and fusion on the 12-D closed loop."""

    @classmethod
    def setUpClass(cls):
        """Propagate N = 10 ellipsoids on [0, 1] and sample closed-loop trajectories."""
        cls.study = build_case_study(horizon=1.0, intervals=INTERVALS)
        cls.grid = TimeGrid.uniform(0.0, 1.0, STEP, SNAPSHOTS)
        directions = default_directions(12, N_DIRECTIONS, seed=0)
        cls.snapshots = EllipsoidalReachPropagator(cls.study.system, cls.study.uncertainty).propagate(
            directions, cls.grid)
        cls.times = [s.time for s in cls.snapshots]
        cls.paths = sample_trajectories(cls.study.system, cls.study.uncertainty, cls.grid, SAMPLES, seed=1)

    def test_full_state_containment(self):
        """Test that every sampled state lies in every 12-D ellipsoid."""
        sets = [s.ellipsoids() for s in self.snapshots]
        for mode in ("interior", "boundary"):
            with self.subTest(mode=mode):
                verdict = check_containment(self.study.system, self.study.uncertainty, self.times, sets,
                                            STEP, count=SAMPLES, seed=2, mode=mode)
                self.assertTrue(verdict.passed, f"max form {verdict.max_form}")

    def test_projected_containment(self):
        """Test that the fused (x, y, z) ellipsoids contain the sampled positions."""
        fused = [fuse_snapshot(s, POSITION_COORDS) for s in self.snapshots]
        verdict = check_containment(self.study.system, self.study.uncertainty, self.times,
                                    [[r.ellipsoid] for r in fused], STEP, count=SAMPLES, seed=3,
                                    coords=POSITION_COORDS)
        self.assertTrue(verdict.passed, f"max form {verdict.max_form}")

    def test_sampled_support_never_exceeds_ellipsoidal_support(self):
        """Test sampled extents along the propagated directions against the ellipsoid supports."""
        violations = 0
        for k, snap in enumerate(self.snapshots):
            states = self.paths.states[:, k, :]
            for i, e in enumerate(snap.ellipsoids()):
                direction = snap.directions[i]
                bound = support(e, direction)
                if np.max(states @ direction) > bound + 1e-9 * (1.0 + abs(bound)):
                    violations += 1
        self.assertEqual(violations, 0)

    def test_fused_volume_non_increasing(self):
        """Test that nested direction families give non-increasing fused volumes."""
        final = self.snapshots[-1]
        volumes = []
        for n in range(1, N_DIRECTIONS + 1):
            prefix = ReachSnapshot(final.time, final.center, final.shapes[:n], final.directions[:n])
            volumes.append(volume(fuse_snapshot(prefix, POSITION_COORDS).ellipsoid))
        for smaller, larger in zip(volumes[1:], volumes[:-1]):
            self.assertLessEqual(smaller, larger * (1.0 + 1e-6))

    def test_fusion_certificates(self):
        """Test that every projected and full fusion carries a valid certificate."""
        for snap in self.snapshots[1:]:
            for coords in (POSITION_COORDS, None):
                inp = FusionInput.from_snapshot(snap)
                if coords is not None:
                    inp = inp.project(coords)
                result = fuse_snapshot(snap, coords)
                self.assertTrue(check_certificate(result.certificate, inp).valid)

    def test_projection_of_intersection(self):
        """Test that projected points sampled from the 12-D intersection lie in the fused projection."""
        snap = self.snapshots[SNAPSHOTS // 2]
        inp = FusionInput.from_snapshot(snap)
        smallest = min(inp.ellipsoids(), key=lambda e: np.linalg.slogdet(e.shape)[1])
        candidates = sample(smallest, 10000 if FULL else 2000, seed=4)
        inside = np.ones(candidates.shape[0], dtype=bool)
        for e in inp.ellipsoids():
            inside &= normalized_distance(e, candidates) <= 1.0
        points = np.vstack([candidates[inside], snap.center])

        fused = fuse_snapshot(snap, POSITION_COORDS).ellipsoid
        forms = normalized_distance(fused, points[:, list(POSITION_COORDS)])
        self.assertEqual(int(np.sum(forms > 1.0 + 1e-9)), 0)


class TestChainedSupervisorAcceptance(unittest.TestCase):
    """Ten chained prediction steps of the supervised quadrotor run."""

    def test_chained_run_contains_trajectories(self):
        """Test the K = 10 chained report against trajectories from the original X0."""
        study = build_case_study(horizon=1.0, intervals=INTERVALS)
        n_cap = N_DIRECTIONS if FULL else 4
        model = TimingModel(np.array([0.0, 0.1]), 1, n_cap)
        trace = [1e-3, 100.0] * 5
        report = run_horizon(study.uncertainty.x0, study.system, study.uncertainty, 0.1, 10, trace,
                             model, n_cap, step=STEP, coords=POSITION_COORDS)
        self.assertEqual(report.n_max_sequence, [1, n_cap] * 5)

        times = [r.t_end for r in report.records]
        full = check_containment(study.system, study.uncertainty, times, [[r.state] for r in report.records],
                                 STEP, count=SAMPLES, seed=5, t_start=0.0)
        projected = check_containment(study.system, study.uncertainty, times,
                                      [[r.fused.ellipsoid] for r in report.records], STEP,
                                      count=SAMPLES, seed=5, coords=POSITION_COORDS, t_start=0.0)
        self.assertTrue(full.passed, f"max form {full.max_form}")
        self.assertTrue(projected.passed, f"max form {projected.max_form}")


class TestDeterminism(unittest.TestCase):
    """Bitwise reproducibility across worker counts."""

    def test_workers_do_not_change_results(self):
        """Test propagation and fusion outputs for workers 1 and 4."""
        study = build_case_study(horizon=1.0, intervals=INTERVALS)
        grid = TimeGrid.uniform(0.0, 0.1, STEP, 3)
        directions = default_directions(12, 5, seed=0)
        runs = []
        for workers in (1, 4):
            propagator = EllipsoidalReachPropagator(study.system, study.uncertainty, workers=workers)
            runs.append(propagator.propagate(directions, grid))
        for a, b in zip(*runs):
            np.testing.assert_array_equal(a.center, b.center)
            for x, y in zip(a.shapes, b.shapes):
                np.testing.assert_array_equal(x, y)
        fused = [fuse_snapshot(run[-1], POSITION_COORDS).ellipsoid for run in runs]
        np.testing.assert_array_equal(fused[0].shape, fused[1].shape)


if __name__ == '__main__':
    unittest.main()
