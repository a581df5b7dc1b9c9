"""
Test suite for LTV systems, uncertainty sets, time grids and the trajectory sampler.
"""
import unittest
import sys
from pathlib import Path

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from models.ellipsoid import Ellipsoid, normalized_distance
from models.system import (
    ClosedFormFunction,
    EllipsoidalSignal,
    GridFunction,
    LtvSystem,
    TimeGrid,
    UncertaintySpec,
    evaluate_system,
    sample_trajectories,
    sample_trajectory,
)
from utils.errors import NotPositiveDefiniteError


def scalar_problem(u_radius=1.0):
    system = LtvSystem.constant([[0.0]], [[1.0]], [[1.0]])
    uncertainty = UncertaintySpec(
        Ellipsoid([0.0], [[1.0]]),
        EllipsoidalSignal.constant([0.0], [[u_radius ** 2]]),
        EllipsoidalSignal.point([0.0]),
    )
    return system, uncertainty


class TestTimeFunctions(unittest.TestCase):
    """Test cases for constant, closed-form and grid functions."""

    def test_grid_interpolation(self):
        """Test linear interpolation between nodes and exact values on nodes."""
        f = GridFunction([0.0, 1.0, 2.0], [[0.0], [2.0], [0.0]])
        np.testing.assert_allclose(f(0.5), [1.0])
        np.testing.assert_allclose(f(1.0), [2.0])
        np.testing.assert_allclose(f(1.75), [0.5])

    def test_grid_interpolation_order(self):
        """Test that halving the grid spacing cuts the mid-node error about four times."""
        def exact(t):
            return np.array([[np.sin(t), np.cos(2.0 * t)], [t * t, np.exp(-t)]])

        errors = []
        for intervals in (20, 40, 80):
            times = np.linspace(0.0, 2.0, intervals + 1)
            f = GridFunction(times, [exact(t) for t in times])
            mids = 0.5 * (times[:-1] + times[1:])
            errors.append(max(np.max(np.abs(f(t) - exact(t))) for t in mids))
        for coarse, fine in zip(errors, errors[1:]):
            self.assertGreater(coarse / fine, 3.5)
            self.assertLess(coarse / fine, 4.5)

    def test_grid_span_enforced(self):
        """Test that evaluation outside the grid raises ValueError."""
        f = GridFunction([0.0, 1.0], [0.0, 1.0])
        with self.assertRaises(ValueError):
            f(1.5)

    def test_grid_validation(self):
        """Test rejection of non-increasing times and length mismatches."""
        with self.assertRaises(ValueError):
            GridFunction([0.0, 0.0], [1.0, 2.0])
        with self.assertRaises(ValueError):
            GridFunction([0.0, 1.0, 2.0], [1.0, 2.0])

    def test_closed_form_system(self):
        """Test evaluation of a system given by closed forms."""
        system = LtvSystem(lambda t: [[0.0, 1.0], [-t, 0.0]], [[0.0], [1.0]], [[1.0], [0.0]])
        a, b, g = evaluate_system(system, 2.0)
        np.testing.assert_array_equal(a, [[0.0, 1.0], [-2.0, 0.0]])
        self.assertEqual((system.n, system.m, system.p), (2, 1, 1))

    def test_system_span_is_intersection(self):
        """Test that the system span intersects the spans of its matrix functions."""
        a = GridFunction([0.0, 2.0], [[[0.0]], [[1.0]]])
        b = ClosedFormFunction(lambda t: [[1.0]], span=(1.0, 3.0))
        system = LtvSystem(a, b, [[1.0]])
        self.assertEqual(system.span, (1.0, 2.0))

    def test_row_mismatch(self):
        """Test rejection of inconsistent matrix dimensions."""
        with self.assertRaises(ValueError):
            LtvSystem.constant(np.eye(2), np.ones((3, 1)), np.ones((2, 1)))


class TestUncertainty(unittest.TestCase):
    """Test cases for uncertainty validation."""

    def test_dimension_mismatch(self):
        """Test rejection of an input set of the wrong size."""
        system, _ = scalar_problem()
        bad = UncertaintySpec(Ellipsoid([0.0], [[1.0]]),
                              EllipsoidalSignal.constant([0.0, 0.0], np.eye(2)),
                              EllipsoidalSignal.point([0.0]))
        with self.assertRaises(ValueError):
            bad.validate(system)

    def test_indefinite_input_shape(self):
        """Test rejection of an input shape that is not PSD."""
        system, _ = scalar_problem()
        bad = UncertaintySpec(Ellipsoid([0.0], [[1.0]]),
                              EllipsoidalSignal.constant([0.0], [[-1.0]]),
                              EllipsoidalSignal.point([0.0]))
        with self.assertRaises(NotPositiveDefiniteError):
            bad.validate(system)

    def test_degenerate_signals_allowed(self):
        """Test that singleton input and disturbance sets validate."""
        system, unc = scalar_problem(u_radius=0.0)
        unc.validate(system)


class TestTimeGrid(unittest.TestCase):
    """Test cases for the RK4 node grid."""

    def test_uniform_snapshots(self):
        """Test equispaced snapshots and endpoint inclusion."""
        grid = TimeGrid.uniform(0.0, 1.0, 0.01, 5)
        self.assertEqual(grid.steps, 100)
        self.assertEqual(grid.snapshot_indices, (0, 25, 50, 75, 100))
        np.testing.assert_allclose(grid.snapshot_times, [0.0, 0.25, 0.5, 0.75, 1.0])
        self.assertEqual(grid.times[-1], 1.0)

    def test_step_must_divide(self):
        """Test rejection of a step that does not divide the interval."""
        with self.assertRaises(ValueError):
            TimeGrid(0.0, 1.0, 0.3)

    def test_invalid_bounds(self):
        """Test rejection of empty intervals and non-positive steps."""
        with self.assertRaises(ValueError):
            TimeGrid(1.0, 1.0, 0.1)
        with self.assertRaises(ValueError):
            TimeGrid(0.0, 1.0, 0.0)
        with self.assertRaises(ValueError):
            TimeGrid.uniform(0.0, 1.0, 0.1, 1)


class TestSampling(unittest.TestCase):
    """Test cases for Monte-Carlo trajectories."""

    def test_reproducible(self):
        """Test that equal seeds give identical trajectories."""
        system, unc = scalar_problem()
        grid = TimeGrid.uniform(0.0, 1.0, 0.01, 3)
        first = sample_trajectories(system, unc, grid, 20, seed=4)
        second = sample_trajectories(system, unc, grid, 20, seed=4)
        np.testing.assert_array_equal(first.states, second.states)
        self.assertEqual(first.states.shape, (20, 3, 1))

    def test_scalar_bound(self):
        """Test that x' = u with |x0| <= 1, |u| <= 1 stays within |x(t)| <= 1 + t."""
        system, unc = scalar_problem()
        grid = TimeGrid.uniform(0.0, 1.0, 0.01, 5)
        path = sample_trajectories(system, unc, grid, 300, seed=1, mode="boundary")
        bounds = 1.0 + path.times
        self.assertTrue(np.all(np.abs(path.states[:, :, 0]) <= bounds + 1e-12))

    def test_initial_states_in_x0(self):
        """Test that initial states are drawn from X0."""
        x0 = Ellipsoid([1.0, -1.0], np.diag([2.0, 0.5]))
        system = LtvSystem.constant(np.zeros((2, 2)), np.zeros((2, 1)), np.zeros((2, 1)))
        unc = UncertaintySpec(x0, EllipsoidalSignal.point([0.0]), EllipsoidalSignal.point([0.0]))
        path = sample_trajectories(system, unc, TimeGrid.uniform(0.0, 0.1, 0.05), 200, seed=3)
        self.assertTrue(np.all(normalized_distance(x0, path.states[:, 0, :]) <= 1.0 + 1e-12))
        np.testing.assert_allclose(path.states[:, 0, :], path.states[:, -1, :])

    def test_single_trajectory_records_inputs(self):
        """Test that the single-trajectory sampler records its inputs."""
        system, unc = scalar_problem()
        grid = TimeGrid.uniform(0.0, 0.1, 0.01)
        path = sample_trajectory(system, unc, grid, seed=0)
        self.assertEqual(path.states.shape, (2, 1))
        self.assertEqual(path.controls.shape, (10, 1))
        self.assertTrue(np.all(np.abs(path.controls) <= 1.0 + 1e-12))

    def test_count_validation(self):
        """Test rejection of a zero trajectory count."""
        system, unc = scalar_problem()
        with self.assertRaises(ValueError):
            sample_trajectories(system, unc, TimeGrid.uniform(0.0, 1.0, 0.5), 0, seed=0)


if __name__ == '__main__':
    unittest.main()
