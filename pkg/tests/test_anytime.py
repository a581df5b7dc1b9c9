"""
Test suite for timing models, N_max selection and the anytime supervisor.
"""
import math
import unittest
import sys
from dataclasses import replace
from pathlib import Path
from unittest.mock import patch

import numpy as np
from scipy.linalg import expm

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from algorithms.anytime import (
    AnytimeReport,
    AnytimeSupervisor,
    TimingModel,
    TimingSample,
    anytime_step,
    benchmark,
    fit_timing_model,
    run_horizon,
    select_nmax,
)
from algorithms.fusion import fuse_snapshot
from models.ellipsoid import Ellipsoid, normalized_distance
from models.system import EllipsoidalSignal, LtvSystem, TimeGrid, UncertaintySpec, sample_trajectories


ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])


def linear_model(slope):
    return TimingModel(np.array([0.0, slope]), 1, 10)


def synthetic_samples(coefficients, ns):
    samples = []
    for n in ns:
        total = float(np.polynomial.polynomial.polyval(n, coefficients))
        samples.append(TimingSample(n, 0.0, 0.0, 0.0, total, total, 1))
    return samples


def planar_problem(u_shape=0.04):
    system = LtvSystem.constant(ROTATION, [[0.0], [1.0]], [[1.0], [0.0]])
    unc = UncertaintySpec(Ellipsoid([1.0, 0.0], 0.01 * np.eye(2)),
                          EllipsoidalSignal.constant([0.2], [[u_shape]]),
                          EllipsoidalSignal.point([0.0]))
    return system, unc


class TestSelectNmax(unittest.TestCase):
    """Test cases for the budget-to-N_max mapping."""

    def test_linear_model(self):
        """Test f_hat(N) = 0.1 N with 0.55s available: N_hat = 5.5, N_max = 5."""
        selection = select_nmax(linear_model(0.1), 0.55, 10)
        self.assertAlmostEqual(selection.n_hat, 5.5, places=9)
        self.assertEqual(selection.n_max, 5)

    def test_quadratic_model(self):
        """Test f_hat(N) = N^2 with 10s available: N_hat = sqrt(10), N_max = 3."""
        model = TimingModel(np.array([0.0, 0.0, 1.0]), 1, 10)
        selection = select_nmax(model, 10.0, 10)
        self.assertAlmostEqual(selection.n_hat, math.sqrt(10.0), places=9)
        self.assertEqual(selection.n_max, 3)

    def test_budget_below_single_direction(self):
        """Test that an unattainable budget still yields N_max = 1."""
        with self.assertLogs("anytime_reach.anytime", level="WARNING"):
            selection = select_nmax(linear_model(0.1), 0.05, 10)
        self.assertEqual(tuple(selection), (1.0, 1))
        self.assertEqual(select_nmax(linear_model(0.1), 0.0, 10).n_max, 1)

    def test_generous_budget_hits_cap(self):
        """Test that N_max = N_cap when even N_cap fits."""
        self.assertEqual(tuple(select_nmax(linear_model(0.1), 5.0, 8)), (8.0, 8))

    def test_matches_integer_scan(self):
        """Test a fitted quartic against an exhaustive integer scan on random budgets."""
        coefficients = [0.01, 0.02, 1e-3, 2e-4, 1e-5]
        rng = np.random.default_rng(0)
        model = fit_timing_model(synthetic_samples(coefficients, range(1, 21)))
        n_cap = 20
        low, high = float(model(1)), float(model(n_cap))
        for budget in rng.uniform(low, high, 100):
            expected = max(n for n in range(1, n_cap + 1) if model(n) <= budget)
            selection = select_nmax(model, budget, n_cap)
            self.assertEqual(selection.n_max, expected)
            self.assertGreaterEqual(selection.n_hat, selection.n_max)
            self.assertLess(selection.n_hat, selection.n_max + 1)

    def test_invalid_cap(self):
        """Test rejection of N_cap < 1."""
        with self.assertRaises(ValueError):
            select_nmax(linear_model(0.1), 1.0, 0)


class TestTimingModel(unittest.TestCase):
    """Test cases for fitting and storing the timing model."""

    def test_fit_recovers_quartic(self):
        """Test recovery of exact quartic timings."""
        coefficients = [0.02, 0.01, 3e-3, -2e-4, 1e-5]
        model = fit_timing_model(synthetic_samples(coefficients, range(1, 11)))
        np.testing.assert_allclose(model.coefficients, coefficients, atol=1e-9)
        self.assertEqual((model.n_min, model.n_max), (1, 10))
        self.assertLess(model.residual_norm, 1e-9)

    def test_fit_needs_five_distinct(self):
        """Test rejection of fewer than five distinct N."""
        samples = synthetic_samples([0.0, 1.0], [1, 2, 3, 4, 4, 4])
        with self.assertRaises(ValueError):
            fit_timing_model(samples)

    def test_dict_form(self):
        """Test the dictionary form of the model."""
        model = TimingModel(np.array([0.1, 0.2, 0.0, 0.0, 0.01]), 1, 10, 0.5)
        back = TimingModel.from_dict(model.to_dict())
        np.testing.assert_array_equal(back.coefficients, model.coefficients)
        self.assertEqual(back.residual_norm, 0.5)
        self.assertAlmostEqual(model(2), 0.1 + 0.4 + 0.16)

    def test_rejects_non_finite(self):
        """Test rejection of NaN coefficients."""
        with self.assertRaises(ValueError):
            TimingModel(np.array([np.nan]), 1, 2)


class TestBenchmark(unittest.TestCase):
    """Test cases for pipeline timing."""

    def test_samples_per_n(self):
        """Test one sample per N with zero fusion time for N = 1."""
        system, unc = planar_problem()
        grid = TimeGrid.uniform(0.0, 0.1, 0.005)
        samples = benchmark(system, unc, grid, [1, 2, 3], reps=3)
        self.assertEqual([s.n_directions for s in samples], [1, 2, 3])
        self.assertEqual(samples[0].t_opt, 0.0)
        for s in samples:
            self.assertGreater(s.t_total, 0.0)
            self.assertGreaterEqual(s.t_propagation, s.t_center)

    def test_times_full_and_projected_fusion(self):
        """Test that a projected benchmark times the chained full fusion as well as the projected one."""
        system, unc = planar_problem()
        grid = TimeGrid.uniform(0.0, 0.1, 0.005)
        with patch("algorithms.anytime.fuse_snapshot", wraps=fuse_snapshot) as fuse:
            benchmark(system, unc, grid, [2], reps=3, coords=[1])
        targets = [call.args[1] if len(call.args) > 1 else None for call in fuse.call_args_list]
        self.assertEqual(targets, [None, [1]] * 3)

    def test_reps_validation(self):
        """Test rejection of fewer than three repetitions."""
        system, unc = planar_problem()
        with self.assertRaises(ValueError):
            benchmark(system, unc, TimeGrid.uniform(0.0, 0.1, 0.01), [1], reps=2)


class TestSupervisor(unittest.TestCase):
    """Test cases for chained anytime steps."""

    def test_alternating_trace(self):
        """Test that N_max follows a scarce/generous availability trace."""
        system, unc = planar_problem()
        model = linear_model(0.1)
        trace = [0.15, 0.55, 0.15, 0.55]
        report = run_horizon(unc.x0, system, unc, 0.1, 4, trace, model, n_cap=5)
        expected = [select_nmax(model, t, 5).n_max for t in trace]
        self.assertEqual(report.n_max_sequence, expected)
        self.assertEqual(expected, [1, 5, 1, 5])
        self.assertEqual([r.k for r in report.records], [0, 1, 2, 3])
        self.assertAlmostEqual(report.records[-1].t_end, 0.4)

    def test_zero_uncertainty_follows_flow(self):
        """Test that the chained center equals the deterministic flow of the input center."""
        system, unc = planar_problem(u_shape=0.0)
        supervisor = AnytimeSupervisor(system, unc, linear_model(0.01), n_cap=3)
        report = supervisor.run_horizon(unc.x0, 0.2, [1.0] * 5)
        b = np.array([0.0, 1.0])
        phi = expm(ROTATION * 1.0)
        forced = np.linalg.solve(ROTATION, (phi - np.eye(2)) @ b * 0.2)
        np.testing.assert_allclose(report.final_state.center, phi @ unc.x0.center + forced, atol=1e-6)
        stats = supervisor.get_run_stats()
        self.assertEqual(stats["steps"], 5)
        self.assertEqual(stats["uncertified_steps"], 0)

    def test_enlarged_initial_set_stays_sound(self):
        """Test that chaining from a superset of X0 contains trajectories started anywhere in it."""
        system, unc = planar_problem()
        larger = Ellipsoid(unc.x0.center + np.array([0.02, -0.01]), 4.0 * unc.x0.shape)
        report = run_horizon(larger, system, unc, 0.1, 3, [0.15, 0.55, 0.25], linear_model(0.1), n_cap=4)
        self.assertEqual(report.n_max_sequence, [1, 4, 2])

        grid = TimeGrid.uniform(0.0, 0.3, 0.001, 4)
        for start, seed in ((larger, 3), (unc.x0, 4)):
            path = sample_trajectories(system, replace(unc, x0=start), grid, 300, seed=seed, mode="boundary")
            for k, record in enumerate(report.records):
                distance = normalized_distance(record.state, path.states[:, k + 1, :])
                self.assertTrue(np.all(distance <= 1.0 + 1e-3))

    def test_projected_report(self):
        """Test that projection changes the reported set but not the forwarded state."""
        system, unc = planar_problem()
        state, record = anytime_step(unc.x0, system, unc, 0.1, 1.0, linear_model(0.1), 3, coords=[1])
        self.assertEqual(record.fused.ellipsoid.dim, 1)
        self.assertEqual(state.dim, 2)
        self.assertEqual(record.state.dim, 2)
        self.assertTrue(record.certified)

    def test_scalar_system_uses_one_direction(self):
        """Test that a scalar system runs with N_max = 1 under any budget."""
        system = LtvSystem.constant([[-1.0]], [[1.0]], [[1.0]])
        unc = UncertaintySpec(Ellipsoid([1.0], [[0.1]]), EllipsoidalSignal.constant([0.0], [[0.01]]),
                              EllipsoidalSignal.constant([0.0], [[0.01]]))
        _, record = anytime_step(unc.x0, system, unc, 0.1, 10.0, linear_model(0.1), 5)
        self.assertEqual(record.n_max, 1)

    def test_trace_length_mismatch(self):
        """Test rejection of a trace whose length differs from the step count."""
        system, unc = planar_problem()
        with self.assertRaises(ValueError):
            run_horizon(unc.x0, system, unc, 0.1, 3, [1.0, 1.0], linear_model(0.1), 2)

    def test_report_dict_form(self):
        """Test the dictionary form of a report."""
        system, unc = planar_problem()
        report = run_horizon(unc.x0, system, unc, 0.1, 2, [0.15, 0.25], linear_model(0.1), 2, coords=[0, 1])
        back = AnytimeReport.from_dict(report.to_dict())
        self.assertEqual(back.coords, (0, 1))
        self.assertEqual(back.n_max_sequence, report.n_max_sequence)
        self.assertEqual(back.rows()[1]["N_max"], 2)
        self.assertEqual(sorted(back.rows()[0]),
                         sorted(["k", "t_available", "N_hat", "N_max", "wall_s", "volume", "certified"]))


if __name__ == '__main__':
    unittest.main()
