"""
Test suite for the dense linear algebra and integration helpers.
"""
import unittest
import sys
from pathlib import Path

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from utils.errors import ConvergenceError, NotPositiveDefiniteError
from utils.integrators import integrate, rk4_step
from utils.linalg import (
    cholesky,
    inv_spd,
    is_positive_definite,
    logdet_spd,
    polyfit,
    solve_spd,
    sqrt_psd,
    sym_eig,
)


def random_spd(rng, d, floor=0.1):
    m = rng.standard_normal((d, d))
    return m @ m.T + floor * np.eye(d)


class TestSymEig(unittest.TestCase):
    """Test cases for the symmetric eigen-solvers."""

    def setUp(self):
        """Set up a seeded generator."""
        self.rng = np.random.default_rng(7)

    def test_jacobi_matches_eigh(self):
        """Test Jacobi eigenvalues against LAPACK on random symmetric matrices."""
        for d in range(1, 7):
            m = self.rng.standard_normal((d, d))
            m = m + m.T
            values, vectors = sym_eig(m, method="jacobi")
            expected = np.sort(np.linalg.eigvalsh(m))[::-1]
            np.testing.assert_allclose(values, expected, atol=1e-10 * max(1.0, np.abs(expected).max()))
            np.testing.assert_allclose(vectors @ np.diag(values) @ vectors.T, m, atol=1e-9)
            np.testing.assert_allclose(vectors.T @ vectors, np.eye(d), atol=1e-10)

    def test_descending_order(self):
        """Test that eigenvalues come back sorted in descending order."""
        values, _ = sym_eig(np.diag([1.0, 5.0, 3.0]), method="jacobi")
        np.testing.assert_array_equal(values, [5.0, 3.0, 1.0])

    def test_diagonal_matrix_needs_no_sweep(self):
        """Test that a diagonal input converges within a single sweep."""
        values, vectors = sym_eig(np.diag([2.0, 1.0]), method="jacobi", max_sweeps=1)
        np.testing.assert_array_equal(values, [2.0, 1.0])
        np.testing.assert_array_equal(np.abs(vectors), np.eye(2))

    def test_sweep_cap_raises(self):
        """Test that an exhausted sweep budget raises ConvergenceError."""
        m = self.rng.standard_normal((6, 6))
        with self.assertRaises(ConvergenceError):
            sym_eig(m + m.T, method="jacobi", tol=0.0, max_sweeps=1)

    def test_unknown_method(self):
        """Test rejection of an unknown solver name."""
        with self.assertRaises(ValueError):
            sym_eig(np.eye(2), method="qr")


class TestFactorizations(unittest.TestCase):
    """Test cases for square roots, Cholesky and solves."""

    def setUp(self):
        """Set up a seeded generator."""
        self.rng = np.random.default_rng(11)

    def test_sqrt_psd_squares_back(self):
        """Test that sqrt_psd(M)^2 reproduces M with both kernels."""
        m = random_spd(self.rng, 5)
        for method in ("lapack", "jacobi"):
            root = sqrt_psd(m, method=method)
            np.testing.assert_allclose(root @ root, m, rtol=1e-9, atol=1e-10)
            np.testing.assert_allclose(root, root.T)

    def test_sqrt_psd_semidefinite(self):
        """Test a rank-deficient PSD matrix and rounding drift."""
        v = np.array([[1.0], [2.0]])
        root = sqrt_psd(v @ v.T - 1e-16 * np.eye(2))
        np.testing.assert_allclose(root @ root, v @ v.T, atol=1e-7)

    def test_sqrt_psd_rejects_indefinite(self):
        """Test NotPositiveDefiniteError for a clearly indefinite matrix."""
        with self.assertRaises(NotPositiveDefiniteError):
            sqrt_psd(np.diag([1.0, -0.5]))

    def test_cholesky(self):
        """Test Cholesky factor and failure on an indefinite input."""
        m = random_spd(self.rng, 4)
        factor = cholesky(m)
        np.testing.assert_allclose(factor @ factor.T, m, rtol=1e-12)
        self.assertTrue(np.allclose(factor, np.tril(factor)))
        with self.assertRaises(NotPositiveDefiniteError):
            cholesky(np.diag([1.0, 0.0]))
        self.assertFalse(is_positive_definite(np.diag([1.0, -1.0])))
        self.assertTrue(is_positive_definite(m))

    def test_logdet_and_solves(self):
        """Test logdet, solve and inverse against numpy."""
        m = random_spd(self.rng, 4)
        self.assertAlmostEqual(logdet_spd(m), np.linalg.slogdet(m)[1], places=10)
        rhs = self.rng.standard_normal(4)
        np.testing.assert_allclose(m @ solve_spd(m, rhs), rhs, atol=1e-10)
        np.testing.assert_allclose(inv_spd(m) @ m, np.eye(4), atol=1e-9)


class TestPolyfit(unittest.TestCase):
    """Test cases for the least-squares polynomial fit."""

    def test_recovers_exact_quartic(self):
        """Test recovery of an exactly representable quartic."""
        coefficients = np.array([0.02, 0.01, 3e-3, -2e-4, 1e-5])
        xs = np.arange(1, 11, dtype=float)
        ys = np.polynomial.polynomial.polyval(xs, coefficients)
        np.testing.assert_allclose(polyfit(xs, ys, 4), coefficients, atol=1e-9)

    def test_constant_data(self):
        """Test that constant data yields the constant polynomial."""
        fitted = polyfit(np.arange(1, 8), np.full(7, 0.3), 4)
        np.testing.assert_allclose(fitted, [0.3, 0.0, 0.0, 0.0, 0.0], atol=1e-10)

    def test_noisy_fit_residual(self):
        """Test that the fit residual does not exceed the injected noise."""
        rng = np.random.default_rng(3)
        xs = np.arange(1, 21, dtype=float)
        clean = np.polynomial.polynomial.polyval(xs, [0.1, 0.05, 0.01, 1e-3, 1e-4])
        noise = 0.01 * clean * rng.standard_normal(xs.size)
        fitted = polyfit(xs, clean + noise, 4)
        residual = np.polynomial.polynomial.polyval(xs, fitted) - (clean + noise)
        self.assertLessEqual(np.linalg.norm(residual), np.linalg.norm(noise))

    def test_beats_perturbed_coefficients(self):
        """Test that no perturbation of the fitted coefficients has a smaller residual."""
        rng = np.random.default_rng(5)
        xs = np.arange(1, 16, dtype=float)
        clean = np.polynomial.polynomial.polyval(xs, [0.2, 0.03, 4e-3, -1e-4, 2e-5])
        ys = clean + 0.01 * rng.standard_normal(xs.size)
        fitted = polyfit(xs, ys, 4)
        best = np.linalg.norm(np.polynomial.polynomial.polyval(xs, fitted) - ys)
        for _ in range(100):
            candidate = fitted * (1.0 + 1e-3 * rng.standard_normal(5)) + 1e-6 * rng.standard_normal(5)
            residual = np.linalg.norm(np.polynomial.polynomial.polyval(xs, candidate) - ys)
            self.assertGreaterEqual(residual, best - 1e-12)

    def test_too_few_points(self):
        """Test rejection of fewer distinct abscissae than coefficients."""
        with self.assertRaises(ValueError):
            polyfit([1, 2, 3, 4, 4], [1, 2, 3, 4, 5], 4)


class TestIntegrators(unittest.TestCase):
    """Test cases for fixed-step RK4."""

    def test_exponential_decay(self):
        """Test RK4 accuracy on y' = -y."""
        times = np.linspace(0.0, 1.0, 101)
        states = integrate(lambda t, y: -y, np.array([1.0]), times)
        self.assertAlmostEqual(states[-1, 0], np.exp(-1.0), places=9)
        self.assertEqual(states.shape, (101, 1))

    def test_step_halving_ratio(self):
        """Test fourth order convergence: each halving shrinks the endpoint change about 16 times."""
        def rhs(t, y):
            return np.cos(t) * y

        ends = [integrate(rhs, np.array([1.0]), np.linspace(0.0, 2.0, steps + 1))[-1, 0]
                for steps in (20, 40, 80)]
        ratio = (ends[0] - ends[1]) / (ends[1] - ends[2])
        self.assertGreater(ratio, 14.0)
        self.assertLess(ratio, 18.0)
        self.assertAlmostEqual(ends[2], np.exp(np.sin(2.0)), places=5)

    def test_backward_sweep(self):
        """Test integration over decreasing nodes."""
        times = np.linspace(1.0, 0.0, 51)
        states = integrate(lambda t, y: 2.0 * t * np.ones_like(y), np.array([1.0]), times)
        self.assertAlmostEqual(states[-1, 0], 0.0, places=12)

    def test_post_step_hook(self):
        """Test that post_step replaces the state."""
        calls = []

        def hook(i, t, y):
            calls.append(i)
            return np.zeros_like(y)

        states = integrate(lambda t, y: np.ones_like(y), np.zeros(2), np.linspace(0, 1, 5), hook)
        self.assertEqual(calls, [1, 2, 3, 4])
        np.testing.assert_array_equal(states[-1], np.zeros(2))

    def test_single_step_matrix_state(self):
        """Test one RK4 step on a matrix-valued state."""
        y = rk4_step(lambda t, y: y, 0.0, np.eye(2), 0.1)
        expected = 1.0 + 0.1 + 0.1 ** 2 / 2 + 0.1 ** 3 / 6 + 0.1 ** 4 / 24
        np.testing.assert_allclose(y, expected * np.eye(2))


if __name__ == '__main__':
    unittest.main()
