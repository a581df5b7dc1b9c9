"""
Finite-horizon linear-quadratic tracking.

For x' = A x + B u and the cost

    1/2 (x(T) - x_d(T))^T M (x(T) - x_d(T)) + 1/2 int (x - x_d)^T Q (x - x_d) + u^T R u dt

the optimal law is u = K(t) x + R^{-1} B^T v(t) with K = -R^{-1} B^T P, where P and v
are integrated backward from T:

    -P' = A^T P + P A - P S P + Q,          P(T) = M
    -v' = (A - S P)^T v + Q x_d,            v(T) = M x_d(T)

and S = B R^{-1} B^T.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid

from models.system import GridFunction
from utils.errors import NotPositiveDefiniteError
from utils.integrators import integrate
from utils.linalg import is_positive_definite, solve_spd, symmetrize
from utils.logging_utils import get_logger

logger = get_logger("lq_tracking")

Reference = Callable[[float], np.ndarray]


def solve_riccati(a: np.ndarray, b: np.ndarray, q: np.ndarray, r: np.ndarray,
                  m: np.ndarray, times: np.ndarray) -> np.ndarray:
    """
    Backward RK4 sweep of the Riccati matrix equation.

    Args:
        a, b: Plant matrices (n x n, n x m)
        q, r, m: State, input and terminal weights (Q, M PSD; R PD)
        times: Increasing grid nodes on [t0, T]

    Returns:
        P at every node, shape (len(times), n, n); P[-1] == M

    Raises:
        NotPositiveDefiniteError: P lost definiteness (grid too coarse)
    """
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    s = b @ solve_spd(np.atleast_2d(r), b.T)
    q = symmetrize(q)

    def rhs(_, p):
        return -(a.T @ p + p @ a - p @ s @ p + q)

    def post_step(_, t, p):
        p = symmetrize(p)
        if not is_positive_definite(p):
            raise NotPositiveDefiniteError(f"Riccati solution lost definiteness at t={t:g}")
        return p

    nodes = np.asarray(times, dtype=float)
    backward = integrate(rhs, symmetrize(m), nodes[::-1], post_step)
    return backward[::-1].copy()


def solve_feedforward(a: np.ndarray, b: np.ndarray, q: np.ndarray, r: np.ndarray,
                      m: np.ndarray, riccati: np.ndarray, reference: Reference,
                      times: np.ndarray) -> np.ndarray:
    """
    Backward RK4 sweep of v' = -(A - S P(t))^T v - Q x_d(t), v(T) = M x_d(T).

    P(t) between nodes is linearly interpolated from ``riccati``.

    Returns:
        v at every node, shape (len(times), n)
    """
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    q = np.atleast_2d(q)
    s = b @ solve_spd(np.atleast_2d(r), b.T)
    nodes = np.asarray(times, dtype=float)
    p_of_t = GridFunction(nodes, riccati)

    def rhs(t, v):
        return -(a - s @ p_of_t(t)).T @ v - q @ reference(t)

    terminal = np.atleast_2d(m) @ np.asarray(reference(nodes[-1]), dtype=float)
    backward = integrate(rhs, terminal, nodes[::-1])
    return backward[::-1].copy()


@dataclass
class LqTracking:
    """Designed tracking controller sampled on a time grid."""
    a: np.ndarray
    b: np.ndarray
    q: np.ndarray
    r: np.ndarray
    m: np.ndarray
    times: np.ndarray
    riccati: np.ndarray
    feedforward: np.ndarray
    reference: Reference

    @classmethod
    def design(cls, a: np.ndarray, b: np.ndarray, q: np.ndarray, r: np.ndarray, m: np.ndarray,
               reference: Reference, horizon: float, intervals: int = 2000) -> "LqTracking":
        """Solve the Riccati and feedforward sweeps on ``intervals`` uniform steps over [0, horizon]."""
        if horizon <= 0.0 or intervals < 1:
            raise ValueError("Need a positive horizon and at least one grid interval")
        times = np.linspace(0.0, horizon, intervals + 1)
        riccati = solve_riccati(a, b, q, r, m, times)
        feedforward = solve_feedforward(a, b, q, r, m, riccati, reference, times)
        logger.info("LQ tracking designed on %d intervals over [0, %g]", intervals, horizon)
        return cls(np.atleast_2d(a), np.atleast_2d(b), np.atleast_2d(q), np.atleast_2d(r),
                   np.atleast_2d(m), times, riccati, feedforward, reference)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @cached_property
    def input_map(self) -> np.ndarray:
        """R^{-1} B^T."""
        return solve_spd(self.r, self.b.T)

    @cached_property
    def gains(self) -> np.ndarray:
        """K = -R^{-1} B^T P at every node, shape (nodes, m, n)."""
        return np.einsum("ij,tjk->tik", -self.input_map, self.riccati)

    @cached_property
    def feedforward_inputs(self) -> np.ndarray:
        """R^{-1} B^T v at every node, shape (nodes, m)."""
        return self.feedforward @ self.input_map.T

    def gain(self, t: float) -> np.ndarray:
        return GridFunction(self.times, self.gains)(t)

    def control(self, t: float, x: np.ndarray, use_feedforward: bool = True) -> np.ndarray:
        """u = K(t) x + R^{-1} B^T v(t)."""
        u = self.gain(t) @ np.asarray(x, dtype=float)
        if use_feedforward:
            u = u + GridFunction(self.times, self.feedforward_inputs)(t)
        return u


@dataclass
class TrackingRun:
    times: np.ndarray
    states: np.ndarray
    cost: float


def simulate_tracking(tracking: LqTracking, x0: np.ndarray, use_feedforward: bool = True) -> TrackingRun:
    """
    Nominal closed-loop simulation on the design grid with its tracking cost.

    The cost is the functional the controller minimizes, with the running part
    integrated by the trapezoidal rule.
    """
    times = tracking.times
    gains = tracking.gains
    ff = tracking.feedforward_inputs if use_feedforward else np.zeros_like(tracking.feedforward_inputs)
    k_of_t = GridFunction(times, gains)
    ff_of_t = GridFunction(times, ff)

    def rhs(t, x):
        return tracking.a @ x + tracking.b @ (k_of_t(t) @ x + ff_of_t(t))

    states = integrate(rhs, np.asarray(x0, dtype=float), times)
    running = np.empty(times.size)
    for i, t in enumerate(times):
        e = states[i] - tracking.reference(t)
        u = gains[i] @ states[i] + ff[i]
        running[i] = e @ tracking.q @ e + u @ tracking.r @ u
    final = states[-1] - tracking.reference(times[-1])
    cost = 0.5 * float(final @ tracking.m @ final) + 0.5 * float(trapezoid(running, times))
    return TrackingRun(times, states, cost)
