"""
Classical fixed-step fourth order Runge-Kutta integration.

Every initial value problem in the package (center, shape matrices, adjoint
directions, Riccati and feedforward sweeps, sampled trajectories) runs through
these helpers so that the cost of an integration depends only on the number of
steps.
"""
from typing import Callable, Optional

import numpy as np

Rhs = Callable[[float, np.ndarray], np.ndarray]
PostStep = Callable[[int, float, np.ndarray], np.ndarray]


def rk4_step(fn: Rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """
    Advance y' = fn(t, y) by one RK4 step of size h (h may be negative).

    Args:
        fn: Right-hand side f(t, y) returning an array shaped like y
        t: Current time
        y: Current state (any array shape)
        h: Step size

    Returns:
        State at t + h
    """
    k1 = fn(t, y)
    k2 = fn(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = fn(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = fn(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(fn: Rhs, y0: np.ndarray, times: np.ndarray,
              post_step: Optional[PostStep] = None) -> np.ndarray:
    """
    Integrate over a node sequence and return the state at every node.

    ``times`` may be decreasing for backward sweeps. ``post_step`` is called
    after each step with (node index, node time, state) and returns the state
    to continue from (used for symmetrization and eigenvalue clamping).

    Returns:
        Array of shape (len(times),) + y0.shape
    """
    nodes = np.asarray(times, dtype=float)
    y = np.array(y0, dtype=float)
    out = np.empty((nodes.size,) + y.shape)
    out[0] = y
    for i in range(1, nodes.size):
        t = nodes[i - 1]
        y = rk4_step(fn, t, y, nodes[i] - t)
        if post_step is not None:
            y = post_step(i, nodes[i], y)
        out[i] = y
    return out
