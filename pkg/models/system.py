"""
Linear time-varying systems with ellipsoidal set-valued uncertainty.

    x' = A(t) x + B(t) u + G(t) w,   x(t0) in X0, u(t) in U(t), w(t) in W(t)

Matrix-valued and vector-valued time functions are either constants, closed
forms, or dense grids with linear interpolation between nodes.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from models.ellipsoid import Ellipsoid
from utils.errors import NotPositiveDefiniteError
from utils.integrators import rk4_step
from utils.linalg import sqrt_psd, symmetrize
from utils.sampling import make_rng, sample_unit_ball

Span = Optional[Tuple[float, float]]
_SPAN_SLACK = 1e-9


class TimeFunction:
    """Array-valued function of time."""

    span: Span = None

    def __call__(self, t: float) -> np.ndarray:
        raise NotImplementedError


class ConstantFunction(TimeFunction):
    def __init__(self, value):
        self.value = np.array(value, dtype=float)
        self.value.setflags(write=False)

    def __call__(self, t: float) -> np.ndarray:
        return self.value


class ClosedFormFunction(TimeFunction):
    """Wraps a callable t -> array, optionally restricted to a time span."""

    def __init__(self, fn: Callable[[float], np.ndarray], span: Span = None):
        self.fn = fn
        self.span = span

    def __call__(self, t: float) -> np.ndarray:
        _check_span(self.span, t)
        return np.asarray(self.fn(t), dtype=float)


class GridFunction(TimeFunction):
    """Piecewise-linear interpolation of values sampled on strictly increasing times."""

    def __init__(self, times: Sequence[float], values: Sequence):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.times.ndim != 1 or self.times.size < 2:
            raise ValueError("Grid function needs at least two time nodes")
        if self.values.shape[0] != self.times.size:
            raise ValueError(
                f"Grid has {self.times.size} nodes but {self.values.shape[0]} values"
            )
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("Grid times must be strictly increasing")
        self.span = (float(self.times[0]), float(self.times[-1]))

    def __call__(self, t: float) -> np.ndarray:
        _check_span(self.span, t)
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        i = min(max(i, 0), self.times.size - 2)
        t0, t1 = self.times[i], self.times[i + 1]
        w = (t - t0) / (t1 - t0)
        w = min(max(w, 0.0), 1.0)
        return (1.0 - w) * self.values[i] + w * self.values[i + 1]


def _check_span(span: Span, t: float) -> None:
    if span is None:
        return
    slack = _SPAN_SLACK * max(1.0, abs(span[0]), abs(span[1]))
    if t < span[0] - slack or t > span[1] + slack:
        raise ValueError(f"t={t:g} outside the function's time span [{span[0]:g}, {span[1]:g}]")


def as_time_function(value) -> TimeFunction:
    if isinstance(value, TimeFunction):
        return value
    if callable(value):
        return ClosedFormFunction(value)
    return ConstantFunction(value)


def _intersect_spans(spans: Sequence[Span]) -> Span:
    bounded = [s for s in spans if s is not None]
    if not bounded:
        return None
    return (max(s[0] for s in bounded), min(s[1] for s in bounded))


@dataclass(frozen=True)
class LtvSystem:
    """System matrices A(t) (n x n), B(t) (n x m), G(t) (n x p)."""
    a: TimeFunction
    b: TimeFunction
    g: TimeFunction
    n: int = field(init=False)
    m: int = field(init=False)
    p: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "a", as_time_function(self.a))
        object.__setattr__(self, "b", as_time_function(self.b))
        object.__setattr__(self, "g", as_time_function(self.g))
        span = self.span
        if span is not None and span[0] > span[1]:
            raise ValueError("System matrix functions have disjoint time spans")
        t0 = span[0] if span is not None else 0.0
        a, b, g = (np.atleast_2d(f(t0)) for f in (self.a, self.b, self.g))
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"A must be square, got {a.shape}")
        if b.shape[0] != a.shape[0] or g.shape[0] != a.shape[0]:
            raise ValueError(f"Row counts of A {a.shape}, B {b.shape}, G {g.shape} disagree")
        object.__setattr__(self, "n", a.shape[0])
        object.__setattr__(self, "m", b.shape[1])
        object.__setattr__(self, "p", g.shape[1])

    @classmethod
    def constant(cls, a, b, g) -> "LtvSystem":
        return cls(ConstantFunction(np.atleast_2d(a)), ConstantFunction(np.atleast_2d(b)),
                   ConstantFunction(np.atleast_2d(g)))

    @property
    def span(self) -> Span:
        return _intersect_spans([self.a.span, self.b.span, self.g.span])

    def evaluate(self, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        a = np.atleast_2d(self.a(t))
        b = np.atleast_2d(self.b(t))
        g = np.atleast_2d(self.g(t))
        if a.shape != (self.n, self.n) or b.shape != (self.n, self.m) or g.shape != (self.n, self.p):
            raise ValueError(f"System dimensions changed at t={t:g}")
        return a, b, g


def evaluate_system(sys: LtvSystem, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(A(t), B(t), G(t)); exact for closed forms, linearly interpolated on grids."""
    return sys.evaluate(t)


@dataclass(frozen=True)
class EllipsoidalSignal:
    """Time-varying ellipsoidal set E(c(t), S(t)) with S(t) positive semidefinite."""
    center: TimeFunction
    shape: TimeFunction

    def __post_init__(self):
        object.__setattr__(self, "center", as_time_function(self.center))
        object.__setattr__(self, "shape", as_time_function(self.shape))

    @classmethod
    def constant(cls, center, shape) -> "EllipsoidalSignal":
        return cls(ConstantFunction(np.asarray(center, dtype=float).reshape(-1)),
                   ConstantFunction(np.atleast_2d(shape)))

    @classmethod
    def point(cls, center) -> "EllipsoidalSignal":
        c = np.asarray(center, dtype=float).reshape(-1)
        return cls.constant(c, np.zeros((c.size, c.size)))

    @property
    def span(self) -> Span:
        return _intersect_spans([self.center.span, self.shape.span])

    def at(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        return (np.asarray(self.center(t), dtype=float).reshape(-1),
                np.atleast_2d(self.shape(t)))


@dataclass(frozen=True)
class UncertaintySpec:
    """Initial set X0, input set U(t) and disturbance set W(t)."""
    x0: Ellipsoid
    u: EllipsoidalSignal
    w: EllipsoidalSignal

    def validate(self, sys: LtvSystem, t: float = 0.0) -> None:
        """Check dimensions against ``sys`` and PSD shapes at time t."""
        if self.x0.dim != sys.n:
            raise ValueError(f"X0 has dimension {self.x0.dim}, system has n={sys.n}")
        for name, signal, size in (("U", self.u, sys.m), ("W", self.w, sys.p)):
            center, shape = signal.at(t)
            if center.size != size or shape.shape != (size, size):
                raise ValueError(
                    f"{name} set has center {center.size} / shape {shape.shape}, expected {size}"
                )
            values = np.linalg.eigvalsh(symmetrize(shape))
            if values.size and values[0] < -1e-12 * max(1.0, np.max(np.abs(values))):
                raise NotPositiveDefiniteError(f"{name}({t:g}) shape matrix is not PSD")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform RK4 node grid with a set of snapshot node indices."""
    t_start: float
    t_end: float
    step: float
    snapshot_indices: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.step <= 0.0:
            raise ValueError("Integration step must be positive")
        if self.t_end <= self.t_start:
            raise ValueError("Time grid end must be after its start")
        ratio = (self.t_end - self.t_start) / self.step
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(
                f"Step {self.step:g} does not divide the interval "
                f"[{self.t_start:g}, {self.t_end:g}]"
            )
        steps = int(round(ratio))
        indices = tuple(sorted(set(int(i) for i in self.snapshot_indices) | {0, steps}))
        if indices[0] < 0 or indices[-1] > steps:
            raise ValueError("Snapshot index out of range")
        object.__setattr__(self, "snapshot_indices", indices)

    @classmethod
    def uniform(cls, t_start: float, t_end: float, step: float, snapshots: int = 2) -> "TimeGrid":
        """
        Grid with ``snapshots`` equispaced snapshot times including both endpoints.

        Snapshot times that fall between nodes are snapped to the nearest node.
        """
        if snapshots < 2:
            raise ValueError("At least two snapshots (the endpoints) are required")
        steps = int(round((t_end - t_start) / step))
        wanted = np.linspace(0.0, steps, snapshots)
        return cls(t_start, t_end, step, tuple(int(round(w)) for w in wanted))

    @property
    def steps(self) -> int:
        return int(round((self.t_end - self.t_start) / self.step))

    @property
    def times(self) -> np.ndarray:
        nodes = self.t_start + self.step * np.arange(self.steps + 1)
        nodes[-1] = self.t_end
        return nodes

    @property
    def snapshot_times(self) -> np.ndarray:
        return self.times[list(self.snapshot_indices)]


@dataclass
class SampledPath:
    """Monte-Carlo trajectories at the snapshot times of a grid."""
    times: np.ndarray
    states: np.ndarray
    controls: Optional[np.ndarray] = None
    disturbances: Optional[np.ndarray] = None


def _signal_sampler(signal: EllipsoidalSignal):
    fixed_root = None
    if isinstance(signal.shape, ConstantFunction) and signal.shape.value.size:
        fixed_root = sqrt_psd(np.atleast_2d(signal.shape.value))

    def draw(rng: np.random.Generator, t: float, count: int, mode: str) -> np.ndarray:
        center, shape = signal.at(t)
        if center.size == 0:
            return np.zeros((count, 0))
        root = fixed_root if fixed_root is not None else sqrt_psd(shape)
        ball = sample_unit_ball(rng, count, center.size, mode)
        return center + ball @ root

    return draw


def sample_trajectories(sys: LtvSystem, unc: UncertaintySpec, grid: TimeGrid, count: int,
                        seed: int, mode: str = "interior",
                        record_inputs: bool = False) -> SampledPath:
    """
    Integrate ``count`` random admissible trajectories.

    x(t0) is drawn from X0; u and w are drawn from U(t_k), W(t_k) at each node and
    held constant over the RK4 step. ``mode`` selects interior (uniform) or
    boundary draws for all three sets.

    Returns:
        SampledPath with states of shape (count, snapshots, n)
    """
    if count < 1:
        raise ValueError("Trajectory count must be at least 1")
    unc.validate(sys, grid.t_start)
    rng = make_rng(seed, 0)

    ball = sample_unit_ball(rng, count, sys.n, mode)
    x = unc.x0.center + ball @ sqrt_psd(unc.x0.shape)
    draw_u = _signal_sampler(unc.u)
    draw_w = _signal_sampler(unc.w)

    times = grid.times
    snap_index = {idx: k for k, idx in enumerate(grid.snapshot_indices)}
    states = np.empty((count, len(snap_index), sys.n))
    states[:, snap_index[0], :] = x
    controls = np.empty((count, grid.steps, sys.m)) if record_inputs else None
    disturbances = np.empty((count, grid.steps, sys.p)) if record_inputs else None

    for i in range(grid.steps):
        t = times[i]
        u = draw_u(rng, t, count, mode)
        w = draw_w(rng, t, count, mode)
        if record_inputs:
            controls[:, i, :] = u
            disturbances[:, i, :] = w

        def rhs(s, y, u=u, w=w):
            a, b, g = sys.evaluate(s)
            return y @ a.T + u @ b.T + w @ g.T

        x = rk4_step(rhs, t, x, times[i + 1] - t)
        if i + 1 in snap_index:
            states[:, snap_index[i + 1], :] = x

    return SampledPath(grid.snapshot_times, states, controls, disturbances)


def sample_trajectory(sys: LtvSystem, unc: UncertaintySpec, grid: TimeGrid, seed: int,
                      mode: str = "interior") -> SampledPath:
    """One random admissible trajectory; states have shape (snapshots, n)."""
    batch = sample_trajectories(sys, unc, grid, 1, seed, mode=mode, record_inputs=True)
    return SampledPath(batch.times, batch.states[0], batch.controls[0], batch.disturbances[0])
