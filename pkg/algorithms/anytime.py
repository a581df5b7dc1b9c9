"""
Deadline-aware supervision of the reachability pipeline.

The wall time of one prediction step grows with the number of directions N.
A quartic fit f_hat(N) of measured totals tells the supervisor how many
directions fit into the time available at each step; whatever it picks, the
result is a sound over-approximation, only its tightness changes.
"""
from dataclasses import asdict, dataclass, field, replace
from statistics import median
import time
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial
from scipy.optimize import brentq

from algorithms.fusion import (
    DEFAULT_FUSION_TOL,
    DEFAULT_MAX_ITERATIONS,
    FusionResult,
    fuse_snapshot,
)
from algorithms.propagation import DisturbanceModel, EllipsoidalReachPropagator, default_directions
from models.ellipsoid import Ellipsoid, validate_coords, volume
from models.system import LtvSystem, TimeGrid, UncertaintySpec
from utils.linalg import polyfit
from utils.logging_utils import get_logger

logger = get_logger("anytime")

MODEL_DEGREE = 4
MIN_DISTINCT_N = 5
MIN_REPS = 3
DEFAULT_STEPS_PER_HORIZON = 200


@dataclass
class TimingSample:
    """Median wall-clock timings (seconds) of one pipeline run with N directions."""
    n_directions: int
    t_center: float
    t_shape: float
    t_opt: float
    t_propagation: float
    t_total: float
    workers: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class TimingModel:
    """Polynomial estimate f_hat(N) of the total step time."""
    coefficients: np.ndarray
    n_min: int
    n_max: int
    residual_norm: float = 0.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if self.coefficients.size == 0 or not np.all(np.isfinite(self.coefficients)):
            raise ValueError("Timing model needs finite coefficients")

    def evaluate(self, n):
        """f_hat at scalar or array N."""
        return polynomial.polyval(n, self.coefficients)

    __call__ = evaluate

    def to_dict(self) -> Dict[str, Any]:
        return {
            "coefficients": self.coefficients.tolist(),
            "n_min": self.n_min,
            "n_max": self.n_max,
            "residual_norm": self.residual_norm,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TimingModel":
        return cls(
            coefficients=np.asarray(data["coefficients"], dtype=float),
            n_min=int(data["n_min"]),
            n_max=int(data["n_max"]),
            residual_norm=float(data.get("residual_norm", 0.0)),
        )


class NmaxSelection(NamedTuple):
    n_hat: float
    n_max: int


def _timed_run(propagator: EllipsoidalReachPropagator, directions, grid: TimeGrid,
               coords: Optional[Sequence[int]]) -> Tuple[Dict[str, Any], float]:
    snapshots = propagator.propagate(directions, grid)
    stats = propagator.get_run_stats()
    if len(directions) == 1:
        return stats, 0.0
    start = time.perf_counter()
    fuse_snapshot(snapshots[-1])
    if coords is not None:
        fuse_snapshot(snapshots[-1], coords)
    return stats, time.perf_counter() - start


def benchmark(sys: LtvSystem, unc: UncertaintySpec, grid: TimeGrid, ns: Sequence[int],
              reps: int = MIN_REPS, workers: int = 1, seed: int = 0,
              coords: Optional[Sequence[int]] = None,
              model: DisturbanceModel = DisturbanceModel.ADDITIVE) -> List[TimingSample]:
    """
    Measure the pipeline for every N in ``ns``.

    Each N runs ``reps`` times and every timing field is the median over the
    repetitions. Fusion is timed on the last snapshot the way a supervised step
    runs it: the full-dimensional fusion that is chained forward, plus the
    projected fusion when ``coords`` is given. With N = 1 there is nothing to
    fuse and t_opt is 0.

    Args:
        sys, unc: System and uncertainty sets
        grid: Integration grid of one prediction step
        ns: Direction counts to measure
        reps: Repetitions per N (at least 3)
        workers: Worker pool size for propagation
        seed: Direction seed
        coords: Optional projection applied before fusion

    Returns:
        One TimingSample per N, in the order given
    """
    if reps < MIN_REPS:
        raise ValueError(f"benchmark needs at least {MIN_REPS} repetitions, got {reps}")
    if not ns:
        raise ValueError("No direction counts to benchmark")
    if coords is not None:
        coords = validate_coords(coords, sys.n)

    propagator = EllipsoidalReachPropagator(sys, unc, model, workers)
    samples = []
    for n_dir in ns:
        if n_dir < 1:
            raise ValueError(f"Direction count must be positive, got {n_dir}")
        directions = default_directions(sys.n, int(n_dir), seed)
        runs = [_timed_run(propagator, directions, grid, coords) for _ in range(reps)]
        t_prop = [stats["t_propagation"] for stats, _ in runs]
        t_opt = [opt for _, opt in runs]
        sample = TimingSample(
            n_directions=int(n_dir),
            t_center=median(stats["t_center"] for stats, _ in runs),
            t_shape=median(stats["t_shape"] for stats, _ in runs),
            t_opt=median(t_opt),
            t_propagation=median(t_prop),
            t_total=median(p + o for p, o in zip(t_prop, t_opt)),
            workers=int(workers),
        )
        logger.info("N=%d: t_propagation=%.4fs t_opt=%.4fs t_total=%.4fs",
                    sample.n_directions, sample.t_propagation, sample.t_opt, sample.t_total)
        samples.append(sample)
    return samples


def fit_timing_model(samples: Sequence[TimingSample], degree: int = MODEL_DEGREE) -> TimingModel:
    """
    Least-squares quartic through (N, t_total).

    Raises:
        ValueError: fewer than five distinct N
    """
    ns = np.array([s.n_directions for s in samples], dtype=float)
    totals = np.array([s.t_total for s in samples], dtype=float)
    distinct = np.unique(ns).size
    if distinct < MIN_DISTINCT_N:
        raise ValueError(f"Timing fit needs at least {MIN_DISTINCT_N} distinct N, got {distinct}")
    coefficients = polyfit(ns, totals, degree)
    residual = float(np.linalg.norm(polynomial.polyval(ns, coefficients) - totals))
    return TimingModel(coefficients, int(ns.min()), int(ns.max()), residual)


def select_nmax(model: TimingModel, t_available: float, n_cap: int) -> NmaxSelection:
    """
    Largest direction count whose predicted time fits the budget.

    f_hat - t_available is scanned at integer N from ``n_cap`` down to 1; the
    first non-positive value fixes N_max and the root in [N_max, N_max + 1] is
    located by bisection. When even N_cap fits, N_max = N_cap. When N = 1 does
    not fit, N_max = 1 is still returned with a warning.
    """
    if n_cap < 1:
        raise ValueError("n_cap must be at least 1")

    def excess(n):
        return float(model.evaluate(n)) - t_available

    if t_available <= 0.0 or excess(1) > 0.0:
        logger.warning("Budget %.4gs is below the predicted time for N=1 (%.4gs); deadline at risk",
                       t_available, float(model.evaluate(1)))
        return NmaxSelection(1.0, 1)
    if excess(n_cap) <= 0.0:
        return NmaxSelection(float(n_cap), int(n_cap))

    k = n_cap - 1
    while excess(k) > 0.0:
        k -= 1
    if excess(k) == 0.0:
        return NmaxSelection(float(k), k)
    return NmaxSelection(float(brentq(excess, k, k + 1, xtol=1e-12)), k)


@dataclass
class AnytimeStepRecord:
    """One supervised prediction step over [t_start, t_end]."""
    k: int
    t_start: float
    t_end: float
    t_available: float
    n_hat: float
    n_max: int
    wall_s: float
    fused: FusionResult
    state: Ellipsoid

    @property
    def certified(self) -> bool:
        return self.fused.certified

    @property
    def volume(self) -> float:
        return volume(self.fused.ellipsoid)

    def to_row(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "t_available": self.t_available,
            "N_hat": self.n_hat,
            "N_max": self.n_max,
            "wall_s": self.wall_s,
            "volume": self.volume,
            "certified": self.certified,
        }

    def to_dict(self) -> Dict[str, Any]:
        data = self.to_row()
        data.update(t_start=self.t_start, t_end=self.t_end,
                    fused=self.fused.to_dict(), state=self.state.to_dict())
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AnytimeStepRecord":
        return cls(
            k=int(data["k"]),
            t_start=float(data["t_start"]),
            t_end=float(data["t_end"]),
            t_available=float(data["t_available"]),
            n_hat=float(data["N_hat"]),
            n_max=int(data["N_max"]),
            wall_s=float(data["wall_s"]),
            fused=FusionResult.from_dict(data["fused"]),
            state=Ellipsoid.from_dict(data["state"]),
        )


@dataclass
class AnytimeReport:
    records: List[AnytimeStepRecord] = field(default_factory=list)
    coords: Optional[Tuple[int, ...]] = None

    @property
    def n_max_sequence(self) -> List[int]:
        return [r.n_max for r in self.records]

    @property
    def final_state(self) -> Optional[Ellipsoid]:
        return self.records[-1].state if self.records else None

    def rows(self) -> List[Dict[str, Any]]:
        return [r.to_row() for r in self.records]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "coords": list(self.coords) if self.coords is not None else None,
            "steps": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AnytimeReport":
        coords = data.get("coords")
        return cls(
            records=[AnytimeStepRecord.from_dict(r) for r in data["steps"]],
            coords=tuple(coords) if coords is not None else None,
        )


class AnytimeSupervisor:
    """
    Chains prediction steps, sizing each direction family to its time budget.
    """

    def __init__(self, system: LtvSystem, uncertainty: UncertaintySpec, model: TimingModel,
                 n_cap: int, step: Optional[float] = None, coords: Optional[Sequence[int]] = None,
                 workers: int = 1, seed: int = 0,
                 disturbance_model: DisturbanceModel = DisturbanceModel.ADDITIVE,
                 fusion_tol: float = DEFAULT_FUSION_TOL,
                 max_iterations: int = DEFAULT_MAX_ITERATIONS):
        """
        Initialize supervisor.

        Args:
            system, uncertainty: Dynamics and uncertainty sets; uncertainty.x0 is
                replaced by the state handed to each step
            model: Timing model f_hat
            n_cap: Upper bound on the direction count
            step: RK4 step; defaults to 1/200 of the horizon length
            coords: Optional projection of the reported ellipsoid
            workers: Worker pool size
            seed: Direction seed
        """
        if n_cap < 1:
            raise ValueError("n_cap must be at least 1")
        self.system = system
        self.uncertainty = uncertainty
        self.model = model
        self.n_cap = int(n_cap)
        self.step = step
        self.coords = tuple(validate_coords(coords, system.n)) if coords is not None else None
        self.workers = int(workers)
        self.seed = int(seed)
        self.propagator = EllipsoidalReachPropagator(system, uncertainty, disturbance_model, workers)
        self.fusion_tol = fusion_tol
        self.max_iterations = max_iterations
        self.last_run_stats: Dict[str, object] = {}

    def _grid(self, t_start: float, t_end: float) -> TimeGrid:
        h = self.step if self.step is not None else (t_end - t_start) / DEFAULT_STEPS_PER_HORIZON
        return TimeGrid.uniform(t_start, t_end, h, 2)

    def anytime_step(self, state: Ellipsoid, k: int, dt: float,
                     t_available: float) -> Tuple[Ellipsoid, AnytimeStepRecord]:
        """
        Propagate ``state`` over [k dt, (k+1) dt] with a budget-sized family and fuse.

        Returns:
            (full-dimensional fused ellipsoid at (k+1) dt, step record)

        Raises:
            PropagationAbort: propagation failed
        """
        if dt <= 0.0:
            raise ValueError("Horizon length must be positive")
        start = time.perf_counter()
        selection = select_nmax(self.model, t_available, self.n_cap)
        n_max = selection.n_max
        if self.system.n == 1:
            n_max = 1

        t_start, t_end = k * dt, (k + 1) * dt
        self.propagator.uncertainty = replace(self.uncertainty, x0=state)
        directions = default_directions(self.system.n, n_max, self.seed)
        final = self.propagator.propagate(directions, self._grid(t_start, t_end))[-1]

        fused_full = fuse_snapshot(final, None, self.fusion_tol, self.max_iterations)
        if self.coords is None:
            fused = fused_full
        else:
            fused = fuse_snapshot(final, self.coords, self.fusion_tol, self.max_iterations)
        wall = time.perf_counter() - start

        if wall > t_available:
            logger.warning("Step %d took %.4fs, budget was %.4fs", k, wall, t_available)
        logger.info("Step %d: N_hat=%.3f N_max=%d wall=%.4fs", k, selection.n_hat, n_max, wall)
        record = AnytimeStepRecord(
            k=k, t_start=t_start, t_end=t_end, t_available=float(t_available),
            n_hat=selection.n_hat, n_max=n_max, wall_s=wall,
            fused=fused, state=fused_full.ellipsoid,
        )
        return fused_full.ellipsoid, record

    def run_horizon(self, initial: Ellipsoid, dt: float, trace: Sequence[float],
                    steps: Optional[int] = None) -> AnytimeReport:
        """
        Run one step per entry of ``trace``, feeding each fused ellipsoid forward.

        Args:
            initial: Initial set at t = 0
            dt: Prediction horizon length
            trace: Available time (seconds) per step
            steps: Expected number of steps; must equal len(trace) when given
        """
        if steps is not None and steps != len(trace):
            raise ValueError(f"Availability trace has {len(trace)} entries, expected {steps}")
        start = time.perf_counter()
        report = AnytimeReport(coords=self.coords)
        state = initial
        for k, t_available in enumerate(trace):
            state, record = self.anytime_step(state, k, dt, float(t_available))
            report.records.append(record)

        self.last_run_stats = {
            "algorithm": "Anytime supervision",
            "steps": len(report.records),
            "n_max": report.n_max_sequence,
            "uncertified_steps": sum(not r.certified for r in report.records),
            "wall_total": time.perf_counter() - start,
            "workers": self.workers,
        }
        return report

    def get_run_stats(self) -> Dict[str, object]:
        return self.last_run_stats.copy()


def anytime_step(state: Ellipsoid, sys: LtvSystem, unc: UncertaintySpec, dt: float,
                 t_available: float, model: TimingModel, n_cap: int, k: int = 0,
                 step: Optional[float] = None, coords: Optional[Sequence[int]] = None,
                 workers: int = 1, seed: int = 0,
                 disturbance_model: DisturbanceModel = DisturbanceModel.ADDITIVE
                 ) -> Tuple[Ellipsoid, AnytimeStepRecord]:
    """One supervised step; see AnytimeSupervisor.anytime_step."""
    supervisor = AnytimeSupervisor(sys, unc, model, n_cap, step, coords, workers, seed, disturbance_model)
    return supervisor.anytime_step(state, k, dt, t_available)


def run_horizon(initial: Ellipsoid, sys: LtvSystem, unc: UncertaintySpec, dt: float, steps: int,
                trace: Sequence[float], model: TimingModel, n_cap: int,
                step: Optional[float] = None, coords: Optional[Sequence[int]] = None,
                workers: int = 1, seed: int = 0,
                disturbance_model: DisturbanceModel = DisturbanceModel.ADDITIVE) -> AnytimeReport:
    """Chain ``steps`` supervised steps; see AnytimeSupervisor.run_horizon."""
    supervisor = AnytimeSupervisor(sys, unc, model, n_cap, step, coords, workers, seed, disturbance_model)
    return supervisor.run_horizon(initial, dt, trace, steps)
