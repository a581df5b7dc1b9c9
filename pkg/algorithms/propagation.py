"""
Tight external ellipsoidal approximation of forward reach sets.

For each unit vector l_i0 the shape matrix X_i(t) solves

    X' = A X + X A^T + pi X + (1/pi) B U B^T + (disturbance terms),  X(t0) = X0

with l_i(t) carried by the adjoint equation l' = -A(t)^T l. Every ellipsoid
E(x_c(t), X_i(t)) contains the reach set and touches it along l_i(t), so the
intersection over i tightens as directions are added. The center x_c and the
N shape matrices are independent initial value problems and run on a worker pool.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
import time
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.ellipsoid import Ellipsoid
from models.system import LtvSystem, TimeGrid, UncertaintySpec
from utils.errors import ConvergenceError, NotPositiveDefiniteError, PropagationAbort
from utils.integrators import integrate
from utils.linalg import sqrt_psd, symmetrize
from utils.logging_utils import get_logger
from utils.sampling import make_rng

logger = get_logger("propagation")

DEGENERACY_THRESHOLD = 1e-14
CLAMP_FLOOR = 1e-12
CLAMP_ABORT = 1e-6
UNIT_TOLERANCE = 1e-12
MAX_DIRECTION_COSINE = 0.999


class DisturbanceModel(str, Enum):
    """
    How the disturbance set enters the shape equation.

    ADDITIVE treats w as a second bounded input with its own coefficient
    pi_w = sqrt(l^T G W G^T l / l^T X l); the ellipsoids then bound the union
    over all admissible disturbances. COUNTERACTING subtracts
    X^{1/2} S G W G^T + G W G^T S^T X^{1/2}, the bound used when the disturbance
    works against the input.
    """
    ADDITIVE = "additive"
    COUNTERACTING = "counteracting"


@dataclass(frozen=True)
class DirectionState:
    """Initial unit direction l_i0 and its current value l_i(t)."""
    initial: np.ndarray
    current: np.ndarray

    def __post_init__(self):
        initial = np.asarray(self.initial, dtype=float).reshape(-1)
        current = np.asarray(self.current, dtype=float).reshape(-1)
        if abs(np.linalg.norm(initial) - 1.0) > UNIT_TOLERANCE:
            raise ValueError("Initial direction must have unit 2-norm")
        if not np.any(current):
            raise ValueError("Direction became the zero vector")
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "current", current)


@dataclass(frozen=True)
class ShapeOdeTerms:
    """Coefficients of the shape equation at one time instant."""
    pi: float
    control_degenerate: bool
    disturbance_degenerate: bool
    pi_disturbance: float = 0.0
    v1: Optional[np.ndarray] = None
    v2: Optional[np.ndarray] = None
    aligner: Optional[np.ndarray] = None


@dataclass
class ReachSnapshot:
    """Common center and the shape/direction family at one snapshot time."""
    time: float
    center: np.ndarray
    shapes: List[np.ndarray]
    directions: List[np.ndarray]

    def __post_init__(self):
        if not self.shapes:
            raise ValueError("A snapshot needs at least one shape matrix")
        if len(self.shapes) != len(self.directions):
            raise ValueError("Shape and direction families must have equal length")

    @property
    def n_directions(self) -> int:
        return len(self.shapes)

    def ellipsoid(self, i: int) -> Ellipsoid:
        return Ellipsoid(self.center, self.shapes[i])

    def ellipsoids(self) -> List[Ellipsoid]:
        return [self.ellipsoid(i) for i in range(self.n_directions)]

    def to_dict(self) -> Dict[str, object]:
        return {
            "t": self.time,
            "center": np.asarray(self.center).tolist(),
            "shapes": [np.asarray(s).tolist() for s in self.shapes],
            "directions": [np.asarray(d).tolist() for d in self.directions],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "ReachSnapshot":
        shapes = [np.atleast_2d(np.asarray(s, dtype=float)) for s in data["shapes"]]
        directions = data.get("directions")
        if directions is None:
            directions = [np.full(len(data["center"]), np.nan) for _ in shapes]
        return cls(
            time=float(data["t"]),
            center=np.asarray(data["center"], dtype=float).reshape(-1),
            shapes=shapes,
            directions=[np.asarray(d, dtype=float).reshape(-1) for d in directions],
        )


@dataclass
class ShapePath:
    """Result of one shape IVP at the snapshot nodes."""
    shapes: np.ndarray
    directions: np.ndarray
    clamp_events: int = 0
    elapsed: float = 0.0


def _ratio_coefficient(direction: np.ndarray, numerator_matrix: np.ndarray,
                       shape: np.ndarray) -> Tuple[float, bool]:
    denominator = float(direction @ shape @ direction)
    if not denominator > 0.0:
        raise NotPositiveDefiniteError(
            f"l^T X l = {denominator:.3e} is not positive; shape matrix is corrupted"
        )
    numerator = float(direction @ numerator_matrix @ direction)
    threshold = DEGENERACY_THRESHOLD * np.linalg.norm(numerator_matrix) * float(direction @ direction)
    if numerator <= threshold:
        return 0.0, True
    return float(np.sqrt(numerator / denominator)), False


def pi_coefficient(direction: np.ndarray, b: np.ndarray, u_shape: np.ndarray,
                   shape: np.ndarray) -> Tuple[float, bool]:
    """
    pi = sqrt(l^T B U B^T l / l^T X l).

    Returns:
        (pi, degenerate); degenerate is set and pi reported as 0 when the
        numerator is negligible relative to ||B U B^T||_F ||l||^2

    Raises:
        NotPositiveDefiniteError: l^T X l <= 0
    """
    direction = np.asarray(direction, dtype=float)
    b = np.atleast_2d(b)
    return _ratio_coefficient(direction, b @ np.atleast_2d(u_shape) @ b.T, np.atleast_2d(shape))


def orthogonal_aligner(v2: np.ndarray, v1: np.ndarray) -> np.ndarray:
    """
    Orthogonal S with S v2 = v1, as the Householder reflection on w = v2 - v1.

    Raises:
        ValueError: either input is not a unit vector
    """
    a = np.asarray(v2, dtype=float).reshape(-1)
    b = np.asarray(v1, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ValueError("Aligner vectors must have equal length")
    for name, v in (("v2", a), ("v1", b)):
        if abs(np.linalg.norm(v) - 1.0) > 1e-10:
            raise ValueError(f"{name} must be a unit vector")
    w = a - b
    ww = float(w @ w)
    if np.sqrt(ww) < 1e-12:
        return np.eye(a.size)
    return np.eye(a.size) - (2.0 / ww) * np.outer(w, w)


def _shape_derivative(t: float, shape: np.ndarray, direction: np.ndarray, sys: LtvSystem,
                      unc: UncertaintySpec, model: DisturbanceModel,
                      want_terms: bool = False) -> Tuple[np.ndarray, np.ndarray, Optional[ShapeOdeTerms]]:
    a, b, g = sys.evaluate(t)
    _, u_shape = unc.u.at(t)
    _, w_shape = unc.w.at(t)
    bub = b @ u_shape @ b.T
    gwg = g @ w_shape @ g.T

    rhs = a @ shape + shape @ a.T
    pi, control_degenerate = _ratio_coefficient(direction, bub, shape)
    if not control_degenerate:
        rhs += pi * shape + bub / pi

    pi_w = 0.0
    v1 = v2 = aligner = None
    if model is DisturbanceModel.ADDITIVE:
        pi_w, disturbance_degenerate = _ratio_coefficient(direction, gwg, shape)
        if not disturbance_degenerate:
            rhs += pi_w * shape + gwg / pi_w
    else:
        gwg_l = gwg @ direction
        size = np.linalg.norm(gwg_l)
        disturbance_degenerate = bool(size <= DEGENERACY_THRESHOLD * np.linalg.norm(gwg) * np.linalg.norm(direction))
        if disturbance_degenerate:
            aligner = np.eye(shape.shape[0])
        else:
            root = sqrt_psd(shape)
            root_l = root @ direction
            v1 = root_l / np.linalg.norm(root_l)
            v2 = gwg_l / size
            aligner = orthogonal_aligner(v2, v1)
            cross = root @ aligner @ gwg
            rhs -= cross + cross.T

    terms = None
    if want_terms:
        terms = ShapeOdeTerms(pi, control_degenerate, disturbance_degenerate, pi_w, v1, v2, aligner)
    return symmetrize(rhs), a, terms


def shape_rhs(t: float, shape: np.ndarray, direction: np.ndarray, sys: LtvSystem,
              unc: UncertaintySpec, model: DisturbanceModel = DisturbanceModel.ADDITIVE) -> np.ndarray:
    """Right-hand side of the shape-matrix equation at (t, X, l)."""
    rhs, _, _ = _shape_derivative(t, np.atleast_2d(shape), np.asarray(direction, dtype=float),
                                  sys, unc, DisturbanceModel(model))
    return rhs


def shape_ode_terms(t: float, shape: np.ndarray, direction: np.ndarray, sys: LtvSystem,
                    unc: UncertaintySpec,
                    model: DisturbanceModel = DisturbanceModel.ADDITIVE) -> ShapeOdeTerms:
    """The pi coefficients, unit vectors, aligner and degeneracy flags at (t, X, l)."""
    _, _, terms = _shape_derivative(t, np.atleast_2d(shape), np.asarray(direction, dtype=float),
                                    sys, unc, DisturbanceModel(model), want_terms=True)
    return terms


def _check_unit(direction: np.ndarray) -> np.ndarray:
    l0 = np.asarray(direction, dtype=float).reshape(-1)
    if abs(np.linalg.norm(l0) - 1.0) > UNIT_TOLERANCE:
        raise ValueError(f"Direction must be a unit vector (norm {np.linalg.norm(l0):.15g})")
    return l0


def _center_nodes(sys: LtvSystem, unc: UncertaintySpec, grid: TimeGrid) -> np.ndarray:
    def rhs(t, x):
        a, b, g = sys.evaluate(t)
        u_c, _ = unc.u.at(t)
        w_c, _ = unc.w.at(t)
        return a @ x + b @ u_c + g @ w_c

    return integrate(rhs, unc.x0.center, grid.times)


def propagate_center(sys: LtvSystem, unc: UncertaintySpec, grid: TimeGrid) -> np.ndarray:
    """
    RK4 solution of x_c' = A x_c + B u_c + G w_c, x_c(t0) = x0.

    Returns:
        Centers at the grid's snapshot times, shape (snapshots, n)
    """
    unc.validate(sys, grid.t_start)
    return _center_nodes(sys, unc, grid)[list(grid.snapshot_indices)]


def adjoint_direction(sys: LtvSystem, l0: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """
    Solve l' = -A(t)^T l from a unit l0; for constant A this is exp(-A^T t) l0.

    Returns:
        l at every grid node, shape (steps + 1, n)
    """
    l0 = _check_unit(l0)
    if l0.size != sys.n:
        raise ValueError(f"Direction of length {l0.size} does not match n={sys.n}")
    return integrate(lambda t, y: -sys.evaluate(t)[0].T @ y, l0, grid.times)


def _maintain_pd(shape: np.ndarray, t: float, index: Optional[int]) -> Tuple[np.ndarray, bool]:
    trace = float(np.trace(shape))
    if not np.all(np.isfinite(shape)) or trace <= 0.0:
        raise PropagationAbort(f"Shape matrix {index} became invalid at t={t:g}", time=t, direction=index)
    floor = CLAMP_FLOOR * trace
    try:
        np.linalg.cholesky(shape - floor * np.eye(shape.shape[0]))
        return shape, False
    except np.linalg.LinAlgError:
        pass
    values, vectors = np.linalg.eigh(shape)
    deficit = float(np.sum(np.clip(floor - values, 0.0, None)))
    if deficit > CLAMP_ABORT * trace:
        raise PropagationAbort(
            f"Shape matrix {index} lost definiteness at t={t:g} "
            f"(clamping {deficit:.3e} > {CLAMP_ABORT:g} * trace); reduce the step size",
            time=t, direction=index,
        )
    logger.debug("Clamped eigenvalues of shape %s at t=%g (deficit %.3e)", index, t, deficit)
    return symmetrize((vectors * np.maximum(values, floor)) @ vectors.T), True


def propagate_shape(sys: LtvSystem, unc: UncertaintySpec, l0: np.ndarray, grid: TimeGrid,
                    model: DisturbanceModel = DisturbanceModel.ADDITIVE,
                    index: Optional[int] = None) -> ShapePath:
    """
    Integrate one shape matrix jointly with its adjoint direction.

    The stacked state [X; l^T] of shape (n + 1, n) advances with one RK4 step so
    that l is evaluated consistently at the intermediate stages. After every step X
    is symmetrized and eigenvalues below 1e-12 * trace are lifted to that floor.

    Raises:
        PropagationAbort: clamping would exceed 1e-6 * trace
    """
    start = time.perf_counter()
    model = DisturbanceModel(model)
    n = sys.n
    l0 = _check_unit(l0)
    if l0.size != n:
        raise ValueError(f"Direction of length {l0.size} does not match n={n}")

    def rhs(t, y):
        x_dot, a, _ = _shape_derivative(t, y[:n], y[n], sys, unc, model)
        return np.vstack([x_dot, (-a.T @ y[n])[None, :]])

    clamp_events = 0

    def post_step(_, t, y):
        nonlocal clamp_events
        shape, clamped = _maintain_pd(symmetrize(y[:n]), t, index)
        clamp_events += int(clamped)
        if not np.any(y[n]):
            raise PropagationAbort(f"Direction {index} collapsed to zero at t={t:g}", time=t, direction=index)
        y[:n] = shape
        return y

    y0 = np.vstack([unc.x0.shape, l0[None, :]])
    nodes = integrate(rhs, y0, grid.times, post_step)[list(grid.snapshot_indices)]
    if clamp_events:
        logger.warning("Shape %s needed eigenvalue clamping on %d steps", index, clamp_events)
    return ShapePath(nodes[:, :n, :], nodes[:, n, :], clamp_events, time.perf_counter() - start)


def _validate_directions(directions: Sequence[np.ndarray], n: int) -> np.ndarray:
    family = np.array([_check_unit(d) for d in directions], dtype=float)
    if family.ndim != 2 or family.shape[0] < 1:
        raise ValueError("At least one direction is required")
    if family.shape[1] != n:
        raise ValueError(f"Directions have length {family.shape[1]}, system has n={n}")
    for i in range(family.shape[0]):
        for j in range(i):
            if np.linalg.norm(family[i] - family[j]) < UNIT_TOLERANCE:
                raise ValueError(f"Directions {j} and {i} coincide")
    return family


def default_directions(n: int, count: int, seed: int = 0) -> List[np.ndarray]:
    """
    Coordinate axes first, then seeded random unit vectors.

    Random vectors are rejected when |cos angle| >= 0.999 with any earlier
    direction. The stream is fixed by ``seed``, so the family for N is a
    prefix of the family for N + 1.
    """
    if n < 1 or count < 1:
        raise ValueError("Need n >= 1 and at least one direction")
    if n == 1 and count > 1:
        raise ValueError("A scalar system admits a single direction")
    family = [np.eye(n)[i] for i in range(min(count, n))]
    rng = make_rng(seed, 1)
    attempts = 0
    while len(family) < count:
        attempts += 1
        if attempts > 10000 * count:
            raise ConvergenceError("Could not draw sufficiently separated directions")
        candidate = rng.standard_normal(n)
        norm = np.linalg.norm(candidate)
        if norm == 0.0:
            continue
        candidate /= norm
        if all(abs(candidate @ d) < MAX_DIRECTION_COSINE for d in family):
            family.append(candidate)
    return family


class EllipsoidalReachPropagator:
    """
    Propagates the center and a family of shape matrices for one system.
    """

    def __init__(self, system: LtvSystem, uncertainty: UncertaintySpec,
                 disturbance_model: DisturbanceModel = DisturbanceModel.ADDITIVE,
                 workers: int = 1):
        """
        Initialize propagator.

        Args:
            system: Linear time-varying dynamics
            uncertainty: Initial, input and disturbance sets
            disturbance_model: How W(t) enters the shape equation
            workers: Size of the thread pool for the N + 1 independent IVPs
        """
        if workers < 1:
            raise ValueError("workers must be at least 1")
        self.system = system
        self.uncertainty = uncertainty
        self.disturbance_model = DisturbanceModel(disturbance_model)
        self.workers = int(workers)
        self.last_run_stats: Dict[str, object] = {}
        self.final_directions: List[DirectionState] = []

    def _timed_center(self, grid: TimeGrid) -> Tuple[np.ndarray, float]:
        start = time.perf_counter()
        centers = propagate_center(self.system, self.uncertainty, grid)
        return centers, time.perf_counter() - start

    def propagate(self, directions: Sequence[np.ndarray], grid: TimeGrid) -> List[ReachSnapshot]:
        """
        Propagate the reach-set family over ``grid``.

        Args:
            directions: Unit, pairwise distinct initial directions l_i0
            grid: Integration grid with snapshot nodes

        Returns:
            One ReachSnapshot per snapshot time, each holding all N shapes

        Raises:
            PropagationAbort: a shape matrix lost definiteness beyond clamping
        """
        family = _validate_directions(directions, self.system.n)
        self.uncertainty.validate(self.system, grid.t_start)
        model = self.disturbance_model

        start = time.perf_counter()
        if self.workers == 1:
            centers, t_center = self._timed_center(grid)
            paths = [propagate_shape(self.system, self.uncertainty, l0, grid, model, i)
                     for i, l0 in enumerate(family)]
        else:
            with ThreadPoolExecutor(max_workers=min(self.workers, len(family) + 1)) as pool:
                center_future = pool.submit(self._timed_center, grid)
                shape_futures = [
                    pool.submit(propagate_shape, self.system, self.uncertainty, l0, grid, model, i)
                    for i, l0 in enumerate(family)
                ]
                centers, t_center = center_future.result()
                paths = [f.result() for f in shape_futures]
        t_propagation = time.perf_counter() - start
        self.final_directions = [DirectionState(l0, p.directions[-1]) for l0, p in zip(family, paths)]

        shape_times = [p.elapsed for p in paths]
        self.last_run_stats = {
            "algorithm": "Ellipsoidal propagation",
            "n_directions": len(family),
            "workers": self.workers,
            "steps": grid.steps,
            "t_center": t_center,
            "t_shape": float(np.mean(shape_times)),
            "t_shape_max": float(np.max(shape_times)),
            "t_propagation": t_propagation,
            "clamp_events": int(sum(p.clamp_events for p in paths)),
            "disturbance_model": model.value,
        }

        snapshots = []
        for k, t in enumerate(grid.snapshot_times):
            snapshots.append(ReachSnapshot(
                time=float(t),
                center=centers[k].copy(),
                shapes=[p.shapes[k].copy() for p in paths],
                directions=[p.directions[k].copy() for p in paths],
            ))
        return snapshots

    def get_run_stats(self) -> Dict[str, object]:
        """
        Get statistics about the last propagation.

        Returns:
            Dictionary with timings and counters
        """
        return self.last_run_stats.copy()


def propagate_family(sys: LtvSystem, unc: UncertaintySpec, directions: Sequence[np.ndarray],
                     grid: TimeGrid, workers: int = 1,
                     model: DisturbanceModel = DisturbanceModel.ADDITIVE) -> List[ReachSnapshot]:
    """Propagate the center and one shape matrix per direction; see EllipsoidalReachPropagator."""
    return EllipsoidalReachPropagator(sys, unc, model, workers).propagate(directions, grid)
