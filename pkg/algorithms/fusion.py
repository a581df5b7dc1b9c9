"""
Fusion of a common-center ellipsoid family into one outer ellipsoid.

With a shared center x_c and P_i = X_i^{-1}, the S-procedure max-det problem
reduces to maximizing the concave function logdet(sum_i tau_i P_i) over the unit
simplex. Any feasible tau gives a sound outer ellipsoid E(x_c, (sum tau_i P_i)^{-1})
because every point of the intersection satisfies sum tau_i (x - x_c)^T P_i (x - x_c) <= 1.
The solver is Frank-Wolfe with away steps and an exact line search.
"""
from dataclasses import dataclass
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import brentq

from models.ellipsoid import (
    DEFAULT_CONTAINMENT_TOL,
    Ellipsoid,
    QuadraticForm,
    normalized_distance,
    validate_coords,
)
from utils.errors import ConvergenceError, FusionConvergenceError, NumericalError
from utils.linalg import cholesky, inv_spd, is_positive_definite, logdet_spd, symmetrize
from utils.logging_utils import get_logger
from utils.sampling import make_rng, sample_unit_ball

logger = get_logger("fusion")

DEFAULT_FUSION_TOL = 1e-8
DEFAULT_MAX_ITERATIONS = 5000
CERTIFICATE_TOL = 1e-8
INFLATION_SAMPLES = 2000


@dataclass(frozen=True, eq=False)
class FusionInput:
    """Common center x_c and the shape family X_1..X_N."""
    center: np.ndarray
    shapes: Sequence[np.ndarray]

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float).reshape(-1)
        shapes = [symmetrize(np.atleast_2d(s)) for s in self.shapes]
        if not shapes:
            raise ValueError("Fusion needs at least one ellipsoid")
        for i, s in enumerate(shapes):
            if s.shape != (center.size, center.size):
                raise ValueError(f"Shape {i} has size {s.shape}, center has length {center.size}")
            cholesky(s)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "shapes", shapes)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def size(self) -> int:
        return len(self.shapes)

    @classmethod
    def from_snapshot(cls, snapshot) -> "FusionInput":
        return cls(snapshot.center, snapshot.shapes)

    def ellipsoids(self) -> List[Ellipsoid]:
        return [Ellipsoid(self.center, s) for s in self.shapes]

    def quadratic_forms(self) -> List[QuadraticForm]:
        """(A_i, b_i, c_i) = (X_i^{-1}, -X_i^{-1} x_c, x_c^T X_i^{-1} x_c - 1)."""
        forms = []
        for s in self.shapes:
            a = inv_spd(s)
            forms.append(QuadraticForm(a, -a @ self.center, float(self.center @ a @ self.center - 1.0)))
        return forms

    def project(self, coords: Sequence[int]) -> "FusionInput":
        """Center subvector and principal shape submatrices on ``coords``."""
        idx = validate_coords(coords, self.dim)
        return FusionInput(self.center[idx], [s[np.ix_(idx, idx)] for s in self.shapes])


@dataclass(frozen=True, eq=False)
class FusionCertificate:
    """S-procedure witness (A~, b~, tau_1..tau_N)."""
    a_tilde: np.ndarray
    b_tilde: np.ndarray
    tau: np.ndarray


class CertificateCheck(NamedTuple):
    valid: bool
    max_eigenvalue: float
    reason: str


@dataclass
class FusionResult:
    """Fused ellipsoid E(-A~^{-1} b~, A~^{-1}) with its certificate."""
    ellipsoid: Ellipsoid
    certificate: FusionCertificate
    logdet: float
    iterations: int
    certified: bool = True
    gap: float = 0.0
    inflation: float = 1.0

    @property
    def tau(self) -> np.ndarray:
        return self.certificate.tau

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ellipsoid": self.ellipsoid.to_dict(),
            "tau": self.certificate.tau.tolist(),
            "logdet": self.logdet,
            "certified": self.certified,
            "iterations": self.iterations,
            "gap": self.gap,
            "inflation": self.inflation,
            "certificate": {
                "a_tilde": self.certificate.a_tilde.tolist(),
                "b_tilde": self.certificate.b_tilde.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FusionResult":
        ellipsoid = Ellipsoid.from_dict(data["ellipsoid"])
        cert = data.get("certificate")
        if cert is not None:
            a_tilde = np.asarray(cert["a_tilde"], dtype=float)
            b_tilde = np.asarray(cert["b_tilde"], dtype=float)
        else:
            a_tilde = inv_spd(ellipsoid.shape)
            b_tilde = -a_tilde @ ellipsoid.center
        return cls(
            ellipsoid=ellipsoid,
            certificate=FusionCertificate(a_tilde, b_tilde, np.asarray(data["tau"], dtype=float)),
            logdet=float(data["logdet"]),
            iterations=int(data["iterations"]),
            certified=bool(data["certified"]),
            gap=float(data.get("gap", 0.0)),
            inflation=float(data.get("inflation", 1.0)),
        )


def _directional_gaps(precisions: List[np.ndarray], combined: np.ndarray) -> np.ndarray:
    """d_i = trace(M^{-1} P_i)."""
    inverse = inv_spd(combined)
    return np.array([np.sum(inverse * p) for p in precisions])


def _relative_eigenvalues(target: np.ndarray, factor: np.ndarray) -> np.ndarray:
    """Eigenvalues of L^{-1} P L^{-T} for M = L L^T."""
    half = solve_triangular(factor, target, lower=True)
    return np.linalg.eigvalsh(symmetrize(solve_triangular(factor, half.T, lower=True)))


def _line_search(slopes: np.ndarray, upper: float) -> float:
    """
    Maximize sum(log(1 + gamma * s)) on [0, upper]; the derivative is decreasing.
    """
    def derivative(gamma):
        return float(np.sum(slopes / (1.0 + gamma * slopes)))

    if derivative(upper) >= 0.0:
        return upper
    return brentq(derivative, 0.0, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _build_result(inp: FusionInput, precisions: List[np.ndarray], tau: np.ndarray,
                  iterations: int, gap: float) -> FusionResult:
    a_tilde = symmetrize(sum(t * p for t, p in zip(tau, precisions)))
    b_tilde = -a_tilde @ inp.center
    return FusionResult(
        ellipsoid=Ellipsoid(inp.center, inv_spd(a_tilde)),
        certificate=FusionCertificate(a_tilde, b_tilde, tau.copy()),
        logdet=logdet_spd(a_tilde),
        iterations=iterations,
        gap=gap,
    )


def _solve_simplex(inp: FusionInput, precisions: List[np.ndarray], tol: float,
                   max_iterations: int) -> FusionResult:
    count = len(precisions)
    dim = inp.dim
    tau = np.full(count, 1.0 / count)

    for iteration in range(max_iterations + 1):
        combined = symmetrize(sum(t * p for t, p in zip(tau, precisions)))
        d = _directional_gaps(precisions, combined)
        # sum_i tau_i d_i == trace(I) == dim
        toward = int(np.argmax(d))
        toward_gap = float(d[toward] - dim)
        if toward_gap <= tol:
            return _build_result(inp, precisions, tau, iteration, max(toward_gap, 0.0))
        if iteration == max_iterations:
            break

        active = np.flatnonzero(tau > 0.0)
        away = int(active[np.argmin(d[active])])
        away_gap = float(dim - d[away])
        factor = cholesky(combined)

        if toward_gap >= away_gap or tau[away] >= 1.0:
            mu = _relative_eigenvalues(precisions[toward], factor)
            gamma = _line_search(mu - 1.0, 1.0)
            tau = (1.0 - gamma) * tau
            tau[toward] += gamma
        else:
            mu = _relative_eigenvalues(precisions[away], factor)
            gamma_max = tau[away] / (1.0 - tau[away])
            gamma = _line_search(1.0 - mu, gamma_max)
            tau = (1.0 + gamma) * tau
            tau[away] -= gamma
            if gamma == gamma_max:
                tau[away] = 0.0

        tau = np.clip(tau, 0.0, None)
        tau /= tau.sum()

    partial = _build_result(inp, precisions, tau, max_iterations, toward_gap)
    raise FusionConvergenceError(
        f"Fusion did not reach gap {tol:g} in {max_iterations} iterations (gap {toward_gap:.3e})",
        partial=partial,
    )


def _certificate_block(cert: FusionCertificate, forms: Sequence[QuadraticForm]) -> np.ndarray:
    d = cert.b_tilde.size
    size = 2 * d + 1
    block = np.zeros((size, size))
    block[:d, :d] = cert.a_tilde
    block[:d, d] = cert.b_tilde
    block[d, :d] = cert.b_tilde
    block[d, d] = -1.0
    block[d, d + 1:] = cert.b_tilde
    block[d + 1:, d] = cert.b_tilde
    block[d + 1:, d + 1:] = -cert.a_tilde
    for t, f in zip(cert.tau, forms):
        block[:d, :d] -= t * f.a0
        block[:d, d] -= t * f.b0
        block[d, :d] -= t * f.b0
        block[d, d] -= t * f.c0
    return symmetrize(block)


def check_certificate(cert: FusionCertificate,
                      inp: Union[FusionInput, Sequence[QuadraticForm]],
                      tol: float = CERTIFICATE_TOL) -> CertificateCheck:
    """
    Verify the S-procedure block inequality for a (possibly distinct-center) family.

    The (2d+1) x (2d+1) matrix [[A~, b~, 0], [b~^T, -1, b~^T], [0, b~, -A~]] minus
    sum_i tau_i [[A_i, b_i, 0], [b_i^T, c_i, 0], [0, 0, 0]] must be negative
    semidefinite (max eigenvalue <= tol * max(1, ||block||_2)), with A~ positive
    definite and every tau_i >= 0.

    Returns:
        CertificateCheck(valid, max_eigenvalue, reason); never raises on a bad certificate
    """
    forms = inp.quadratic_forms() if isinstance(inp, FusionInput) else list(inp)
    tau = np.asarray(cert.tau, dtype=float).reshape(-1)
    a_tilde = np.atleast_2d(cert.a_tilde)
    b_tilde = np.asarray(cert.b_tilde, dtype=float).reshape(-1)

    if tau.size != len(forms):
        return CertificateCheck(False, float("nan"), f"{tau.size} multipliers for {len(forms)} ellipsoids")
    if a_tilde.shape != (b_tilde.size, b_tilde.size) or any(f.b0.size != b_tilde.size for f in forms):
        return CertificateCheck(False, float("nan"), "dimension mismatch")
    if not np.all(np.isfinite(tau)) or np.any(tau < 0.0):
        return CertificateCheck(False, float("nan"), "negative multiplier")
    if not is_positive_definite(a_tilde):
        return CertificateCheck(False, float("nan"), "A~ is not positive definite")

    block = _certificate_block(FusionCertificate(a_tilde, b_tilde, tau), forms)
    eigenvalues = np.linalg.eigvalsh(block)
    max_eig = float(eigenvalues[-1])
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    if max_eig > tol * scale:
        return CertificateCheck(False, max_eig, f"block matrix has eigenvalue {max_eig:.3e} > 0")
    return CertificateCheck(True, max_eig, "ok")


def intersection_membership(x: np.ndarray, inp: FusionInput,
                            tol: float = DEFAULT_CONTAINMENT_TOL) -> bool:
    """True iff x lies in every member ellipsoid (within tol)."""
    point = np.asarray(x, dtype=float).reshape(-1)
    return all(normalized_distance(e, point) <= 1.0 + tol for e in inp.ellipsoids())


def _membership_mask(points: np.ndarray, inp: FusionInput, tol: float) -> np.ndarray:
    mask = np.ones(points.shape[0], dtype=bool)
    for e in inp.ellipsoids():
        mask &= normalized_distance(e, points) <= 1.0 + tol
    return mask


def sample_intersection(inp: FusionInput, n: int, seed: int = 0,
                        tol: float = DEFAULT_CONTAINMENT_TOL,
                        max_draws: Optional[int] = None) -> np.ndarray:
    """
    Rejection-sample points of the intersection.

    Proposals are uniform in the smallest-volume member; proposals outside any
    other member are rejected.

    Returns:
        Array of shape (n, d)

    Raises:
        ConvergenceError: acceptance too low to collect n points within max_draws
    """
    if n < 1:
        raise ValueError("Sample count must be at least 1")
    members = inp.ellipsoids()
    smallest = min(members, key=lambda e: np.linalg.slogdet(e.shape)[1])
    root = np.linalg.cholesky(smallest.shape)
    rng = make_rng(seed, 2)
    limit = max_draws if max_draws is not None else 1000 * n + 10000

    accepted: List[np.ndarray] = []
    total = 0
    drawn = 0
    while total < n:
        if drawn >= limit:
            raise ConvergenceError(f"Intersection sampler accepted {total}/{n} points in {drawn} draws")
        batch = max(2 * (n - total), 64)
        proposals = smallest.center + sample_unit_ball(rng, batch, inp.dim) @ root.T
        drawn += batch
        keep = proposals[_membership_mask(proposals, inp, tol)]
        accepted.append(keep)
        total += keep.shape[0]
    return np.vstack(accepted)[:n]


def _inflate(result: FusionResult, inp: FusionInput, samples: int, seed: int) -> FusionResult:
    points = sample_intersection(inp, samples, seed)
    worst = float(np.max(normalized_distance(result.ellipsoid, points)))
    factor = max(1.0, worst)
    if not np.isfinite(factor):
        raise NumericalError("Fused ellipsoid could not be inflated to contain the intersection")
    a_tilde = result.certificate.a_tilde / factor
    logger.warning("Uncertified fusion result inflated by factor %.6g", factor)
    return FusionResult(
        ellipsoid=Ellipsoid(result.ellipsoid.center, factor * result.ellipsoid.shape),
        certificate=FusionCertificate(a_tilde, -a_tilde @ result.ellipsoid.center, result.certificate.tau),
        logdet=logdet_spd(a_tilde),
        iterations=result.iterations,
        certified=False,
        gap=result.gap,
        inflation=factor,
    )


def fuse_common_center(inp: FusionInput, tol: float = DEFAULT_FUSION_TOL,
                       max_iterations: int = DEFAULT_MAX_ITERATIONS,
                       inflation_samples: int = INFLATION_SAMPLES, seed: int = 0) -> FusionResult:
    """
    Outer ellipsoid E(x_c, (sum tau_i X_i^{-1})^{-1}) with tau maximizing the log-determinant.

    Starts from uniform tau and stops when max_i d_i - sum_j tau_j d_j <= tol with
    d_i = trace((sum tau_j X_j^{-1})^{-1} X_i^{-1}). The result is checked against the
    S-procedure certificate; a failing result is inflated until it contains a sampled
    set of intersection points and is reported as uncertified.

    Raises:
        FusionConvergenceError: iteration cap reached; ``partial`` is still a sound result
    """
    precisions = [inv_spd(s) for s in inp.shapes]
    if inp.size == 1:
        result = _build_result(inp, precisions, np.ones(1), 0, 0.0)
    else:
        try:
            result = _solve_simplex(inp, precisions, tol, max_iterations)
        except FusionConvergenceError as exc:
            exc.partial = _certify(exc.partial, inp, inflation_samples, seed)
            raise
    result = _certify(result, inp, inflation_samples, seed)
    logger.debug("Fused %d ellipsoids in %d iterations (gap %.2e)", inp.size, result.iterations, result.gap)
    return result


def _certify(result: FusionResult, inp: FusionInput, samples: int, seed: int) -> FusionResult:
    check = check_certificate(result.certificate, inp)
    if check.valid:
        return result
    logger.warning("Fusion certificate rejected: %s", check.reason)
    return _inflate(result, inp, samples, seed)


def fuse_snapshot(snapshot, coords: Optional[Sequence[int]] = None,
                  tol: float = DEFAULT_FUSION_TOL,
                  max_iterations: int = DEFAULT_MAX_ITERATIONS) -> FusionResult:
    """
    Fuse one reach snapshot, projecting to ``coords`` first when given.

    A non-converged solve falls back to the last (feasible) iterate.
    """
    inp = FusionInput.from_snapshot(snapshot)
    if coords is not None:
        inp = inp.project(coords)
    try:
        return fuse_common_center(inp, tol, max_iterations)
    except FusionConvergenceError as exc:
        logger.warning("%s; using the last iterate", exc)
        return exc.partial
