"""
Ellipsoid representations and geometry queries.

An ellipsoid E(q, Q) = {y : (y - q)^T Q^{-1} (y - q) <= 1} is stored in
center/shape form; the equivalent quadratic form {y : y^T A0 y + 2 y^T b0 + c0 <= 0}
is what the fusion step consumes.
"""
from dataclasses import dataclass
from typing import Any, Dict, Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from utils.errors import DegenerateEllipsoidError, NotPositiveDefiniteError
from utils.linalg import cholesky, inv_spd, solve_spd, sqrt_psd, symmetrize
from utils.sampling import make_rng, sample_unit_ball

DEFAULT_CONTAINMENT_TOL = 1e-9
DEGENERACY_RATIO = 1e-12
# Rounding slack so that shapes clamped exactly to the floor stay valid.
_DEGENERACY_SLACK = 64 * np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """Nondegenerate ellipsoid with center q and positive definite shape Q."""
    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        center = np.array(self.center, dtype=float).reshape(-1)
        shape = symmetrize(np.atleast_2d(np.array(self.shape, dtype=float)))
        if shape.shape != (center.size, center.size):
            raise ValueError(
                f"Shape matrix {shape.shape} does not match center of length {center.size}"
            )
        cholesky(shape)
        trace = float(np.trace(shape))
        smallest = float(np.linalg.eigvalsh(shape)[0])
        if smallest < (DEGENERACY_RATIO - _DEGENERACY_SLACK) * trace:
            raise DegenerateEllipsoidError(
                f"Degenerate ellipsoid: min eigenvalue {smallest:.3e} below "
                f"{DEGENERACY_RATIO:g} * trace ({trace:.3e})"
            )
        center.setflags(write=False)
        shape.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "shape", shape)

    @property
    def dim(self) -> int:
        return self.center.size

    @classmethod
    def ball(cls, dim: int, radius: float = 1.0) -> "Ellipsoid":
        return cls(np.zeros(dim), radius ** 2 * np.eye(dim))

    def to_dict(self) -> Dict[str, Any]:
        return {"center": self.center.tolist(), "shape": self.shape.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Ellipsoid":
        return cls(np.asarray(data["center"], dtype=float), np.asarray(data["shape"], dtype=float))

    def __repr__(self) -> str:
        return f"Ellipsoid(dim={self.dim}, center={np.array2string(self.center, precision=4)})"


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """The set {y : y^T A0 y + 2 y^T b0 + c0 <= 0} with A0 positive definite."""
    a0: np.ndarray
    b0: np.ndarray
    c0: float

    def __post_init__(self):
        a0 = symmetrize(np.atleast_2d(np.array(self.a0, dtype=float)))
        b0 = np.array(self.b0, dtype=float).reshape(-1)
        if a0.shape != (b0.size, b0.size):
            raise ValueError(f"A0 {a0.shape} does not match b0 of length {b0.size}")
        cholesky(a0)
        if self.radius_squared_for(a0, b0, float(self.c0)) <= 0.0:
            raise ValueError("Quadratic form describes an empty set")
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "b0", b0)
        object.__setattr__(self, "c0", float(self.c0))

    @staticmethod
    def radius_squared_for(a0: np.ndarray, b0: np.ndarray, c0: float) -> float:
        return float(b0 @ solve_spd(a0, b0) - c0)

    def evaluate(self, y: np.ndarray) -> float:
        y = np.asarray(y, dtype=float)
        return float(y @ self.a0 @ y + 2.0 * y @ self.b0 + self.c0)


def to_quadratic_form(e: Ellipsoid) -> QuadraticForm:
    """A0 = Q^{-1}, b0 = -Q^{-1} q, c0 = q^T Q^{-1} q - 1."""
    a0 = inv_spd(e.shape)
    b0 = -a0 @ e.center
    c0 = float(e.center @ a0 @ e.center - 1.0)
    return QuadraticForm(a0, b0, c0)


def from_quadratic_form(f: QuadraticForm) -> Ellipsoid:
    """
    Q = r * A0^{-1}, q = -A0^{-1} b0 with r = b0^T A0^{-1} b0 - c0.

    For forms produced by ``to_quadratic_form`` r == 1 and this is the plain
    inverse map Q = A0^{-1}, q = -Q b0.
    """
    inverse = inv_spd(f.a0)
    center = -inverse @ f.b0
    radius_sq = float(f.b0 @ inverse @ f.b0 - f.c0)
    return Ellipsoid(center, radius_sq * inverse)


def support(e: Ellipsoid, direction: np.ndarray) -> float:
    """Support function dir^T q + sqrt(dir^T Q dir)."""
    d = np.asarray(direction, dtype=float).reshape(-1)
    if d.size != e.dim:
        raise ValueError(f"Direction of length {d.size} does not match dimension {e.dim}")
    if not np.any(d):
        raise ValueError("Support direction must be nonzero")
    return float(d @ e.center + np.sqrt(max(d @ e.shape @ d, 0.0)))


def normalized_distance(e: Ellipsoid, points: np.ndarray) -> np.ndarray:
    """
    Quadratic form (x - q)^T Q^{-1} (x - q) for one point or a batch of rows.

    Returns a float for a single point and an array for a (k, d) batch.
    """
    x = np.asarray(points, dtype=float)
    single = x.ndim == 1
    rows = np.atleast_2d(x)
    if rows.shape[1] != e.dim:
        raise ValueError(f"Points of dimension {rows.shape[1]} do not match ellipsoid dimension {e.dim}")
    factor = cholesky(e.shape)
    z = solve_triangular(factor, (rows - e.center).T, lower=True)
    values = np.sum(z * z, axis=0)
    return float(values[0]) if single else values


def contains(e: Ellipsoid, x: np.ndarray, tol: float = DEFAULT_CONTAINMENT_TOL) -> bool:
    """True iff the quadratic form at x is at most 1 + tol."""
    return bool(normalized_distance(e, np.asarray(x, dtype=float).reshape(-1)) <= 1.0 + tol)


def validate_coords(coords: Sequence[int], dim: int) -> list:
    """Check a projection index list: nonempty, distinct, in [0, dim)."""
    indices = [int(c) for c in coords]
    if not indices:
        raise ValueError("Projection needs at least one coordinate")
    if len(set(indices)) != len(indices):
        raise ValueError(f"Projection coordinates must be distinct: {indices}")
    bad = [c for c in indices if c < 0 or c >= dim]
    if bad:
        raise ValueError(f"Projection coordinates {bad} out of range for dimension {dim}")
    return indices


def project(e: Ellipsoid, coords: Sequence[int]) -> Ellipsoid:
    """Center subvector and principal shape submatrix on ``coords``."""
    indices = validate_coords(coords, e.dim)
    return Ellipsoid(e.center[indices], e.shape[np.ix_(indices, indices)])


def volume(e: Ellipsoid) -> float:
    """Unit-ball volume of dimension d times sqrt(det Q)."""
    d = e.dim
    log_ball = 0.5 * d * np.log(np.pi) - gammaln(0.5 * d + 1.0)
    sign, logdet = np.linalg.slogdet(e.shape)
    if sign <= 0:
        raise NotPositiveDefiniteError("Shape matrix determinant is not positive")
    return float(np.exp(log_ball + 0.5 * logdet))


def sample(e: Ellipsoid, n: int, mode: str = "interior", seed: int = 0) -> np.ndarray:
    """
    Seeded points of the ellipsoid (uniform in volume) or of its boundary.

    Unit-ball draws are mapped by x = q + Q^{1/2} z.

    Returns:
        Array of shape (n, d)
    """
    if n < 1:
        raise ValueError("Sample count must be at least 1")
    rng = make_rng(seed)
    ball = sample_unit_ball(rng, n, e.dim, mode)
    return e.center + ball @ sqrt_psd(e.shape)
