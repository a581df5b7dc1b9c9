"""
Dense symmetric linear-algebra kernels.

Everything here works on small (n <= ~16) float64 numpy arrays and is a pure
function of its inputs, so the kernels are safe to call from worker threads.
"""
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from utils.errors import ConvergenceError, NotPositiveDefiniteError

JACOBI_TOLERANCE = 1e-12
JACOBI_MAX_SWEEPS = 100
PSD_TOLERANCE = 1e-12


class EigDecomposition(NamedTuple):
    """Eigenvalues in descending order with matching eigenvector columns."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Return (M + M^T) / 2 as a float array."""
    m = np.asarray(matrix, dtype=float)
    return 0.5 * (m + m.T)


def _jacobi_eig(m: np.ndarray, tol: float, max_sweeps: int) -> EigDecomposition:
    d = m.shape[0]
    a = m.copy()
    v = np.eye(d)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return EigDecomposition(np.zeros(d), v)

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(a * a) - np.sum(np.diag(a) ** 2))
        if off <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        raise ConvergenceError(
            f"Jacobi eigen solver did not converge in {max_sweeps} sweeps"
        )

    return EigDecomposition(np.diag(a).copy(), v)


def sym_eig(matrix: np.ndarray, method: str = "lapack",
            tol: float = JACOBI_TOLERANCE, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigDecomposition:
    """
    Eigen-decomposition of a symmetric matrix.

    Args:
        matrix: Square matrix; it is symmetrized before decomposition
        method: "jacobi" for cyclic Jacobi rotations, "lapack" for numpy.linalg.eigh
        tol: Jacobi stop threshold on the off-diagonal Frobenius norm, relative to ||M||_F
        max_sweeps: Jacobi sweep cap

    Returns:
        EigDecomposition with eigenvalues sorted in descending order

    Raises:
        ConvergenceError: Jacobi sweeps exhausted
    """
    m = symmetrize(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {m.shape}")

    if method == "jacobi":
        values, vectors = _jacobi_eig(m, tol, max_sweeps)
    elif method == "lapack":
        values, vectors = np.linalg.eigh(m)
    else:
        raise ValueError(f"Unknown eigen solver '{method}'")

    order = np.argsort(values)[::-1]
    return EigDecomposition(values[order], vectors[:, order])


def sqrt_psd(matrix: np.ndarray, tol: float = PSD_TOLERANCE, method: str = "lapack") -> np.ndarray:
    """
    Symmetric square root of a positive semidefinite matrix.

    Eigenvalues in [-tol*||M||, 0) are treated as rounding drift and clamped to 0.

    Raises:
        NotPositiveDefiniteError: an eigenvalue is more negative than the tolerance
    """
    values, vectors = sym_eig(matrix, method=method)
    norm = np.max(np.abs(values)) if values.size else 0.0
    if values.size and values[-1] < -tol * norm:
        raise NotPositiveDefiniteError(
            f"Matrix is not positive semidefinite (min eigenvalue {values[-1]:.3e})"
        )
    roots = np.sqrt(np.clip(values, 0.0, None))
    return symmetrize((vectors * roots) @ vectors.T)


def cholesky(matrix: np.ndarray) -> np.ndarray:
    """
    Lower-triangular Cholesky factor L with L L^T = M.

    Raises:
        NotPositiveDefiniteError: M is not positive definite
    """
    m = symmetrize(matrix)
    if not np.all(np.isfinite(m)):
        raise NotPositiveDefiniteError("Matrix has non-finite entries")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("Matrix is not positive definite") from exc


def is_positive_definite(matrix: np.ndarray) -> bool:
    """True when a Cholesky factorization succeeds."""
    try:
        cholesky(matrix)
    except NotPositiveDefiniteError:
        return False
    return True


def logdet_spd(matrix: np.ndarray) -> float:
    """log det M computed as 2 * sum(log(diag(chol(M))))."""
    factor = cholesky(matrix)
    return float(2.0 * np.sum(np.log(np.diag(factor))))


def solve_spd(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve M x = rhs for positive definite M (vector or matrix right-hand side)."""
    factor = cholesky(matrix)
    return cho_solve((factor, True), np.asarray(rhs, dtype=float))


def inv_spd(matrix: np.ndarray) -> np.ndarray:
    """Inverse of a positive definite matrix, symmetrized."""
    m = np.asarray(matrix, dtype=float)
    return symmetrize(solve_spd(m, np.eye(m.shape[0])))


def polyfit(xs: Sequence[float], ys: Sequence[float], degree: int) -> np.ndarray:
    """
    Least-squares polynomial fit.

    The Vandermonde columns are scaled to unit norm and orthogonalized with a
    QR factorization instead of forming the normal equations.

    Args:
        xs: Sample abscissae (at least degree+1 distinct values)
        ys: Sample ordinates
        degree: Polynomial degree

    Returns:
        Coefficients in ascending powers, length degree+1

    Raises:
        ValueError: length mismatch or too few distinct abscissae
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D sequences of equal length")
    if np.unique(x).size < degree + 1:
        raise ValueError(
            f"Rank deficient fit: need {degree + 1} distinct xs, got {np.unique(x).size}"
        )

    vander = np.vander(x, degree + 1, increasing=True)
    col_norms = np.linalg.norm(vander, axis=0)
    col_norms[col_norms == 0.0] = 1.0
    q, r = np.linalg.qr(vander / col_norms)
    diag = np.abs(np.diag(r))
    if diag.min() <= np.finfo(float).eps * diag.max() * (degree + 1):
        raise ValueError("Rank deficient fit: Vandermonde columns are dependent")
    scaled = solve_triangular(r, q.T @ y)
    return scaled / col_norms
