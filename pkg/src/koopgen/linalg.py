"""Dense linear-algebra kernels.

Everything here is a pure function of its array arguments. Pseudoinverses go
through the SVD rather than normal equations because stacked monomial feature
matrices are badly conditioned and ``A^T A`` would square that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .errors import BranchCutError, DefectiveMatrixError, NumericalFailure

DEFAULT_RCOND = 1e-12
DEFECTIVE_THRESHOLD = 1e12
BRANCH_TOL = 1e-14


def _as_matrix(A: ArrayLike) -> NDArray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericalFailure("matrix contains non-finite entries")
    return A


def _svd(A: NDArray):
    try:
        return np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc


def pinv(A: ArrayLike, rcond: float = DEFAULT_RCOND) -> NDArray:
    """Moore-Penrose pseudoinverse via the SVD.

    Singular values below ``rcond * sigma_max`` are treated as zero.
    """
    if not 0.0 < rcond < 1.0:
        raise ValueError("rcond must lie in (0, 1)")
    A = _as_matrix(A)
    if A.size == 0:
        return np.zeros((A.shape[1], A.shape[0]))
    U, s, Vt = _svd(A)
    cutoff = rcond * s[0] if s.size else 0.0
    inv_s = np.zeros_like(s)
    keep = s > cutoff
    inv_s[keep] = 1.0 / s[keep]
    return (Vt.T * inv_s) @ U.T


def tikhonov_pinv(A: ArrayLike, delta: float, rcond: float = DEFAULT_RCOND) -> NDArray:
    """Regularized pseudoinverse ``(A^T A + delta I)^{-1} A^T``.

    Evaluated through the SVD as ``V diag(s / (s^2 + delta)) U^T`` so the
    Gram matrix is never formed. ``delta == 0`` falls back to :func:`pinv`.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if delta == 0:
        return pinv(A, rcond)
    A = _as_matrix(A)
    U, s, Vt = _svd(A)
    return (Vt.T * (s / (s * s + delta))) @ U.T


def lstsq(A: ArrayLike, Y: ArrayLike, rcond: float = DEFAULT_RCOND) -> NDArray:
    """Minimum-norm least-squares solution of ``A X = Y``."""
    Y = np.asarray(Y, dtype=float)
    return pinv(A, rcond) @ Y


def singular_values(A: ArrayLike) -> NDArray:
    A = _as_matrix(A)
    try:
        return np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc


def condition_number(A: ArrayLike) -> float:
    """2-norm condition number ``sigma_max / sigma_min`` (``inf`` when singular)."""
    s = singular_values(A)
    if s.size == 0 or s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


@dataclass(frozen=True)
class ComplexEig:
    eigenvalues: NDArray
    eigenvectors: NDArray
    condition_estimate: float


def complex_eig(A: ArrayLike) -> ComplexEig:
    """Eigenvalues and (column) eigenvectors with ``cond(V)`` as a defectiveness gauge."""
    A = _as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("complex_eig needs a square matrix")
    try:
        w, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition did not converge: {exc}") from exc
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(V)) if A.size else 1.0
    if not np.isfinite(cond):
        cond = float("inf")
    return ComplexEig(w.astype(complex), V.astype(complex), cond)


def matrix_log(A: ArrayLike) -> tuple[NDArray, NDArray]:
    """Principal matrix logarithm ``V diag(Log w) V^{-1}``.

    Returns the real and imaginary parts separately.

    Raises
    ------
    DefectiveMatrixError
        If ``cond(V)`` exceeds ``DEFECTIVE_THRESHOLD``.
    BranchCutError
        If an eigenvalue is (numerically) zero or lies on the closed negative
        real axis.
    """
    eig = complex_eig(A)
    w, V = eig.eigenvalues, eig.eigenvectors
    if eig.condition_estimate > DEFECTIVE_THRESHOLD:
        raise DefectiveMatrixError(
            f"eigenvector basis condition {eig.condition_estimate:.3e} exceeds "
            f"{DEFECTIVE_THRESHOLD:.0e}"
        )
    mag = np.abs(w)
    if np.any(mag < BRANCH_TOL):
        raise BranchCutError("matrix has a (numerically) zero eigenvalue")
    on_cut = (w.real < 0) & (np.abs(w.imag) <= 1e-12 * mag)
    if np.any(on_cut):
        raise BranchCutError(f"eigenvalue(s) on the negative real axis: {w[on_cut]}")
    logD = np.log(w)
    # V diag(logD) V^{-1} without forming the inverse explicitly
    M = np.linalg.solve(V.T, (V * logD).T).T
    return M.real.copy(), M.imag.copy()


def matrix_exp(A: ArrayLike) -> NDArray:
    """Matrix exponential by scaling-and-squaring with a diagonal Pade approximant."""
    A = _as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix_exp needs a square matrix")
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(A)
    if not np.all(np.isfinite(E)):
        raise NumericalFailure("matrix exponential overflowed")
    return E
