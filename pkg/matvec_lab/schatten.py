"""
Schatten-p norms and rank-1 approximation error functionals.

Evaluation-side code: everything goes through a dense SVD of the explicit
residual, with p = inf handled as its own branch. factored_spectral_error
is the exception, an exact O(n) spectral error for factored symmetric
operators used by large sweeps.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import (
    DegenerateW,
    DimensionMismatch,
    HypothesisViolated,
    InvariantViolation,
    NotUnit,
    SpectrumMismatch,
)
from .krylov import LraReport
from .operators import HardInstance, RectOperator, SymmetricOperator

logger = logging.getLogger("MatvecLab-Schatten")

UNIT_TOLERANCE = 1e-6
RELATIVE_SLACK = 1e-9
LEVEL_DECIMALS = 12

MatrixLike = Union[np.ndarray, SymmetricOperator, RectOperator]


@dataclass(frozen = True)
class SingularSpectrum:
    """Nonincreasing nonnegative singular values."""

    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(value) for value in self.values)
        if any(value < 0 for value in values):
            raise ValueError("Singular values must be nonnegative.")
        if any(later > earlier for earlier, later in zip(values, values[1:])):
            raise ValueError("Singular values must be nonincreasing.")
        object.__setattr__(self, "values", values)

    @classmethod
    def of(cls, matrix: MatrixLike) -> "SingularSpectrum":
        return cls(tuple(singular_values(matrix)))


def as_matrix(matrix: MatrixLike) -> np.ndarray:
    if isinstance(matrix, (SymmetricOperator, RectOperator)):
        return matrix.to_dense()
    array = np.asarray(matrix, dtype = float)
    if array.ndim != 2:
        raise DimensionMismatch(f"Expected a 2-D matrix, got shape {array.shape}.")
    return array


def singular_values(matrix: MatrixLike) -> np.ndarray:
    return scipy.linalg.svdvals(as_matrix(matrix))


def _check_p(p: float) -> float:
    p = float(p)
    if not (p >= 1.0):
        raise ValueError(f"Schatten exponent must lie in [1, inf], got {p}.")
    return p


def _norm_of_values(values: np.ndarray, p: float) -> float:
    if values.size == 0:
        return 0.0
    if math.isinf(p):
        return float(np.max(values))
    return float(np.sum(values ** p) ** (1.0 / p))


def schatten_norm(matrix: MatrixLike, p: float) -> float:
    """(sum sigma_i^p)^(1/p), or sigma_1 for p = inf."""
    return _norm_of_values(singular_values(matrix), _check_p(p))


def optimal_rank1_error(matrix: MatrixLike, p: float) -> float:
    """Best rank-1 error: the norm of sigma_2, sigma_3, ..."""
    p = _check_p(p)
    dense = as_matrix(matrix)
    if min(dense.shape) < 2:
        raise ValueError(f"Rank-1 error needs min(n, d) >= 2, got shape {dense.shape}.")
    return _norm_of_values(singular_values(dense)[1:], p)


def _checked_unit(v: np.ndarray, length: int) -> np.ndarray:
    v = np.asarray(v, dtype = float)
    if v.ndim != 1 or v.shape[0] != length:
        raise DimensionMismatch(f"Vector must have length {length}, got shape {v.shape}.")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        logger.warning(f"Vector norm {norm} is not 1")
        raise NotUnit(f"Expected a unit vector, got norm {norm}.")
    return v


def lra_error(matrix: MatrixLike, v: np.ndarray, p: float) -> float:
    """Schatten-p norm of the explicit residual A (I - v v^T)."""
    p = _check_p(p)
    dense = as_matrix(matrix)
    v = _checked_unit(v, dense.shape[1])
    residual = dense - np.outer(dense @ v, v)
    return _norm_of_values(scipy.linalg.svdvals(residual), p)


def pythagorean_check(matrix: MatrixLike, w: np.ndarray) -> Tuple[float, float, float]:
    """
    |A w w^T|_F^2 + |A (I - w w^T)|_F^2 against |A|_F^2.

    Returns:
        (lhs, rhs, residual) with residual = |lhs - rhs|.
    """
    dense = as_matrix(matrix)
    w = _checked_unit(w, dense.shape[1])
    projected = np.outer(dense @ w, w)
    lhs = float(np.sum(projected ** 2) + np.sum((dense - projected) ** 2))
    rhs = float(np.sum(dense ** 2))
    return lhs, rhs, abs(lhs - rhs)


def schatten_pythagorean_check(matrix: MatrixLike, w: np.ndarray, p: float) -> Tuple[bool, float]:
    """
    |A|_p^p >= |w w^T A|_p^p + |A (I - v v^T)|_p^p with v = A^T w / |A^T w|.

    Returns:
        (holds, slack) where slack = lhs - rhs.
    """
    p = _check_p(p)
    if math.isinf(p):
        raise ValueError("The p-th power inequality needs a finite p.")
    dense = as_matrix(matrix)
    w = _checked_unit(w, dense.shape[0])
    back = dense.T @ w
    norm_back = float(np.linalg.norm(back))
    if norm_back == 0.0:
        raise DegenerateW("A^T w = 0, so the right direction is undefined.")
    v = back / norm_back

    lhs = schatten_norm(dense, p) ** p
    rhs = norm_back ** p + lra_error(dense, v, p) ** p
    slack = lhs - rhs
    return slack >= -RELATIVE_SLACK * lhs, slack


def correlated_vector_to_lra(
    matrix: MatrixLike,
    w: np.ndarray,
    p: float,
    eps: float,
    queries: int = 0,
) -> LraReport:
    """
    Turn a correlated left vector into a rank-1 approximation.

    Requires |A^T w|^p >= (1 + eps) sigma_1^p - eps |A|_p^p and then
    guarantees |A (I - v v^T)|_p^p <= (1 + eps) OPT^p for v = A^T w / |A^T w|.
    """
    p = _check_p(p)
    if math.isinf(p):
        raise ValueError("Correlated-vector reduction needs a finite p.")
    dense = as_matrix(matrix)
    w = _checked_unit(w, dense.shape[0])
    sigma = singular_values(dense)
    norm_pp = float(np.sum(sigma ** p))

    back = dense.T @ w
    norm_back = float(np.linalg.norm(back))
    required = (1.0 + eps) * sigma[0] ** p - eps * norm_pp
    if norm_back ** p < required - RELATIVE_SLACK * norm_pp:
        logger.warning(f"|A^T w|^p = {norm_back ** p:.6g} below required {required:.6g}")
        raise HypothesisViolated(
            f"|A^T w|^p = {norm_back ** p:.6g} is below (1+eps) sigma_1^p - eps |A|_p^p = {required:.6g}."
        )
    if norm_back == 0.0:
        raise DegenerateW("A^T w = 0, so the right direction is undefined.")

    v = back / norm_back
    achieved = lra_error(dense, v, p)
    optimal = _norm_of_values(sigma[1:], p)
    if achieved ** p > (1.0 + eps) * optimal ** p + RELATIVE_SLACK * norm_pp:
        raise InvariantViolation(
            f"Residual {achieved ** p:.6g} exceeds (1+eps) OPT^p = {(1.0 + eps) * optimal ** p:.6g}."
        )
    return LraReport(
        v = v,
        achieved_error = achieved,
        optimal_error = optimal,
        relative_error = relative_error(achieved, optimal),
        queries = queries,
        p = p,
    )


def relative_error(achieved: float, optimal: float) -> float:
    """achieved / optimal, never below 1 (rounding), 1 when both vanish."""
    if optimal == 0.0:
        return 1.0 if achieved <= RELATIVE_SLACK else math.inf
    return max(achieved / optimal, 1.0)


def spectral_gap_witness(instance: HardInstance, w: np.ndarray, eps: float) -> bool:
    """
    True when w is weakly correlated with u1 and with A u1's direction.

    The operator must have top eigenvalue 1 + 2 eps (simple) and every other
    eigenvalue in [-1, 1]. When the witness holds, the spectral error of w
    is checked to exceed (1 + eps) times the optimum.
    """
    values = instance.spectrum.values
    multiplicities = instance.spectrum.multiplicities
    if abs(values[0] - (1.0 + 2.0 * eps)) > 1e-12 or multiplicities[0] != 1:
        raise SpectrumMismatch(f"Top eigenvalue must be a simple 1 + 2 eps = {1 + 2 * eps}, got {values[0]}.")
    if any(abs(value) > 1.0 + 1e-12 for value in values[1:]):
        raise SpectrumMismatch("All eigenvalues after the top one must lie in [-1, 1].")

    operator = instance.operator
    w = _checked_unit(w, operator.n)
    u1 = instance.top_vector
    aligned = float(u1 @ w) ** 2 <= eps / 2.0
    image_aligned = float(u1 @ operator.matvec(w)) ** 2 <= eps / 2.0
    if not (aligned and image_aligned):
        return False

    achieved = lra_error(operator, w, math.inf)
    optimal = optimal_rank1_error(operator, math.inf)
    if not achieved > (1.0 + eps) * optimal:
        raise InvariantViolation(
            f"Spectral error {achieved:.6g} does not exceed (1+eps) * {optimal:.6g} for a weakly correlated w."
        )
    return True


def factored_spectral_error(operator: SymmetricOperator, v: np.ndarray) -> float:
    """
    Exact |A (I - v v^T)|_op for A = U diag(d) U^T without an n x n SVD.

    In the eigenbasis the squared error is the top eigenvalue of
    P diag(d^2) P with P = I - c c^T, c = U^T v. Levels of d^2 shared by
    several directions or untouched by c keep their value; the remaining
    candidate is the largest root of sum_k c_k^2 / (level_k - mu) = 0,
    which lies between the two largest levels carrying weight.
    """
    if not operator.is_factored:
        raise ValueError("factored_spectral_error needs a factored operator.")
    v = _checked_unit(v, operator.n)
    coords = operator.factor.T @ v
    levels, inverse = np.unique(np.round(operator.diagonal ** 2, LEVEL_DECIMALS), return_inverse = True)
    weights = np.bincount(inverse, weights = coords ** 2, minlength = levels.size)
    counts = np.bincount(inverse, minlength = levels.size)

    floor = np.finfo(float).eps ** 2
    candidates = [0.0]
    kept = (counts > 1) | (weights <= floor)
    if np.any(kept):
        candidates.append(float(levels[kept].max()))

    active = np.flatnonzero(weights > floor)
    if active.size >= 2:
        top, second = float(levels[active[-1]]), float(levels[active[-2]])
        candidates.append(_largest_secular_root(levels[active], weights[active], second, top))

    return math.sqrt(max(candidates))


def _largest_secular_root(levels: np.ndarray, weights: np.ndarray, low: float, high: float) -> float:
    """Root of sum w_k / (level_k - mu) on (low, high), both poles."""

    def secular(mu: float) -> float:
        return float(np.sum(weights / (levels - mu)))

    gap = high - low
    lower: Optional[float] = None
    upper: Optional[float] = None
    for step in (1e-14, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 0.5):
        candidate = low + gap * step
        if candidate > low and np.isfinite(secular(candidate)):
            if secular(candidate) >= 0.0:
                return candidate
            lower = candidate
            break
    for step in (1e-14, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 0.5):
        candidate = high - gap * step
        if candidate < high and np.isfinite(secular(candidate)):
            if secular(candidate) <= 0.0:
                return candidate
            upper = candidate
            break
    if lower is None or upper is None:
        return high
    return float(scipy.optimize.brentq(secular, lower, upper, xtol = 1e-15 * max(high, 1.0), maxiter = 500))
