"""
Chebyshev polynomials of the first kind.

Evaluation goes through the trigonometric / hyperbolic closed forms; the
monomial expansion is available up to MAX_MONOMIAL_DEGREE for applying a
polynomial to an operator with Horner's scheme.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from numpy.polynomial import polynomial as npoly

from .errors import BudgetExceeded, DegreeTooLarge, InvariantViolation
from .operators import CountingOracle

logger = logging.getLogger("MatvecLab-Chebyshev")

MAX_MONOMIAL_DEGREE = 200

ArrayLike = Union[float, np.ndarray]


# =============================================================================
# Coefficient form
# =============================================================================

@dataclass(frozen = True)
class PolyCoeffs:
    """Monomial coefficients; coeffs[i] multiplies x**i."""

    coeffs: Tuple[float, ...]

    def __post_init__(self):
        values = [float(value) for value in self.coeffs]
        if not all(math.isfinite(value) for value in values):
            raise ValueError("Polynomial coefficients must be finite.")
        while values and values[-1] == 0.0:
            values.pop()
        object.__setattr__(self, "coeffs", tuple(values))

    @property
    def degree(self) -> int:
        """Highest nonzero power, or -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def evaluate(self, x: ArrayLike) -> ArrayLike:
        """Horner evaluation."""
        return npoly.polyval(x, self.coeffs or (0.0,))

    @classmethod
    def from_polynomial(cls, polynomial: Polynomial) -> "PolyCoeffs":
        return cls(tuple(polynomial.convert(kind = Polynomial).coef))


# =============================================================================
# Evaluation
# =============================================================================

def cheb_eval(d: int, x: ArrayLike) -> ArrayLike:
    """
    T_d(x) from the closed forms.

    cos(d arccos x) on |x| <= 1, and
    ((x - sqrt(x^2 - 1))^d + (x + sqrt(x^2 - 1))^d) / 2 outside.
    """
    if d < 0:
        raise ValueError(f"Chebyshev degree must be nonnegative, got {d}.")
    points = np.atleast_1d(np.asarray(x, dtype = float))
    result = np.empty_like(points)

    inside = np.abs(points) <= 1.0
    result[inside] = np.cos(d * np.arccos(points[inside]))

    outside = ~inside
    if np.any(outside):
        values = points[outside]
        root = np.sqrt(values * values - 1.0)
        with np.errstate(over = "ignore"):
            result[outside] = 0.5 * ((values - root) ** d + (values + root) ** d)

    if np.ndim(x) == 0:
        return float(result[0])
    return result.reshape(np.shape(x))


def cheb_coeffs(d: int) -> PolyCoeffs:
    """Monomial coefficients of T_d."""
    if d < 0:
        raise ValueError(f"Chebyshev degree must be nonnegative, got {d}.")
    if d > MAX_MONOMIAL_DEGREE:
        logger.warning(f"Monomial form requested for degree {d} > {MAX_MONOMIAL_DEGREE}")
        raise DegreeTooLarge(f"Monomial form is capped at degree {MAX_MONOMIAL_DEGREE}, got {d}.")
    return PolyCoeffs.from_polynomial(Chebyshev.basis(d))


def cheb_extrema(d: int) -> np.ndarray:
    """Extrema cos(i*pi/d), i = 0..d, in decreasing order."""
    if d < 1:
        raise ValueError(f"Extrema need degree >= 1, got {d}.")
    return np.cos(np.arange(d + 1) * math.pi / d)


def shifted_cheb_eval(d: int, eps: float, x: ArrayLike) -> ArrayLike:
    """T_d(x + eps) / T_d(1 + eps): equals 1 at x = 1, small on [0, 1 - eps]."""
    return cheb_eval(d, np.asarray(x, dtype = float) + eps) / cheb_eval(d, 1.0 + eps)


def log_cheb_growth(d: int, eps: float) -> float:
    """log T_d(1 + eps) without forming T_d itself."""
    if eps <= 0:
        raise ValueError(f"Growth is evaluated at 1 + eps with eps > 0, got {eps}.")
    x = 1.0 + eps
    y = x + math.sqrt(x * x - 1.0)
    log_y = math.log(y)
    return math.log(0.5) + d * log_y + math.log1p(math.exp(-2.0 * d * log_y))


# =============================================================================
# Growth envelope
# =============================================================================

@dataclass
class GrowthEnvelope:
    """Fitted constants with exp(c_low*m) <= T_d(1+eps) <= exp(c_high*m)."""

    c_low: float
    c_high: float
    rows: List[Dict[str, float]] = field(default_factory = list)

    def as_dict(self) -> Dict[str, float]:
        return {"c_low": self.c_low, "c_high": self.c_high, "points": len(self.rows)}


def growth_scale(d: int, eps: float) -> float:
    """min(sqrt(eps) d, eps d^2)."""
    return min(math.sqrt(eps) * d, eps * d * d)


def growth_envelope_check(
    d_max: int,
    eps_grid: Sequence[float],
    d_step: int = 5,
) -> GrowthEnvelope:
    """
    Fit the envelope constants over d in {d_step, 2 d_step, ..., d_max}.

    Parameters:
        d_max: Largest degree in the grid.
        eps_grid: Values of eps in (0, 0.5).
        d_step: Degree spacing; degree d_max is always included.

    Returns:
        GrowthEnvelope with per-point ratios log T_d(1+eps) / m.
    """
    degrees = list(range(d_step, d_max + 1, d_step)) if d_max >= d_step else [d_max]
    if degrees[-1] != d_max:
        degrees.append(d_max)

    rows = []
    for eps in eps_grid:
        if not 0 < eps < 0.5:
            raise ValueError(f"Envelope eps must lie in (0, 0.5), got {eps}.")
        for d in degrees:
            log_value = log_cheb_growth(d, eps)
            scale = growth_scale(d, eps)
            rows.append({"d": d, "eps": eps, "log_value": log_value, "ratio": log_value / scale})

    ratios = [row["ratio"] for row in rows]
    envelope = GrowthEnvelope(c_low = min(ratios), c_high = max(ratios), rows = rows)
    if envelope.c_low <= 0:
        raise InvariantViolation(f"Fitted lower envelope constant is not positive: {envelope.c_low}.")
    logger.info(f"Growth envelope: c_low={envelope.c_low:.4f}, c_high={envelope.c_high:.4f} over {len(rows)} points")
    return envelope


# =============================================================================
# Applying polynomials
# =============================================================================

def apply_poly(oracle: CountingOracle, p: PolyCoeffs, g: np.ndarray) -> np.ndarray:
    """p(A) g by Horner's scheme, exactly p.degree products."""
    g = np.asarray(g, dtype = float)
    if p.degree < 0:
        return np.zeros_like(g)
    if oracle.remaining is not None and oracle.remaining < p.degree:
        raise BudgetExceeded(f"Polynomial of degree {p.degree} needs more than the {oracle.remaining} remaining products.")

    result = p.coeffs[-1] * g
    for coefficient in reversed(p.coeffs[:-1]):
        result = oracle.matvec(result) + coefficient * g
    return result


@dataclass(frozen = True)
class FactoredPoly:
    """
    x^m * prod(x - r_i) * T_d(x + delta) / T_d(1 + delta), kept factored.

    Pointwise evaluation stays accurate at degrees where the monomial
    expansion would not; expand() is available up to MAX_MONOMIAL_DEGREE.
    """

    monomial_power: int = 0
    roots: Tuple[float, ...] = ()
    cheb_degree: int = 0
    cheb_shift: float = 0.0

    @property
    def degree(self) -> int:
        return self.monomial_power + len(self.roots) + self.cheb_degree

    def evaluate(self, x: ArrayLike) -> ArrayLike:
        points = np.asarray(x, dtype = float)
        values = points ** self.monomial_power
        for root in self.roots:
            values = values * (points - root)
        if self.cheb_degree > 0:
            values = values * shifted_cheb_eval(self.cheb_degree, self.cheb_shift, points)
        if np.ndim(x) == 0:
            return float(values)
        return values

    def expand(self) -> PolyCoeffs:
        if self.degree > MAX_MONOMIAL_DEGREE:
            raise DegreeTooLarge(f"Monomial form is capped at degree {MAX_MONOMIAL_DEGREE}, got {self.degree}.")
        product = Polynomial.basis(self.monomial_power)
        for root in self.roots:
            product = product * Polynomial([-root, 1.0])
        if self.cheb_degree > 0:
            shifted = Chebyshev.basis(self.cheb_degree).convert(kind = Polynomial)(Polynomial([self.cheb_shift, 1.0]))
            product = product * shifted / cheb_eval(self.cheb_degree, 1.0 + self.cheb_shift)
        return PolyCoeffs.from_polynomial(product)
