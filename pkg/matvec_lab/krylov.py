"""
Krylov solvers for rank-1 approximation in the matrix-vector query model.

Three constructions share one orthonormalization routine:
  - krylov_iteration: single start vector, span{Ag, ..., A^q g}, top
    Rayleigh-Ritz vector of A^2.
  - block_krylov: s start vectors, span{A^t g_j : t <= r}.
  - rectangular_krylov: span{(AA^T)^i g : i <= t} in the column space,
    returns v = A^T w / |A^T w| for the Ritz vector w of AA^T.

Every Krylov column is rescaled to unit norm as soon as it is computed.
The operator image of the basis is assembled from stored products plus one
closing application of the last column(s), which is charged to the oracle.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .chebyshev import FactoredPoly, log_cheb_growth
from .errors import CaseMismatch, DimensionMismatch, RankCollapse
from .operators import CountingOracle, RectOperator
from .rng import stream

logger = logging.getLogger("MatvecLab-Krylov")

RANK_TOLERANCE = 1e-10
SUCCESS_SLACK = 1e-12


# =============================================================================
# Types
# =============================================================================

@dataclass(frozen = True)
class KrylovSubspace:
    """Raw Krylov columns, their orthonormal basis and query accounting."""

    raw_columns: np.ndarray
    basis: np.ndarray
    block_size: int
    iterations: int
    queries_used: int
    basis_image: Optional[np.ndarray] = None

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]


@dataclass
class LraReport:
    """Outcome of one rank-1 approximation."""

    v: np.ndarray
    achieved_error: float
    optimal_error: float
    relative_error: float
    queries: int
    p: float
    correlation_sq: Optional[float] = None

    def as_dict(self) -> Dict[str, float]:
        return {
            "achieved_error": self.achieved_error,
            "optimal_error": self.optimal_error,
            "relative_error": self.relative_error,
            "correlation_sq": self.correlation_sq,
            "queries": self.queries,
            "p": self.p,
        }


# =============================================================================
# Shared helpers
# =============================================================================

def _unit(vector: np.ndarray) -> np.ndarray:
    """Rescale to unit norm; the zero vector stays zero."""
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        return np.zeros_like(vector)
    return vector / norm


def _unit_columns(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis = 0)
    norms[norms == 0.0] = 1.0
    return matrix / norms


def _orthonormalize(
    columns: np.ndarray,
    images: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Column-pivoted Householder QR with rank truncation.

    Columns whose pivot falls below RANK_TOLERANCE times the largest column
    norm are dropped. When `images` holds the operator applied to each
    column, the image of the kept basis is returned alongside it.

    Returns:
        (Q, image of Q or None)
    """
    largest = float(np.max(np.linalg.norm(columns, axis = 0))) if columns.size else 0.0
    if largest == 0.0:
        raise RankCollapse("Krylov data has numerical rank 0 (start vector in the kernel).")

    q, r, pivots = scipy.linalg.qr(columns, mode = "economic", pivoting = True)
    pivots_abs = np.abs(np.diag(r))
    rank = int(np.count_nonzero(pivots_abs > RANK_TOLERANCE * largest))
    if rank == 0:
        raise RankCollapse("Krylov data has numerical rank 0 (start vector in the kernel).")
    if rank < columns.shape[1]:
        logger.debug(f"Rank truncation kept {rank} of {columns.shape[1]} Krylov columns")

    basis = q[:, :rank]
    if images is None:
        return basis, None

    leading = r[:rank, :rank]
    selected = images[:, pivots[:rank]]
    image = scipy.linalg.solve_triangular(leading, selected.T, trans = "T", lower = False).T
    return basis, image


def _top_ritz(image: np.ndarray) -> np.ndarray:
    """Top eigenvector of image^T image (the projected Gram matrix)."""
    gram = image.T @ image
    gram = 0.5 * (gram + gram.T)
    _, vectors = scipy.linalg.eigh(gram)
    return vectors[:, -1]


def _require_symmetric(oracle: CountingOracle, name: str) -> int:
    rows, cols = oracle.shape
    if not oracle.is_symmetric or rows != cols:
        logger.warning(f"{name} called on a non-symmetric operator of shape {oracle.shape}")
        raise ValueError(f"{name} needs a symmetric operator, got shape {oracle.shape}.")
    return rows


# =============================================================================
# Solvers
# =============================================================================

def krylov_iteration(
    oracle: CountingOracle,
    q: int,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, KrylovSubspace]:
    """
    Single-vector Krylov iteration.

    Builds span{Ag, ..., A^q g} with q products and returns the unit vector
    maximizing v^T A^2 v on it. One more product closes the ladder so the
    image of every basis column is known (q + 1 products total).

    Parameters:
        oracle: Counting oracle over a symmetric operator.
        q: Number of Krylov powers, >= 1.
        rng: Generator for the Gaussian start vector.

    Returns:
        (v, subspace). subspace.queries_used is q + 1: the Ritz step on
        Q^T A^2 Q needs A^(q+1) g, one power beyond the span.
    """
    n = _require_symmetric(oracle, "krylov_iteration")
    if q < 1:
        raise ValueError(f"Krylov iteration needs q >= 1, got {q}.")

    start = oracle.count
    ladder = [_unit(rng.standard_normal(n))]
    products = []
    for _ in range(q):
        product = oracle.matvec(ladder[-1])
        products.append(product)
        ladder.append(_unit(product))
    products.append(oracle.matvec(ladder[-1]))

    columns = np.column_stack(ladder[1:])
    images = np.column_stack(products[1:])
    basis, basis_image = _orthonormalize(columns, images)

    v = _unit(basis @ _top_ritz(basis_image))
    if float(v @ columns[:, 0]) < 0:
        v = -v

    subspace = KrylovSubspace(
        raw_columns = columns,
        basis = basis,
        block_size = 1,
        iterations = q,
        queries_used = oracle.count - start,
        basis_image = basis_image,
    )
    return v, subspace


def block_krylov(
    oracle: CountingOracle,
    r: int,
    s: int,
    rng: np.random.Generator,
    closure: bool = False,
) -> KrylovSubspace:
    """
    Block Krylov subspace span{A^t g_j : 0 <= t <= r, 1 <= j <= s}.

    Uses exactly r*s products. With closure=True one more block application
    (s products) records the operator image of the basis, so
    rayleigh_ritz_vector can be used on the result.
    """
    n = _require_symmetric(oracle, "block_krylov")
    if r < 1 or s < 1:
        raise ValueError(f"Block Krylov needs r >= 1 and s >= 1, got r={r}, s={s}.")
    if s * (r + 1) >= n:
        logger.warning(f"Block Krylov with s*(r+1) = {s * (r + 1)} >= n = {n}")
        raise ValueError(f"Block Krylov needs s*(r+1) < n, got s={s}, r={r}, n={n}.")

    start = oracle.count
    current = _unit_columns(rng.standard_normal((n, s)))
    blocks = [current]
    products = []
    steps = r + 1 if closure else r
    for step in range(steps):
        product = np.column_stack([oracle.matvec(current[:, j]) for j in range(s)])
        products.append(product)
        if step < r:
            current = _unit_columns(product)
            blocks.append(current)

    columns = np.hstack(blocks)
    images = np.hstack(products) if closure else None
    basis, basis_image = _orthonormalize(columns, images)
    return KrylovSubspace(
        raw_columns = columns,
        basis = basis,
        block_size = s,
        iterations = r,
        queries_used = oracle.count - start,
        basis_image = basis_image,
    )


def best_correlation(subspace: KrylovSubspace, u: np.ndarray) -> float:
    """max |<v, u>| over unit v in the span, i.e. |Q^T u|."""
    u = np.asarray(u, dtype = float)
    if u.ndim != 1 or u.shape[0] != subspace.basis.shape[0]:
        raise DimensionMismatch(f"Vector of shape {u.shape} does not match subspace dimension {subspace.basis.shape[0]}.")
    return float(np.linalg.norm(subspace.basis.T @ u))


def rayleigh_ritz_vector(subspace: KrylovSubspace) -> np.ndarray:
    """Unit vector in the span maximizing |A v| (needs the basis image)."""
    if subspace.basis_image is None:
        raise ValueError("Subspace carries no operator image; build it with closure=True.")
    v = _unit(subspace.basis @ _top_ritz(subspace.basis_image))
    if float(v @ subspace.raw_columns[:, 0]) < 0:
        v = -v
    return v


def rectangular_krylov(
    oracle: CountingOracle,
    t: int,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray, KrylovSubspace]:
    """
    Krylov method for Schatten-p rank-1 approximation of an n x d matrix.

    Builds span{g, (AA^T) g, ..., (AA^T)^t g} in R^n with 2t products and one
    more transpose product for the last column, then takes the Ritz vector w
    of AA^T and returns v = A^T w / |A^T w|.

    Returns:
        (v in R^d, w in R^n, subspace)
    """
    if t < 0:
        raise ValueError(f"Rectangular Krylov needs t >= 0, got {t}.")
    n, _ = oracle.shape

    start = oracle.count
    ladder = [_unit(rng.standard_normal(n))]
    transposed = []
    for _ in range(t):
        back = oracle.matvec(ladder[-1], transpose = True)
        transposed.append(back)
        ladder.append(_unit(oracle.matvec(back)))
    transposed.append(oracle.matvec(ladder[-1], transpose = True))

    columns = np.column_stack(ladder)
    images = np.column_stack(transposed)
    basis, basis_image = _orthonormalize(columns, images)

    coefficients = _top_ritz(basis_image)
    w = basis @ coefficients
    back = basis_image @ coefficients
    norm_w = float(np.linalg.norm(w))
    w, back = w / norm_w, back / norm_w
    if float(w @ columns[:, 0]) < 0:
        w, back = -w, -back

    norm_back = float(np.linalg.norm(back))
    if norm_back == 0.0:
        raise RankCollapse("A^T w vanished on the whole Krylov span.")
    v = back / norm_back

    subspace = KrylovSubspace(
        raw_columns = columns,
        basis = basis,
        block_size = 1,
        iterations = t,
        queries_used = oracle.count - start,
        basis_image = basis_image,
    )
    return v, w, subspace


# =============================================================================
# Good vectors in the Krylov span
# =============================================================================

def _normalized_spectrum(spectrum: Sequence[float], require_unit_top: bool) -> np.ndarray:
    values = np.sort(np.asarray(spectrum, dtype = float))[::-1]
    if values.size < 2:
        raise ValueError("Spectrum needs at least two eigenvalues.")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValueError("Spectrum of AA^T must be finite and nonnegative.")
    if values[0] <= 0:
        raise ValueError("Top eigenvalue must be positive.")
    if require_unit_top and abs(values[0] - 1.0) > 1e-12:
        logger.warning(f"Spectrum top eigenvalue {values[0]} is not normalized to 1")
        raise ValueError(f"Spectrum must be normalized so the top eigenvalue is 1, got {values[0]}.")
    return values / values[0]


def tail_mass(values: np.ndarray, p: float) -> float:
    """Sum over i >= 2 of lambda_i^(p/2)."""
    return float(np.sum(values[1:] ** (p / 2.0)))


def top_band_count(values: np.ndarray, p: float) -> int:
    """Number of eigenvalues in [1 - 1/(2p), 1]."""
    return int(np.count_nonzero(values >= 1.0 - 1.0 / (2.0 * p)))


def case_holds(case_id: int, values: np.ndarray, p: float, eps: float) -> bool:
    """Hypothesis of each good-vector case; tau = 1/2 counts as case 4."""
    tau = tail_mass(values, p)
    count = top_band_count(values, p)
    threshold = eps ** (-1.0 / 3.0) + 1.0
    if case_id == 1:
        return tau >= 1.0 / eps
    if case_id == 2:
        return tau < 1.0 / eps and count >= threshold
    if case_id == 3:
        return 0.5 < tau <= 1.0 / eps and count <= threshold
    if case_id == 4:
        return tau <= 0.5
    raise CaseMismatch(f"Case id must be 1, 2, 3 or 4, got {case_id}.")


def classify_case(spectrum: Sequence[float], p: float, eps: float) -> int:
    """First case whose hypothesis the (rescaled) spectrum satisfies."""
    values = _normalized_spectrum(spectrum, require_unit_top = False)
    for case_id in (1, 2, 4, 3):
        if case_holds(case_id, values, p, eps):
            return case_id
    raise CaseMismatch(f"Spectrum fits no good-vector case at p={p}, eps={eps}.")


def case2_min_degree(p: float, eps: float) -> int:
    """
    Smallest total degree t = d + ceil(p/2) whose shifted Chebyshev factor
    satisfies 1/T_d(1 + delta) <= eps^2/p, delta = eps^(2/3)/(2p).
    """
    delta = eps ** (2.0 / 3.0) / (2.0 * p)
    target = math.log(p / eps ** 2)
    d = 1
    while log_cheb_growth(d, delta) < target:
        d += 1
    return d + math.ceil(p / 2.0)


def good_vector_polynomial(
    case_id: int,
    spectrum: Sequence[float],
    p: float,
    eps: float,
    t: int,
) -> Optional[FactoredPoly]:
    """
    Filter polynomial whose image of a Gaussian vector is a good left vector.

    Case 1 needs no polynomial and returns None. Otherwise:
      - case 2: x^ceil(p/2) * T_d(x + delta) / T_d(1 + delta), d = t - ceil(p/2);
      - case 3: x^e * prod(x - lambda_i) over the band
        [1 - 1/(2p), 1 - eps/(2p)], e = min(t // 2, t - #roots);
      - case 4: x^t.

    Parameters:
        case_id: 1..4, checked against the spectrum.
        spectrum: Eigenvalues of AA^T with the top one equal to 1.
        p: Schatten exponent, >= 1.
        eps: Accuracy parameter.
        t: Degree budget.
    """
    if p < 1:
        raise ValueError(f"Schatten exponent must be >= 1, got {p}.")
    if t < 1:
        raise ValueError(f"Degree budget must be positive, got {t}.")
    values = _normalized_spectrum(spectrum, require_unit_top = True)
    if not case_holds(case_id, values, p, eps):
        logger.warning(f"Spectrum violates the hypothesis of case {case_id} (p={p}, eps={eps})")
        raise CaseMismatch(f"Spectrum does not satisfy the hypothesis of case {case_id} at p={p}, eps={eps}.")

    if case_id == 1:
        return None

    if case_id == 2:
        power = math.ceil(p / 2.0)
        degree = t - power
        if degree < 1:
            raise ValueError(f"Degree budget {t} leaves no room for the Chebyshev factor (need > {power}).")
        return FactoredPoly(
            monomial_power = power,
            cheb_degree = degree,
            cheb_shift = eps ** (2.0 / 3.0) / (2.0 * p),
        )

    if case_id == 3:
        low = 1.0 - 1.0 / (2.0 * p)
        high = 1.0 - eps / (2.0 * p)
        band = tuple(float(value) for value in values[1:] if low <= value <= high)
        power = min(t // 2, t - len(band))
        if power < 0:
            raise ValueError(f"Degree budget {t} is smaller than the {len(band)} band roots.")
        return FactoredPoly(monomial_power = power, roots = band)

    return FactoredPoly(monomial_power = t)


@dataclass
class GoodVectorReport:
    """Success fractions of the polynomial filter and of the Ritz vector."""

    case_id: int
    p: float
    eps: float
    t: int
    trials: int
    successes: int
    ritz_successes: Optional[int] = None
    queries: Optional[int] = None

    @property
    def success_fraction(self) -> float:
        return self.successes / self.trials

    @property
    def ritz_fraction(self) -> Optional[float]:
        if self.ritz_successes is None:
            return None
        return self.ritz_successes / self.trials

    def as_dict(self) -> Dict[str, float]:
        return {
            "case_id": self.case_id,
            "p": self.p,
            "eps": self.eps,
            "t": self.t,
            "trials": self.trials,
            "success_fraction": self.success_fraction,
            "ritz_fraction": self.ritz_fraction,
            "queries": self.queries,
        }


def _good_vector_holds(values: np.ndarray, w: np.ndarray, p: float, eps: float) -> bool:
    """(w^T Lambda w)^(p/2) >= 1 - eps * tail mass, for unit w."""
    energy = float(np.sum(values * w * w))
    return energy ** (p / 2.0) >= 1.0 - eps * tail_mass(values, p) - SUCCESS_SLACK


def good_vector_exists(
    spectrum: Sequence[float],
    p: float,
    eps: float,
    t: int,
    trials: int,
    seed: int,
    run_krylov: bool = True,
) -> GoodVectorReport:
    """
    Empirical existence of a good left vector in the degree-t Krylov span.

    The spectrum is rescaled so its top eigenvalue is 1. Each trial draws g,
    forms w = phi(Lambda) g / |phi(Lambda) g| for the applicable case and
    tests the good-vector inequality. With run_krylov, the same g seeds
    rectangular_krylov on A = diag(sqrt(lambda)) and its Ritz vector is
    tested too.
    """
    if trials < 1:
        raise ValueError(f"Trials must be positive, got {trials}.")
    values = _normalized_spectrum(spectrum, require_unit_top = False)
    case_id = classify_case(values, p, eps)
    polynomial = good_vector_polynomial(case_id, values, p, eps, t)
    weights = np.ones_like(values) if polynomial is None else polynomial.evaluate(values)
    operator = RectOperator(np.diag(np.sqrt(values)))

    successes = 0
    ritz_successes = 0 if run_krylov else None
    queries = None
    for trial in range(trials):
        g = stream(seed, trial, "good-vector").standard_normal(values.size)
        w = _unit(weights * g)
        if np.any(w) and _good_vector_holds(values, w, p, eps):
            successes += 1

        if run_krylov:
            oracle = CountingOracle(operator)
            _, ritz_w, _ = rectangular_krylov(oracle, t, stream(seed, trial, "good-vector"))
            queries = oracle.count
            if _good_vector_holds(values, ritz_w, p, eps):
                ritz_successes += 1

    logger.info(f"Good-vector case {case_id}: {successes}/{trials} polynomial successes")
    return GoodVectorReport(
        case_id = case_id,
        p = p,
        eps = eps,
        t = t,
        trials = trials,
        successes = successes,
        ritz_successes = ritz_successes,
        queries = queries,
    )
