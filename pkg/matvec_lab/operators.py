"""
Operators, the query-counting oracle, Haar rotations and hard instances.

Solvers only ever receive a CountingOracle. The planted top eigenvector of
a hard instance lives on HardInstance and is read by evaluation code only.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import scipy.linalg

from .errors import BudgetExceeded, DimensionMismatch, DivisibilityError, ResultWriteError

logger = logging.getLogger("MatvecLab-Operators")

SYMMETRY_TOLERANCE = 1e-12
ORTHONORMAL_TOLERANCE = 1e-10


# =============================================================================
# Spectra
# =============================================================================

@dataclass(frozen = True)
class SpectrumSpec:
    """Diagonal spectrum as (value, multiplicity) pairs, stored nonincreasing."""

    entries: Tuple[Tuple[float, int], ...]

    def __post_init__(self):
        normalized = []
        for index, entry in enumerate(self.entries):
            value, multiplicity = entry
            value = float(value)
            if not math.isfinite(value):
                logger.warning(f"Spectrum entry {index} is not finite: {value}")
                raise ValueError(f"Spectrum entry {index} has non-finite value {value}.")
            if int(multiplicity) != multiplicity or int(multiplicity) < 1:
                logger.warning(f"Spectrum entry {index} has multiplicity {multiplicity}")
                raise ValueError(f"Spectrum entry {index} needs a positive integer multiplicity, got {multiplicity}.")
            normalized.append((value, int(multiplicity)))

        normalized.sort(key = lambda item: -item[0])
        total = sum(multiplicity for _, multiplicity in normalized)
        if total < 2:
            raise ValueError(f"Spectrum dimension must be at least 2, got {total}.")
        object.__setattr__(self, "entries", tuple(normalized))

    @property
    def n(self) -> int:
        return sum(multiplicity for _, multiplicity in self.entries)

    @property
    def values(self) -> Tuple[float, ...]:
        return tuple(value for value, _ in self.entries)

    @property
    def multiplicities(self) -> Tuple[int, ...]:
        return tuple(multiplicity for _, multiplicity in self.entries)

    def diagonal(self) -> np.ndarray:
        """Expanded length-n diagonal in nonincreasing order."""
        return np.repeat(np.array(self.values, dtype = float), self.multiplicities)

    def block_slices(self) -> List[slice]:
        """Index ranges of each eigenspace inside the expanded diagonal."""
        slices = []
        start = 0
        for multiplicity in self.multiplicities:
            slices.append(slice(start, start + multiplicity))
            start += multiplicity
        return slices


def nearest_valid_n(n: int, q: int) -> int:
    """Smallest n' >= n with (n' - 1) divisible by (q + 1)."""
    block = q + 1
    remainder = (n - 1) % block
    return n if remainder == 0 else n + (block - remainder)


def hard_spectrum(n: int, eps: float, q: int) -> SpectrumSpec:
    """
    Spectrum of the hard instance: one planted value 1 + 2*eps, then the q + 1
    Chebyshev extrema cos(i*pi/q), each repeated k = (n - 1)/(q + 1) times.

    Parameters:
        n: Matrix dimension.
        eps: Gap parameter in (0, 0.5).
        q: Chebyshev degree, so q + 2 distinct eigenvalues.

    Returns:
        SpectrumSpec of dimension exactly n.
    """
    if not 0 < eps < 0.5:
        logger.warning(f"Hard spectrum eps out of range: {eps}")
        raise ValueError(f"eps must lie in (0, 0.5), got {eps}.")
    if q < 1 or n < q + 2:
        logger.warning(f"Hard spectrum needs n >= q + 2, got n={n}, q={q}")
        raise ValueError(f"Need q >= 1 and n >= q + 2, got n={n}, q={q}.")
    if (n - 1) % (q + 1) != 0:
        logger.warning(f"(n - 1) = {n - 1} is not divisible by (q + 1) = {q + 1}")
        raise DivisibilityError(
            f"(n - 1) = {n - 1} is not divisible by (q + 1) = {q + 1}; "
            f"nearest valid n is {nearest_valid_n(n, q)}."
        )

    k = (n - 1) // (q + 1)
    entries = [(1.0 + 2.0 * eps, 1)]
    entries.extend((math.cos(i * math.pi / q), k) for i in range(q + 1))
    return SpectrumSpec(tuple(entries))


def write_spectrum(path: Union[str, Path], spec: SpectrumSpec) -> Path:
    """Write one `value,multiplicity` line per distinct eigenvalue."""
    target = Path(path)
    lines = [f"{value:.17g},{multiplicity}" for value, multiplicity in spec.entries]
    try:
        target.parent.mkdir(parents = True, exist_ok = True)
        target.write_text("\n".join(lines) + "\n", encoding = "utf-8")
    except OSError as exc:
        raise ResultWriteError(f"Cannot write spectrum file {target}: {exc}") from exc
    return target


def read_spectrum(path: Union[str, Path]) -> SpectrumSpec:
    """Parse a spectrum file written by write_spectrum."""
    source = Path(path)
    entries = []
    for number, raw in enumerate(source.read_text(encoding = "utf-8").splitlines(), start = 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{source}:{number}: expected 'value,multiplicity', got {line!r}.")
        entries.append((float(parts[0]), int(parts[1])))
    return SpectrumSpec(tuple(entries))


# =============================================================================
# Operators
# =============================================================================

def _frozen(array: np.ndarray) -> np.ndarray:
    copy = np.array(array, dtype = float, copy = True)
    copy.flags.writeable = False
    return copy


class SymmetricOperator:
    """Symmetric n x n operator stored dense or as U diag(d) U^T."""

    def __init__(
        self,
        matrix: Optional[np.ndarray] = None,
        factor: Optional[np.ndarray] = None,
        diagonal: Optional[np.ndarray] = None,
    ):
        if (matrix is None) == (factor is None):
            raise ValueError("Provide either a dense matrix or a (factor, diagonal) pair.")

        self.matrix: Optional[np.ndarray] = None
        self.factor: Optional[np.ndarray] = None
        self.diagonal: Optional[np.ndarray] = None

        if matrix is not None:
            matrix = np.asarray(matrix, dtype = float)
            if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
                raise DimensionMismatch(f"Dense operator must be square, got shape {matrix.shape}.")
            scale = max(float(np.max(np.abs(matrix))), np.finfo(float).tiny)
            asymmetry = float(np.max(np.abs(matrix - matrix.T)))
            if asymmetry > SYMMETRY_TOLERANCE * scale:
                logger.warning(f"Dense operator asymmetry {asymmetry:.3e} exceeds tolerance")
                raise ValueError(f"Matrix is not symmetric: max |A - A^T| = {asymmetry:.3e}.")
            self.matrix = _frozen(matrix)
            self.n = matrix.shape[0]
        else:
            factor = np.asarray(factor, dtype = float)
            diagonal = np.asarray(diagonal, dtype = float)
            if factor.ndim != 2 or factor.shape[0] != factor.shape[1] or diagonal.shape != (factor.shape[0],):
                raise DimensionMismatch(
                    f"Factored operator needs U (n x n) and d (n,), got {factor.shape} and {diagonal.shape}."
                )
            drift = float(np.max(np.abs(factor.T @ factor - np.eye(factor.shape[0]))))
            if drift > ORTHONORMAL_TOLERANCE:
                logger.warning(f"Factor orthonormality drift {drift:.3e} exceeds tolerance")
                raise ValueError(f"Factor U is not orthonormal: max |U^T U - I| = {drift:.3e}.")
            self.factor = _frozen(factor)
            self.diagonal = _frozen(diagonal)
            self.n = factor.shape[0]

    @classmethod
    def dense(cls, matrix: np.ndarray) -> "SymmetricOperator":
        return cls(matrix = matrix)

    @classmethod
    def factored(cls, factor: np.ndarray, diagonal: Union[np.ndarray, SpectrumSpec]) -> "SymmetricOperator":
        if isinstance(diagonal, SpectrumSpec):
            diagonal = diagonal.diagonal()
        return cls(factor = factor, diagonal = diagonal)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n, self.n)

    @property
    def is_factored(self) -> bool:
        return self.factor is not None

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix @ x
        return self.factor @ (self.diagonal * (self.factor.T @ x))

    rmatvec = matvec

    def to_dense(self) -> np.ndarray:
        if self.matrix is not None:
            return np.array(self.matrix)
        dense = (self.factor * self.diagonal) @ self.factor.T
        return 0.5 * (dense + dense.T)


class RectOperator:
    """General n x d operator supporting A x and A^T y."""

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype = float)
        if matrix.ndim != 2 or min(matrix.shape) < 1:
            raise DimensionMismatch(f"Rectangular operator needs a non-empty 2-D matrix, got shape {matrix.shape}.")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("Rectangular operator entries must be finite.")
        self.matrix = _frozen(matrix)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        return self.matrix.T @ y

    def to_dense(self) -> np.ndarray:
        return np.array(self.matrix)


Operator = Union[SymmetricOperator, RectOperator]


class CountingOracle:
    """
    Matrix-vector access to an operator with an exact query counter.

    Each application of A or A^T costs one query. An oracle is owned by a
    single trial and is not shared across threads.
    """

    def __init__(self, inner: Operator, budget: Optional[int] = None):
        if budget is not None and budget < 1:
            raise ValueError(f"Budget must be a positive integer, got {budget}.")
        self._inner = inner
        self.budget = budget
        self.count = 0

    @property
    def shape(self) -> Tuple[int, int]:
        return self._inner.shape

    @property
    def is_symmetric(self) -> bool:
        return isinstance(self._inner, SymmetricOperator)

    @property
    def remaining(self) -> Optional[int]:
        return None if self.budget is None else self.budget - self.count

    def matvec(self, x: np.ndarray, transpose: bool = False) -> np.ndarray:
        """Return A x (or A^T x) and charge one query."""
        x = np.asarray(x, dtype = float)
        rows, cols = self.shape
        expected = rows if transpose else cols
        if x.ndim != 1 or x.shape[0] != expected:
            logger.warning(f"Query vector shape {x.shape} does not match expected ({expected},)")
            raise DimensionMismatch(f"Query vector must have length {expected}, got shape {x.shape}.")
        if self.budget is not None and self.count + 1 > self.budget:
            raise BudgetExceeded(f"Query budget {self.budget} exhausted after {self.count} products.")

        self.count += 1
        if transpose:
            return self._inner.rmatvec(x)
        return self._inner.matvec(x)


# =============================================================================
# Random rotations and hard instances
# =============================================================================

def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Haar-distributed n x n orthogonal matrix.

    QR of a Gaussian matrix, with the columns of Q rescaled by sign(diag(R))
    so the factorization is unique.
    """
    if n < 1:
        raise ValueError(f"Dimension must be positive, got {n}.")
    gaussian = rng.standard_normal((n, n))
    q, r = scipy.linalg.qr(gaussian)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


@dataclass(frozen = True)
class HardInstance:
    """Hard operator together with its evaluation-only planted direction."""

    operator: SymmetricOperator
    spectrum: SpectrumSpec
    top_vector: np.ndarray = field(repr = False)

    @property
    def top_value(self) -> float:
        return self.spectrum.values[0]


def build_hard_instance(spec: SpectrumSpec, rng: np.random.Generator) -> HardInstance:
    """Conjugate the spectrum by a Haar rotation; u1 is the first column."""
    rotation = haar_orthogonal(spec.n, rng)
    operator = SymmetricOperator.factored(rotation, spec)
    top_vector = np.array(rotation[:, 0])
    top_vector.flags.writeable = False
    return HardInstance(operator = operator, spectrum = spec, top_vector = top_vector)


# =============================================================================
# Concentration checks
# =============================================================================

@dataclass
class ConcentrationReport:
    """Success fractions of the three start-vector concentration properties."""

    trials: int
    top_coefficient: float
    eigenspace_norms: float
    block_singular_values: float

    def as_dict(self) -> Dict[str, float]:
        return {
            "trials": self.trials,
            "top_coefficient": self.top_coefficient,
            "eigenspace_norms": self.eigenspace_norms,
            "block_singular_values": self.block_singular_values,
        }


def concentration_report(
    spec: SpectrumSpec,
    s: int,
    rngs: Iterable[np.random.Generator],
) -> ConcentrationReport:
    """
    Check, per trial, the concentration of s Gaussian start vectors.

    Coordinates are taken in the eigenbasis; a Haar rotation does not change
    their distribution. For each trial:
      (a) every |coefficient on u1| <= 5 sqrt(log n);
      (b) every eigenspace projection norm lies in [0.5 sqrt(k), 2 sqrt(k)];
      (c) the matrix of normalized eigenspace projections has all singular
          values in [1/4, 4], for every eigenspace after the top one.
    """
    n = spec.n
    slices = spec.block_slices()
    bound_top = 5.0 * math.sqrt(math.log(n))
    hits = np.zeros(3, dtype = int)
    trials = 0

    for rng in rngs:
        trials += 1
        coefficients = rng.standard_normal((n, s))
        top_ok = bool(np.all(np.abs(coefficients[slices[0]]) <= bound_top))

        norms_ok = True
        singular_ok = True
        for block in slices[1:]:
            k = block.stop - block.start
            projection = coefficients[block]
            norms = np.linalg.norm(projection, axis = 0)
            if np.any(norms < 0.5 * math.sqrt(k)) or np.any(norms > 2.0 * math.sqrt(k)):
                norms_ok = False
            if np.any(norms == 0):
                singular_ok = False
                continue
            singular_values = scipy.linalg.svdvals(projection / norms)
            if s > k or singular_values.min() < 0.25 or singular_values.max() > 4.0:
                singular_ok = False

        hits += np.array([top_ok, norms_ok, singular_ok], dtype = int)

    if trials == 0:
        raise ValueError("Concentration report needs at least one trial.")
    fractions = hits / trials
    return ConcentrationReport(
        trials = trials,
        top_coefficient = float(fractions[0]),
        eigenspace_norms = float(fractions[1]),
        block_singular_values = float(fractions[2]),
    )
