"""Krylov solvers, hard instances and lifting simulation in the matrix-vector query model."""

from .chebyshev import FactoredPoly, PolyCoeffs, cheb_coeffs, cheb_eval, growth_envelope_check, log_cheb_growth
from .errors import ConfigError, MatvecLabError
from .krylov import (
    KrylovSubspace,
    best_correlation,
    block_krylov,
    classify_case,
    good_vector_exists,
    krylov_iteration,
    rectangular_krylov,
)
from .lifting import AdaptiveAlgorithm, get_strategy, run_adaptive, simulate
from .operators import (
    CountingOracle,
    RectOperator,
    SpectrumSpec,
    SymmetricOperator,
    build_hard_instance,
    haar_orthogonal,
    hard_spectrum,
)
from .rng import stream
from .schatten import lra_error, optimal_rank1_error, schatten_norm

__all__ = [
    "FactoredPoly",
    "PolyCoeffs",
    "cheb_coeffs",
    "cheb_eval",
    "growth_envelope_check",
    "log_cheb_growth",
    "ConfigError",
    "MatvecLabError",
    "KrylovSubspace",
    "best_correlation",
    "block_krylov",
    "classify_case",
    "good_vector_exists",
    "krylov_iteration",
    "rectangular_krylov",
    "AdaptiveAlgorithm",
    "get_strategy",
    "run_adaptive",
    "simulate",
    "CountingOracle",
    "RectOperator",
    "SpectrumSpec",
    "SymmetricOperator",
    "build_hard_instance",
    "haar_orthogonal",
    "hard_spectrum",
    "stream",
    "lra_error",
    "optimal_rank1_error",
    "schatten_norm",
]
