"""Exception types raised by matvec_lab.

Precondition failures derive from ValueError, runtime failures (budget,
rank, asserted post-conditions) from RuntimeError.
"""


class MatvecLabError(Exception):
    """Root of every error raised by this package."""


# =============================================================================
# Precondition errors
# =============================================================================

class DimensionMismatch(MatvecLabError, ValueError):
    """Vector length does not match the operator."""


class DivisibilityError(MatvecLabError, ValueError):
    """(n - 1) is not a multiple of (q + 1) for a hard spectrum."""


class DegreeTooLarge(MatvecLabError, ValueError):
    """Monomial expansion requested above the degree cap."""


class CaseMismatch(MatvecLabError, ValueError):
    """Spectrum does not satisfy the requested good-vector case."""


class NotUnit(MatvecLabError, ValueError):
    """Vector expected to be unit norm is not."""


class DegenerateW(MatvecLabError, ValueError):
    """A^T w vanishes, so the right direction is undefined."""


class HypothesisViolated(MatvecLabError, ValueError):
    """Left vector is not correlated enough with the top direction."""


class SpectrumMismatch(MatvecLabError, ValueError):
    """Operator spectrum does not have the required gap structure."""


class NotOrthogonal(MatvecLabError, ValueError):
    """Rotation targets are not orthogonal to the fixed vectors."""


class ConfigError(MatvecLabError, ValueError):
    """Invalid experiment configuration."""


class UnknownStrategy(MatvecLabError, ValueError):
    """Adaptive strategy name is not registered."""


# =============================================================================
# Runtime errors
# =============================================================================

class BudgetExceeded(MatvecLabError, RuntimeError):
    """Oracle query budget would be exceeded."""


class RankCollapse(MatvecLabError, RuntimeError):
    """Krylov data has lost all numerical rank."""


class InvariantViolation(MatvecLabError, RuntimeError):
    """A post-condition checked by the library does not hold."""


class ResultWriteError(MatvecLabError, OSError):
    """Result file could not be written."""
