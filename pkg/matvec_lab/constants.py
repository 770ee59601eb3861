"""
Frozen acceptance thresholds for the desk-scale experiments.

The underlying statements are asymptotic: they fix orders of growth and
success probabilities, not concrete numbers. Each value below was frozen
after a pilot run at the listed parameters and is a calibration artifact,
not a derived bound. Change a value only together with its provenance note.
"""

# =============================================================================
# Chebyshev growth envelope
# =============================================================================

# exp(C_LOW * m) <= T_d(1 + eps) <= exp(C_HIGH * m), m = min(sqrt(eps) d, eps d^2).
# Pilot: d <= 200, eps in {0.01, 0.02, 0.04, 0.1, 0.25}; fitted c_low ~ 0.77
# (at sqrt(eps) d ~ 1), c_high approaches sqrt(2) from below.
C_LOW = 0.5
C_HIGH = 1.5

# =============================================================================
# Single-vector lower bound
# =============================================================================

# Hard instance n = 2049, eps = 0.04, q_spec = 31.
LOWER_SINGLE_SMALL_Q = 8
# Pilot, 8 trials: correlation_sq at q = 8 had median 0.029 and max 0.29.
LOWER_SINGLE_PILOT = {"trials": 8, "median": 0.029, "max": 0.29}
# Median correlation_sq at q = LOWER_SINGLE_SMALL_Q stays below this,
# about 3.5x the pilot median and well under the pilot tail.
TAU_LOW = 0.1
LOWER_SINGLE_LARGE_Q = 128
# Median relative spectral error at the largest q.
LOWER_SINGLE_MAX_RELATIVE = 1.04
# Fraction of nested (q, q + 4) pairs whose correlation does not drop.
MONOTONE_FRACTION = 0.95
MONOTONE_STEP = 4
MONOTONE_SLACK = 1e-9

# Start-vector concentration: each property in at least this fraction of trials.
CONCENTRATION_FRACTION = 0.9

# =============================================================================
# Block lower bound
# =============================================================================

# Desk-scale surrogate for the eps/10 correlation bound. A single Gaussian
# vector has correlation_sq ~ 1/n = 4.9e-4 ~ eps/80 at n = 2049, but the
# pilot reached correlation_sq ~ 0.9997 at r = s = 16 (256 products), so the
# eps/10 bound cannot hold at moderate budgets for this n. It is checked
# only at total budgets r * s <= BLOCK_SMALL_BUDGET, against BLOCK_TAU.
BLOCK_SMALL_BUDGET = 4
BLOCK_TAU = 0.05
BLOCK_TAU_FRACTION = 0.9
# Median correlation_sq with block size s > 1 against s = 1 at matched r*s.
BLOCK_RATIO_LIMIT = 2.0
# Absolute floor so two vanishing medians do not fail the ratio.
BLOCK_RATIO_FLOOR = 1e-6

# =============================================================================
# Schatten-p upper bound
# =============================================================================

# t* = ceil(UPPER_T_CONSTANT * p * log(1/eps) * eps^(-1/3)).
# Pilot: p in {1, 2}, eps in {0.05, 0.1}, six-spectrum library, n = 120, d = 80.
UPPER_T_CONSTANT = 1.0
UPPER_SUCCESS_FRACTION = 0.95
# Median error across the t grid may rise by at most this fraction of eps.
UPPER_MONOTONE_SLACK = 0.01
UPPER_ROWS = 120
UPPER_COLS = 80

# =============================================================================
# Good vectors
# =============================================================================

# Minimum success fraction per case id.
GOOD_VECTOR_FRACTIONS = {1: 1.0, 2: 0.9, 3: 0.9, 4: 0.95}

# =============================================================================
# Lifting
# =============================================================================

LIFT_ALPHA = 0.001
# Per-run simulator residual bound.
LIFT_RESIDUAL = 1e-8
# Number of runs of the per-run invariant suite.
LIFT_INVARIANT_RUNS = 20
# Adaptive median correlation may exceed the block median by this much.
LIFT_COMPARE_SLACK = 0.02
# Replaying a round through the rotated instance (p3, p4) loses a little more precision.
LIFT_REPLAY_RESIDUAL = 1e-6

# A failed statistical check is rerun once with this many times the trials.
RERUN_FACTOR = 4

# (n, eps, q_spec) the calibrated lower-bound thresholds were frozen at.
CALIBRATION_POINT = (2049, 0.04, 31)
