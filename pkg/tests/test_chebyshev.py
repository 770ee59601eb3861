"""Unit tests for Chebyshev evaluation, growth and polynomial application."""

import math
import os
import sys

import numpy as np
from numpy.polynomial import Chebyshev

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from tests.helpers import random_symmetric, run_tests
from matvec_lab import constants
from matvec_lab.chebyshev import (
    FactoredPoly,
    PolyCoeffs,
    apply_poly,
    cheb_coeffs,
    cheb_eval,
    cheb_extrema,
    growth_envelope_check,
    growth_scale,
    log_cheb_growth,
    shifted_cheb_eval,
)
from matvec_lab.errors import BudgetExceeded, DegreeTooLarge
from matvec_lab.operators import CountingOracle, SymmetricOperator
from matvec_lab.rng import stream


def _recurrence(d, x):
    previous, current = np.ones_like(x), x
    if d == 0:
        return previous
    for _ in range(d - 1):
        previous, current = current, 2.0 * x * current - previous
    return current


def test_cheb_eval_matches_recurrence():
    """Closed forms agree with the three-term recurrence inside and outside [-1, 1]."""
    points = np.array([-1.3, -1.0, -0.4, 0.0, 0.25, 0.9, 1.0, 1.02, 1.5])
    for d in (0, 1, 2, 5, 12):
        expected = _recurrence(d, points)
        observed = cheb_eval(d, points)
        assert np.allclose(observed, expected, rtol = 1e-10, atol = 1e-10), f"Mismatch at degree {d}"

    assert cheb_eval(3, 0.5) == cheb_eval(3, np.array([0.5]))[0]
    assert isinstance(cheb_eval(4, 0.3), float)

    try:
        cheb_eval(-1, 0.5)
        raise AssertionError("Negative degree should be rejected")
    except ValueError:
        pass

    print("PASS: test_cheb_eval_matches_recurrence")


def test_cheb_coeffs_and_cap():
    """Monomial coefficients of T_3 and the degree cap."""
    assert cheb_coeffs(0).coeffs == (1.0,)
    assert np.allclose(cheb_coeffs(3).coeffs, (0.0, -3.0, 0.0, 4.0))
    assert cheb_coeffs(200).degree == 200

    try:
        cheb_coeffs(201)
        raise AssertionError("Degree 201 should exceed the monomial cap")
    except DegreeTooLarge:
        pass

    assert PolyCoeffs((0.0, 0.0)).degree == -1, "Zero polynomial has degree -1"
    assert PolyCoeffs((1.0, 2.0, 0.0)).coeffs == (1.0, 2.0)

    print("PASS: test_cheb_coeffs_and_cap")


def test_extrema_alternate():
    """T_d alternates between +1 and -1 on its extrema."""
    d = 9
    extrema = cheb_extrema(d)
    assert extrema.shape == (d + 1,)
    assert extrema[0] == 1.0
    values = cheb_eval(d, extrema)
    expected = np.array([(-1.0) ** i for i in range(d + 1)])
    assert np.allclose(values, expected, atol = 1e-12), f"Unexpected extrema values {values}"

    print("PASS: test_extrema_alternate")


def test_shifted_and_log_growth():
    """Shifted polynomial is 1 at x = 1; log growth matches the direct value."""
    assert abs(shifted_cheb_eval(15, 0.1, 1.0) - 1.0) < 1e-12
    assert abs(shifted_cheb_eval(15, 0.1, 0.5)) < 1.0

    for d, eps in ((1, 0.1), (10, 0.04), (40, 0.25)):
        direct = math.log(cheb_eval(d, 1.0 + eps))
        assert abs(log_cheb_growth(d, eps) - direct) < 1e-9, f"Log growth mismatch at d={d}, eps={eps}"

    assert math.isfinite(log_cheb_growth(100000, 0.25)), "Log growth must not overflow"

    print("PASS: test_shifted_and_log_growth")


def test_growth_envelope_constants():
    """Fitted envelope constants stay within the frozen band."""
    envelope = growth_envelope_check(200, (0.01, 0.02, 0.04, 0.1, 0.25))

    assert envelope.c_low >= constants.C_LOW, f"c_low {envelope.c_low} below {constants.C_LOW}"
    assert envelope.c_high <= constants.C_HIGH, f"c_high {envelope.c_high} above {constants.C_HIGH}"
    assert envelope.c_high < math.sqrt(2.0) + 1e-9
    assert len(envelope.rows) == 5 * 40
    assert {row["d"] for row in envelope.rows} >= {5, 200}

    try:
        growth_envelope_check(50, (0.6,))
        raise AssertionError("eps outside (0, 0.5) should be rejected")
    except ValueError:
        pass

    print("PASS: test_growth_envelope_constants")


def _normalized_random_polys(d, count, rng):
    """Random degree-d polynomials scaled so max |q| over the extrema grid is 1."""
    extrema = cheb_extrema(d)
    for _ in range(count):
        q = Chebyshev(rng.standard_normal(d + 1))
        yield q / float(np.max(np.abs(q(extrema))))


def test_chebyshev_extremality():
    """No polynomial bounded by 1 on the extrema grid grows faster than T_d outside [-1, 1]."""
    rng = stream(0, 0, "extremality")
    for d in (4, 8, 16):
        for eps in (0.05, 0.1, 0.25):
            bound = float(cheb_eval(d, 1.0 + eps)) * (1.0 + 1e-9)
            for q in _normalized_random_polys(d, 200, rng):
                value = abs(float(q(1.0 + eps)))
                assert value <= bound, f"d={d}, eps={eps}: |q(1+eps)|={value} exceeds T_d(1+eps)={bound}"

            attained = Chebyshev.basis(d)
            assert abs(float(attained(1.0 + eps)) - float(cheb_eval(d, 1.0 + eps))) < 1e-9 * bound

    print("PASS: test_chebyshev_extremality")


def test_growth_transfers_to_normalized_polys():
    """The fitted envelope constant bounds the growth of every normalized polynomial."""
    eps_grid = (0.05, 0.1, 0.25)
    envelope = growth_envelope_check(16, eps_grid, d_step = 1)
    rng = stream(0, 1, "growth-transfer")
    for d in (4, 8, 16):
        for eps in eps_grid:
            ceiling = math.exp(envelope.c_high * growth_scale(d, eps)) * (1.0 + 1e-9)
            for q in _normalized_random_polys(d, 200, rng):
                value = abs(float(q(1.0 + eps)))
                assert value <= ceiling, f"d={d}, eps={eps}: |q(1+eps)|={value} above envelope {ceiling}"

    print("PASS: test_growth_transfers_to_normalized_polys")


def test_apply_poly_uses_degree_products():
    """Horner application costs exactly deg(p) products and matches dense evaluation."""
    matrix, _ = random_symmetric(8, seed = 4)
    oracle = CountingOracle(SymmetricOperator.dense(matrix))
    poly = PolyCoeffs((0.5, -1.0, 0.0, 2.0))
    g = np.linspace(-1.0, 1.0, 8)

    result = apply_poly(oracle, poly, g)
    expected = 0.5 * g - matrix @ g + 2.0 * np.linalg.matrix_power(matrix, 3) @ g
    assert np.allclose(result, expected, atol = 1e-12)
    assert oracle.count == 3, f"Expected 3 products, got {oracle.count}"

    assert np.array_equal(apply_poly(oracle, PolyCoeffs(()), g), np.zeros(8))
    assert oracle.count == 3

    limited = CountingOracle(SymmetricOperator.dense(matrix), budget = 2)
    try:
        apply_poly(limited, poly, g)
        raise AssertionError("Expected BudgetExceeded before any product")
    except BudgetExceeded:
        pass
    assert limited.count == 0

    print("PASS: test_apply_poly_uses_degree_products")


def test_factored_poly_expand_matches_evaluate():
    """Factored and expanded forms agree at low degree."""
    poly = FactoredPoly(monomial_power = 2, roots = (0.7, 0.8), cheb_degree = 5, cheb_shift = 0.05)
    assert poly.degree == 9

    points = np.linspace(0.0, 1.0, 11)
    assert np.allclose(poly.expand().evaluate(points), poly.evaluate(points), atol = 1e-10)
    assert abs(poly.evaluate(1.0) - 0.3 * 0.2) < 1e-12

    try:
        FactoredPoly(monomial_power = 150, cheb_degree = 60, cheb_shift = 0.1).expand()
        raise AssertionError("Expansion above the cap should fail")
    except DegreeTooLarge:
        pass

    print("PASS: test_factored_poly_expand_matches_evaluate")


if __name__ == "__main__":
    sys.exit(0 if run_tests([
        test_cheb_eval_matches_recurrence,
        test_cheb_coeffs_and_cap,
        test_extrema_alternate,
        test_shifted_and_log_growth,
        test_growth_envelope_constants,
        test_chebyshev_extremality,
        test_growth_transfers_to_normalized_polys,
        test_apply_poly_uses_degree_products,
        test_factored_poly_expand_matches_evaluate,
    ]) else 1)
