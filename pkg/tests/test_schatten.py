"""Unit tests for Schatten norms and rank-1 error functionals."""

import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from tests.helpers import run_tests
from matvec_lab.errors import HypothesisViolated, NotUnit, SpectrumMismatch
from matvec_lab.operators import SpectrumSpec, build_hard_instance, haar_orthogonal, hard_spectrum
from matvec_lab.rng import stream
from matvec_lab.schatten import (
    SingularSpectrum,
    correlated_vector_to_lra,
    factored_spectral_error,
    lra_error,
    optimal_rank1_error,
    pythagorean_check,
    relative_error,
    schatten_norm,
    schatten_pythagorean_check,
    spectral_gap_witness,
)


def test_schatten_norm_values():
    """Nuclear, Frobenius and spectral norms of a diagonal matrix."""
    matrix = np.diag([3.0, 4.0])
    assert abs(schatten_norm(matrix, 1.0) - 7.0) < 1e-12
    assert abs(schatten_norm(matrix, 2.0) - 5.0) < 1e-12
    assert abs(schatten_norm(matrix, math.inf) - 4.0) < 1e-12

    try:
        schatten_norm(matrix, 0.5)
        raise AssertionError("p < 1 should be rejected")
    except ValueError:
        pass

    print("PASS: test_schatten_norm_values")


def test_schatten_unitary_invariance_and_ordering():
    """Norms ignore orthogonal factors and satisfy S_inf <= S_p <= S_1."""
    for trial in range(20):
        rng = stream(21, trial, "schatten")
        rows, cols = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        matrix = rng.standard_normal((rows, cols))
        left = haar_orthogonal(rows, rng)
        right = haar_orthogonal(cols, rng)
        rotated = left @ matrix @ right

        spectral = schatten_norm(matrix, math.inf)
        nuclear = schatten_norm(matrix, 1.0)
        for p in (1.0, 1.5, 2.0, 3.0, math.inf):
            value = schatten_norm(matrix, p)
            assert abs(schatten_norm(rotated, p) - value) <= 1e-10 * max(value, 1.0), f"Trial {trial}: S_{p} not invariant"
            assert spectral - 1e-12 <= value <= nuclear + 1e-12, f"Trial {trial}: S_{p}={value} outside [{spectral}, {nuclear}]"

        previous = nuclear
        for p in (1.5, 2.0, 3.0, 4.0):
            value = schatten_norm(matrix, p)
            assert value <= previous + 1e-12, f"Trial {trial}: S_p should not grow with p"
            previous = value

    print("PASS: test_schatten_unitary_invariance_and_ordering")


def test_rank1_errors():
    """Optimal error drops sigma_1; lra_error with the top direction attains it."""
    matrix = np.diag([3.0, 2.0, 1.0])
    assert abs(optimal_rank1_error(matrix, 2.0) - math.sqrt(5.0)) < 1e-12
    assert abs(optimal_rank1_error(matrix, math.inf) - 2.0) < 1e-12

    top = np.array([1.0, 0.0, 0.0])
    for p in (1.0, 2.0, 3.0, math.inf):
        assert abs(lra_error(matrix, top, p) - optimal_rank1_error(matrix, p)) < 1e-12

    off = np.array([0.0, 1.0, 0.0])
    assert lra_error(matrix, off, 2.0) > optimal_rank1_error(matrix, 2.0)

    try:
        lra_error(matrix, np.array([1.0, 1.0, 0.0]), 2.0)
        raise AssertionError("Non-unit v should be rejected")
    except NotUnit:
        pass

    print("PASS: test_rank1_errors")


def test_relative_error_edge_cases():
    """Ratio is clamped at 1 and handles a vanishing optimum."""
    assert relative_error(2.0, 1.0) == 2.0
    assert relative_error(0.999999, 1.0) == 1.0
    assert relative_error(0.0, 0.0) == 1.0
    assert math.isinf(relative_error(1.0, 0.0))

    print("PASS: test_relative_error_edge_cases")


def test_pythagorean_identities():
    """Frobenius split is exact; the Schatten-2 inequality holds for any unit w."""
    rng = stream(12, 0, "test-pythagorean")
    matrix = rng.standard_normal((7, 5))

    w_right = rng.standard_normal(5)
    w_right /= np.linalg.norm(w_right)
    lhs, rhs, residual = pythagorean_check(matrix, w_right)
    assert residual < 1e-10 * rhs, f"Frobenius split residual {residual}"

    for _ in range(5):
        w_left = rng.standard_normal(7)
        w_left /= np.linalg.norm(w_left)
        holds, slack = schatten_pythagorean_check(matrix, w_left, 2.0)
        assert holds, f"Inequality failed with slack {slack}"

    print("PASS: test_pythagorean_identities")


def test_correlated_vector_to_lra():
    """A well-correlated left vector yields a (1 + eps) approximation; a poor one is rejected."""
    matrix = np.diag([1.0, 0.5, 0.5, 0.5])

    report = correlated_vector_to_lra(matrix, np.array([1.0, 0.0, 0.0, 0.0]), 2.0, 0.1, queries = 5)
    assert abs(report.relative_error - 1.0) < 1e-12
    assert report.queries == 5
    assert abs(report.optimal_error - math.sqrt(0.75)) < 1e-12

    try:
        correlated_vector_to_lra(matrix, np.array([0.0, 1.0, 0.0, 0.0]), 2.0, 0.1)
        raise AssertionError("Weakly correlated w should violate the hypothesis")
    except HypothesisViolated:
        pass

    print("PASS: test_correlated_vector_to_lra")


def test_spectral_gap_witness():
    """A direction orthogonal to u1 and its image is a witness; u1 itself is not."""
    eps = 0.25
    instance = build_hard_instance(hard_spectrum(n = 101, eps = eps, q = 4), stream(2, 0, "instance"))
    rotation = instance.operator.factor

    assert spectral_gap_witness(instance, np.array(rotation[:, 1]), eps) is True
    assert spectral_gap_witness(instance, np.array(instance.top_vector), eps) is False

    other = build_hard_instance(SpectrumSpec(((2.0, 1), (1.0, 3))), stream(2, 0, "instance"))
    try:
        spectral_gap_witness(other, np.array(other.top_vector), eps)
        raise AssertionError("Top value other than 1 + 2 eps should be rejected")
    except SpectrumMismatch:
        pass

    print("PASS: test_spectral_gap_witness")


def test_factored_spectral_error_matches_dense():
    """Secular-equation error agrees with the dense SVD path."""
    instance = build_hard_instance(hard_spectrum(n = 101, eps = 0.25, q = 4), stream(6, 0, "instance"))
    operator = instance.operator
    rng = stream(6, 0, "test-directions")

    directions = [np.array(instance.top_vector)]
    for _ in range(4):
        vector = rng.standard_normal(101)
        directions.append(vector / np.linalg.norm(vector))
    mixed = instance.top_vector + 0.1 * directions[1]
    directions.append(mixed / np.linalg.norm(mixed))

    for index, v in enumerate(directions):
        fast = factored_spectral_error(operator, v)
        dense = lra_error(operator, v, math.inf)
        assert abs(fast - dense) < 1e-8 * dense, f"Direction {index}: {fast} vs {dense}"

    assert abs(factored_spectral_error(operator, np.array(instance.top_vector)) - 1.0) < 1e-10

    print("PASS: test_factored_spectral_error_matches_dense")


def test_singular_spectrum_validation():
    """Singular values must be nonnegative and nonincreasing."""
    assert SingularSpectrum.of(np.diag([1.0, 3.0])).values == (3.0, 1.0)
    for values in ((1.0, 2.0), (1.0, -0.1)):
        try:
            SingularSpectrum(values)
            raise AssertionError(f"{values} should be rejected")
        except ValueError:
            pass

    print("PASS: test_singular_spectrum_validation")


if __name__ == "__main__":
    sys.exit(0 if run_tests([
        test_schatten_norm_values,
        test_schatten_unitary_invariance_and_ordering,
        test_rank1_errors,
        test_relative_error_edge_cases,
        test_pythagorean_identities,
        test_correlated_vector_to_lra,
        test_spectral_gap_witness,
        test_factored_spectral_error_matches_dense,
        test_singular_spectrum_validation,
    ]) else 1)
