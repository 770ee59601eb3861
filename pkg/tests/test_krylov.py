"""Unit tests for the Krylov solvers and the good-vector construction."""

import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from tests.helpers import random_symmetric, run_tests
from matvec_lab.errors import CaseMismatch
from matvec_lab.krylov import (
    best_correlation,
    block_krylov,
    case2_min_degree,
    case_holds,
    classify_case,
    good_vector_exists,
    good_vector_polynomial,
    krylov_iteration,
    rayleigh_ritz_vector,
    rectangular_krylov,
)
from matvec_lab.operators import (
    CountingOracle,
    RectOperator,
    SymmetricOperator,
    build_hard_instance,
    hard_spectrum,
)
from matvec_lab.rng import stream
from matvec_lab.schatten import lra_error, optimal_rank1_error, relative_error


def test_krylov_iteration_query_count_and_unit_output():
    """q powers plus one closing product; output is a unit vector in the span."""
    matrix, _ = random_symmetric(30, seed = 1)
    oracle = CountingOracle(SymmetricOperator.dense(matrix))

    v, subspace = krylov_iteration(oracle, 6, stream(2, 0, "start-vector"))

    assert oracle.count == 7, f"Expected q + 1 = 7 products, got {oracle.count}"
    assert subspace.queries_used == 7
    assert subspace.dimension == 6
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12
    residual = v - subspace.basis @ (subspace.basis.T @ v)
    assert np.linalg.norm(residual) < 1e-10, "Output must lie in the Krylov span"

    try:
        krylov_iteration(CountingOracle(RectOperator(np.ones((4, 3)))), 2, stream(2, 0, "start-vector"))
        raise AssertionError("Non-symmetric operator should be rejected")
    except ValueError:
        pass

    print("PASS: test_krylov_iteration_query_count_and_unit_output")


def test_krylov_iteration_recovers_small_spectrum():
    """With few distinct eigenvalues the span holds u1 exactly."""
    spec = hard_spectrum(n = 101, eps = 0.25, q = 4)
    instance = build_hard_instance(spec, stream(9, 0, "instance"))
    oracle = CountingOracle(instance.operator)

    v, subspace = krylov_iteration(oracle, 8, stream(9, 0, "start-vector"))

    correlation = best_correlation(subspace, instance.top_vector)
    assert abs(correlation - 1.0) < 1e-6, f"Expected full correlation, got {correlation}"
    assert abs(abs(float(v @ instance.top_vector)) - 1.0) < 1e-6, "Ritz vector should be u1"

    print("PASS: test_krylov_iteration_recovers_small_spectrum")


def test_nested_start_vector_gives_monotone_correlation():
    """Same start vector, larger q: the subspace grows, so correlation cannot drop."""
    spec = hard_spectrum(n = 257, eps = 0.1, q = 7)
    instance = build_hard_instance(spec, stream(4, 0, "instance"))

    previous = 0.0
    for q in (1, 2, 4, 8, 16):
        _, subspace = krylov_iteration(CountingOracle(instance.operator), q, stream(4, 0, "start-vector"))
        correlation = best_correlation(subspace, instance.top_vector)
        assert correlation >= previous - 1e-9, f"Correlation dropped at q={q}: {correlation} < {previous}"
        previous = correlation

    print("PASS: test_nested_start_vector_gives_monotone_correlation")


def test_block_krylov_counts_and_precondition():
    """r*s products, s more with closure; s(r+1) >= n is rejected."""
    matrix, _ = random_symmetric(40, seed = 2)

    oracle = CountingOracle(SymmetricOperator.dense(matrix))
    subspace = block_krylov(oracle, 3, 4, stream(1, 0, "block-start-4"))
    assert oracle.count == 12, f"Expected r*s = 12 products, got {oracle.count}"
    assert subspace.dimension == 16
    assert subspace.basis_image is None

    closed = CountingOracle(SymmetricOperator.dense(matrix))
    subspace = block_krylov(closed, 3, 4, stream(1, 0, "block-start-4"), closure = True)
    assert closed.count == 16
    assert subspace.basis_image is not None

    for r, s in ((9, 4), (1, 20), (3, 40)):
        try:
            block_krylov(CountingOracle(SymmetricOperator.dense(matrix)), r, s, stream(1, 0, "block"))
            raise AssertionError(f"(r={r}, s={s}) should be rejected for n=40")
        except ValueError:
            pass

    print("PASS: test_block_krylov_counts_and_precondition")


def test_rayleigh_ritz_vector_needs_image():
    """Ritz vector needs the closing block and maximizes |A v| over the span."""
    eigenvalues = np.array([3.0, 1.0, 0.5, -0.2, -0.4, 0.1, 0.05, -0.8])
    matrix, _ = random_symmetric(8, seed = 3, eigenvalues = eigenvalues)

    subspace = block_krylov(CountingOracle(SymmetricOperator.dense(matrix)), 1, 2, stream(3, 0, "block"))
    try:
        rayleigh_ritz_vector(subspace)
        raise AssertionError("Missing basis image should be an error")
    except ValueError:
        pass

    oracle = CountingOracle(SymmetricOperator.dense(matrix))
    subspace = block_krylov(oracle, 2, 2, stream(3, 0, "block"), closure = True)
    v = rayleigh_ritz_vector(subspace)
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12
    assert np.linalg.norm(v - subspace.basis @ (subspace.basis.T @ v)) < 1e-10

    best = np.linalg.norm(matrix @ v)
    for column in subspace.basis.T:
        assert best >= np.linalg.norm(matrix @ column) - 1e-10, "Ritz vector must dominate every basis direction"

    print("PASS: test_rayleigh_ritz_vector_needs_image")


def test_rayleigh_ritz_is_optimal_on_the_span():
    """The Krylov output is the top eigenvector of the projected A^2 and beats every vector in the span."""
    for seed in range(10):
        matrix, _ = random_symmetric(8, seed = 40 + seed)
        v, subspace = krylov_iteration(CountingOracle(SymmetricOperator.dense(matrix)), 3, stream(seed, 0, "start-vector"))
        basis = subspace.basis
        squared = matrix @ matrix

        values, vectors = np.linalg.eigh(basis.T @ squared @ basis)
        expected = basis @ vectors[:, -1]
        assert abs(abs(float(v @ expected)) - 1.0) < 1e-8, f"seed={seed}: output differs from the projected top eigenvector"
        best = float(v @ squared @ v)
        assert abs(best - values[-1]) < 1e-10 * max(values[-1], 1.0)

        rng = stream(seed, 1, "span-samples")
        for _ in range(100):
            w = basis @ rng.standard_normal(basis.shape[1])
            w /= np.linalg.norm(w)
            assert float(w @ squared @ w) <= best + 1e-12, f"seed={seed}: a span vector beats the Ritz vector"

    print("PASS: test_rayleigh_ritz_is_optimal_on_the_span")


def test_rectangular_ritz_vector_maximizes_transpose_norm():
    """|A^T w| for the returned w is at least |A^T w'| for random unit w' in the span."""
    for seed in range(5):
        rect = stream(seed, 0, "rect").standard_normal((10, 6))
        w, subspace = rectangular_krylov(CountingOracle(RectOperator(rect)), 2, stream(seed, 0, "start-vector"))[1:]
        best = float(np.linalg.norm(rect.T @ w))
        assert abs(float(np.linalg.norm(w)) - 1.0) < 1e-12

        rng = stream(seed, 1, "span-samples")
        for _ in range(100):
            other = subspace.basis @ rng.standard_normal(subspace.dimension)
            other /= np.linalg.norm(other)
            assert float(np.linalg.norm(rect.T @ other)) <= best + 1e-10, f"seed={seed}: a span vector beats w"

    print("PASS: test_rectangular_ritz_vector_maximizes_transpose_norm")


def test_rectangular_krylov_exact_on_tiny_instance():
    """diag(1, 0.3, 0.2) with t = 3 spans everything, so the error is optimal."""
    matrix = np.diag([1.0, 0.3, 0.2])
    oracle = CountingOracle(RectOperator(matrix))

    v, w, subspace = rectangular_krylov(oracle, 3, stream(8, 0, "start-vector"))

    assert oracle.count == 7, f"Expected 2t + 1 = 7 products, got {oracle.count}"
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12 and abs(np.linalg.norm(w) - 1.0) < 1e-12
    for p in (1.0, 2.0, math.inf):
        ratio = relative_error(lra_error(matrix, v, p), optimal_rank1_error(matrix, p))
        assert abs(ratio - 1.0) < 1e-8, f"Relative error at p={p} is {ratio}"

    print("PASS: test_rectangular_krylov_exact_on_tiny_instance")


def test_rectangular_krylov_improves_with_t():
    """Median relative error over a few seeds does not grow with t."""
    rng = stream(5, 0, "instance")
    left, _ = np.linalg.qr(rng.standard_normal((60, 40)))
    right, _ = np.linalg.qr(rng.standard_normal((40, 40)))
    singular = 0.9 ** np.arange(40)
    matrix = (left * singular) @ right.T
    optimal = optimal_rank1_error(matrix, 2.0)

    medians = []
    for t in (1, 4, 16):
        errors = []
        for trial in range(5):
            v, _, _ = rectangular_krylov(CountingOracle(RectOperator(matrix)), t, stream(5, trial, "start-vector"))
            errors.append(relative_error(lra_error(matrix, v, 2.0), optimal))
        medians.append(float(np.median(errors)))

    assert medians[0] >= medians[1] - 1e-9 and medians[1] >= medians[2] - 1e-9, f"Medians not monotone: {medians}"
    assert medians[2] < 1.01, f"t=16 should be near optimal, got {medians[2]}"

    print("PASS: test_rectangular_krylov_improves_with_t")


def test_classify_case_examples():
    """Case order is 1, 2, 4, 3 and a tail mass of exactly 1/2 counts as case 4."""
    assert classify_case([1.0] + [0.5] * 40, 2.0, 0.1) == 1
    assert classify_case([1.0] + [0.875] * 4 + [0.01] * 50, 2.0, 0.1) == 2
    assert classify_case([1.0, 0.85, 0.825] + [0.01] * 50, 2.0, 0.1) == 3
    assert classify_case([1.0] + [0.05] * 8, 2.0, 0.1) == 4
    assert classify_case([1.0, 0.25, 0.25], 2.0, 0.1) == 4, "tau = 1/2 is case 4"
    assert classify_case([1.0] + [0.3] * 5, 2.0, 0.1) == 3

    values = np.array([1.0] + [0.3] * 5)
    assert case_holds(3, values, 2.0, 0.1) and not case_holds(4, values, 2.0, 0.1)
    try:
        case_holds(5, values, 2.0, 0.1)
        raise AssertionError("Case 5 should be rejected")
    except CaseMismatch:
        pass

    print("PASS: test_classify_case_examples")


def test_good_vector_polynomial_checks_hypothesis():
    """Wrong case ids raise CaseMismatch; each case gets its filter shape."""
    light = [1.0] + [0.05] * 8
    try:
        good_vector_polynomial(1, light, 2.0, 0.1, 10)
        raise AssertionError("Case 1 hypothesis does not hold for a light tail")
    except CaseMismatch:
        pass

    assert good_vector_polynomial(1, [1.0] + [0.5] * 40, 2.0, 0.1, 10) is None
    power = good_vector_polynomial(4, light, 2.0, 0.1, 10)
    assert power.monomial_power == 10 and power.degree == 10

    band = good_vector_polynomial(3, [1.0, 0.85, 0.825] + [0.01] * 50, 2.0, 0.1, 10)
    assert set(band.roots) == {0.85, 0.825}
    assert band.monomial_power == 5

    degree = case2_min_degree(2.0, 0.1)
    cluster = good_vector_polynomial(2, [1.0] + [0.875] * 4 + [0.01] * 50, 2.0, 0.1, degree)
    assert cluster.monomial_power == 1 and cluster.cheb_degree == degree - 1
    assert abs(cluster.evaluate(1.0) - 1.0) < 1e-12

    print("PASS: test_good_vector_polynomial_checks_hypothesis")


def test_case2_min_degree_meets_target():
    """The chosen Chebyshev degree is the first to clear log(p / eps^2)."""
    from matvec_lab.chebyshev import log_cheb_growth

    for p, eps in ((1.0, 0.1), (2.0, 0.05), (4.0, 0.2)):
        t = case2_min_degree(p, eps)
        d = t - math.ceil(p / 2.0)
        delta = eps ** (2.0 / 3.0) / (2.0 * p)
        target = math.log(p / eps ** 2)
        assert log_cheb_growth(d, delta) >= target
        assert d == 1 or log_cheb_growth(d - 1, delta) < target

    print("PASS: test_case2_min_degree_meets_target")


def test_good_vector_exists_fractions():
    """Case 1 always succeeds; the light-tail case succeeds in nearly every trial."""
    heavy = good_vector_exists([1.0] + [0.5] * 40, 2.0, 0.1, 4, trials = 20, seed = 3)
    assert heavy.case_id == 1
    assert heavy.success_fraction == 1.0
    assert heavy.ritz_fraction == 1.0
    assert heavy.queries == 9

    light = good_vector_exists([1.0] + [0.05] * 8, 2.0, 0.1, 12, trials = 40, seed = 3)
    assert light.case_id == 4
    assert light.success_fraction >= 0.95, f"Case 4 success fraction {light.success_fraction}"
    assert light.ritz_fraction >= light.success_fraction - 1e-12, "Ritz vector should do at least as well"

    skipped = good_vector_exists([1.0] + [0.05] * 8, 2.0, 0.1, 12, trials = 5, seed = 3, run_krylov = False)
    assert skipped.ritz_fraction is None and skipped.queries is None

    print("PASS: test_good_vector_exists_fractions")


def test_small_instances_match_dense_ground_truth():
    """Once the span saturates, every solver returns the dense top direction."""
    eigenvalues = np.array([2.0, 1.0, 1.0, -1.0, -1.0, 0.5, 0.5, 0.5])
    for seed in range(3):
        matrix, _ = random_symmetric(8, seed = 20 + seed, eigenvalues = eigenvalues)
        values, vectors = np.linalg.eigh(matrix)
        top = vectors[:, int(np.argmax(np.abs(values)))]

        for q in (4, 6):
            v, _ = krylov_iteration(CountingOracle(SymmetricOperator.dense(matrix)), q, stream(seed, 0, "start-vector"))
            assert abs(abs(float(v @ top)) - 1.0) < 1e-8, f"seed={seed}, q={q}: Krylov output is not u1"

        subspace = block_krylov(CountingOracle(SymmetricOperator.dense(matrix)), 3, 1, stream(seed, 0, "block"), closure = True)
        ritz = rayleigh_ritz_vector(subspace)
        assert abs(abs(float(ritz @ top)) - 1.0) < 1e-8, f"seed={seed}: block Ritz vector is not u1"

        rng = stream(seed, 0, "rect-instance")
        left, _ = np.linalg.qr(rng.standard_normal((10, 6)))
        right, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        rect = (left * np.array([2.0, 1.0, 1.0, 0.5, 0.5, 0.5])) @ right.T
        _, _, vt = np.linalg.svd(rect)
        v, _, _ = rectangular_krylov(CountingOracle(RectOperator(rect)), 3, stream(seed, 0, "start-vector"))
        assert abs(abs(float(v @ vt[0])) - 1.0) < 1e-8, f"seed={seed}: rectangular output is not the top right vector"

    print("PASS: test_small_instances_match_dense_ground_truth")


if __name__ == "__main__":
    sys.exit(0 if run_tests([
        test_krylov_iteration_query_count_and_unit_output,
        test_krylov_iteration_recovers_small_spectrum,
        test_nested_start_vector_gives_monotone_correlation,
        test_block_krylov_counts_and_precondition,
        test_rayleigh_ritz_vector_needs_image,
        test_rayleigh_ritz_is_optimal_on_the_span,
        test_rectangular_ritz_vector_maximizes_transpose_norm,
        test_rectangular_krylov_exact_on_tiny_instance,
        test_rectangular_krylov_improves_with_t,
        test_classify_case_examples,
        test_good_vector_polynomial_checks_hypothesis,
        test_case2_min_degree_meets_target,
        test_good_vector_exists_fractions,
        test_small_instances_match_dense_ground_truth,
    ]) else 1)
