import math

import numpy as np
import pytest
import sympy as sp

from errors import InvalidArgumentError
from kernel import constant, power, power_singular, random_positive_kernels
from mesh import uniform_mesh
from stability import (
    SIGMA,
    StabilityPolynomial,
    count_sign_changes,
    even_coefficient_sum,
    is_edge,
    kernel_free_weights,
    margin_table,
    negative_sum_min,
    real_roots,
    scheme_stability_polynomial,
    schur_test,
    sturm_sequence,
    sufficient_condition_holds,
    weight_positivity_audit,
)
from stencil import SchemeOrder

x = SIGMA


def test_real_roots_by_sturm_bisection():
    p = sp.Poly((x - sp.Rational(1, 3)) * (x + sp.Rational(1, 2)), x)
    roots = real_roots(p, -1, 1)
    assert [float(r) for r in roots] == pytest.approx([-0.5, 1 / 3], abs=1e-11)


def test_sturm_sequence_counts_roots():
    seq = sturm_sequence(sp.Poly(x ** 2 - 2, x))
    assert count_sign_changes(seq, -2) - count_sign_changes(seq, 2) == 2
    assert count_sign_changes(seq, 0) - count_sign_changes(seq, 2) == 1


def test_repeated_roots_reported_once():
    roots = real_roots(sp.Poly((x - sp.Rational(1, 2)) ** 2, x), 0, 1)
    assert len(roots) == 1
    assert float(roots[0]) == pytest.approx(0.5, abs=1e-11)


def test_irrational_root_bracketed():
    roots = real_roots(sp.Poly(x ** 2 - 2, x), 0, 2)
    assert float(roots[0]) == pytest.approx(math.sqrt(2), abs=1e-11)


def test_third_order_coefficient_sum():
    # c_2 = sigma (sigma + 1) / 2
    assert even_coefficient_sum(3).all_coeffs() == [sp.Rational(1, 2), sp.Rational(1, 2), 0]


def test_third_order_margin():
    margin = negative_sum_min(3)
    assert margin.minimum == pytest.approx(-0.125, abs=1e-12)
    assert margin.sigma_star == pytest.approx(-0.5, abs=1e-9)
    assert margin.stable


def test_fourth_order_margin_closed_form():
    margin = negative_sum_min(4)
    assert margin.minimum == pytest.approx((20 - 14 * math.sqrt(7)) / 54, abs=1e-12)
    assert margin.sigma_star == pytest.approx((-4 + math.sqrt(7)) / 3, abs=1e-12)
    assert margin.stable
    assert margin.to_dict()["closed_form"]["minimum"] == "(20 - 14*sqrt(7))/54"


def test_fifth_order_margin():
    margin = negative_sum_min(5)
    assert margin.minimum == pytest.approx(-0.603912, abs=1e-4)
    assert margin.sigma_star == pytest.approx(-0.416, abs=2e-3)
    assert margin.stable


def test_sixth_order_margin_fails():
    margin = negative_sum_min(6)
    assert margin.minimum == pytest.approx(-1.05315, abs=1e-4)
    assert margin.sigma_star == pytest.approx(-0.38843, abs=1e-3)
    assert not margin.stable


@pytest.mark.parametrize("gamma", [2, 8, 3.5])
def test_margin_order_range(gamma):
    with pytest.raises(InvalidArgumentError):
        negative_sum_min(gamma)


def test_margin_table():
    table = margin_table([3, 4, 5, 6])
    assert list(table.columns) == ["order", "sigma_star", "minimum", "stable"]
    assert table["stable"].tolist() == [True, True, True, False]


def test_sufficient_condition():
    assert sufficient_condition_holds(SchemeOrder.integer(5), power_singular(0.5))
    assert not sufficient_condition_holds(SchemeOrder.integer(6, allow_unstable=True), power_singular(0.5))
    assert sufficient_condition_holds(SchemeOrder.integer(2), power(0.5))
    assert not sufficient_condition_holds(SchemeOrder.integer(3), power(0.5))
    assert not sufficient_condition_holds(SchemeOrder.integer(2), -1.0 * constant())


@pytest.mark.parametrize("gamma", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_interior_weights_nonnegative_for_stable_orders(gamma, alpha):
    audit = weight_positivity_audit(uniform_mesh(1.0, 32), power_singular(alpha), SchemeOrder.integer(gamma))
    assert audit.empty, audit.to_dict()
    assert audit.sufficient_condition
    if (gamma, alpha) != (5, 0.1):
        assert audit.clean, audit.to_dict()


def test_strong_singularity_breaks_fifth_order_edge():
    order = SchemeOrder.integer(5)
    audit = weight_positivity_audit(uniform_mesh(1.0, 32), power_singular(0.1), order)
    assert audit.empty
    assert audit.edge_violations
    assert all(k > n - 5 for n, k, _ in audit.edge_violations)
    assert audit.worst_margin < -0.1
    assert audit.to_dict()["edge_violations"][0]["value"] < 0


def test_edge_classification():
    order = SchemeOrder.integer(5)
    assert is_edge(order, 32, 28)
    assert not is_edge(order, 32, 27)
    assert not is_edge(SchemeOrder.fractional(0.5), 32, 32)


@pytest.mark.parametrize("gamma", [3, 4, 5])
def test_interior_weights_nonnegative_for_random_kernels(gamma):
    mesh = uniform_mesh(1.0, 16)
    for K in random_positive_kernels(20, seed=gamma):
        audit = weight_positivity_audit(mesh, K, SchemeOrder.integer(gamma))
        assert audit.empty, audit.to_dict()


@pytest.mark.long
@pytest.mark.parametrize("gamma", [3, 4, 5])
def test_interior_weights_nonnegative_for_many_random_kernels(gamma):
    mesh = uniform_mesh(1.0, 32)
    for K in random_positive_kernels(200, seed=100 + gamma):
        assert weight_positivity_audit(mesh, K, SchemeOrder.integer(gamma)).empty


def test_sixth_order_audit_reports_margin():
    order = SchemeOrder.integer(6, allow_unstable=True)
    audit = weight_positivity_audit(uniform_mesh(1.0, 32), power_singular(0.5), order)
    assert not audit.sufficient_condition
    assert math.isfinite(audit.worst_margin)
    assert audit.worst_index is not None
    assert audit.to_dict()["targets"] == 32


def test_single_target_audit():
    audit = weight_positivity_audit(uniform_mesh(1.0, 8), power_singular(0.5), SchemeOrder.integer(3), n=5)
    assert audit.targets == [5]
    assert audit.worst_index[0] == 5


def test_schur_bound_half():
    N = 10
    tau = 0.1
    lam = 1.0 / (2 * (N + 1) * tau)
    poly = StabilityPolynomial.build(np.ones(N + 1), constant(), lam, tau)
    report = schur_test(poly)
    assert report.sufficient_bound == pytest.approx(0.5)
    assert report.is_schur_by_bound
    assert report.max_root_modulus < 1.0


def test_schur_zero_lambda():
    poly = StabilityPolynomial.build(np.ones(6), constant(), 0.0, 0.2)
    report = schur_test(poly)
    assert report.sufficient_bound == 0.0
    assert report.is_schur_by_bound
    assert report.max_root_modulus == pytest.approx(0.0)


def test_schur_bound_inconclusive():
    N, T = 10, 1.0
    tau = T / N
    poly = StabilityPolynomial.build(np.ones(N + 1), constant(), 2.0 / T, tau)
    assert not schur_test(poly).is_schur_by_bound


def test_singular_kernel_skips_zero_when_first_weight_vanishes():
    w = np.array([0.0, 0.3, 0.2])
    poly = StabilityPolynomial.build(w, power_singular(0.5), 1.0, 0.1)
    assert poly.coefficients[0] == 1.0
    assert poly.N == 2


def test_large_degree_skips_roots():
    poly = StabilityPolynomial.build(np.ones(80), constant(), 0.01, 0.01)
    assert schur_test(poly).max_root_modulus is None


def test_singular_kernel_drops_first_term():
    poly = StabilityPolynomial.build(np.array([0.4, 0.3, 0.2]), power_singular(0.5), 1.0, 0.1)
    assert poly.coefficients[0] == 1.0
    assert poly.terms[0] == 0.0


def test_fractional_order_audit():
    order = SchemeOrder.fractional(0.5)
    audit = weight_positivity_audit(uniform_mesh(1.0, 16), power_singular(0.5), order)
    assert audit.empty
    assert audit.sufficient_condition


def test_kernel_free_weights_are_rule_weights():
    mesh = uniform_mesh(1.0, 10)
    np.testing.assert_allclose(kernel_free_weights(mesh, SchemeOrder.integer(2)),
                               [0.5] + [1.0] * 9 + [0.5], atol=1e-13)
    rectangle = kernel_free_weights(mesh, SchemeOrder.integer(1))
    np.testing.assert_allclose(rectangle, [1.0] * 10 + [0.0], atol=1e-13)
    assert kernel_free_weights(mesh, SchemeOrder.integer(4)).sum() == pytest.approx(10.0)


def test_scheme_polynomial_flags_unstable_recurrence():
    # K = 1, lam T = 2 on ten steps: Sigma(1) < 0, so a real root exceeds 1
    poly = scheme_stability_polynomial(uniform_mesh(1.0, 10), constant(), SchemeOrder.integer(2), 2.0)
    report = schur_test(poly)
    assert report.sufficient_bound == pytest.approx(2.0)
    assert not report.is_schur_by_bound
    assert report.max_root_modulus > 1.0


def test_scheme_polynomial_small_lambda_is_schur():
    poly = scheme_stability_polynomial(uniform_mesh(1.0, 10), constant(), SchemeOrder.integer(3), 0.2)
    report = schur_test(poly)
    assert report.sufficient_bound == pytest.approx(0.2)
    assert report.is_schur_by_bound
    assert report.max_root_modulus < 1.0
