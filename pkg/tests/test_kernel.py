import math

import numpy as np
import pytest
from scipy import special

from errors import (
    InvalidArgumentError,
    InvalidKernelError,
    SingularEvaluationError,
    UnsupportedSolutionError,
)
from kernel import (
    KernelFlags,
    MomentRequest,
    PowerTerm,
    caputo,
    constant,
    custom,
    exponential_kernel,
    kernel_mass,
    make_kernel,
    monomial_convolution,
    power,
    power_singular,
    random_positive_kernels,
)


def test_pointwise_evaluation():
    K = power_singular(0.5)
    assert K.eval(4.0) == pytest.approx(0.5)
    np.testing.assert_allclose(K(np.array([1.0, 4.0])), [1.0, 0.5])
    assert power(2.0)(3.0) == pytest.approx(9.0)
    assert caputo(0.5)(1.0) == pytest.approx(1.0 / math.sqrt(math.pi))


def test_singular_kernel_refuses_zero():
    with pytest.raises(SingularEvaluationError):
        power_singular(0.5).eval(0.0)
    assert constant(2.0).eval(0.0) == 2.0


@pytest.mark.parametrize("exponent", [-1.0, -1.5])
def test_non_integrable_terms_rejected(exponent):
    with pytest.raises(InvalidKernelError):
        PowerTerm(1.0, exponent)


def test_kernel_factories_validate_alpha():
    with pytest.raises(InvalidKernelError):
        power_singular(0.0)
    with pytest.raises(InvalidKernelError):
        make_kernel("gaussian", 0.5)
    with pytest.raises(InvalidKernelError):
        make_kernel("power")
    assert make_kernel("const").eval(1.0) == 1.0


def test_kernel_algebra():
    K = power_singular(0.5) + exponential_kernel(1.0)
    assert K.flags.positive and K.flags.nonincreasing
    assert K.eval(1.0) == pytest.approx(1.0 + math.exp(-1.0))
    negative = -2.0 * power_singular(0.5)
    assert not negative.flags.positive
    assert negative.eval(1.0) == pytest.approx(-2.0)
    with pytest.raises(InvalidKernelError):
        power_singular(0.5) * 0


def test_moment_request_validation():
    with pytest.raises(InvalidArgumentError):
        MomentRequest(0.5, 0.5, 1.0, 0.5, 2)
    with pytest.raises(InvalidArgumentError):
        MomentRequest(0.0, 1.5, 1.0, 0.0, 2)
    with pytest.raises(InvalidArgumentError):
        MomentRequest(0.0, 0.5, 1.0, 0.0, 8)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9])
@pytest.mark.parametrize("a, b", [(0.9, 1.0), (0.0, 0.1), (0.45, 0.5)])
def test_zeroth_moment_closed_form(alpha, a, b):
    K = power_singular(alpha)
    m0 = K.moments(MomentRequest(a, b, 1.0, b, 0))[0]
    expected = ((1.0 - a) ** alpha - (1.0 - b) ** alpha) / alpha
    assert m0 == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9])
@pytest.mark.parametrize("a, b, center", [(0.9, 1.0, 1.0), (0.9, 1.0, 0.9), (0.1, 0.2, 0.2), (0.6, 0.8, 0.6)])
def test_closed_form_moments_agree_with_adaptive(alpha, a, b, center):
    K = power_singular(alpha)
    req = MomentRequest(a, b, 1.0, center, 3)
    np.testing.assert_allclose(K.moments(req), K.adaptive_moments(req), rtol=1e-9, atol=1e-12)


def test_local_moments_are_vectorised():
    K = power_singular(0.5)
    a = np.array([0.0, 0.5, 0.9])
    b = np.array([0.1, 0.6, 1.0])
    batch = K.local_moments(a, b, 1.0, 2)
    assert batch.shape == (3, 3)
    for i in range(3):
        single = K.moments(MomentRequest(a[i], b[i], 1.0, b[i], 2))
        np.testing.assert_allclose(batch[i], single, rtol=1e-14)


def test_kernel_mass():
    assert kernel_mass(power_singular(0.5), 1.0) == pytest.approx(2.0)
    assert kernel_mass(constant(), 2.0) == pytest.approx(2.0)
    assert kernel_mass(exponential_kernel(2.0), 1.0) == pytest.approx((1 - math.exp(-2.0)) / 2, rel=1e-10)
    with pytest.raises(InvalidArgumentError):
        kernel_mass(constant(), 0.0)


def test_custom_singular_kernel_mass():
    K = custom(lambda t: t ** -0.5 * math.exp(-t), KernelFlags(True, True, True),
               name="damped", singular_exponent=-0.5)
    expected = math.sqrt(math.pi) * special.erf(1.0)
    assert kernel_mass(K, 1.0) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_monomial_convolution_oracle(alpha):
    t = np.array([0.5, 1.0, 2.0])
    np.testing.assert_allclose(monomial_convolution(power_singular(alpha), 0.0, t), t ** alpha / alpha)
    # (1 * s)(t) = t^2 / 2
    np.testing.assert_allclose(monomial_convolution(constant(), 1.0, t), t ** 2 / 2)


def test_monomial_convolution_needs_closed_form():
    with pytest.raises(UnsupportedSolutionError):
        monomial_convolution(exponential_kernel(1.0), 2.0, 1.0)


def test_random_kernels_are_positive_and_nonincreasing():
    kernels = random_positive_kernels(10, seed=3)
    assert len(kernels) == 10
    for K in kernels:
        assert K.flags.positive and K.flags.nonincreasing
        assert np.all(np.diff(K(np.linspace(0.01, 1.0, 50))) <= 0)


def test_moments_are_linear():
    req = MomentRequest(0.7, 0.9, 1.0, 0.9, 3)
    K1, K2 = power_singular(0.4), power(1.5)
    np.testing.assert_allclose((K1 + K2).moments(req), K1.moments(req) + K2.moments(req), rtol=1e-12)
    np.testing.assert_allclose((3.0 * K1).moments(req), 3.0 * K1.moments(req), rtol=1e-12)
