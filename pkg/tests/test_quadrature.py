import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chaosspec.errors import InvalidParameterError, NumericError
from chaosspec.quadrature import cubature, gauss_legendre_1d


def test_polynomial_exact_on_one_box():
    res = gauss_legendre_1d(lambda x: 5 * x ** 9 - x ** 4 + 2, -1.0, 2.0)
    exact = 0.5 * (2 ** 10 - 1) - (2 ** 5 + 1) / 5 + 6
    assert res.value == pytest.approx(exact, rel=1e-14)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_gaussian_volume(d):
    res = cubature(lambda y: np.exp(-0.5 * np.sum(y * y, axis=1)), [-12.0] * d, [12.0] * d, rtol=1e-12)
    assert res.value == pytest.approx((2 * math.pi) ** (d / 2), rel=1e-11)


def test_narrow_peak_bracketed_by_breakpoints():
    w = 1e-3

    def f(y):
        return np.exp(-0.5 * (y[:, 0] / w) ** 2)

    exact = w * math.sqrt(2 * math.pi)
    # the same +-3w, +-8w bracketing the library uses around Gaussian peaks
    with_bps = cubature(f, [-50.0], [50.0], breakpoints=[[-8 * w, -3 * w, 3 * w, 8 * w]])
    assert with_bps.value == pytest.approx(exact, rel=1e-10)


def test_complex_integrand():
    res = gauss_legendre_1d(lambda x: np.exp(1j * x), 0.0, math.pi)
    assert res.value == pytest.approx(2j, abs=1e-13)


def test_oscillatory_against_closed_form():
    res = gauss_legendre_1d(lambda x: np.cos(40 * x) * np.exp(-x), 0.0, 10.0, rtol=1e-12)
    exact = (1 - math.exp(-10) * (math.cos(400) - 40 * math.sin(400))) / (1 + 1600)
    assert res.value == pytest.approx(exact, rel=1e-10)


def test_box_budget_raises():
    with pytest.raises(NumericError) as info:
        gauss_legendre_1d(lambda x: np.abs(x - 0.3141) ** 0.01, 0.0, 1.0, rtol=1e-15, max_boxes=20)
    assert info.value.achieved > info.value.requested


def test_non_finite_raises():
    with np.errstate(divide="ignore", invalid="ignore"):
        with pytest.raises(NumericError):
            gauss_legendre_1d(lambda x: 1.0 / (x - x), 0.0, 1.0)


@pytest.mark.parametrize("lower,upper", [([0.0], [0.0]), ([0.0] * 4, [1.0] * 4), ([0.0], [1.0, 2.0])])
def test_bad_domains(lower, upper):
    with pytest.raises(InvalidParameterError):
        cubature(lambda y: y[:, 0], lower, upper)


@given(st.floats(-5, 5), st.floats(0.1, 5), st.floats(-3, 3), st.floats(-3, 3))
def test_affine_integrand_exact(lo, length, a, b):
    hi = lo + length
    res = gauss_legendre_1d(lambda x: a * x + b, lo, hi, atol=1e-12)
    assert res.value == pytest.approx(0.5 * a * (hi ** 2 - lo ** 2) + b * length, abs=1e-10)


@given(st.floats(-2, 2), st.floats(0.1, 3))
def test_additive_over_split(mid, half):
    f = lambda x: np.exp(np.sin(3 * x))  # noqa: E731
    whole = gauss_legendre_1d(f, mid - half, mid + half, rtol=1e-13).value
    left = gauss_legendre_1d(f, mid - half, mid, rtol=1e-13).value
    right = gauss_legendre_1d(f, mid, mid + half, rtol=1e-13).value
    assert whole == pytest.approx(left + right, rel=1e-11)
