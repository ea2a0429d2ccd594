"""Chaos spectrum of ``Z(t, 0)`` for the 1+1 stochastic heat equation with flat initial data.

Everything follows from the second moment

    f(beta, t) = E Z(t, 0)^2 = 2 exp(beta^4 t / 4) Phi(beta^2 sqrt(t / 2))

and the Ornstein-Uhlenbeck identity ``E exp(-s N_t) = f(beta e^{-s/2}, t) / f(beta, t)``.
Substituting ``x = e^{-s}`` gives the pgf

    G(x) = exp(lam (x^2 - 1)) Phi(c x) / Phi(c),   lam = beta^4 t / 4,  c = beta^2 sqrt(t / 2).

The pmf is extracted two ways: by multiplying the power series of the two
factors in extended precision, and by inverting the characteristic function on
the unit circle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import (InvalidParameterError, InversionInconsistencyError, NumericError,
                     NumericOverflowError, PrecisionBudgetError)
from .quadrature import cubature
from .spectra import (DEFAULT_EPS_TAIL, CltParams, SpectrumDistribution, chernoff_cutoff,
                      log_normal_cdf, normal_cdf, point_mass)

SQRT_2PI = math.sqrt(2 * math.pi)
MAX_DIGITS = 20000
CONTOUR_GUARD = 1e4
CONTOUR_RTOL = 1e-12
INVERSION_TOL = 1e-9


@dataclass(frozen=True)
class SheParams:
    beta: float = 1.0
    t: float = 1.0

    def __post_init__(self):
        if not self.beta > 0 or not math.isfinite(self.beta):
            raise InvalidParameterError(f"beta must be positive, got {self.beta}")
        if not self.t >= 0 or not math.isfinite(self.t):
            raise InvalidParameterError(f"t must be non-negative, got {self.t}")

    @property
    def intensity(self) -> float:
        """``beta^4 t / 4``."""
        return self.beta ** 4 * self.t / 4

    @property
    def cdf_argument(self) -> float:
        """``beta^2 sqrt(t / 2)``."""
        return self.beta ** 2 * math.sqrt(self.t / 2)


@dataclass(frozen=True)
class PowerSeries:
    coeffs: tuple
    digits: int

    def __post_init__(self):
        if not all(mpmath.isfinite(c) for c in self.coeffs):
            raise NumericError("power series has non-finite coefficients")

    def evaluate(self, x):
        return sum(c * x ** n for n, c in enumerate(self.coeffs))


def log_second_moment(p: SheParams) -> float:
    return math.log(2.0) + p.intensity + float(log_normal_cdf(p.cdf_argument))


def second_moment(p: SheParams) -> float:
    """``f(beta, t)``; raises NumericOverflowError (carrying ``log_value``) past double range."""
    log_f = log_second_moment(p)
    if log_f > math.log(np.finfo(float).max):
        err = NumericOverflowError(f"f(beta={p.beta}, t={p.t}) = exp({log_f!r}) overflows")
        err.log_value = log_f
        raise err
    return math.exp(log_f)


def mean_closed_form(p: SheParams) -> float:
    """``G'(1) = 2 lam + c phi(c) / Phi(c)``."""
    c = p.cdf_argument
    return 2 * p.intensity + c * math.exp(-0.5 * c * c - float(log_normal_cdf(c))) / SQRT_2PI


def laplace_transform(p: SheParams, s: float) -> float:
    """``E exp(-s N_t) = f(beta e^{-s/2}, t) / f(beta, t)``."""
    if not s >= 0:
        raise InvalidParameterError(f"s must be non-negative, got {s}")
    if p.t == 0:
        return 1.0
    damped = SheParams(p.beta * math.exp(-s / 2), p.t)
    return math.exp(log_second_moment(damped) - log_second_moment(p))


def prob_zero(p: SheParams) -> float:
    """``P(N_t = 0) = 1 / f(beta, t)``."""
    return math.exp(-log_second_moment(p))


def log_pgf(p: SheParams, x: float) -> float:
    c = p.cdf_argument
    return p.intensity * (x * x - 1) + float(log_normal_cdf(c * x)) - float(log_normal_cdf(c))


def truncation_order(p: SheParams, eps_tail: float = DEFAULT_EPS_TAIL) -> int:
    if p.t == 0:
        return 0
    return chernoff_cutoff(lambda x: log_pgf(p, x), eps_tail)


def working_digits(p: SheParams) -> int:
    # the alternating series for Phi(c x) cancels down from exp(c^2 / 2)-sized partial sums
    return 30 + math.ceil(p.beta ** 4 * p.t)


def pgf_series(p: SheParams, n_max: int, max_digits: int = MAX_DIGITS) -> PowerSeries:
    """First ``n_max + 1`` Taylor coefficients of ``G`` as extended-precision numbers."""
    digits = working_digits(p)
    if digits > max_digits:
        raise PrecisionBudgetError(
            f"pgf extraction needs {digits} decimal digits, budget is {max_digits}",
            required_digits=digits, max_digits=max_digits)
    ctx = mpmath.MPContext()
    ctx.dps = digits
    lam = ctx.mpf(p.beta) ** 4 * ctx.mpf(p.t) / 4
    c = ctx.mpf(p.beta) ** 2 * ctx.sqrt(ctx.mpf(p.t) / 2)

    # exp(lam (x^2 - 1)) = sum_j e_j x^{2j}
    n_even = n_max // 2 + 1
    even = [ctx.exp(-lam)]
    for j in range(1, n_even):
        even.append(even[-1] * lam / j)

    # Phi(c x) = 1/2 + sum_k (-1)^k c^{2k+1} x^{2k+1} / (sqrt(2 pi) 2^k k! (2k+1))
    n_odd = (n_max + 1) // 2
    odd = []
    power = c / ctx.sqrt(2 * ctx.pi)
    for k in range(n_odd):
        if k:
            power = power * c * c / (2 * k)
        odd.append((-power if k % 2 else power) / (2 * k + 1))

    norm = ctx.ncdf(c)
    coeffs = []
    for n in range(n_max + 1):
        if n % 2 == 0:
            coeffs.append(even[n // 2] / 2 / norm)
        else:
            m = (n - 1) // 2
            # x^n collects e_j * odd[m - j] for j = 0..m
            coeffs.append(ctx.fdot(even[: m + 1], odd[m::-1]) / norm)
    return PowerSeries(tuple(coeffs), digits)


def pgf_coefficients(p: SheParams, eps_tail: float = DEFAULT_EPS_TAIL,
                     max_digits: int = MAX_DIGITS) -> SpectrumDistribution:
    """Spectrum of ``Z(t, 0)`` from the Taylor coefficients of its pgf."""
    if p.t == 0:
        return point_mass(0)
    n_max = truncation_order(p, eps_tail)
    series = pgf_series(p, n_max, max_digits)
    total = mpmath.fsum(series.coeffs)
    tail = float(1 - total)
    probs = np.array([float(c) for c in series.coeffs])
    # negativity at the level of the working precision means the digit rule failed
    floor = 10.0 ** (-series.digits + 20)
    if np.any(probs < -floor) or tail < -floor:
        raise NumericError("pgf extraction produced negative probabilities; precision too low")
    probs = np.clip(probs, 0.0, None)
    return SpectrumDistribution(probs, max(tail, 0.0), second_moment(p), eps_tail)


def complex_gaussian_integral(z: complex, log_scale: complex = 0j, rtol: float = CONTOUR_RTOL) -> complex:
    """``exp(log_scale) * int_0^z exp(-y^2 / 2) dy / sqrt(2 pi)`` along the segment [0, z].

    ``log_scale`` is folded into the integrand, which keeps the product finite
    when the integral alone would overflow.
    """
    z = complex(z)
    if abs(z) > CONTOUR_GUARD:
        raise InvalidParameterError(f"|z|={abs(z):.3g} exceeds the guard {CONTOUR_GUARD:g}")
    if z == 0:
        return 0j
    zz = z * z
    modulus = abs(z)

    def integrand(r):
        return np.exp(log_scale - 0.5 * zz * r * r)

    bps = [[k / modulus for k in (1.0, 2.0, 4.0, 8.0) if k / modulus < 1.0]]
    try:
        with np.errstate(over="raise", invalid="raise"):
            res = cubature(lambda pts: integrand(pts[:, 0]), [0.0], [1.0], rtol=rtol,
                           breakpoints=bps, order=16)
    except FloatingPointError as exc:
        raise NumericOverflowError(f"integrand overflows along [0, {z}]", x=z) from exc
    return complex(res.value) * z / SQRT_2PI


def cf_closed_form(p: SheParams, theta: float) -> complex:
    """``E exp(i theta N_t)`` by analytic continuation of the Laplace transform.

    Written as ``[exp(lam (w^2 - 1)) / 2 + exp(lam (w^2 - 1)) int_0^{c w} ...] / Phi(c)``
    with ``w = e^{i theta}``; the prefactor is moved inside the contour integral, where
    the combined exponent ``lam w^2 (1 - r^2) - lam`` has non-positive real part.
    """
    if p.t == 0 or theta == 0:
        return 1.0 + 0.0j
    lam = p.intensity
    w = complex(math.cos(theta), math.sin(theta))
    log_pre = lam * (w * w - 1)
    integral = complex_gaussian_integral(p.cdf_argument * w, log_scale=log_pre)
    return (0.5 * np.exp(log_pre) + integral) / float(normal_cdf(p.cdf_argument))


def spectrum_via_cf_inversion(p: SheParams, n_points: int,
                              eps_tail: float = DEFAULT_EPS_TAIL) -> SpectrumDistribution:
    """Spectrum by discrete Fourier inversion of ``cf_closed_form`` on ``n_points`` angles.

    Mass above ``n_points - 1`` aliases onto lower orders, so ``n_points`` must be at
    least twice the Chernoff cutoff for ``eps_tail``.
    """
    if p.t == 0:
        return point_mass(0)
    n_max = truncation_order(p, eps_tail)
    if n_points < 2 * n_max:
        raise InvalidParameterError(
            f"n_points={n_points} below the aliasing guard 2 * n_max = {2 * n_max}")
    m = int(n_points)
    cf = np.empty(m, dtype=complex)
    half = m // 2
    for k in range(half + 1):
        cf[k] = cf_closed_form(p, 2 * math.pi * k / m)
    # real-valued law: cf(-theta) = conj(cf(theta))
    cf[half + 1:] = np.conj(cf[1: m - half][::-1])
    q = np.fft.fft(cf) / m
    worst_imag = float(np.max(np.abs(q.imag)))
    if worst_imag > INVERSION_TOL:
        raise InversionInconsistencyError(f"imaginary residue {worst_imag:.3e} after inversion",
                                          achieved=worst_imag, requested=INVERSION_TOL)
    probs = q.real
    if np.min(probs) < -INVERSION_TOL:
        raise InversionInconsistencyError(f"negative probability {np.min(probs):.3e} after inversion",
                                          achieved=float(-np.min(probs)), requested=INVERSION_TOL)
    probs = np.clip(probs, 0.0, None)
    # drop the numerically empty orders above the cutoff; their mass is rounding noise
    probs = probs[: min(m, n_max + 1)]
    tail = max(0.0, 1.0 - math.fsum(probs))
    return SpectrumDistribution(probs, tail, second_moment(p), eps_tail)


def clt_params(p: SheParams) -> CltParams:
    return CltParams(mu=p.beta ** 4 / 2, sigma2=p.beta ** 4)
