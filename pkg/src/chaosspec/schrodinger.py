"""Chaos spectrum of the zero Fourier mode of the random Schrodinger equation.

With spatial covariance ``R`` and ``Phi0`` the inverse Fourier transform of
``|phi0_hat|^2``, the n-th chaos carries energy

    c2(t, n) = t^n / n! * exp(-R(0) t) * m_n,     m_n = int R(y)^n Phi0(y) dy.

Both ``R`` and ``Phi0`` are isotropic Gaussians here, which makes ``m_n``
available in closed form; the quadrature path is kept as an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import InvalidParameterError, NumericError
from .quadrature import MAX_DIM, cubature
from .spectra import DEFAULT_EPS_TAIL, CltParams, SpectrumDistribution, chernoff_cutoff, point_mass

QUAD_TOL = 1e-10
DUAL_METHOD_RTOL = 1e-8


@dataclass(frozen=True)
class CovarianceModel:
    """``R(y) = r0 * exp(-|y|^2 / (2 ell^2))`` in dimension ``d``."""
    d: int = 1
    r0: float = 1.0
    ell: float = 1.0

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or not 1 <= self.d <= MAX_DIM:
            raise InvalidParameterError(f"dimension d={self.d} unsupported; tensor quadrature caps d at {MAX_DIM}")
        if not (self.r0 > 0 and self.ell > 0):
            raise InvalidParameterError("r0 and ell must be positive")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return self.r0 * np.exp(-0.5 * np.sum(y * y, axis=-1) / self.ell ** 2)

    def hessian_at_zero(self) -> np.ndarray:
        return -(self.r0 / self.ell ** 2) * np.eye(self.d)

    def fourier(self, p):
        """``R_hat(p) = int R(y) exp(-i p.y) dy``."""
        p = np.asarray(p, dtype=float)
        return self.r0 * (2 * math.pi * self.ell ** 2) ** (self.d / 2) * np.exp(
            -0.5 * self.ell ** 2 * np.sum(p * p, axis=-1))

    @property
    def jump_std(self) -> float:
        # R_hat / ((2 pi)^d R(0)) is the N(0, ell^-2 I) density
        return 1.0 / self.ell


@dataclass(frozen=True)
class InitialDataModel:
    """``Phi0(y) = amplitude * exp(-|y|^2 / (2 width^2))``.

    This is the inverse transform of ``|phi0_hat|^2`` for the Gaussian wave packet
    ``phi0_hat = sqrt(Phi0_hat)``.
    """
    d: int = 1
    amplitude: float = 1.0
    width: float = 1.0

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or not 1 <= self.d <= MAX_DIM:
            raise InvalidParameterError(f"dimension d={self.d} unsupported")
        if not (self.amplitude > 0 and self.width > 0):
            raise InvalidParameterError("amplitude and width must be positive")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return self.amplitude * np.exp(-0.5 * np.sum(y * y, axis=-1) / self.width ** 2)

    def fourier(self, xi):
        """``Phi0_hat(xi) = |phi0_hat(xi)|^2``."""
        xi = np.asarray(xi, dtype=float)
        return self.amplitude * (2 * math.pi * self.width ** 2) ** (self.d / 2) * np.exp(
            -0.5 * self.width ** 2 * np.sum(xi * xi, axis=-1))

    def wave_packet_fourier(self, xi):
        return np.sqrt(self.fourier(xi))

    @property
    def total_mass(self) -> float:
        return self.amplitude * (2 * math.pi * self.width ** 2) ** (self.d / 2)


def _check_dims(cov, init):
    if cov.d != init.d:
        raise InvalidParameterError(f"covariance is {cov.d}-dimensional but initial data is {init.d}-dimensional")


def log_overlap_moments(cov: CovarianceModel, init: InitialDataModel, n) -> np.ndarray:
    """Closed-form ``log m_n`` for an array of orders."""
    _check_dims(cov, init)
    n = np.asarray(n, dtype=float)
    return (math.log(init.amplitude) + n * math.log(cov.r0) + 0.5 * cov.d * math.log(2 * math.pi)
            - 0.5 * cov.d * np.log(n / cov.ell ** 2 + 1.0 / init.width ** 2))


def quadrature_half_width(cov, init, eps_quad=QUAD_TOL):
    return max(cov.ell, init.width) * math.sqrt(2 * math.log(1 / eps_quad)) + 6.0


def _breakpoints(width, half_width, d):
    pts = [s * k * width for k in (3.0, 8.0) for s in (-1, 1)]
    pts = [p for p in pts if abs(p) < half_width]
    return [pts] * d


def overlap_moment_quadrature(cov, init, n, rtol=QUAD_TOL):
    _check_dims(cov, init)
    L = quadrature_half_width(cov, init, rtol)
    width = (n / cov.ell ** 2 + 1 / init.width ** 2) ** -0.5

    def integrand(y):
        return cov(y) ** n * init(y)

    res = cubature(integrand, [-L] * cov.d, [L] * cov.d, rtol=rtol,
                   breakpoints=_breakpoints(width, L, cov.d))
    return float(res.value)


def overlap_moment(cov: CovarianceModel, init: InitialDataModel, n: int, rtol=QUAD_TOL) -> float:
    """``m_n = int R(y)^n Phi0(y) dy``, closed form checked against adaptive quadrature."""
    if n < 0:
        raise InvalidParameterError("chaos order must be non-negative")
    exact = float(np.exp(log_overlap_moments(cov, init, n)))
    quad = overlap_moment_quadrature(cov, init, n, rtol)
    rel = abs(quad - exact) / exact
    if rel > DUAL_METHOD_RTOL:
        raise NumericError(f"quadrature m_{n}={quad!r} disagrees with closed form {exact!r}",
                           achieved=rel, requested=DUAL_METHOD_RTOL)
    return exact


def chaos_coefficient(cov, init, t: float, n: int) -> float:
    """``log c2(t, n)``; ``-inf`` for n >= 1 at t = 0."""
    if t < 0:
        raise InvalidParameterError(f"time must be non-negative, got {t}")
    if n < 0:
        raise InvalidParameterError("chaos order must be non-negative")
    log_m = float(log_overlap_moments(cov, init, n))
    if n == 0:
        return log_m - cov.r0 * t
    if t == 0:
        return -math.inf
    return n * math.log(t) - math.lgamma(n + 1) - cov.r0 * t + log_m


def _series_length(rate):
    return int(math.ceil(rate + 12 * math.sqrt(rate + 1) + 60))


@lru_cache(maxsize=64)
def _log_chaos_series(cov, init, t, n_terms):
    n = np.arange(n_terms)
    lw = n * math.log(t) - gammaln(n + 1) - cov.r0 * t + log_overlap_moments(cov, init, n)
    lw.setflags(write=False)
    return lw


def log_second_moment(cov, init, t) -> float:
    """``log sum_n c2(t, n)`` summed far past the point where terms stop mattering."""
    if t == 0:
        return math.log(init.total_mass)
    lw = _log_chaos_series(cov, init, t, _series_length(cov.r0 * t))
    return float(logsumexp(lw))


def log_pgf(cov, init, t, x) -> float:
    """``log E x^N_t`` for ``x > 0``."""
    if t == 0:
        return 0.0
    lw = _log_chaos_series(cov, init, t, _series_length(cov.r0 * t * max(x, 1.0)))
    return float(logsumexp(lw + np.arange(lw.size) * math.log(x))) - log_second_moment(cov, init, t)


def laplace_transform(cov, init, t, s) -> float:
    """``E exp(-s N_t)``."""
    if s < 0:
        raise InvalidParameterError("s must be non-negative")
    return math.exp(log_pgf(cov, init, t, math.exp(-s)))


def prob_zero(cov, init, t) -> float:
    if t == 0:
        return 1.0
    return math.exp(chaos_coefficient(cov, init, t, 0) - log_second_moment(cov, init, t))


def spectrum(cov, init, t: float, eps_tail: float = DEFAULT_EPS_TAIL) -> SpectrumDistribution:
    """Law of the chaos order of ``phi_hat(t, 0)``, truncated at a Chernoff cutoff."""
    _check_dims(cov, init)
    if t < 0:
        raise InvalidParameterError(f"time must be non-negative, got {t}")
    if t == 0:
        return point_mass(0, normalizer=init.total_mass)
    rate = cov.r0 * t
    x_max = max(2.0, 2e4 / rate)
    n_max = chernoff_cutoff(lambda x: log_pgf(cov, init, t, x), eps_tail, x_max=x_max)
    log_z = log_second_moment(cov, init, t)
    lw = _log_chaos_series(cov, init, t, max(_series_length(rate), n_max + 1))
    probs = np.exp(lw[: n_max + 1] - log_z)
    tail = math.fsum(np.exp(lw[n_max + 1:] - log_z))
    return SpectrumDistribution(probs, tail, math.exp(log_z), eps_tail)


def _cf_integrals(cov, init, t, theta, rtol):
    L = quadrature_half_width(cov, init, rtol)
    width = (cov.r0 * t / cov.ell ** 2 + 1 / init.width ** 2) ** -0.5
    bps = _breakpoints(width, L, cov.d)
    rot = complex(math.cos(theta), math.sin(theta))

    def denominator(y):
        return np.exp(t * (cov(y) - cov.r0)) * init(y)

    def numerator(y):
        return np.exp(t * (cov(y) * rot - cov.r0)) * init(y)

    den = cubature(denominator, [-L] * cov.d, [L] * cov.d, rtol=rtol, breakpoints=bps).value
    num = cubature(numerator, [-L] * cov.d, [L] * cov.d, rtol=rtol, atol=rtol * den,
                   breakpoints=bps).value
    return complex(num), float(den)


def normalizer_quadrature(cov, init, t, rtol=QUAD_TOL) -> float:
    """``int exp(t (R(y) - R(0))) Phi0(y) dy`` by cubature; equals ``E |phi_hat(t, 0)|^2``."""
    return _cf_integrals(cov, init, t, 0.0, rtol)[1]


def cf_closed_form(cov, init, t: float, theta: float, rtol: float = QUAD_TOL) -> complex:
    """``E exp(i theta N_t)`` as a ratio of two d-dimensional integrals."""
    _check_dims(cov, init)
    if t < 0:
        raise InvalidParameterError(f"time must be non-negative, got {t}")
    if t == 0 or theta == 0:
        return 1.0 + 0.0j
    num, den = _cf_integrals(cov, init, t, theta, rtol)
    return num / den


def clt_params(cov: CovarianceModel) -> CltParams:
    return CltParams(mu=cov.r0, sigma2=cov.r0)


def diffusivity_matrix(cov: CovarianceModel) -> np.ndarray:
    """``(2 pi)^-d int p_j p_k R_hat(p) dp``: R(0) times the N(0, ell^-2 I) covariance."""
    return cov.r0 * cov.jump_std ** 2 * np.eye(cov.d)
