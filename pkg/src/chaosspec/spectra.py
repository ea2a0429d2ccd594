"""Discrete laws on chaos orders: construction, transforms, moments, distances.

A :class:`SpectrumDistribution` holds the probabilities ``P(N = n)`` for
``n = 0..n_max`` together with the probability mass beyond ``n_max`` that was
dropped by truncation, and the second moment ``E X^2`` that was used to
normalise the chaos energies.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import gammaln, log_ndtr, ndtr, pdtrc

from .errors import InvalidParameterError, NumericOverflowError

DEFAULT_EPS_TAIL = 1e-12
SUM_TOL = 1e-9

# scipy's ndtr is Cephes' erfc-based normal CDF: relative error near 1e-16 over the
# full range, including the far left tail where 1 - ndtr(-x) would cancel.
normal_cdf = ndtr
log_normal_cdf = log_ndtr


@dataclass(frozen=True, eq=False)
class SpectrumDistribution:
    probs: np.ndarray
    tail_mass: float = 0.0
    normalizer: float = 1.0
    eps_tail: float = DEFAULT_EPS_TAIL

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).reshape(-1)
        if p.size == 0:
            raise InvalidParameterError("a spectrum needs at least one atom")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise InvalidParameterError("probabilities must be finite and non-negative")
        tail = float(self.tail_mass)
        if not 0.0 <= tail <= 1.0:
            raise InvalidParameterError(f"tail_mass={tail} outside [0, 1]")
        if tail > self.eps_tail * (1 + 1e-6):
            raise InvalidParameterError(
                f"tail_mass={tail:.3e} exceeds the truncation tolerance {self.eps_tail:.1e}")
        total = math.fsum(p) + tail
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidParameterError(f"probabilities plus tail sum to {total!r}, not 1")
        if not self.normalizer > 0:
            raise InvalidParameterError("normalizer must be positive")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "tail_mass", tail)
        object.__setattr__(self, "normalizer", float(self.normalizer))

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.probs.size)

    def chaos_energies(self) -> np.ndarray:
        """``c^2_n = p_n * E X^2``: the second-moment contribution of each chaos."""
        return self.probs * self.normalizer

    def padded(self, size: int) -> np.ndarray:
        out = np.zeros(max(size, self.probs.size))
        out[: self.probs.size] = self.probs
        return out


def point_mass(n: int = 0, normalizer: float = 1.0) -> SpectrumDistribution:
    probs = np.zeros(n + 1)
    probs[n] = 1.0
    return SpectrumDistribution(probs, 0.0, normalizer)


def from_log_weights(log_w, tail_mass=0.0, normalizer=1.0, eps_tail=DEFAULT_EPS_TAIL):
    """Build a spectrum from unnormalised log weights of the retained atoms.

    The retained atoms receive total mass ``1 - tail_mass``.
    """
    log_w = np.asarray(log_w, dtype=float)
    top = np.max(log_w)
    w = np.exp(log_w - top)
    probs = w / math.fsum(w) * (1.0 - tail_mass)
    return SpectrumDistribution(probs, tail_mass, normalizer, eps_tail)


class Moments(NamedTuple):
    mean: float
    variance: float
    # first-order size of what the truncated tail would add to the mean
    tail_error: float


@dataclass(frozen=True)
class CltParams:
    """Centering rate ``mu`` and variance rate ``sigma2``: N_t ~ mu t + sqrt(sigma2 t) N(0,1)."""
    mu: float
    sigma2: float

    def __post_init__(self):
        if not (self.mu > 0 and self.sigma2 > 0):
            raise InvalidParameterError("CLT rates must be positive")

    def center(self, t: float) -> float:
        return self.mu * t

    def scale(self, t: float) -> float:
        return math.sqrt(self.sigma2 * t)


@dataclass(frozen=True)
class DistanceReport:
    ks: float
    tv: float | None = None

    def __post_init__(self):
        for name in ("ks", "tv"):
            v = getattr(self, name)
            if v is not None and not -1e-12 <= v <= 1 + 1e-12:
                raise InvalidParameterError(f"{name}={v} outside [0, 1]")


def moments(spec: SpectrumDistribution) -> Moments:
    n = spec.support.astype(float)
    p = spec.probs
    mass = 1.0 - spec.tail_mass
    mean = math.fsum(n * p) / mass
    variance = math.fsum((n - mean) ** 2 * p) / mass
    return Moments(mean, variance, spec.tail_mass * (spec.n_max + 1))


def characteristic_function(spec: SpectrumDistribution, theta):
    """``sum_n exp(i theta n) p_n``; accepts a scalar or an array of ``theta``."""
    theta = np.asarray(theta, dtype=float)
    phase = np.exp(1j * np.multiply.outer(theta, spec.support))
    out = phase @ spec.probs
    return complex(out) if out.ndim == 0 else out


def ks_to_standard_normal(spec: SpectrumDistribution, center: float, scale: float) -> DistanceReport:
    """Kolmogorov distance between the law of ``(N - center)/scale`` and N(0, 1).

    The empirical CDF is a step function, so the supremum is attained at an atom,
    from the left or the right; both one-sided limits are evaluated at every atom.
    Mass in the truncated tail is treated as lying beyond every atom.
    """
    if not scale > 0:
        raise InvalidParameterError(f"scale must be positive, got {scale}")
    x = (spec.support - center) / scale
    cdf_right = np.cumsum(spec.probs)
    cdf_left = cdf_right - spec.probs
    phi = normal_cdf(x)
    ks = max(np.max(np.abs(cdf_right - phi)), np.max(np.abs(cdf_left - phi)), spec.tail_mass)
    return DistanceReport(ks=float(min(ks, 1.0)))


def total_variation(a: SpectrumDistribution, b: SpectrumDistribution) -> float:
    size = max(a.probs.size, b.probs.size)
    diff = np.abs(a.padded(size) - b.padded(size))
    tv = 0.5 * math.fsum(diff) + 0.5 * abs(a.tail_mass - b.tail_mass)
    return min(tv, 1.0)


def poisson_log_pmf(lam: float, n):
    n = np.asarray(n, dtype=float)
    if lam == 0:
        return np.where(n == 0, 0.0, -np.inf)
    return -lam + n * math.log(lam) - gammaln(n + 1)


def poisson_pmf(lam: float, n_max: int | None = None, eps_tail: float = DEFAULT_EPS_TAIL) -> SpectrumDistribution:
    """Poisson(lam) truncated at ``n_max``, extended until the tail is below ``eps_tail``."""
    if not lam >= 0 or not math.isfinite(lam):
        raise InvalidParameterError(f"Poisson intensity must be finite and >= 0, got {lam}")
    if lam == 0:
        return point_mass(0)
    if n_max is None:
        n_max = chernoff_cutoff(lambda x: lam * (x - 1.0), eps_tail)
    n_max = int(n_max)
    while pdtrc(n_max, lam) > eps_tail:
        n_max = int(n_max * 1.25) + 10
    tail = float(pdtrc(n_max, lam))
    probs = np.exp(poisson_log_pmf(lam, np.arange(n_max + 1)))
    return SpectrumDistribution(probs, tail, 1.0, eps_tail)


def chernoff_cutoff(log_pgf: Callable[[float], float], eps_tail: float = DEFAULT_EPS_TAIL,
                    x_max: float = 1e15, n_grid: int = 400) -> int:
    """Smallest N with ``P(N_t > N) <= eps_tail`` certified by a Chernoff bound.

    For every ``x > 1``, ``P(N_t > N) <= G(x) / x**(N + 1)`` where ``G`` is the pgf
    and ``log_pgf = log G``.  The bound is minimised over a geometric grid of
    ``log x`` in ``(0, log x_max]``.
    """
    if not eps_tail > 0:
        raise InvalidParameterError("eps_tail must be positive")
    log_x = np.geomspace(1e-4, math.log(x_max), n_grid)
    values = np.empty(n_grid)
    for i, u in enumerate(log_x):
        v = log_pgf(math.exp(u))
        if not math.isfinite(v):
            raise NumericOverflowError(f"log pgf is not finite at x={math.exp(u)!r}", x=math.exp(u))
        values[i] = v
    if np.all(np.abs(values) <= 1e-15):
        # an entire pgf equal to 1 on an interval is identically 1: N_t = 0 a.s.
        return 0
    bound = (values - math.log(eps_tail)) / log_x - 1.0
    n = math.ceil(np.min(bound) - 1e-9)
    return max(n, 0)


# -- serialization ------------------------------------------------------------

def spectrum_to_json(spec: SpectrumDistribution) -> dict:
    return {"probs": [float(p) for p in spec.probs], "tail_mass": spec.tail_mass,
            "normalizer": spec.normalizer}


def spectrum_from_json(data: dict, eps_tail: float = 1.0) -> SpectrumDistribution:
    return SpectrumDistribution(np.array(data["probs"], dtype=float), data["tail_mass"],
                                data["normalizer"], eps_tail)


def spectrum_to_csv(spec: SpectrumDistribution) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "prob"])
    for n, p in enumerate(spec.probs):
        w.writerow([n, format(float(p), ".17g")])
    return buf.getvalue()


def spectrum_from_csv(text: str, tail_mass: float = 0.0, normalizer: float = 1.0) -> SpectrumDistribution:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    if rows[0] != ["n", "prob"]:
        raise InvalidParameterError(f"unexpected CSV header {rows[0]}")
    body = rows[1:]
    probs = np.zeros(int(body[-1][0]) + 1)
    for n, p in body:
        probs[int(n)] = float(p)
    return SpectrumDistribution(probs, tail_mass, normalizer, eps_tail=1.0)
