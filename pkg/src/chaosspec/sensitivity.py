"""Noise sensitivity: correlation of X_t with its analogue under OU-resampled noise.

Resampling the noise with strength ``s`` multiplies the n-th chaos by ``e^{-ns}``,
so the correlation is ``E[e^{-s N_t} | N_t > 0]``.  A model only needs to supply
the Laplace transform of its spectrum and ``P(N_t = 0)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from . import schrodinger, she
from .errors import DegenerateLawError, InvalidParameterError
from .spectra import CltParams, SpectrumDistribution

# numerical stand-in for s = infinity; truncation error below e^-100
S_INFINITY = 100.0


class SpectrumModel(Protocol):
    tag: str

    def laplace(self, t: float, s: float) -> float: ...

    def prob_zero(self, t: float) -> float: ...

    def clt(self) -> CltParams: ...


@dataclass(frozen=True)
class SheModel:
    beta: float = 1.0
    tag: str = "she"

    def laplace(self, t, s):
        return she.laplace_transform(she.SheParams(self.beta, t), s)

    def prob_zero(self, t):
        return she.prob_zero(she.SheParams(self.beta, t))

    def clt(self):
        return she.clt_params(she.SheParams(self.beta, 1.0))

    def correlation(self, t, s):
        """``(f(beta e^{-s/2}, t) - 1) / (f(beta, t) - 1)`` evaluated in log space."""
        p = she.SheParams(self.beta, t)
        log_f = she.log_second_moment(p)
        log_fs = she.log_second_moment(she.SheParams(self.beta * math.exp(-s / 2), t))
        if log_f <= 0.0:
            raise DegenerateLawError("X_t is deterministic: f(beta, t) = 1")
        # (e^a - 1) / (e^b - 1) rewritten to stay finite for large b and exact for small b
        return math.exp(log_fs - log_f) * math.expm1(-log_fs) / math.expm1(-log_f)


@dataclass(frozen=True)
class SchrodingerModel:
    cov: schrodinger.CovarianceModel = field(default_factory=schrodinger.CovarianceModel)
    init: schrodinger.InitialDataModel = field(default_factory=schrodinger.InitialDataModel)
    tag: str = "schrodinger"

    def laplace(self, t, s):
        return schrodinger.laplace_transform(self.cov, self.init, t, s)

    def prob_zero(self, t):
        return schrodinger.prob_zero(self.cov, self.init, t)

    def clt(self):
        return schrodinger.clt_params(self.cov)


@dataclass(frozen=True)
class GbmModel:
    """``X_t = exp(B_t - t/2)``, whose spectrum is Poisson(t)."""
    tag: str = "gbm"

    def laplace(self, t, s):
        return math.exp(t * math.expm1(-s))

    def prob_zero(self, t):
        return math.exp(-t)

    def clt(self):
        return CltParams(1.0, 1.0)

    def correlation(self, t, s):
        return gbm_correlation(t, s)


def model_correlation(model: SpectrumModel, t: float, s: float) -> float:
    if s < 0:
        raise InvalidParameterError("s must be non-negative")
    if hasattr(model, "correlation"):
        return model.correlation(t, s)
    p0 = model.prob_zero(t)
    if p0 >= 1.0:
        raise DegenerateLawError("X_t is deterministic: P(N_t = 0) = 1")
    return (model.laplace(t, s) - p0) / (1.0 - p0)


def correlation_from_spectrum(spec: SpectrumDistribution, s: float) -> float:
    """``E[e^{-s N} | N > 0]`` from an explicit pmf."""
    if s < 0:
        raise InvalidParameterError("s must be non-negative")
    upper = spec.probs[1:]
    mass = math.fsum(upper) + spec.tail_mass
    if mass <= 0.0:
        raise DegenerateLawError("spectrum is a point mass at 0; correlation undefined")
    weights = np.exp(-s * np.arange(1, spec.probs.size))
    return math.fsum(upper * weights) / mass


def gbm_correlation(t: float, s: float) -> float:
    """``(exp(e^{-s} t) - 1) / (exp(t) - 1)``, with limit ``e^{-s}`` at t = 0."""
    if t < 0 or s < 0:
        raise InvalidParameterError("t and s must be non-negative")
    decay = math.exp(-s)
    if t == 0:
        return decay
    if t < 700:
        return math.expm1(decay * t) / math.expm1(t)
    return math.exp(t * (decay - 1)) * (-math.expm1(-decay * t)) / (-math.expm1(-t))


@dataclass(frozen=True)
class CorrelationCurve:
    s: np.ndarray
    cor: np.ndarray
    model: str
    t: float

    def rows(self):
        return list(zip(self.s.tolist(), self.cor.tolist()))


@dataclass(frozen=True)
class OnsetScan:
    alphas: tuple
    times: tuple
    values: np.ndarray  # values[i, j]: alpha_i, time_j
    model: str = ""

    def rows(self):
        return [(a, t, float(self.values[i, j]))
                for i, a in enumerate(self.alphas) for j, t in enumerate(self.times)]


def correlation_curve(model: SpectrumModel, t: float, s_values: Sequence[float]) -> CorrelationCurve:
    s = np.asarray(s_values, dtype=float)
    cor = np.array([model_correlation(model, t, si) for si in s])
    return CorrelationCurve(s, cor, model.tag, t)


def onset_scan(model: SpectrumModel, alphas: Sequence[float], times: Sequence[float]) -> OnsetScan:
    """Correlation at ``s = t^{-alpha}`` on an alpha-by-time grid."""
    if any(a <= 0 for a in alphas) or any(t <= 0 for t in times):
        raise InvalidParameterError("alphas and times must be positive")
    values = np.array([[model_correlation(model, t, t ** -a) for t in times] for a in alphas])
    return OnsetScan(tuple(alphas), tuple(times), values, model.tag)


def curve_to_csv(curve: CorrelationCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "cor"])
    for s, c in curve.rows():
        w.writerow([format(s, ".17g"), format(c, ".17g")])
    return buf.getvalue()


def scan_to_csv(scan: OnsetScan) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "t", "cor"])
    for a, t, c in scan.rows():
        w.writerow([format(a, ".17g"), format(t, ".17g"), format(c, ".17g")])
    return buf.getvalue()
