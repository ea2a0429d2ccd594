"""Monte Carlo checks driven by paired (original, OU-resampled) noise.

Samples are grouped into fixed-size blocks.  Each block draws from streams keyed
on ``(seed, index)`` and reduces to a :class:`MomentAccumulator`; accumulators
are merged in a fixed pairwise tree over block indices.  Results are therefore
bit-identical for any number of worker threads.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from numba import njit, uint64

from .errors import ConfigurationError, DegenerateLawError, InvalidParameterError
from .rng import ZIG_RATIO, ZIG_X, block_generator, check_seed, fill_normals, stream_key
from .schrodinger import CovarianceModel, InitialDataModel, diffusivity_matrix
from .she import SheParams
from .spectra import DistanceReport, SpectrumDistribution, normal_cdf


# -- streaming moments --------------------------------------------------------

@dataclass(frozen=True)
class MomentAccumulator:
    """Count, mean vector and centred co-moment matrix of a multivariate sample."""
    n: int
    mean: np.ndarray
    comoment: np.ndarray

    @classmethod
    def from_samples(cls, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        mean = x.mean(axis=0)
        dev = x - mean
        return cls(x.shape[0], mean, dev.T @ dev)

    def merge(self, other):
        # Chan, Golub & LeVeque pairwise update
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        comoment = self.comoment + other.comoment + np.outer(delta, delta) * (self.n * other.n / n)
        return MomentAccumulator(n, mean, comoment)

    @property
    def covariance(self):
        return self.comoment / (self.n - 1)

    def stderr(self, i=0):
        return math.sqrt(max(self.covariance[i, i], 0.0) / self.n)


def tree_merge(parts):
    parts = list(parts)
    if not parts:
        raise InvalidParameterError("nothing to merge")
    while len(parts) > 1:
        merged = [parts[i].merge(parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


def _run_blocks(fn, n_samples, block_size, workers):
    """Apply ``fn(block_index, start, count)`` to every block, results in block order."""
    if n_samples <= 0:
        raise InvalidParameterError("n_samples must be positive")
    if workers < 1:
        raise InvalidParameterError("workers must be >= 1")
    blocks = [(b, start, min(block_size, n_samples - start))
              for b, start in enumerate(range(0, n_samples, block_size))]
    if workers == 1:
        return [fn(*blk) for blk in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda blk: fn(*blk), blocks))


@dataclass(frozen=True)
class SimEstimate:
    value: float
    stderr: float
    n_samples: int
    seed: int

    def to_record(self, op, params):
        return {"op": op, "params": params, "value": self.value, "stderr": self.stderr,
                "n": self.n_samples, "seed": self.seed}

    def to_json_line(self, op, params):
        return json.dumps(self.to_record(op, params), sort_keys=True)


def _ratio_estimate(acc, value, grad, seed):
    var = float(grad @ acc.covariance @ grad) / acc.n
    return SimEstimate(float(value), math.sqrt(max(var, 0.0)), acc.n, seed)


# -- noise ----------------------------------------------------------------------

def resample_noise(v, v_tilde, s):
    """``e^{-s} v + sqrt(1 - e^{-2s}) v_tilde``, cell by cell."""
    v = np.asarray(v, dtype=float)
    v_tilde = np.asarray(v_tilde, dtype=float)
    if v.shape != v_tilde.shape:
        raise InvalidParameterError(f"noise shapes differ: {v.shape} vs {v_tilde.shape}")
    if not s >= 0:
        raise InvalidParameterError("perturbation strength must be non-negative")
    return math.exp(-s) * v + math.sqrt(-math.expm1(-2 * s)) * v_tilde


@dataclass(frozen=True)
class PairedNoiseStream:
    """Original noise and an independent copy from one keyed stream, combined on demand."""
    seed: int
    s: float

    def __post_init__(self):
        check_seed(self.seed)
        if not self.s >= 0:
            raise InvalidParameterError("perturbation strength must be non-negative")

    def draw(self, block, shape):
        """``(v, v_tilde, v_s)`` for one block of cells."""
        rng = block_generator(self.seed, block)
        v = rng.standard_normal(shape)
        v_tilde = rng.standard_normal(shape)
        return v, v_tilde, resample_noise(v, v_tilde, self.s)


# -- stochastic heat equation on a lattice -----------------------------------

@dataclass(frozen=True)
class LatticeConfig:
    """Explicit Euler scheme on ``[-half_width, half_width]`` with Dirichlet ends."""
    dx: float = 0.05
    dt: float = 0.05 ** 2 / 4
    half_width: float = 5.0

    def __post_init__(self):
        if not (self.dx > 0 and self.dt > 0 and self.half_width > 0):
            raise ConfigurationError("dx, dt and half_width must be positive")
        if self.dt > self.dx ** 2 / 2 * (1 + 1e-12):
            raise ConfigurationError(f"dt={self.dt} violates explicit-scheme stability dt <= dx^2/2")
        if abs(self.half_width / self.dx - round(self.half_width / self.dx)) > 1e-9:
            raise ConfigurationError("half_width must be a multiple of dx so that x=0 is a node")

    def validate_for(self, t):
        if self.half_width < 4 * math.sqrt(t):
            raise ConfigurationError(
                f"half_width={self.half_width} < 4 sqrt(t) = {4 * math.sqrt(t):.3g}: boundary too close")

    @property
    def n_interior(self):
        return 2 * int(round(self.half_width / self.dx)) - 1

    def n_steps(self, t):
        return int(math.ceil(t / self.dt - 1e-9))


@njit(nogil=True, cache=True)
def _she_pair_kernel(seed, first, count, n_inner, n_steps, lam, noise, decay, comp, zx, zr):
    """Per-sample ``(Z(t,0) Z_s(t,0), Z(t,0)^2)`` for samples ``first .. first+count-1``."""
    out = np.empty((count, 2))
    centre = n_inner // 2 + 1
    xi = np.empty(2 * n_inner)
    for k in range(count):
        key = stream_key(seed, first + k)
        ctr = uint64(0)
        z = np.zeros(n_inner + 2)
        zs = np.zeros(n_inner + 2)
        z[1:n_inner + 1] = 1.0
        zs[1:n_inner + 1] = 1.0
        zn = np.zeros(n_inner + 2)
        zsn = np.zeros(n_inner + 2)
        for _ in range(n_steps):
            ctr = fill_normals(key, ctr, xi, zx, zr)
            for j in range(1, n_inner + 1):
                g = xi[2 * j - 2]
                gs = decay * g + comp * xi[2 * j - 1]
                zn[j] = z[j] + lam * (z[j - 1] - 2.0 * z[j] + z[j + 1]) + noise * z[j] * g
                zsn[j] = zs[j] + lam * (zs[j - 1] - 2.0 * zs[j] + zs[j + 1]) + noise * zs[j] * gs
            z, zn = zn, z
            zs, zsn = zsn, zs
        out[k, 0] = z[centre] * zs[centre]
        out[k, 1] = z[centre] * z[centre]
    return out


class ShePairEstimate(NamedTuple):
    e_zz: SimEstimate
    e_z2: SimEstimate
    correlation: SimEstimate


def simulate_she_pair(cfg: LatticeConfig, p: SheParams, s: float, n_samples: int, seed: int,
                      workers: int = 1, block_size: int = 500) -> ShePairEstimate:
    """Estimate ``E[Z(t,0) Z_s(t,0)]``, ``E[Z(t,0)^2]`` and the implied correlation.

    ``Z`` is driven by lattice white noise ``xi sqrt(dt/dx)`` and ``Z_s`` by its
    OU resampling; both start from 1 and share the Laplacian.
    """
    seed = check_seed(seed)
    if not s >= 0:
        raise InvalidParameterError("perturbation strength must be non-negative")
    cfg.validate_for(p.t)
    n_steps = cfg.n_steps(p.t)
    dt = p.t / n_steps if n_steps else cfg.dt
    lam = dt / (2 * cfg.dx ** 2)
    noise = p.beta * math.sqrt(dt / cfg.dx)
    decay = math.exp(-s)
    comp = math.sqrt(-math.expm1(-2 * s))

    def block(b, start, count):
        vals = _she_pair_kernel(seed, start, count, cfg.n_interior, n_steps, lam, noise,
                                decay, comp, ZIG_X, ZIG_RATIO)
        return MomentAccumulator.from_samples(vals)

    acc = tree_merge(_run_blocks(block, n_samples, block_size, workers))
    m_zz, m_z2 = acc.mean
    e_zz = SimEstimate(float(m_zz), acc.stderr(0), acc.n, seed)
    e_z2 = SimEstimate(float(m_z2), acc.stderr(1), acc.n, seed)
    if m_z2 == 1.0:
        raise DegenerateLawError("E Z^2 estimate equals 1: no fluctuations to correlate")
    cor = (m_zz - 1) / (m_z2 - 1)
    grad = np.array([1 / (m_z2 - 1), -(m_zz - 1) / (m_z2 - 1) ** 2])
    return ShePairEstimate(e_zz, e_z2, _ratio_estimate(acc, cor, grad, seed))


# -- geometric Brownian motion -------------------------------------------------

def simulate_gbm_pair(t: float, s: float, n_samples: int, seed: int, workers: int = 1,
                      block_size: int = 1 << 16) -> SimEstimate:
    """Sample correlation of ``exp(B_t - t/2)`` with its OU-resampled copy."""
    seed = check_seed(seed)
    if not t >= 0 or not s >= 0:
        raise InvalidParameterError("t and s must be non-negative")
    if t == 0:
        raise DegenerateLawError("X_0 = 1 is deterministic; correlation undefined")
    root_t = math.sqrt(t)

    def block(b, start, count):
        rng = block_generator(seed, b)
        brown = root_t * rng.standard_normal(count)
        brown_tilde = root_t * rng.standard_normal(count)
        a = np.exp(brown - t / 2) - 1.0
        c = np.exp(resample_noise(brown, brown_tilde, s) - t / 2) - 1.0
        return MomentAccumulator.from_samples(np.column_stack([a * c, a * a, c * c]))

    acc = tree_merge(_run_blocks(block, n_samples, block_size, workers))
    m_ac, m_aa, m_cc = acc.mean
    root = math.sqrt(m_aa * m_cc)
    cor = m_ac / root
    grad = np.array([1 / root, -cor / (2 * m_aa), -cor / (2 * m_cc)])
    return _ratio_estimate(acc, cor, grad, seed)


# -- compound Poisson kinetic process -----------------------------------------

def _jump_sums(rng, cov, rate, count):
    """Jump counts and summed jumps for ``count`` independent compound Poisson paths."""
    k = rng.poisson(rate, size=count)
    jumps = rng.standard_normal((int(k.sum()), cov.d)) * cov.jump_std
    owner = np.repeat(np.arange(count), k)
    sums = np.column_stack([np.bincount(owner, weights=jumps[:, j], minlength=count)
                            for j in range(cov.d)])
    return k, sums


def _merge_counts(parts):
    size = max(p.size for p in parts)
    total = np.zeros(size, dtype=np.int64)
    for p in parts:
        total[: p.size] += p
    return total


def simulate_kinetic(cov: CovarianceModel, init: InitialDataModel, t: float, xi, n_samples: int,
                     seed: int, workers: int = 1, block_size: int = 1 << 15):
    """Estimate ``w(t, xi) = E Phi0_hat(xi - S_t)`` for the compound Poisson walk ``S``.

    ``S_t`` has ``K ~ Poisson(R(0) t)`` jumps with density ``R_hat / ((2 pi)^d R(0))``.
    Returns the estimate and the histogram of ``K``.
    """
    seed = check_seed(seed)
    if cov.d != init.d:
        raise InvalidParameterError("covariance and initial data dimensions differ")
    if not t >= 0:
        raise InvalidParameterError("t must be non-negative")
    xi = np.broadcast_to(np.asarray(xi, dtype=float), (cov.d,))
    rate = cov.r0 * t

    def block(b, start, count):
        k, sums = _jump_sums(block_generator(seed, b), cov, rate, count)
        return MomentAccumulator.from_samples(init.fourier(xi - sums)), np.bincount(k)

    parts = _run_blocks(block, n_samples, block_size, workers)
    acc = tree_merge([p[0] for p in parts])
    counts = _merge_counts([p[1] for p in parts])
    return SimEstimate(float(acc.mean[0]), acc.stderr(0), acc.n, seed), counts


def counts_to_spectrum(counts) -> SpectrumDistribution:
    counts = np.asarray(counts, dtype=float)
    return SpectrumDistribution(counts / counts.sum(), 0.0, 1.0, eps_tail=1.0)


def ks_against_normal(samples, std) -> float:
    """Kolmogorov distance between the empirical law of ``samples`` and N(0, std^2)."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    phi = normal_cdf(x / std)
    upper = np.arange(1, n + 1) / n - phi
    lower = phi - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def diffusive_scaling_check(cov: CovarianceModel, t_scale: float, n_samples: int, seed: int,
                            workers: int = 1, block_size: int = 1 << 12) -> DistanceReport:
    """KS distance of ``S_t / sqrt(t)`` from N(0, diffusivity), worst coordinate."""
    seed = check_seed(seed)
    if not t_scale > 0:
        raise InvalidParameterError("t_scale must be positive")
    rate = cov.r0 * t_scale

    def block(b, start, count):
        return _jump_sums(block_generator(seed, b), cov, rate, count)[1]

    sums = np.concatenate(_run_blocks(block, n_samples, block_size, workers)) / math.sqrt(t_scale)
    diff = diffusivity_matrix(cov)
    ks = max(ks_against_normal(sums[:, j], math.sqrt(diff[j, j])) for j in range(cov.d))
    return DistanceReport(ks=ks)


def estimate_params(**kwargs):
    """JSON-friendly parameter record (dataclasses flattened)."""
    out = {}
    for k, v in kwargs.items():
        if hasattr(v, "__dataclass_fields__"):
            out[k] = asdict(v)
        elif isinstance(v, np.ndarray):
            out[k] = v.tolist()
        else:
            out[k] = v
    return out
