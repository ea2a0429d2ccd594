"""Counter-based random streams keyed on ``(seed, index)``.

Every Monte Carlo sample or block draws from a stream that depends only on the
run seed and its own index, so results do not depend on how work is scheduled
across threads.

Two generators are used:

* :func:`block_generator` wraps numpy's Philox (a counter-based generator) with
  the 128-bit key ``(seed, block)``;
* the numba helpers below implement SplitMix64 for the lattice kernel, where a
  Python-level generator per cell would be far too slow.  Normals come from a
  128-layer ziggurat (Doornik's ZIGNOR variant) fed by independent bits of one
  64-bit word.
"""
from __future__ import annotations

import math

import numpy as np
from numba import int64, njit, uint64

from .errors import InvalidParameterError

GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1
_GAMMA = uint64(GOLDEN)


def check_seed(seed):
    if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) <= _MASK64:
        raise InvalidParameterError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return int(seed)


def block_generator(seed: int, block: int) -> np.random.Generator:
    key = np.array([check_seed(seed), block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


# -- ziggurat tables ----------------------------------------------------------

ZIG_LAYERS = 128
ZIG_R = 3.442619855899
ZIG_V = 9.91256303526217e-3


def _ziggurat_tables():
    x = np.zeros(ZIG_LAYERS + 1)
    f = math.exp(-0.5 * ZIG_R * ZIG_R)
    x[0] = ZIG_V / f
    x[1] = ZIG_R
    for i in range(2, ZIG_LAYERS):
        x[i] = math.sqrt(-2 * math.log(ZIG_V / x[i - 1] + f))
        f = math.exp(-0.5 * x[i] * x[i])
    ratio = x[1:] / x[:-1]
    return x, ratio


ZIG_X, ZIG_RATIO = _ziggurat_tables()


@njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    return z ^ (z >> uint64(31))


@njit(inline="always")
def stream_key(seed, index):
    return _mix64(_mix64(uint64(seed)) + (uint64(index) + uint64(1)) * _GAMMA)


@njit(inline="always")
def _next(key, ctr):
    return _mix64(key + ctr * _GAMMA), ctr + uint64(1)


@njit(inline="always")
def _uniform(bits):
    # 53 high bits -> (0, 1)
    return ((bits >> uint64(11)) + 0.5) * (1.0 / 9007199254740992.0)


@njit
def _slow_path(key, ctr, layer, u, zx):
    """Tail or wedge branch of the ziggurat; returns (value, accepted, ctr)."""
    if layer == 0:
        while True:
            b1, ctr = _next(key, ctr)
            b2, ctr = _next(key, ctr)
            x = math.log(_uniform(b1)) / zx[1]
            y = math.log(_uniform(b2))
            if -2.0 * y >= x * x:
                break
        return ((x - zx[1]) if u < 0 else (zx[1] - x)), True, ctr
    x = u * zx[layer]
    f0 = math.exp(-0.5 * (zx[layer] * zx[layer] - x * x))
    f1 = math.exp(-0.5 * (zx[layer + 1] * zx[layer + 1] - x * x))
    b, ctr = _next(key, ctr)
    return x, f1 + _uniform(b) * (f0 - f1) < 1.0, ctr


@njit
def fill_normals(key, ctr, out, zx, zr):
    """Fill ``out`` with standard normals from stream ``key``; returns the advanced counter.

    The fast path is kept inline in this loop: wrapping it in a per-value function
    call costs numba roughly a factor of six.
    """
    for i in range(out.size):
        while True:
            bits = _mix64(key + ctr * _GAMMA)
            ctr += uint64(1)
            layer = int64(bits & uint64(0x7F))
            u = 2.0 * _uniform(bits) - 1.0
            if abs(u) < zr[layer]:
                g = u * zx[layer]
                break
            g, ok, ctr = _slow_path(key, ctr, layer, u, zx)
            if ok:
                break
        out[i] = g
    return ctr


@njit(nogil=True, cache=True)
def stream_normals(seed, index, count, zx, zr):
    """``count`` normals from the SplitMix64 stream of sample ``index``."""
    out = np.empty(count)
    fill_normals(stream_key(seed, index), uint64(0), out, zx, zr)
    return out
