"""Adaptive tensor-product Gauss-Legendre cubature on boxes in 1 to 3 dimensions.

Each box is integrated with an ``order``-point Gauss-Legendre rule per axis and
compared with the sum over its ``2**d`` bisected children; the difference is the
error estimate.  Boxes with the largest estimated error are refined first.
Integrands may be real or complex valued.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidParameterError, NumericError

MAX_DIM = 3


@dataclass(frozen=True)
class QuadResult:
    value: complex | float
    error: float
    n_boxes: int


@lru_cache(maxsize=None)
def _gl_rule(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


@lru_cache(maxsize=None)
def _reference_rule(order, d):
    """Tensor nodes on [-1, 1]^d and their weights."""
    x, w = _gl_rule(order)
    grid = np.stack(np.meshgrid(*([x] * d), indexing="ij"), axis=-1).reshape(-1, d)
    weight = w
    for _ in range(d - 1):
        weight = np.multiply.outer(weight, w)
    return grid, weight.reshape(-1)


@lru_cache(maxsize=None)
def _corners(d):
    return np.array(list(itertools.product((0, 1), repeat=d)), dtype=bool)


def _split(lo, hi):
    """Bisect every box along every axis: (B, d) -> (B * 2**d, d)."""
    corners = _corners(lo.shape[1])
    mid = 0.5 * (lo + hi)
    clo = np.where(corners[None], mid[:, None], lo[:, None])
    chi = np.where(corners[None], hi[:, None], mid[:, None])
    return clo.reshape(-1, lo.shape[1]), chi.reshape(-1, lo.shape[1])


def _apply_rule(f, lo, hi, order, chunk=1 << 21):
    nodes, weights = _reference_rule(order, lo.shape[1])
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    per_box = max(1, chunk // nodes.shape[0])
    out = []
    for i in range(0, lo.shape[0], per_box):
        h = half[i:i + per_box]
        pts = mid[i:i + per_box, None, :] + h[:, None, :] * nodes[None]
        vals = np.asarray(f(pts.reshape(-1, lo.shape[1]))).reshape(pts.shape[0], -1)
        out.append(vals @ weights * np.prod(h, axis=1))
    return np.concatenate(out)


def _assess(f, lo, hi, order):
    """Children-sum estimate and its disagreement with the single-box rule."""
    coarse = _apply_rule(f, lo, hi, order)
    clo, chi = _split(lo, hi)
    fine = _apply_rule(f, clo, chi, order).reshape(lo.shape[0], -1).sum(axis=1)
    return fine, np.abs(fine - coarse)


def cubature(f, lower, upper, *, rtol=1e-10, atol=0.0, order=10, breakpoints=None,
             max_boxes=200000):
    """Integrate ``f`` over the box ``[lower, upper]``.

    ``f`` receives an ``(m, d)`` array of points and returns ``m`` values.
    ``breakpoints`` optionally gives, per axis, interior points used to build the
    initial partition; supply them when the integrand has features much narrower
    than the box, since a coarse rule can step over them.

    Raises NumericError when ``max_boxes`` is exhausted before the estimated
    error drops below ``max(atol, rtol * |I|)``.
    """
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    d = lower.size
    if d < 1 or d > MAX_DIM or upper.size != d:
        raise InvalidParameterError(f"cubature supports 1..{MAX_DIM} dimensions, got {d}")
    if np.any(upper <= lower):
        raise InvalidParameterError("upper bounds must exceed lower bounds")

    edges = []
    for k in range(d):
        pts = [lower[k], upper[k]]
        if breakpoints is not None and breakpoints[k] is not None:
            pts += [p for p in breakpoints[k] if lower[k] < p < upper[k]]
        edges.append(np.unique(pts))
    cells = list(itertools.product(*[range(len(e) - 1) for e in edges]))
    lo = np.array([[edges[k][i] for k, i in enumerate(c)] for c in cells])
    hi = np.array([[edges[k][i + 1] for k, i in enumerate(c)] for c in cells])
    value, err = _assess(f, lo, hi, order)
    n_boxes = lo.shape[0]

    while True:
        total = value.sum()
        err_total = err.sum()
        if not (np.isfinite(total) and np.isfinite(err_total)):
            raise NumericError("cubature produced a non-finite value", achieved=math.inf)
        tol = max(atol, rtol * abs(total))
        if err_total <= tol:
            break
        if n_boxes >= max_boxes:
            raise NumericError(
                f"cubature did not converge within {max_boxes} boxes: "
                f"estimated error {err_total:.3e}, requested {tol:.3e}",
                achieved=float(err_total), requested=float(tol))
        # split the worst boxes until what is left unsplit fits in half the budget
        order_idx = np.argsort(err)[::-1]
        remaining = err_total - np.cumsum(err[order_idx])
        n_split = int(np.searchsorted(-remaining, -0.5 * tol)) + 1
        chosen = order_idx[:n_split]
        keep = np.ones(lo.shape[0], dtype=bool)
        keep[chosen] = False
        clo, chi = _split(lo[chosen], hi[chosen])
        cval, cerr = _assess(f, clo, chi, order)
        lo = np.concatenate([lo[keep], clo])
        hi = np.concatenate([hi[keep], chi])
        value = np.concatenate([value[keep], cval])
        err = np.concatenate([err[keep], cerr])
        n_boxes += clo.shape[0]

    return QuadResult(value=total.item(), error=float(err.sum()), n_boxes=n_boxes)


def gauss_legendre_1d(f, a, b, **kwargs):
    """Scalar-argument convenience wrapper around :func:`cubature` for d=1."""
    return cubature(lambda pts: f(pts[:, 0]), [a], [b], **kwargs)
