"""Quadrature and sup-envelope helpers shared by the other modules."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import QuadratureError

# Relative tolerance for kernel-type integrals.
DEFAULT_RTOL = 1e-8
# Absolute floor below which quadrature error estimates are ignored.
ABS_FLOOR = 1e-11


def quad_fn(f):
    """Wrap f so it serves scalars and arrays alike (quadpack probes both)."""
    def wrapped(t):
        out = np.asarray(f(t), dtype=float)
        return out if out.ndim else float(out)
    return wrapped


def interval_quad(f, a, b, *, rtol=DEFAULT_RTOL, points=None, limit=400):
    """Adaptive integral of f over [a, b]; raises if the tolerance is missed."""
    if a == b:
        return 0.0
    f = quad_fn(f)
    kwargs = {}
    if points is not None:
        inner = sorted({p for p in points if a < p < b})
        if inner:
            kwargs["points"] = inner
            limit = max(limit, 10 * len(inner))
    val, err = integrate.quad(f, a, b, epsabs=ABS_FLOOR * 1e-3, epsrel=rtol,
                              limit=limit, **kwargs)
    if err > max(100.0 * rtol * abs(val), ABS_FLOOR):
        raise QuadratureError(
            f"integral over [{a:.6g}, {b:.6g}] achieved abs error {err:.3e} "
            f"(value {val:.6e}), requested rel {rtol:.1e}")
    return val


def ball_surface(d: int, t):
    """Surface measure of the sup-norm sphere {|x|_inf = t} in R^d."""
    return d * (2.0 ** d) * np.asarray(t, dtype=float) ** (d - 1)


def radial_l1(profile, d: int, r_hi: float, r_lo: float = 0.0, *,
              rtol=DEFAULT_RTOL, points=None):
    """Integral of profile(|x|_inf) over the shell {r_lo <= |x|_inf <= r_hi}."""
    if r_hi <= r_lo:
        return 0.0
    def integrand(t):
        t = np.asarray(t, dtype=float)
        return np.asarray(profile(t), dtype=float) * d * (2.0 ** d) * t ** (d - 1)

    return interval_quad(integrand, r_lo, r_hi, rtol=rtol, points=points)


def geometric_grid(lo: float, hi: float, n: int) -> np.ndarray:
    if not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi for a geometric grid")
    return np.geomspace(lo, hi, n)


def sup_refine(f, lo: float, hi: float, *, base: int = 65, geometric: bool = False,
               rel_stable: float = 0.01, max_rounds: int = 6):
    """Sup of a vectorized f on [lo, hi] by grid refinement until stable.

    Refines until two successive doublings agree within ``rel_stable``.
    Returns (value, achieved_rel_delta); the value is a lower bound of the
    true sup.
    """
    def grid(n):
        if geometric:
            return geometric_grid(max(lo, 1e-300), hi, n)
        return np.linspace(lo, hi, n)

    n = base
    prev = float(np.max(f(grid(n))))
    delta = math.inf
    for _ in range(max_rounds):
        n = 2 * n - 1
        cur = float(np.max(f(grid(n))))
        delta = abs(cur - prev) / max(abs(cur), 1e-300)
        prev = cur
        if delta <= rel_stable:
            break
    return prev, delta


@lru_cache(maxsize=None)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_nodes(a, b, order: int = 24):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _leggauss(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def box_quad(f, lo, hi, *, order: int = 24, panels: int = 1):
    """Tensor Gauss-Legendre integral of f over the box [lo, hi]^d.

    f must accept an array of shape (m, d). lo/hi are length-d sequences.
    """
    lo = np.atleast_1d(np.asarray(lo, float))
    hi = np.atleast_1d(np.asarray(hi, float))
    d = lo.size
    axes = []
    wts = []
    for i in range(d):
        edges = np.linspace(lo[i], hi[i], panels + 1)
        xs, ws = [], []
        for j in range(panels):
            x, w = gauss_nodes(edges[j], edges[j + 1], order)
            xs.append(x)
            ws.append(w)
        axes.append(np.concatenate(xs))
        wts.append(np.concatenate(ws))
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    wmesh = np.meshgrid(*wts, indexing="ij")
    wall = np.ones(pts.shape[0])
    for wm in wmesh:
        wall = wall * wm.ravel()
    vals = np.asarray(f(pts), dtype=float).ravel()
    return float(np.dot(wall, vals))
