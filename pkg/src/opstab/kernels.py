"""Kernel families, radial dominators, moduli of continuity and decay constants.

A kernel K(x, y) lives on the truncated domain [-L, L]^d (zero extension
outside). Radial quantities use the sup-norm |x| = max_i |x_i| throughout.
The minimal radially nonincreasing dominator of the off-diagonal decay is

    b(t) = sup over |y - y'| >= t of |K(y, y')|,

and every L^1-type quantity is reported as a box-truncated value plus an
explicit tail bound derived from the decay of b.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate, interpolate, special

from .errors import DescriptorError, DomainError, KernelError, QuadratureError
from .quad import DEFAULT_RTOL, geometric_grid, interval_quad, radial_l1

__all__ = [
    "KernelSpec", "RadialProfile", "KernelConditionReport", "WienerAmalgamReport",
    "radial_dominator", "modulus_of_continuity", "kernel_condition_constants",
    "bessel_kernel", "fourier_symbol", "wiener_amalgam_condition", "parse_kernel",
]

DEFAULT_BOX = 32.0


def inf_norm(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return np.abs(x)
    return np.max(np.abs(x), axis=-1)


def euclid_norm(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return np.abs(x)
    return np.sqrt(np.sum(x * x, axis=-1))


# ---------------------------------------------------------------------------
# Bessel kernel via the heat-semigroup (subordination) integral
# ---------------------------------------------------------------------------

def _bessel_radial_quad(gamma: float, d: int, rho: float, *, rtol: float = 1e-10) -> float:
    """G_gamma at Euclidean radius rho, by quadrature over the heat parameter.

    G_gamma(x) = (4 pi)^{-d/2} / Gamma(gamma/2) *
                 int_0^inf t^{(gamma-d)/2 - 1} exp(-t - rho^2/(4t)) dt,

    evaluated after the substitution t = e^s. The exponent is strictly
    concave in s, so the integrand has a single peak which is bracketed
    explicitly before handing the finite interval to adaptive quadrature.
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    if rho < 0:
        raise DomainError("radius must be nonnegative")
    nu = 0.5 * (gamma - d)
    pref = (4.0 * math.pi) ** (-0.5 * d) / math.gamma(0.5 * gamma)
    if rho == 0.0:
        if nu <= 0:
            raise DomainError(
                f"G_gamma is singular at the origin for gamma={gamma} <= d={d}")
        return pref * math.gamma(nu)

    q = 0.25 * rho * rho

    def phi(s):
        return nu * s - np.exp(s) - q * np.exp(-s)

    t_star = 0.5 * (nu + math.hypot(nu, rho))
    s_star = math.log(t_star)
    phi_star = float(phi(s_star))

    drop = 46.0  # e^{-46} ~ 1e-20 relative truncation
    s_lo = s_star
    while phi(s_lo) > phi_star - drop:
        s_lo -= 1.0
        if s_lo < s_star - 800:  # pragma: no cover - defensive
            raise QuadratureError("failed to bracket subordination integrand")
    s_hi = s_star
    while phi(s_hi) > phi_star - drop:
        s_hi += 1.0
        if s_hi > s_star + 800:  # pragma: no cover - defensive
            raise QuadratureError("failed to bracket subordination integrand")

    val, err = integrate.quad(lambda s: math.exp(phi(s) - phi_star), s_lo, s_hi,
                              epsabs=1e-14, epsrel=rtol, limit=200)
    if err > max(100.0 * rtol * abs(val), 1e-13):
        raise QuadratureError(
            f"subordination integral achieved rel error {err / max(abs(val), 1e-300):.2e}"
            f" at rho={rho:.4g}, requested {rtol:.1e}")
    return pref * math.exp(phi_star) * val


def bessel_kernel(gamma: float, d: int, x) -> float:
    """Kernel of the potential with Fourier symbol (1 + |xi|^2)^(-gamma/2).

    ``x`` is a point in R^d (scalar allowed for d=1). Computed by
    one-dimensional quadrature over the heat-semigroup parameter.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != d:
        raise DomainError(f"point has {x.size} coordinates, expected d={d}")
    rho = float(np.sqrt(np.sum(x * x)))
    return _bessel_radial_quad(gamma, d, rho)


@lru_cache(maxsize=16)
def _bessel_profile_cached(gamma: float, d: int, t_max: float):
    """Radial interpolant of G_gamma on (0, t_max], accurate to ~1e-9 relative.

    Two log-G splines: one against log t on (t_min, 1], one against t on
    [1, t_max]; log-linear extrapolation past t_max. Below t_min the direct
    quadrature is used.
    """
    t_min = 1e-8
    small_t = np.geomspace(t_min, 1.0, 700)
    large_t = np.linspace(1.0, t_max, max(int(80 * t_max), 400))
    small_y = np.array([math.log(_bessel_radial_quad(gamma, d, t)) for t in small_t])
    large_y = np.array([math.log(_bessel_radial_quad(gamma, d, t)) for t in large_t])
    sp_small = interpolate.CubicSpline(np.log(small_t), small_y)
    sp_large = interpolate.CubicSpline(large_t, large_y)
    tail_slope = (large_y[-1] - large_y[-2]) / (large_t[-1] - large_t[-2])

    def eval_profile(t):
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        tiny = t < t_min
        small = (~tiny) & (t <= 1.0)
        large = (t > 1.0) & (t <= t_max)
        beyond = t > t_max
        if np.any(tiny):
            out[tiny] = [_bessel_radial_quad(gamma, d, float(v)) if v > 0
                         else _bessel_radial_quad(gamma, d, 0.0) for v in t[tiny]]
        if np.any(small):
            out[small] = np.exp(sp_small(np.log(t[small])))
        if np.any(large):
            out[large] = np.exp(sp_large(t[large]))
        if np.any(beyond):
            out[beyond] = np.exp(large_y[-1] + tail_slope * (t[beyond] - t_max))
        return float(out[0]) if scalar else out

    return eval_profile


# ---------------------------------------------------------------------------
# Kernel specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelSpec:
    """A kernel K(x, y) on [-L, L]^d with its evaluation callable.

    Immutable after construction; ``eval`` is pure and thread-safe.
    For convolution-type kernels K(x, y) = g(x - y) the radial profile of g
    is stored together with the norm ('inf' or 'euclid') it is radial in,
    and whether |g| is certified nonincreasing.
    """

    d: int
    kind: str                       # 'convolution' | 'bessel' | 'tabulated' | 'general'
    L: float
    eval: Callable                  # (x, y) -> value, vectorized over points
    profile: Optional[Callable] = None      # t >= 0 -> g value (convolution kinds)
    profile_norm: str = "inf"
    monotone: Optional[bool] = None         # |profile| nonincreasing?
    singular_at_diagonal: bool = False
    descriptor: str = ""
    params: dict = field(default_factory=dict)

    @property
    def is_convolution(self) -> bool:
        return self.profile is not None

    def diff_norm(self, x, y):
        """|x - y| in the profile's norm; in d=1 arrays are separate points."""
        diff = np.asarray(x, float) - np.asarray(y, float)
        if self.d == 1:
            return np.abs(diff)
        nrm = inf_norm if self.profile_norm == "inf" else euclid_norm
        return nrm(diff)

    def check_in_box(self, *pts):
        for p in pts:
            if np.any(inf_norm(p) > self.L + 1e-12):
                raise DomainError(f"point {p} outside box of half-width {self.L}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def convolution(cls, profile, d: int = 1, L: float = DEFAULT_BOX, *,
                    norm: str = "inf", monotone: Optional[bool] = None,
                    singular: bool = False, descriptor: str = "", params=None):
        nrm = inf_norm if norm == "inf" else euclid_norm

        def kernel_eval(x, y):
            diff = np.asarray(x, float) - np.asarray(y, float)
            r = np.abs(diff) if d == 1 else nrm(diff)
            return profile(r)

        return cls(d=d, kind="convolution", L=float(L), eval=kernel_eval,
                   profile=profile, profile_norm=norm, monotone=monotone,
                   singular_at_diagonal=singular, descriptor=descriptor,
                   params=dict(params or {}))

    @classmethod
    def conv_exp(cls, scale: float = 1.0, d: int = 1, L: float = DEFAULT_BOX):
        s = float(scale)
        if s <= 0:
            raise DescriptorError("conv-exp scale must be positive")

        def profile(t):
            return 0.5 * s * np.exp(-s * np.asarray(t, dtype=float))

        return cls.convolution(profile, d=d, L=L, norm="inf", monotone=True,
                               descriptor=f"conv-exp:scale={s:g}",
                               params={"scale": s})

    @classmethod
    def bessel(cls, gamma: float, d: int = 1, L: float = DEFAULT_BOX):
        gamma = float(gamma)
        if gamma <= 0:
            raise DescriptorError("bessel gamma must be positive")
        t_max = 2.0 * L * math.sqrt(d) + 8.0
        prof = _bessel_profile_cached(gamma, d, t_max)
        singular = gamma <= d
        return cls.convolution(prof, d=d, L=L, norm="euclid", monotone=True,
                               singular=singular,
                               descriptor=f"bessel:gamma={gamma:g}",
                               params={"gamma": gamma})

    @classmethod
    def zero(cls, d: int = 1, L: float = DEFAULT_BOX):
        return cls.convolution(lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                               d=d, L=L, monotone=True, descriptor="zero")

    @classmethod
    def constant(cls, c: float, d: int = 1, L: float = DEFAULT_BOX):
        c = float(c)
        return cls.convolution(lambda t: np.full_like(np.asarray(t, dtype=float), c),
                               d=d, L=L, monotone=c >= 0,
                               descriptor=f"constant:{c:g}", params={"c": c})

    @classmethod
    def tabulated(cls, path: str, d: int = 1, L: float = DEFAULT_BOX):
        """Convolution profile tabulated in a CSV file (x columns, value)."""
        pts, vals = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                nums = [float(c) for c in row]
                if len(nums) != d + 1:
                    raise DescriptorError(
                        f"tabulated kernel row has {len(nums)} columns, expected {d + 1}")
                pts.append(nums[:d])
                vals.append(nums[d])
        pts = np.asarray(pts)
        vals = np.asarray(vals)
        if d != 1:
            raise DescriptorError("tabulated kernels support d=1 only")
        radii = np.abs(pts[:, 0])
        order = np.argsort(radii)
        radii, vals = radii[order], vals[order]

        def profile(t):
            t = np.asarray(t, dtype=float)
            return np.interp(t, radii, vals, left=vals[0], right=0.0)

        return cls.convolution(profile, d=d, L=L, monotone=None,
                               descriptor=f"tabulated:{path}")

    @classmethod
    def general(cls, fn, d: int = 1, L: float = DEFAULT_BOX, *,
                singular: bool = False, descriptor: str = "general"):
        return cls(d=d, kind="general", L=float(L), eval=fn,
                   singular_at_diagonal=singular, descriptor=descriptor)

    def with_box(self, L: float) -> "KernelSpec":
        return replace(self, L=float(L))


def parse_kernel(descriptor: str, *, d: int = 1, L: float = DEFAULT_BOX) -> KernelSpec:
    """Build a KernelSpec from a descriptor string.

    Grammar: ``bessel:gamma=<g>``, ``conv-exp:scale=<s>``, ``tabulated:<path>``.
    """
    descriptor = descriptor.strip()
    head, _, rest = descriptor.partition(":")
    try:
        if head == "bessel":
            kv = _parse_kv(rest)
            return KernelSpec.bessel(float(kv["gamma"]), d=d, L=L)
        if head == "conv-exp":
            kv = _parse_kv(rest)
            return KernelSpec.conv_exp(float(kv.get("scale", 1.0)), d=d, L=L)
        if head == "tabulated":
            if not rest:
                raise DescriptorError("tabulated kernel needs a path")
            return KernelSpec.tabulated(rest, d=d, L=L)
    except (KeyError, ValueError) as exc:
        raise DescriptorError(f"bad kernel descriptor {descriptor!r}: {exc}") from exc
    raise DescriptorError(f"unknown kernel kind {head!r}")


def _parse_kv(text: str) -> dict:
    out = {}
    if not text:
        return out
    for part in text.split(","):
        key, eq, val = part.partition("=")
        if not eq:
            raise DescriptorError(f"expected key=value, got {part!r}")
        out[key.strip()] = val.strip()
    return out


# ---------------------------------------------------------------------------
# Radial dominator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """Radially nonincreasing dominator b with its truncated L^1 mass.

    ``l1_norm`` is the integral of b(|x|) over the box [-L, L]^d; ``tail_bound``
    bounds the mass outside the box. Values between grid radii are read from
    the left node (an upper bound, since b is nonincreasing), unless an exact
    profile function is attached.
    """

    radii: np.ndarray
    values: np.ndarray
    d: int
    box_radius: float
    l1_norm: float
    tail_bound: float
    exact_fn: Optional[Callable] = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.exact_fn is not None:
            return np.abs(self.exact_fn(np.abs(t)))
        idx = np.searchsorted(self.radii, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.radii) - 1)
        out = self.values[idx]
        return np.where(t > self.radii[-1], 0.0, out)

    def l1_ball(self, r: float) -> float:
        """Integral of b(|x|) over {|x|_inf <= r}."""
        r = min(float(r), self.box_radius)
        if self.exact_fn is not None:
            return radial_l1(lambda t: np.abs(self.exact_fn(t)), self.d, r)
        return self._grid_shell_mass(0.0, r)

    def l1_tail(self, r: float) -> float:
        """Upper bound for the integral of b(|x|) over {|x|_inf > r}."""
        if r >= self.box_radius:
            return self.tail_bound
        return self.l1_norm - self.l1_ball(r) + self.tail_bound

    def _grid_shell_mass(self, lo: float, hi: float) -> float:
        # upper Riemann sum against left (larger) node values
        grid = self.radii[(self.radii > lo) & (self.radii < hi)]
        edges = np.concatenate([[lo], grid, [hi]])
        vals = np.asarray(self(edges[:-1]), dtype=float)
        shells = (2.0 * edges[1:]) ** self.d - (2.0 * edges[:-1]) ** self.d
        return float(np.dot(vals, shells))


def _master_radius_grid(radius_grid: np.ndarray, r_max: float, n: int = 1200) -> np.ndarray:
    lo = max(min(radius_grid[0], 1e-6), 1e-9)
    dense = geometric_grid(lo, max(r_max, radius_grid[-1]), n)
    return np.unique(np.concatenate([[0.0], dense, radius_grid]))


def _envelope_from_samples(sample_radii: np.ndarray, sample_vals: np.ndarray,
                           radius_grid: np.ndarray) -> np.ndarray:
    """b(t) = max over sampled radii >= t, evaluated at radius_grid nodes."""
    cummax = np.maximum.accumulate(sample_vals[::-1])[::-1]
    idx = np.searchsorted(sample_radii, radius_grid, side="left")
    out = np.zeros_like(radius_grid)
    inside = idx < len(sample_radii)
    out[inside] = cummax[idx[inside]]
    return out


def _convolution_abs_on_radii(kernel: KernelSpec, radii: np.ndarray,
                              n_dirs: int = 16) -> np.ndarray:
    """max of |g| over the sup-norm sphere of each radius."""
    prof = kernel.profile
    if kernel.profile_norm == "inf" or kernel.d == 1:
        return np.abs(prof(radii))
    # euclid-radial profile in d >= 2: on {|u|_inf = r} the Euclidean radius
    # spans [r, r*sqrt(d)]
    scales = np.linspace(1.0, math.sqrt(kernel.d), n_dirs)
    vals = np.abs(prof(np.outer(radii, scales)))
    return np.max(vals, axis=1)


def radial_dominator(kernel: KernelSpec, radius_grid) -> RadialProfile:
    """Minimal radially nonincreasing dominator of |K| on the given radii.

    For convolution kernels with a certified nonincreasing |profile| the
    dominator is the profile itself (exact). Otherwise a sup-envelope over a
    refined geometric master grid is returned; it is a lower bound of the
    true dominator, monotone by construction.
    """
    radius_grid = np.asarray(radius_grid, dtype=float)
    if radius_grid.ndim != 1 or len(radius_grid) < 2:
        raise ValueError("radius_grid must be a 1-d grid with >= 2 nodes")
    if np.any(np.diff(radius_grid) <= 0) or radius_grid[0] < 0:
        raise ValueError("radius_grid must be strictly increasing and nonnegative")

    d, L = kernel.d, kernel.L
    reach = 2.0 * L  # max sup-norm separation of two box points

    if kernel.is_convolution and kernel.monotone:
        vals = _convolution_abs_on_radii(kernel, radius_grid)
        if np.any(np.diff(vals) > 1e-12 * max(float(vals[0]), 1e-300)):
            raise KernelError(
                "profile declared nonincreasing is not monotone on the grid; "
                "refine the radius grid or drop the monotonicity claim")
        exact = (lambda t: np.abs(kernel.profile(np.asarray(t, dtype=float)))) \
            if (kernel.profile_norm == "inf" or d == 1) else None
        if exact is not None:
            l1 = radial_l1(exact, d, L, rtol=1e-10)
            tail = radial_l1(exact, d, reach + 64.0, L, rtol=1e-6) \
                if _decays(exact, L) else math.inf
            return RadialProfile(radius_grid, vals, d, L, l1, tail, exact_fn=exact)
        # euclid-radial in d >= 2: dominator at sup-norm radius t is profile(t)
        exact = lambda t: np.abs(kernel.profile(np.asarray(t, dtype=float)))
        l1 = radial_l1(exact, d, L, rtol=1e-10)
        tail = radial_l1(exact, d, reach + 64.0, L, rtol=1e-6) \
            if _decays(exact, L) else math.inf
        return RadialProfile(radius_grid, vals, d, L, l1, tail, exact_fn=exact)

    master = _master_radius_grid(radius_grid, reach)
    if kernel.is_convolution:
        samples = _convolution_abs_on_radii(kernel, master)
    else:
        samples = _general_kernel_sup(kernel, master)
    env_master = np.maximum.accumulate(samples[::-1])[::-1]
    vals = _envelope_from_samples(master, samples, radius_grid)

    def step(t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(master, t, side="right") - 1, 0, len(master) - 1)
        return env_master[idx]

    l1 = _upper_riemann_radial(master, env_master, d, L)
    tail = 0.0 if env_master[-1] == 0 else (
        env_master[-1] * ((2 * (reach)) ** d - (2 * L) ** d))
    rp = RadialProfile(radius_grid, vals, d, L, l1, tail, exact_fn=None)
    object.__setattr__(rp, "radii", master)
    object.__setattr__(rp, "values", env_master)
    return rp


def _decays(fn, L: float) -> bool:
    return float(np.max(np.abs(fn(np.array([L, L + 8.0]))))) < 1e-3 * max(
        float(np.max(np.abs(fn(np.array([1e-3, 1.0]))))), 1e-300)


def _upper_riemann_radial(radii: np.ndarray, vals: np.ndarray, d: int, r_max: float) -> float:
    mask = radii <= r_max
    edges = np.concatenate([radii[mask], [r_max]])
    left_vals = vals[mask]
    shells = (2.0 * edges[1:]) ** d - (2.0 * edges[:-1]) ** d
    return float(np.dot(left_vals, shells))


def _general_kernel_sup(kernel: KernelSpec, radii: np.ndarray, n_y: int = 9,
                        n_dirs: int = 8) -> np.ndarray:
    """sup over sampled y of |K(y, y - u)| for |u| on the radius grid."""
    d, L = kernel.d, kernel.L
    ys = np.linspace(-L * 0.9, L * 0.9, n_y)
    if d == 1:
        ypts = ys[:, None]
        dirs = np.array([[1.0], [-1.0]])
    else:
        g1, g2 = np.meshgrid(ys, ys, indexing="ij")
        ypts = np.stack([g1.ravel(), g2.ravel()], axis=-1)
        ang = np.linspace(0, 2 * math.pi, n_dirs, endpoint=False)
        raw = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        dirs = raw / np.max(np.abs(raw), axis=-1, keepdims=True)  # sup-norm 1
    out = np.zeros_like(radii)
    for i, r in enumerate(radii):
        best = 0.0
        for u in (r * dirs):
            y2 = ypts - u
            ok = np.max(np.abs(y2), axis=-1) <= L
            if not np.any(ok):
                continue
            vals = np.abs(kernel.eval(ypts[ok].squeeze(-1) if d == 1 else ypts[ok],
                                      y2[ok].squeeze(-1) if d == 1 else y2[ok]))
            best = max(best, float(np.max(vals)))
        out[i] = best
    return out


# ---------------------------------------------------------------------------
# Modulus of continuity
# ---------------------------------------------------------------------------

def modulus_of_continuity(kernel: KernelSpec, delta: float, x, y, *,
                          samples: int = 65) -> float:
    """Oscillation of K over delta-perturbations of (x, y), zeroed inside 4*delta.

    Returns sup over |x'-x|, |y'-y| <= delta of |K(x', y') - K(x, y)| when
    |x - y| >= 4*delta, and exactly 0 otherwise. The sup is sampled (grids
    include the extreme corners), so the result is a lower bound.
    """
    if not (0 < delta <= 1):
        raise DomainError("delta must lie in (0, 1]")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    kernel.check_in_box(x, y)
    if inf_norm(x - y) < 4 * delta:
        return 0.0
    if kernel.is_convolution:
        u0 = x - y
        if kernel.d == 1:
            v = np.linspace(-2 * delta, 2 * delta, samples)
            radii = np.abs(u0[0] + v)
            center = float(kernel.profile(abs(u0[0])))
        else:
            v = np.linspace(-2 * delta, 2 * delta, max(9, samples // 4))
            g1, g2 = np.meshgrid(v, v, indexing="ij")
            pts = u0 + np.stack([g1.ravel(), g2.ravel()], axis=-1)
            nrm = inf_norm if kernel.profile_norm == "inf" else euclid_norm
            radii = nrm(pts)
            center = float(kernel.profile(float(nrm(u0))))
        vals = kernel.profile(radii)
        return float(np.max(np.abs(vals - center)))
    # general kernel: tensor-sample both perturbations
    m = max(5, int(round(samples ** 0.5)) | 1)
    offs = np.linspace(-delta, delta, m)
    if kernel.d == 1:
        xs = x[0] + offs
        ys = y[0] + offs
        xx, yy = np.meshgrid(xs, ys, indexing="ij")
        center = float(kernel.eval(x[0], y[0]))
        vals = kernel.eval(xx.ravel(), yy.ravel())
        return float(np.max(np.abs(vals - center)))
    raise NotImplementedError("general-kernel modulus implemented for d=1 only")


def _modulus_profile_values(kernel: KernelSpec, delta: float, radii: np.ndarray,
                            n_pert: int = 33, n_dirs: int = 8) -> np.ndarray:
    """Values of the modulus kernel's sup over the sup-norm sphere per radius."""
    prof = kernel.profile
    nrm = inf_norm if kernel.profile_norm == "inf" else euclid_norm
    out = np.zeros_like(radii)
    live = radii >= 4 * delta
    if not np.any(live):
        return out
    rs = radii[live]
    if kernel.d == 1:
        v = np.linspace(-2 * delta, 2 * delta, n_pert)
        pts = rs[:, None] + v[None, :]
        centers = prof(rs)
        vals = prof(np.abs(pts))
        out[live] = np.max(np.abs(vals - centers[:, None]), axis=1)
        return out
    # d = 2: sample directions on the sup-norm sphere and a tensor v-grid
    ang = np.linspace(0, 2 * math.pi, n_dirs, endpoint=False)
    raw = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    dirs = raw / np.max(np.abs(raw), axis=-1, keepdims=True)
    v1 = np.linspace(-2 * delta, 2 * delta, 9)
    g1, g2 = np.meshgrid(v1, v1, indexing="ij")
    vgrid = np.stack([g1.ravel(), g2.ravel()], axis=-1)
    best = np.zeros_like(rs)
    for dvec in dirs:
        u0 = rs[:, None] * dvec[None, :]
        centers = prof(nrm(u0))
        pts = u0[:, None, :] + vgrid[None, :, :]
        vals = prof(nrm(pts))
        best = np.maximum(best, np.max(np.abs(vals - centers[:, None]), axis=1))
    out[live] = best
    return out


# ---------------------------------------------------------------------------
# Kernel condition constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelConditionReport:
    """The three decay/regularity constants and their sum D0.

    sup_singularity_term = sup over the delta grid of
        delta^{-alpha} * integral of b over {|x| <= delta};
    sup_modulus_term uses the radial dominator of the modulus kernel instead.
    Sups are grid sups (lower bounds). ``diverging`` flags terms that are
    still growing at the smallest grid deltas, i.e. the condition looks
    unsatisfied for this alpha.
    """

    alpha: float
    norm_rk: float
    sup_modulus_term: float
    sup_singularity_term: float
    D0: float
    diverging: bool = False
    per_delta: dict = field(default_factory=dict)

    def __post_init__(self):
        assert self.D0 >= self.norm_rk >= 0


def _diverging(deltas: np.ndarray, terms: np.ndarray, rel: float = 0.15) -> bool:
    """True if the term keeps growing as delta shrinks (three smallest nodes)."""
    if len(deltas) < 3:
        return False
    order = np.argsort(deltas)
    t = terms[order][:3]  # smallest deltas first
    return bool(t[0] > (1 + rel) * t[1] > (1 + rel) ** 2 * t[2])


def kernel_condition_constants(kernel: KernelSpec, alpha: float, delta_grid,
                               *, radius_grid=None) -> KernelConditionReport:
    """Box-truncated decay constants of K for a Hoelder exponent alpha.

    D0 = |b|_1 + sup_d d^{-alpha} |b restricted inside d|_1
               + sup_d d^{-alpha} |dominator of the d-modulus kernel|_1.
    """
    if not (0 < alpha <= 1):
        raise DomainError("alpha must lie in (0, 1]")
    delta_grid = np.asarray(delta_grid, dtype=float)
    if np.any((delta_grid <= 0) | (delta_grid > 1)):
        raise DomainError("delta grid must lie in (0, 1]")
    if radius_grid is None:
        radius_grid = np.concatenate([[1e-6], geometric_grid(1e-4, 2 * kernel.L, 200)])
    rp = radial_dominator(kernel, radius_grid)

    sing_terms = np.array([rp.l1_ball(dl) / dl ** alpha for dl in delta_grid])

    mod_terms = np.zeros_like(delta_grid)
    master = _master_radius_grid(np.asarray(radius_grid, float), 2 * kernel.L, n=800)
    for i, dl in enumerate(delta_grid):
        if kernel.is_convolution:
            w_vals = _modulus_profile_values(kernel, dl, master)
        else:
            w_vals = _general_modulus_sup(kernel, dl, master)
        env = np.maximum.accumulate(w_vals[::-1])[::-1]
        mod_terms[i] = _upper_riemann_radial(master, env, kernel.d, kernel.L) / dl ** alpha

    diverging = _diverging(delta_grid, sing_terms) or _diverging(delta_grid, mod_terms)
    sup_sing = float(np.max(sing_terms))
    sup_mod = float(np.max(mod_terms))
    return KernelConditionReport(
        alpha=alpha, norm_rk=rp.l1_norm,
        sup_modulus_term=sup_mod, sup_singularity_term=sup_sing,
        D0=rp.l1_norm + sup_mod + sup_sing, diverging=diverging,
        per_delta={"delta": delta_grid.tolist(),
                   "singularity": sing_terms.tolist(),
                   "modulus": mod_terms.tolist()})


def _general_modulus_sup(kernel: KernelSpec, delta: float, radii: np.ndarray,
                         n_y: int = 7) -> np.ndarray:
    if kernel.d != 1:
        raise NotImplementedError("general-kernel modulus envelope needs d=1")
    L = kernel.L
    ys = np.linspace(-0.9 * L, 0.9 * L, n_y)
    out = np.zeros_like(radii)
    for i, r in enumerate(radii):
        if r < 4 * delta:
            continue
        best = 0.0
        for y0 in ys:
            for x0 in (y0 + r, y0 - r):
                if abs(x0) > L:
                    continue
                best = max(best, modulus_of_continuity(kernel, delta, x0, y0,
                                                       samples=25))
        out[i] = best
    return out


# ---------------------------------------------------------------------------
# Fourier symbol
# ---------------------------------------------------------------------------

def fourier_symbol(g, xi_grid, *, d: int = None, L: float = None,
                   rtol: float = 1e-9) -> np.ndarray:
    """hat g on the grid: integral of g(x) e^{-i x.xi} over the box.

    ``g`` may be a convolution-type KernelSpec or a callable radial profile
    (then d and L must be given). Real-valued output for the even kernels
    handled here.
    """
    if isinstance(g, KernelSpec):
        if not g.is_convolution:
            raise DomainError("fourier_symbol needs a convolution-type kernel")
        prof, norm, d, L = g.profile, g.profile_norm, g.d, g.L
    else:
        prof, norm = g, "inf"
        if d is None or L is None:
            raise ValueError("d and L are required for a bare profile")
    xi_grid = np.asarray(xi_grid, dtype=float)
    if d == 1:
        out = np.empty(xi_grid.shape[0] if xi_grid.ndim else 1)
        for i, xi in enumerate(np.atleast_1d(xi_grid)):
            if xi == 0.0:
                val = 2.0 * interval_quad(prof, 0.0, L, rtol=rtol)
            else:
                # g even: hat g(xi) = 2 int_0^L g(t) cos(t xi) dt
                from .quad import quad_fn
                val, err = integrate.quad(quad_fn(prof), 0.0, L,
                                          weight="cos", wvar=float(xi),
                                          epsabs=1e-13, epsrel=rtol, limit=400)
                val *= 2.0
            out[i] = val
        return out if xi_grid.ndim else float(out[0])
    # d = 2: tensor quadrature over the box (moderate grids only)
    from .quad import box_quad
    nrm = inf_norm if norm == "inf" else euclid_norm
    xi_grid = np.atleast_2d(xi_grid)
    out = np.empty(xi_grid.shape[0])
    for i, xi in enumerate(xi_grid):
        def integrand(p):
            return prof(nrm(p)) * np.cos(p @ xi)
        out[i] = box_quad(integrand, [-L, -L], [L, L], order=32, panels=8)
    return out


# ---------------------------------------------------------------------------
# Wiener amalgam condition (comparison remark only)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WienerAmalgamReport:
    first_term: float           # amalgam norm of sup_y |K(y, . + y)|
    modulus_term: float         # sup over deltas of delta^{-alpha} amalgam norm
    value: float                # first_term + modulus_term (inf if inapplicable)
    applicable: bool
    note: str = ""
    per_delta: dict = field(default_factory=dict)


def _amalgam_norm_profile(prof, monotone, L: float, d: int, n_samp: int = 33) -> float:
    """Sum over unit cells of the per-cell sup of |prof(|x|)| (sup-norm radial)."""
    k_max = int(math.ceil(L)) + 1
    if d == 1:
        total = 0.0
        for k in range(-k_max, k_max + 1):
            lo, hi = k - 0.5, k + 0.5
            if monotone:
                r_near = 0.0 if lo <= 0 <= hi else min(abs(lo), abs(hi))
                total += float(np.abs(prof(r_near)))
            else:
                xs = np.linspace(lo, hi, n_samp)
                total += float(np.max(np.abs(prof(np.abs(xs)))))
        return total
    total = 0.0
    for k1 in range(-k_max, k_max + 1):
        for k2 in range(-k_max, k_max + 1):
            r1 = 0.0 if abs(k1) == 0 else abs(k1) - 0.5
            r2 = 0.0 if abs(k2) == 0 else abs(k2) - 0.5
            r_near = max(r1, r2)
            if monotone:
                total += float(np.abs(prof(r_near)))
            else:
                xs = np.linspace(k1 - 0.5, k1 + 0.5, 9)
                ys = np.linspace(k2 - 0.5, k2 + 0.5, 9)
                g1, g2 = np.meshgrid(xs, ys, indexing="ij")
                total += float(np.max(np.abs(prof(inf_norm(
                    np.stack([g1.ravel(), g2.ravel()], axis=-1))))))
    return total


def wiener_amalgam_condition(kernel: KernelSpec, alpha: float, delta_grid,
                             *, n_samp: int = 33) -> WienerAmalgamReport:
    """Amalgam-norm decay condition with the uncut modulus (no 4*delta branch).

    Inapplicable for kernels singular (or discontinuous) on the diagonal:
    the uncut modulus does not vanish there, so the condition reads +inf.
    """
    if not kernel.is_convolution:
        raise NotImplementedError("amalgam condition implemented for convolution kernels")
    if not (0 < alpha <= 1):
        raise DomainError("alpha must lie in (0, 1]")
    delta_grid = np.asarray(delta_grid, dtype=float)
    prof = kernel.profile
    if kernel.singular_at_diagonal:
        # the diagonal cell's sup is already infinite
        return WienerAmalgamReport(math.inf, math.inf, math.inf, False,
                                   "kernel singular on the diagonal")
    first = _amalgam_norm_profile(prof, bool(kernel.monotone), kernel.L, kernel.d,
                                  n_samp)
    if kernel.d != 1:
        raise NotImplementedError("amalgam modulus term implemented for d=1")

    k_max = int(math.ceil(kernel.L)) + 1
    cells = np.arange(-k_max, k_max + 1)
    xs = np.linspace(-0.5, 0.5, n_samp)
    terms = np.empty_like(delta_grid)
    for i, dl in enumerate(delta_grid):
        v = np.linspace(-2 * dl, 2 * dl, 25)
        total = 0.0
        for k in cells:
            pts = k + xs
            centers = prof(np.abs(pts))
            vals = prof(np.abs(pts[:, None] + v[None, :]))
            total += float(np.max(np.abs(vals - centers[:, None])))
        terms[i] = total / dl ** alpha
    per_delta = {"delta": delta_grid.tolist(), "modulus": terms.tolist()}
    if _diverging(delta_grid, terms):
        return WienerAmalgamReport(first, math.inf, math.inf, False,
                                   "modulus term diverges as delta -> 0 "
                                   "(kernel not continuous on the diagonal)",
                                   per_delta)
    mod = float(np.max(terms))
    return WienerAmalgamReport(first, mod, first + mod, True, "", per_delta)
