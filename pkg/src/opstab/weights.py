"""Muckenhoupt weights on the truncated box: A_p bound estimation on cube
families, dyadic discretization, discrete A_p bounds, and the doubling /
reverse Hoelder / BMO / exponential-integrability inequalities.

Power weights |x|^alpha (sup-norm radius) integrate in closed form on any
axis box, including boxes containing the origin, so the quadrature-hostile
cells are exact. Cube sampling yields lower bounds of the true sups; every
estimate is flagged as such.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DescriptorError, DomainError
from .grids import DyadicGrid
from .quad import gauss_nodes

__all__ = [
    "Cube", "WeightSpec", "ApEstimate", "DiscreteWeight",
    "ap_bound_estimate", "discretize_weight", "discrete_ap_bound",
    "bmo_norm_estimate", "doubling_check", "reverse_holder_check",
    "exp_integrability_check", "dyadic_cubes", "random_cubes",
    "default_cube_family", "parse_weight",
]


# ---------------------------------------------------------------------------
# Cubes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cube:
    center: tuple
    side: float

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return self.side ** self.d

    def lo(self) -> np.ndarray:
        return np.asarray(self.center) - 0.5 * self.side

    def hi(self) -> np.ndarray:
        return np.asarray(self.center) + 0.5 * self.side

    def scaled(self, k: float) -> "Cube":
        return Cube(self.center, k * self.side)

    def inside_box(self, L: float) -> bool:
        return bool(np.all(np.abs(self.center) + 0.5 * self.side <= L + 1e-12))


def dyadic_cubes(d: int, L: float, levels, max_per_level: int = 4096):
    """All dyadic cubes of side 2^-level inside the box, per level.

    In d=2 a level whose cube count exceeds ``max_per_level`` is subsampled
    deterministically (stride over the index grid).
    """
    cubes = []
    for lev in levels:
        s = 2.0 ** (-lev)
        k = int(math.floor(L / s))
        idx = np.arange(-k, k)
        if d == 1:
            centers = (idx + 0.5) * s
            take = centers
            if len(take) > max_per_level:
                stride = int(math.ceil(len(take) / max_per_level))
                take = take[::stride]
            cubes.extend(Cube((float(c),), s) for c in take)
        else:
            if len(idx) ** 2 > max_per_level:
                stride = int(math.ceil(len(idx) / math.sqrt(max_per_level)))
                idx = idx[::stride]
            for i in idx:
                for j in idx:
                    cubes.append(Cube(((i + 0.5) * s, (j + 0.5) * s), s))
    return cubes


def random_cubes(d: int, L: float, count: int, rng,
                 side_range=(2.0 ** -6, None)):
    lo_s, hi_s = side_range
    hi_s = hi_s or L / 2
    cubes = []
    for _ in range(count):
        s = math.exp(rng.uniform(math.log(lo_s), math.log(hi_s)))
        c = rng.uniform(-L + 0.5 * s, L - 0.5 * s, size=d)
        cubes.append(Cube(tuple(float(v) for v in c), float(s)))
    return cubes


def default_cube_family(d: int, L: float, rng, levels=range(0, 7),
                        n_random: int = 200):
    """Dyadic cubes at levels 0..6 plus random cubes (log-uniform sides)."""
    return dyadic_cubes(d, L, levels) + random_cubes(d, L, n_random, rng)


# ---------------------------------------------------------------------------
# Closed-form power integrals |x|^beta over axis boxes (sup-norm radius)
# ---------------------------------------------------------------------------

def _power_int_1d(beta: float, a: float, b: float) -> float:
    """Integral of |t|^beta over [a, b] (a <= b); inf when non-integrable."""
    if a > b:
        raise ValueError("need a <= b")
    if a >= 0:
        if a == 0 and beta <= -1:
            return math.inf
        if beta == -1.0:
            return math.log(b / a)
        return (b ** (beta + 1) - a ** (beta + 1)) / (beta + 1)
    if b <= 0:
        return _power_int_1d(beta, -b, -a)
    if beta <= -1:
        return math.inf
    return (abs(a) ** (beta + 1) + b ** (beta + 1)) / (beta + 1)


def _corner_int_2d(beta: float, a: float, b: float) -> float:
    """Integral of max(x, y)^beta over [0, a] x [0, b]."""
    if a == 0.0 or b == 0.0:
        return 0.0
    if a > b:
        a, b = b, a
    if beta <= -2:
        return math.inf
    if beta == -1.0:
        return a * math.log(b / a) + 2.0 * a
    return (a * b ** (beta + 1) / (beta + 1)
            + beta * a ** (beta + 2) / ((beta + 1) * (beta + 2)))


def _power_int_2d(beta: float, lo: np.ndarray, hi: np.ndarray) -> float:
    """Integral of (sup-norm radius)^beta over the axis box [lo, hi]."""
    total = 0.0
    # split each axis at 0 and reflect into the first quadrant
    for (x0, x1) in _axis_pieces(lo[0], hi[0]):
        for (y0, y1) in _axis_pieces(lo[1], hi[1]):
            if x0 == 0.0 and y0 == 0.0 and beta <= -2:
                return math.inf
            val = (_corner_int_2d(beta, x1, y1) - _corner_int_2d(beta, x0, y1)
                   - _corner_int_2d(beta, x1, y0) + _corner_int_2d(beta, x0, y0))
            total += val
    return total


def _axis_pieces(lo: float, hi: float):
    if lo >= 0:
        return [(lo, hi)] if hi > lo else []
    if hi <= 0:
        return [(-hi, -lo)] if hi > lo else []
    return [(0.0, -lo), (0.0, hi)]


def _log_int_1d(a: float, b: float) -> float:
    """Integral of ln|t| over [a, b] (a <= b). x ln x -> 0 at 0."""
    def F(x):
        return 0.0 if x == 0.0 else x * math.log(x) - x

    if a >= 0:
        return F(b) - F(a)
    if b <= 0:
        return F(-a) - F(-b)
    return F(-a) + F(b)


# ---------------------------------------------------------------------------
# Weight specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSpec:
    """A positive weight on the box with exact cube integrals where possible."""

    d: int
    kind: str                  # 'trivial' | 'power' | 'tabulated' | 'custom'
    eval: Callable
    alpha: Optional[float] = None
    descriptor: str = ""

    @classmethod
    def trivial(cls, d: int = 1):
        return cls(d=d, kind="trivial", eval=lambda x: np.ones_like(_radius(x, d)),
                   descriptor="trivial")

    @classmethod
    def power(cls, alpha: float, d: int = 1):
        alpha = float(alpha)

        def ev(x):
            return _radius(x, d) ** alpha

        return cls(d=d, kind="power", eval=ev, alpha=alpha,
                   descriptor=f"power:alpha={alpha:g}")

    @classmethod
    def tabulated(cls, path: str, d: int = 1):
        if d != 1:
            raise DescriptorError("tabulated weights support d=1 only")
        xs, vs = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                xs.append(float(row[0]))
                vs.append(float(row[1]))
        xs, vs = np.asarray(xs), np.asarray(vs)
        order = np.argsort(xs)
        xs, vs = xs[order], vs[order]
        if np.any(vs <= 0):
            raise DescriptorError("tabulated weight must be positive")

        def ev(x):
            return np.interp(np.asarray(x, float), xs, vs, left=vs[0], right=vs[-1])

        return cls(d=d, kind="tabulated", eval=ev, descriptor=f"tabulated:{path}")

    @classmethod
    def from_function(cls, fn, d: int = 1, descriptor: str = "custom"):
        return cls(d=d, kind="custom", eval=fn, descriptor=descriptor)

    # -- admissibility -----------------------------------------------------

    def admissible(self, p: float):
        """Membership of the A_p class, when decidable in closed form."""
        if self.kind == "trivial":
            return True
        if self.kind == "power":
            a, d = self.alpha, self.d
            if p == 1:
                return -d < a <= 0
            return -d < a < d * (p - 1)
        return None

    # -- cube integrals ----------------------------------------------------

    def integral_pow(self, cube: Cube, rho: float) -> float:
        """Integral of w^rho over the cube; +inf when non-integrable."""
        lo, hi = cube.lo(), cube.hi()
        if self.kind == "trivial" or rho == 0.0:
            return cube.volume
        if self.kind == "power":
            beta = self.alpha * rho
            if self.d == 1:
                return _power_int_1d(beta, float(lo[0]), float(hi[0]))
            return _power_int_2d(beta, lo, hi)
        return self._numeric_integral(cube, lambda v: v ** rho)

    def avg_pow(self, cube: Cube, rho: float) -> float:
        return self.integral_pow(cube, rho) / cube.volume

    def inf_over(self, cube: Cube, samples: int = 64) -> float:
        """Essential infimum over the cube (analytic for radial powers)."""
        lo, hi = cube.lo(), cube.hi()
        if self.kind == "trivial":
            return 1.0
        if self.kind == "power":
            r_min = max(_axis_absmin(float(l), float(h)) for l, h in zip(lo, hi))
            r_max = max(max(abs(float(l)), abs(float(h))) for l, h in zip(lo, hi))
            if self.alpha >= 0:
                return r_min ** self.alpha if (r_min > 0 or self.alpha == 0) else 0.0
            return r_max ** self.alpha
        pts = _cube_sample(cube, samples)
        return float(np.min(self.eval(pts if self.d > 1 else pts[:, 0])))

    def log_avg(self, cube: Cube) -> float:
        """Cube average of ln w; the BMO center value."""
        if self.kind == "trivial":
            return 0.0
        if self.kind == "power":
            lo, hi = cube.lo(), cube.hi()
            if self.d == 1:
                return self.alpha * _log_int_1d(float(lo[0]), float(hi[0])) / cube.volume
            return self._numeric_integral(
                cube, None, fn=lambda pts: self.alpha * np.log(_radius(pts, self.d))
            ) / cube.volume
        return self._numeric_integral(cube, np.log) / cube.volume

    def abs_log_dev(self, cube: Cube) -> float:
        """Cube average of |ln w - c_Q| (the BMO integrand)."""
        if self.kind == "trivial":
            return 0.0
        c = self.log_avg(cube)
        if self.kind == "power" and self.d == 1:
            a = self.alpha
            m = c / a  # the radius where ln w crosses its average is e^m
            lo, hi = float(cube.lo()[0]), float(cube.hi()[0])
            r = math.exp(m)
            cuts = sorted({lo, hi, *(v for v in (-r, 0.0, r) if lo < v < hi)})
            total = 0.0
            for x0, x1 in zip(cuts[:-1], cuts[1:]):
                piece = a * (_log_int_1d(x0, x1) - m * (x1 - x0))
                total += abs(piece)
            return total / cube.volume
        if self.kind == "power":
            def fn(pts):
                return np.abs(self.alpha * np.log(_radius(pts, self.d)) - c)
            return self._numeric_integral(cube, None, fn=fn) / cube.volume

        def fn(pts):
            return np.abs(np.log(self.eval(pts if self.d > 1 else pts[:, 0])) - c)
        return self._numeric_integral(cube, None, fn=fn) / cube.volume

    def _numeric_integral(self, cube: Cube, transform, fn=None,
                          order: int = 24, panels: int = 8) -> float:
        lo, hi = cube.lo(), cube.hi()
        axes, wts = [], []
        for i in range(self.d):
            # split at 0 to keep radial kinks on panel edges
            pieces = _axis_pieces_signed(float(lo[i]), float(hi[i]))
            xs, ws = [], []
            for (p0, p1) in pieces:
                edges = np.linspace(p0, p1, panels + 1)
                for j in range(panels):
                    x, w = gauss_nodes(edges[j], edges[j + 1], order)
                    xs.append(x)
                    ws.append(w)
            axes.append(np.concatenate(xs))
            wts.append(np.concatenate(ws))
        if self.d == 1:
            pts = axes[0]
            vals = fn(pts[:, None]) if fn else transform(np.asarray(
                self.eval(pts), dtype=float))
            return float(np.dot(wts[0], vals))
        g1, g2 = np.meshgrid(axes[0], axes[1], indexing="ij")
        pts = np.stack([g1.ravel(), g2.ravel()], axis=-1)
        vals = fn(pts) if fn else transform(np.asarray(self.eval(pts), dtype=float))
        wall = np.outer(wts[0], wts[1]).ravel()
        return float(np.dot(wall, vals))


def _radius(x, d: int):
    x = np.asarray(x, dtype=float)
    if d == 1:
        return np.abs(x)
    return np.max(np.abs(x), axis=-1)


def _axis_absmin(lo: float, hi: float) -> float:
    if lo <= 0.0 <= hi:
        return 0.0
    return min(abs(lo), abs(hi))


def _axis_pieces_signed(lo: float, hi: float):
    if lo < 0 < hi:
        return [(lo, 0.0), (0.0, hi)]
    return [(lo, hi)]


def _cube_sample(cube: Cube, per_axis: int) -> np.ndarray:
    lo, hi = cube.lo(), cube.hi()
    axes = [np.linspace(float(lo[i]), float(hi[i]), per_axis)
            for i in range(cube.d)]
    if cube.d == 1:
        return axes[0][:, None]
    g1, g2 = np.meshgrid(*axes, indexing="ij")
    return np.stack([g1.ravel(), g2.ravel()], axis=-1)


def parse_weight(descriptor: str, *, d: int = 1) -> WeightSpec:
    descriptor = descriptor.strip()
    head, _, rest = descriptor.partition(":")
    try:
        if head == "trivial":
            return WeightSpec.trivial(d=d)
        if head == "power":
            kv = dict(part.split("=") for part in rest.split(",") if part)
            return WeightSpec.power(float(kv["alpha"]), d=d)
        if head == "tabulated":
            if not rest:
                raise DescriptorError("tabulated weight needs a path")
            return WeightSpec.tabulated(rest, d=d)
    except (KeyError, ValueError) as exc:
        raise DescriptorError(f"bad weight descriptor {descriptor!r}: {exc}") from exc
    raise DescriptorError(f"unknown weight kind {head!r}")


# ---------------------------------------------------------------------------
# A_p bound estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ApEstimate:
    """Sup of the A_p quotient over a sampled cube family (a lower bound)."""

    p: float
    value: float
    n_cubes: int
    worst_cube: Optional[Cube] = None
    is_lower_bound: bool = True
    not_ap: bool = False       # some cube quotient was +inf at this resolution


def _ap_quotient(w: WeightSpec, p: float, cube: Cube) -> float:
    if p == 1:
        inf_w = w.inf_over(cube)
        if inf_w == 0.0:
            return math.inf
        return w.avg_pow(cube, 1.0) / inf_w
    avg_w = w.avg_pow(cube, 1.0)
    avg_dual = w.avg_pow(cube, -1.0 / (p - 1.0))
    if not (math.isfinite(avg_w) and math.isfinite(avg_dual)):
        return math.inf
    return avg_w * avg_dual ** (p - 1.0)


def ap_bound_estimate(w: WeightSpec, p: float, cubes) -> ApEstimate:
    """Max A_p quotient over the cube family.

    +inf quotients (dual power non-integrable on a cube) flag the weight as
    "not A_p at sampled resolution".
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    best, worst_cube = 0.0, None
    for cube in cubes:
        q = _ap_quotient(w, p, cube)
        if q > best:
            best, worst_cube = q, cube
        if math.isinf(best):
            break
    return ApEstimate(p=p, value=best, n_cubes=len(cubes), worst_cube=worst_cube,
                      not_ap=math.isinf(best))


# ---------------------------------------------------------------------------
# Discretization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteWeight:
    """Cell averages of a weight on a dyadic grid (all strictly positive)."""

    grid: DyadicGrid
    values: np.ndarray

    def axis_array(self) -> np.ndarray:
        """Values reshaped onto the per-axis index grid."""
        g = self.grid
        if g.d == 1:
            return self.values
        return self.values.reshape(g.axis_size, g.axis_size)


def discretize_weight(w: WeightSpec, grid: DyadicGrid) -> DiscreteWeight:
    """Cell averages 2^{nd} * integral of w over each cell."""
    g = grid
    vals = np.empty(g.npoints)
    inv_vol = 1.0 / g.cell_volume
    for i in range(g.npoints):
        lo, hi = g.cell_bounds(i)
        cube = Cube(tuple(np.atleast_1d((lo + hi) / 2.0).tolist()), g.h)
        vals[i] = w.integral_pow(cube, 1.0) * inv_vol
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        raise DomainError("weight discretization produced nonpositive or "
                          "infinite cell averages")
    return DiscreteWeight(grid=g, values=vals)


def _window_sums(arr: np.ndarray, N: int, d: int) -> np.ndarray:
    from numpy.lib.stride_tricks import sliding_window_view
    if d == 1:
        return np.sum(sliding_window_view(arr, N), axis=-1)
    return np.sum(sliding_window_view(arr, (N, N)), axis=(-2, -1))


def _window_mins(arr: np.ndarray, N: int, d: int) -> np.ndarray:
    from numpy.lib.stride_tricks import sliding_window_view
    if d == 1:
        return np.min(sliding_window_view(arr, N), axis=-1)
    return np.min(sliding_window_view(arr, (N, N)), axis=(-2, -1))


def discrete_ap_bound(dw: DiscreteWeight, p: float, max_N: int) -> ApEstimate:
    """Max discrete A_p quotient over all blocks a + [0, N-1]^d, N <= max_N."""
    if max_N < 1:
        raise DomainError("max_N must be >= 1")
    arr = dw.axis_array()
    d = dw.grid.d
    best = 0.0
    for N in range(1, max_N + 1):
        if N > min(arr.shape):
            break
        scale = float(N) ** d
        sums = _window_sums(arr, N, d) / scale
        if p == 1:
            mins = _window_mins(arr, N, d)
            q = float(np.max(sums / mins))
        else:
            dual = _window_sums(arr ** (-1.0 / (p - 1.0)), N, d) / scale
            q = float(np.max(sums * dual ** (p - 1.0)))
        best = max(best, q)
    return ApEstimate(p=p, value=best, n_cubes=max_N, is_lower_bound=True)


# ---------------------------------------------------------------------------
# BMO estimate
# ---------------------------------------------------------------------------

def bmo_norm_estimate(w: WeightSpec, cubes) -> float:
    """Max over cubes of the average oscillation of ln w around its cube mean."""
    best = 0.0
    for cube in cubes:
        v = w.abs_log_dev(cube)
        if not math.isfinite(v):
            raise DomainError(f"ln w not integrable on cube {cube}")
        best = max(best, v)
    return best


# ---------------------------------------------------------------------------
# Doubling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DoublingReport:
    p: float
    r: float
    ap_value: float
    rows: list                 # (cube, n, ratio, lower, upper)
    skipped: int
    worst_lower_margin: float  # min of (ratio - lower)
    worst_upper_margin: float  # min of (upper - ratio)
    c0_emp: float              # measured constant of the sharper upper bound
    r_admissible: bool

    @property
    def ok(self) -> bool:
        return self.worst_lower_margin >= 0 and self.worst_upper_margin >= 0


def doubling_check(w: WeightSpec, p: float, r: float, n_max: int, cubes, *,
                   ap_value: Optional[float] = None, D1: float = 0.125,
                   box_L: Optional[float] = None) -> DoublingReport:
    """Two-sided control of avg_Q(w^r) / avg_{2^n Q}(w^r).

    Checked bounds: (A_p)^{-r} 2^{-r n d (p-1)} from below and the mirrored
    (A_p)^{r} 2^{r n d (p-1)} from above. The measured constant of the
    exponential-form upper bound (2^p A_p^2)^{(2^d+1) r n} is reported as
    c0_emp; its admissible r-range depends on the configured D1.
    """
    if not (0 <= r <= 1):
        raise DomainError("r must lie in [0, 1]")
    if ap_value is None:
        ap_value = ap_bound_estimate(w, p, cubes).value
    d = w.d
    rows, skipped = [], 0
    c0 = 0.0
    for cube in cubes:
        for n in range(1, n_max + 1):
            big = cube.scaled(2.0 ** n)
            if box_L is not None and not big.inside_box(box_L):
                skipped += 1
                continue
            ratio = w.avg_pow(cube, r) / w.avg_pow(big, r)
            lower = ap_value ** (-r) * 2.0 ** (-r * n * d * (p - 1))
            upper = ap_value ** r * 2.0 ** (r * n * d * (p - 1))
            rows.append((cube, n, ratio, lower, upper))
            c0 = max(c0, ratio / (2.0 ** p * ap_value ** 2) ** ((2 ** d + 1) * r * n))
    if not rows:
        raise DomainError("every scaled cube left the box; nothing to check")
    wl = min(row[2] - row[3] for row in rows)
    wu = min(row[4] - row[2] for row in rows)
    r_adm = r <= D1 / (p * math.log(2.0) + 2.0 * math.log(max(ap_value, 1.0)))
    return DoublingReport(p=p, r=r, ap_value=ap_value, rows=rows, skipped=skipped,
                          worst_lower_margin=wl, worst_upper_margin=wu,
                          c0_emp=c0, r_admissible=r_adm)


# ---------------------------------------------------------------------------
# Reverse Hoelder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReverseHolderReport:
    p: float
    r: float
    delta: float
    ap_value: float
    delta_max: float
    worst_margin_left: float
    worst_margin_right: float
    n_cubes: int

    @property
    def ok(self) -> bool:
        return self.worst_margin_left >= 0 and self.worst_margin_right >= 0


def reverse_holder_check(w: WeightSpec, p: float, r: float, delta: float,
                         cubes, *, ap_value: Optional[float] = None
                         ) -> ReverseHolderReport:
    """Both sides of the reverse Hoelder inequality for w^r on every cube.

    Admissible delta range is (0, r0/A_p] with r0 = 2^-(p+3) / (d+1).
    Margins are reported relative to the factor 2^{p+2} A_p.
    """
    if not (0 < r <= 1):
        raise DomainError("r must lie in (0, 1]")
    if ap_value is None:
        ap_value = ap_bound_estimate(w, p, cubes).value
    r0 = 2.0 ** (-(p + 3)) / (w.d + 1)
    delta_max = r0 / ap_value
    if not (0 < delta <= delta_max):
        raise DomainError(
            f"delta={delta:g} outside admissible (0, r0/A_p] = (0, {delta_max:g}] "
            f"with r0=2^-(p+3)/(d+1)={r0:g}")
    fac = 2.0 ** (p + 2) * ap_value
    wl = math.inf
    wr = math.inf
    for cube in cubes:
        mid = w.avg_pow(cube, r)
        up = w.avg_pow(cube, (1 + delta) * r) ** (1.0 / (1 + delta))
        dn = w.avg_pow(cube, (1 - delta) * r) ** (1.0 / (1 - delta))
        wl = min(wl, mid - up / fac)
        wr = min(wr, fac * dn - mid)
    return ReverseHolderReport(p=p, r=r, delta=delta, ap_value=ap_value,
                               delta_max=delta_max, worst_margin_left=wl,
                               worst_margin_right=wr, n_cubes=len(cubes))


# ---------------------------------------------------------------------------
# Exponential integrability of ln w
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpIntegrabilityReport:
    p: float
    r: float
    r_max: float
    jensen_margin: float       # min over cubes of avg(w^r) - exp(r c_Q), >= 0
    c_emp: float               # max over cubes of avg(w^r) / exp(r c_Q)
    r_admissible: bool


def exp_integrability_check(w: WeightSpec, p: float, r: float, cubes, *,
                            ap_value: Optional[float] = None,
                            D1: float = 0.125) -> ExpIntegrabilityReport:
    """exp(r c_Q) <= avg(w^r) <= C exp(r c_Q) with measured C, c_Q = avg ln w."""
    if ap_value is None:
        ap_value = ap_bound_estimate(w, p, cubes).value
    r_max = D1 / (p * math.log(2.0) + 2.0 * math.log(max(ap_value, 1.0)))
    margin = math.inf
    c_emp = 0.0
    for cube in cubes:
        base = math.exp(r * w.log_avg(cube))
        avg = w.avg_pow(cube, r)
        margin = min(margin, avg - base)
        c_emp = max(c_emp, avg / base)
    return ExpIntegrabilityReport(p=p, r=r, r_max=r_max, jensen_margin=margin,
                                  c_emp=c_emp, r_admissible=r <= r_max)
