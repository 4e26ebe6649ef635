"""Dyadic grids, cell projections, kernel discretization matrices, and the
localization/commutator machinery with their decay checks.

The level-n grid is the lattice 2^(-n) Z^d intersected with [-L, L)^d; the
cell of a lattice point is the half-open cube of side 2^(-n) centered at it.
The discretization matrix has entries

    a(lam, lam') = 2^(2nd) * double integral of K over cell(lam) x cell(lam'),

which is Toeplitz for convolution kernels. All assembled objects are
immutable; checks are read-only.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.linalg import matmul_toeplitz, toeplitz

from .errors import DomainError, QuadratureError
from .kernels import KernelSpec, RadialProfile
from .lattice import weighted_lp_norm
from .quad import gauss_nodes, interval_quad

__all__ = [
    "DyadicGrid", "DiscretizationMatrix", "LocalizationMatrix",
    "ProjectionResult", "assemble_an", "project", "off_diagonal_check",
    "localization_family", "commutator", "commutator_bound_check", "psi0",
    "save_matrix", "load_matrix", "matrix_to_csv",
]

DENSE_LIMIT = 4096


class DyadicGrid:
    """Lattice 2^(-n) Z^d on [-L, L)^d with its tiling by half-open cells."""

    def __init__(self, d: int, n: int, L: float):
        if d not in (1, 2):
            raise DomainError("grids support d in {1, 2}")
        half = L * 2.0 ** n
        if abs(half - round(half)) > 1e-9:
            raise DomainError("L * 2^n must be an integer so cells tile the box")
        self.d = d
        self.n = n
        self.L = float(L)
        self.h = 2.0 ** (-n)
        k = int(round(half))
        self.axis_ik = np.arange(-k, k)          # per-axis integer lattice
        self.axis_size = 2 * k
        if d == 1:
            self.ilattice = self.axis_ik[:, None]
        else:
            g1, g2 = np.meshgrid(self.axis_ik, self.axis_ik, indexing="ij")
            self.ilattice = np.stack([g1.ravel(), g2.ravel()], axis=-1)
        self.points = self.ilattice * self.h      # (G, d) coordinates
        self.npoints = self.points.shape[0]
        for a in (self.axis_ik, self.ilattice, self.points):
            a.flags.writeable = False

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    def coords1d(self) -> np.ndarray:
        """Flat coordinates for d=1 usage."""
        if self.d != 1:
            raise DomainError("coords1d needs d=1")
        return self.points[:, 0]

    def index_of(self, ik) -> int:
        ik = np.atleast_1d(np.asarray(ik, dtype=int))
        k0 = -int(self.axis_ik[0])
        if self.d == 1:
            return int(ik[0] + k0)
        return int((ik[0] + k0) * self.axis_size + (ik[1] + k0))

    def cell_bounds(self, flat_index: int):
        c = self.points[flat_index]
        return c - 0.5 * self.h, c + 0.5 * self.h

    def __repr__(self):
        return f"DyadicGrid(d={self.d}, n={self.n}, L={self.L}, G={self.npoints})"


# ---------------------------------------------------------------------------
# Projection onto piecewise constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectionResult:
    grid: DyadicGrid
    coeffs: np.ndarray        # <f, phi_lambda>
    cell_means: np.ndarray    # values of the projected function per cell

    def __call__(self, x):
        """Evaluate the piecewise-constant projection at points x."""
        g = self.grid
        x = np.asarray(x, dtype=float)
        if g.d == 1:
            idx = np.floor(x / g.h + 0.5).astype(int) - int(g.axis_ik[0])
            ok = (idx >= 0) & (idx < g.axis_size)
            out = np.zeros_like(x, dtype=float)
            out[ok] = self.cell_means[idx[ok]]
            return out
        idx = np.floor(x / g.h + 0.5).astype(int) - int(g.axis_ik[0])
        ok = np.all((idx >= 0) & (idx < g.axis_size), axis=-1)
        flat = idx[..., 0] * g.axis_size + idx[..., 1]
        out = np.zeros(x.shape[:-1], dtype=float)
        out[ok] = self.cell_means[flat[ok]]
        return out


def project(f, grid: DyadicGrid, *, quadrature: str = "gauss",
            order: int = 12) -> ProjectionResult:
    """Cell averages of f and the matching normalized Haar coefficients.

    coeffs(lam) = <f, phi_lam> = 2^{-nd/2} * (cell mean); the reconstructed
    projection is piecewise constant at the cell means. 'gauss' evaluates a
    batched fixed-order rule per cell (exact for cellwise-smooth f);
    'adaptive' runs per-cell adaptive quadrature (d=1, for kinked f).
    """
    g = grid
    if quadrature == "adaptive":
        if g.d != 1:
            raise DomainError("adaptive projection implemented for d=1")
        means = np.empty(g.npoints)
        for i in range(g.npoints):
            lo, hi = g.cell_bounds(i)
            means[i] = interval_quad(f, float(lo[0]), float(hi[0]),
                                     rtol=1e-10) / g.h
    elif g.d == 1:
        x, w = gauss_nodes(-0.5 * g.h, 0.5 * g.h, order)
        pts = g.coords1d()[:, None] + x[None, :]
        vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
        means = vals @ w / g.h
    else:
        x, w = gauss_nodes(-0.5 * g.h, 0.5 * g.h, order)
        ox, oy = np.meshgrid(x, x, indexing="ij")
        offs = np.stack([ox.ravel(), oy.ravel()], axis=-1)
        w2 = np.outer(w, w).ravel()
        pts = g.points[:, None, :] + offs[None, :, :]
        vals = np.asarray(f(pts.reshape(-1, 2)), dtype=float).reshape(
            g.npoints, -1)
        means = vals @ w2 / g.cell_volume
    coeffs = means * (2.0 ** (-g.n * g.d / 2)) * 1.0
    # <f, phi> = 2^{nd/2} * integral over cell = 2^{-nd/2} * mean
    return ProjectionResult(grid=g, coeffs=coeffs, cell_means=means)


# ---------------------------------------------------------------------------
# Discretization matrices
# ---------------------------------------------------------------------------

class DiscretizationMatrix:
    """Matrix of cell-pair kernel integrals on a dyadic grid.

    Storage is 'toeplitz' (first column/row) for d=1 convolution kernels and
    'dense' otherwise. Dense materialization is cached; matvec prefers the
    FFT Toeplitz path. ``band_radius`` (in lattice offsets) marks offsets
    beyond which entries were dropped as below the band threshold.
    """

    def __init__(self, grid: DyadicGrid, *, kind: str, dense: Optional[np.ndarray] = None,
                 col: Optional[np.ndarray] = None, row: Optional[np.ndarray] = None,
                 meta: Optional[dict] = None):
        self.grid = grid
        self.kind = kind
        self._dense = dense
        self.col = col
        self.row = row
        self.meta = dict(meta or {})

    def dense(self) -> np.ndarray:
        if self._dense is None:
            self._dense = toeplitz(self.col, self.row)
        return self._dense

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "toeplitz":
            x = np.asarray(x)
            if x.ndim == 1:
                return matmul_toeplitz((self.col, self.row), x)
            return matmul_toeplitz((self.col, self.row), x)
        return self.dense() @ x

    def entry(self, i: int, j: int) -> float:
        if self.kind == "toeplitz":
            off = i - j
            return float(self.col[off]) if off >= 0 else float(self.row[-off])
        return float(self.dense()[i, j])

    def offsets(self) -> np.ndarray:
        """a(m) by lattice offset m = i - j (Toeplitz kinds only)."""
        if self.kind != "toeplitz":
            raise DomainError("offsets available for Toeplitz storage only")
        return np.concatenate([self.row[:0:-1], self.col])  # m = -(G-1) .. G-1

    @property
    def shape(self):
        return (self.grid.npoints, self.grid.npoints)


def _conv_offset_integral(kernel: KernelSpec, m: int, h: float, *,
                          rtol: float) -> float:
    """2^{2n} * integral of (h - |s|) g(|m h + s|) over |s| <= h   (d=1)."""
    prof = kernel.profile

    def integrand(s):
        s = np.asarray(s, dtype=float)
        return (h - np.abs(s)) * prof(np.abs(m * h + s))

    val = interval_quad(integrand, -h, h, rtol=rtol, points=[0.0, -m * h])
    return val / (h * h)


def _conv_offsets_batch(kernel: KernelSpec, ms: np.ndarray, h: float, *,
                        rtol: float) -> np.ndarray:
    """Offset integrals for many m at once.

    |m| <= 1 (profile kink or singularity inside the window) goes through
    adaptive quadrature; the rest through a batched Gauss rule split at the
    triangle kink s = 0.
    """
    prof = kernel.profile
    ms = np.asarray(ms, dtype=int)
    out = np.zeros(len(ms), dtype=float)
    small = np.abs(ms) <= 1
    for i in np.where(small)[0]:
        out[i] = _conv_offset_integral(kernel, int(ms[i]), h, rtol=rtol)
    big = ~small
    if np.any(big):
        xg, wg = np.polynomial.legendre.leggauss(12)
        acc = np.zeros(int(np.sum(big)))
        mh = ms[big] * h
        for lo, hi in ((-h, 0.0), (0.0, h)):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            s = mid + half * xg
            w = half * wg
            vals = (h - np.abs(s))[None, :] * prof(np.abs(mh[:, None] + s[None, :]))
            acc += vals @ w
        out[big] = acc / (h * h)
    return out


def assemble_an(kernel: KernelSpec, grid: DyadicGrid, *, rtol: float = 1e-10,
                band_threshold: float = 0.0) -> DiscretizationMatrix:
    """Assemble the level-n discretization matrix of the kernel.

    Entries are normalized cell-pair integrals (2^{2nd} x cell x cell K).
    Diagonal-adjacent cells of singular kernels are integrated with the
    singular point given to the adaptive rule explicitly. For convolution
    kernels only the offset column is computed (Toeplitz).
    """
    g = grid
    h = g.h
    meta = {"rtol": rtol, "kernel": kernel.descriptor, "band_threshold": band_threshold}
    if kernel.is_convolution and g.d == 1:
        G = g.npoints
        vals = _conv_offsets_batch(kernel, np.arange(G), h, rtol=rtol)
        band_radius = G - 1
        if band_threshold > 0:
            below = np.where(np.abs(vals) < band_threshold)[0]
            below = below[below > 2]
            if below.size:
                band_radius = int(below[0])
                vals[band_radius + 1:] = 0.0
        meta["band_radius"] = band_radius
        col = vals
        # even profiles give symmetric offsets; integral is even in m by
        # the change of variables s -> -s
        row = vals.copy()
        return DiscretizationMatrix(g, kind="toeplitz", col=col, row=row, meta=meta)

    if kernel.is_convolution and g.d == 2:
        # block-Toeplitz: one integral per signed offset pair, then scatter
        prof = kernel.profile
        nrm = (lambda u: np.max(np.abs(u), axis=-1)) if kernel.profile_norm == "inf" \
            else (lambda u: np.sqrt(np.sum(u * u, axis=-1)))
        K = g.axis_size
        x, w = gauss_nodes(-h, h, 24)
        wts = np.outer(w, w).ravel()
        s1, s2 = np.meshgrid(x, x, indexing="ij")
        tri = ((h - np.abs(s1)) * (h - np.abs(s2))).ravel()
        offs = np.stack([s1.ravel(), s2.ravel()], axis=-1)
        table = np.zeros((2 * K - 1, 2 * K - 1))
        for m1 in range(-K + 1, K):
            for m2 in range(-K + 1, K):
                pts = offs + np.array([m1 * h, m2 * h])
                vals = np.asarray(prof(nrm(pts)), dtype=float)
                table[m1 + K - 1, m2 + K - 1] = np.dot(wts, tri * vals) / h ** 4
        idx = g.ilattice - g.ilattice[0]
        diff1 = idx[:, None, 0] - idx[None, :, 0] + K - 1
        diff2 = idx[:, None, 1] - idx[None, :, 1] + K - 1
        dense = table[diff1, diff2]
        return DiscretizationMatrix(g, kind="dense", dense=dense, meta=meta)

    # general kernel: cell-pair tensor quadrature (small grids)
    if g.d != 1:
        raise DomainError("general kernels are assembled for d=1 only")
    G = g.npoints
    dense = np.zeros((G, G))
    xg, wg = np.polynomial.legendre.leggauss(16)
    for i in range(G):
        lo_i, hi_i = g.cell_bounds(i)
        xi = 0.5 * (lo_i + hi_i) + 0.5 * h * xg
        for j in range(G):
            lo_j, hi_j = g.cell_bounds(j)
            yj = 0.5 * (lo_j + hi_j) + 0.5 * h * xg
            if abs(i - j) <= 1:
                # kernels may be kinked or singular across the diagonal;
                # iterated adaptive quadrature handles both
                dense[i, j] = _cellpair_adaptive(kernel, float(lo_i[0]), float(hi_i[0]),
                                                 float(lo_j[0]), float(hi_j[0]), rtol)
            else:
                vals = np.asarray(kernel.eval(xi[:, None], yj[None, :]), dtype=float)
                dense[i, j] = (0.25 * h * h) * np.einsum(
                    "i,j,ij->", wg, wg, vals) / (h * h)
    return DiscretizationMatrix(g, kind="dense", dense=dense, meta=meta)


def _cellpair_adaptive(kernel: KernelSpec, lo_i, hi_i, lo_j, hi_j, rtol) -> float:
    """Cell-pair integral by iterated adaptive quadrature, diagonal-aware."""
    h = hi_i - lo_i

    def inner(x):
        return interval_quad(lambda y: kernel.eval(x, y), lo_j, hi_j,
                             rtol=max(rtol, 1e-9), points=[x])

    val = interval_quad(inner, lo_i, hi_i, rtol=max(rtol, 1e-8), limit=100)
    return val / (h * h)


# ---------------------------------------------------------------------------
# Off-diagonal decay check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OffDiagonalReport:
    n: int
    tol: float
    violations: int
    worst_margin: float        # min over entries of (bound - |entry|)
    near_bound: float
    checked: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def off_diagonal_check(m: DiscretizationMatrix, profile: RadialProfile, *,
                       tol: float = 1e-8) -> OffDiagonalReport:
    """Entrywise |a(lam, lam')| against the two-regime radial bound.

    Near regime (|lam - lam'| <= 2^{-n+1}): 2^{nd} * mass of the dominator
    inside radius 3*2^{-n}; far regime: dominator at half the separation.
    """
    g = m.grid
    h = g.h
    near_bound = (2.0 ** (g.n * g.d)) * profile.l1_ball(3.0 * h)
    if m.kind == "toeplitz":
        offs = np.arange(g.npoints)
        vals = np.abs(m.col)
        sep = offs * h
    else:
        diff = g.ilattice[:, None, :] - g.ilattice[None, :, :]
        sep = np.max(np.abs(diff), axis=-1).ravel() * h
        vals = np.abs(m.dense()).ravel()
    near = sep <= 2.0 * h + 1e-15
    bounds = np.empty_like(vals)
    bounds[near] = near_bound
    far_sep = sep[~near]
    bounds[~near] = np.asarray(profile(far_sep / 2.0), dtype=float)
    margins = bounds - vals
    violations = int(np.sum(margins < -tol))
    return OffDiagonalReport(n=g.n, tol=tol, violations=violations,
                             worst_margin=float(np.min(margins)),
                             near_bound=near_bound, checked=len(vals))


# ---------------------------------------------------------------------------
# Localization matrices and commutators
# ---------------------------------------------------------------------------

def psi0(x) -> np.ndarray:
    """Trapezoid profile max(min(2 - |x|, 1), 0) of the sup-norm of x."""
    x = np.asarray(x, dtype=float)
    r = np.abs(x) if x.ndim <= 1 else np.max(np.abs(x), axis=-1)
    return np.maximum(np.minimum(2.0 - r, 1.0), 0.0)


@dataclass(frozen=True)
class LocalizationMatrix:
    grid: DyadicGrid
    k: np.ndarray          # anchor in N Z^d
    N: int
    diag: np.ndarray       # psi0((lam - k)/N) per grid point

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.diag * vec


def localization_family(grid: DyadicGrid, N: int):
    """All localization matrices with support inside the box, plus the
    normalizing diagonal (sum of squares inverted on its support).

    Raises if no anchor fits or the interior partition lower bound fails.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    g = grid
    k_max = int(math.floor((g.L - 2 * N) / N))
    if k_max < 0:
        raise DomainError(f"box half-width {g.L} too small for scale N={N}")
    anchors1d = np.arange(-k_max, k_max + 1) * N
    if g.d == 1:
        anchors = anchors1d[:, None]
    else:
        a1, a2 = np.meshgrid(anchors1d, anchors1d, indexing="ij")
        anchors = np.stack([a1.ravel(), a2.ravel()], axis=-1)
    mats = []
    sumsq = np.zeros(g.npoints)
    for k in anchors:
        if g.d == 1:
            diag = psi0((g.coords1d() - float(k[0])) / N)
        else:
            diag = psi0((g.points - k.astype(float)) / N)
        mats.append(LocalizationMatrix(grid=g, k=k.astype(float), N=N, diag=diag))
        sumsq += diag * diag
    interior = np.max(np.abs(g.points), axis=-1) <= g.L - 2 * N if g.d == 2 \
        else np.abs(g.coords1d()) <= g.L - 2 * N
    if np.any(sumsq[interior] < 1.0 - 1e-12):
        raise DomainError("partition lower bound sum psi0^2 >= 1 fails on the interior")
    phi = np.zeros(g.npoints)
    covered = sumsq > 0
    phi[covered] = 1.0 / sumsq[covered]
    return mats, phi


def commutator(m: DiscretizationMatrix, psi: LocalizationMatrix) -> np.ndarray:
    """Psi A - A Psi: entries (psi(lam) - psi(lam')) * a(lam, lam')."""
    A = m.dense()
    dpsi = psi.diag[:, None] - psi.diag[None, :]
    return dpsi * A


@dataclass(frozen=True)
class CommutatorReport:
    N: int
    regime: str                # 'near' (|k-k'| <= 8N) or 'far'
    envelope: float            # the scale factor multiplying C (A_p)^{1/p} 2^{nd} |b|
    quotients: np.ndarray
    c_emp: float


def commutator_bound_check(m: DiscretizationMatrix, psi_k: LocalizationMatrix,
                           psi_kp: LocalizationMatrix, w_n, p: float, probes,
                           profile: RadialProfile, ap_value: float) -> CommutatorReport:
    """Measured constant in the commutator decay bound.

    For each probe b the quotient

        |(Psi_k A - A Psi_k) Psi_k' b|_{p,w} /
            ((A_p)^{1/p} 2^{nd} envelope(N, k-k') |b|_{p,w})

    is recorded; the envelope follows the near/far split at |k - k'| = 8N.
    """
    g = m.grid
    N = psi_k.N
    wvals = np.asarray(getattr(w_n, "values", w_n), dtype=float)
    sep = float(np.max(np.abs(psi_k.k - psi_kp.k)))
    two_nd = 2.0 ** (g.n * g.d)
    if sep <= 8 * N:
        envelope = N ** (-0.5) * profile.l1_norm + profile.l1_tail(math.sqrt(N) / 4.0)
        regime = "near"
    else:
        pts = g.points if g.d == 2 else g.coords1d()[:, None]
        in_k = np.max(np.abs(pts - psi_k.k), axis=-1) <= 2 * N
        in_kp = np.max(np.abs(pts - psi_kp.k), axis=-1) <= 2 * N
        mass_ratio = float(np.sum(wvals[in_k]) / np.sum(wvals[in_kp]))
        envelope = (N ** g.d) * float(profile(sep / 2.0)) * mass_ratio ** (1.0 / p)
        regime = "far"
    C = commutator(m, psi_k)
    quots = []
    for b in probes:
        b = np.asarray(b, dtype=float)
        rhs = ap_value ** (1.0 / p) * two_nd * envelope * weighted_lp_norm(b, wvals, p)
        if rhs == 0:
            continue
        lhs = weighted_lp_norm(C @ (psi_kp.diag * b), wvals, p)
        quots.append(lhs / rhs)
    quots = np.asarray(quots)
    return CommutatorReport(N=N, regime=regime, envelope=envelope, quotients=quots,
                            c_emp=float(np.max(quots)) if quots.size else 0.0)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_MAGIC = b"OPSTABMX"


def save_matrix(m: DiscretizationMatrix, path: str):
    """Binary container: header (d, n, L, kind), payload of little-endian f64."""
    g = m.grid
    kind_code = {"toeplitz": 1, "dense": 0}[m.kind]
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HBBiidQ", 1, g.d, kind_code, g.n, 0, g.L,
                             g.npoints))
        if m.kind == "toeplitz":
            fh.write(np.asarray(m.col, "<f8").tobytes())
            fh.write(np.asarray(m.row, "<f8").tobytes())
        else:
            fh.write(np.ascontiguousarray(m.dense(), dtype="<f8").tobytes())


def load_matrix(path: str) -> DiscretizationMatrix:
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise DomainError("not a matrix container")
        ver, d, kind_code, n, _pad, L, G = struct.unpack("<HBBiidQ", fh.read(28))
        grid = DyadicGrid(d, n, L)
        if grid.npoints != G:
            raise DomainError("grid size mismatch in container")
        if kind_code == 1:
            col = np.frombuffer(fh.read(8 * G), "<f8").copy()
            row = np.frombuffer(fh.read(8 * G), "<f8").copy()
            return DiscretizationMatrix(grid, kind="toeplitz", col=col, row=row)
        data = np.frombuffer(fh.read(8 * G * G), "<f8").reshape(G, G).copy()
        return DiscretizationMatrix(grid, kind="dense", dense=data)


def matrix_to_csv(m: DiscretizationMatrix, path: str, *, tag: str = ""):
    """Dense CSV dump (small grids)."""
    A = m.dense()
    with open(path, "w", newline="") as fh:
        if tag:
            fh.write(f"# verifies: {tag}\n")
        fh.write(f"# d={m.grid.d} n={m.grid.n} L={m.grid.L:g}\n")
        for row in A:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
