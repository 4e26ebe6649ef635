"""Operator application, approximation decay, stability constants and the
exponent/weight bootstrap plan.

The discretized stability constant at level n is

    s(z) = inf over c != 0 of |(zI - 2^{-nd} A_n) c|_{p,w_n} / |c|_{p,w_n}

on the truncated grid. For p = 2 it is computed exactly as the smallest
singular value of the diagonally conjugated matrix D^{1/2}(zI - B)D^{-1/2},
D = diag(w_n); for p != 2 a multi-start projected descent on the weighted
p-sphere returns an upper bound (sound for instability conclusions), seeded
with the p = 2 witness and modulated-wave probes. Every p != 2 result is
tagged method='probe-descent'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve, matmul_toeplitz, svdvals, toeplitz
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import DomainError
from .grids import DiscretizationMatrix, DyadicGrid, assemble_an
from .kernels import KernelSpec, fourier_symbol, radial_dominator
from .lattice import weighted_lp_norm
from .quad import interval_quad
from .weights import DiscreteWeight, WeightSpec, discretize_weight

__all__ = [
    "StabilityQuery", "StabilityResult", "StabilityReport", "ScanRow",
    "BootstrapPlan", "BootstrapStage", "StabilityScanner",
    "apply_operator", "approximation_error", "ApproximationReport",
    "zero_spectrum_ratios", "stability_constant", "spectrum_scan",
    "symbol_range", "bootstrap_plan", "hat_function",
]

DENSE_SVD_LIMIT = 1024


def hat_function(x):
    """The tent profile max(1 - |x|, 0)."""
    return np.maximum(1.0 - np.abs(np.asarray(x, dtype=float)), 0.0)


# ---------------------------------------------------------------------------
# Applying the integral operator
# ---------------------------------------------------------------------------

def apply_operator(kernel: KernelSpec, f, grid: DyadicGrid) -> np.ndarray:
    """Samples of Tf on the grid lattice.

    Convolution kernels (d=1) use product integration against the piecewise
    linear interpolant of f on the lattice: the quadrature weights are the
    exactly integrated kernel against the nodal hats, so kernel kinks and
    integrable singularities cost no accuracy; the O(h^2) error is the
    interpolation error of f. Other kernels fall back to per-point adaptive
    quadrature over the box (small grids).
    """
    g = grid
    if callable(f):
        fvals = np.asarray(f(g.coords1d() if g.d == 1 else g.points), dtype=float)
    else:
        fvals = np.asarray(f, dtype=float)
    if kernel.is_convolution and g.d == 1:
        m = assemble_an(kernel, g)
        return g.h * matmul_toeplitz((m.col, m.row), fvals)
    if g.d != 1:
        raise DomainError("apply_operator supports d=1 grids")
    out = np.empty(g.npoints)
    coords = g.coords1d()
    for i, x in enumerate(coords):
        out[i] = interval_quad(
            lambda y: np.asarray(kernel.eval(x, y), dtype=float)
            * np.interp(y, coords, fvals),
            -g.L, g.L, rtol=1e-8, points=[x])
    return out


# ---------------------------------------------------------------------------
# Fine reference model for continuum-norm measurements (d=1)
# ---------------------------------------------------------------------------

class FineModel:
    """Reference discretization at a fine level for measuring L^p_w norms.

    Functions are carried as samples on the fine lattice; norms are taken
    with a two-point Gauss rule per fine cell, whose nodes avoid the lattice
    points where projected functions jump.
    """

    def __init__(self, kernel: KernelSpec, L: float, n_ref: int):
        if kernel.d != 1:
            raise DomainError("fine reference model is d=1")
        self.kernel = kernel
        self.L = L
        self.n_ref = n_ref
        self.grid = DyadicGrid(1, n_ref, L)
        self.h = self.grid.h
        self.x = self.grid.coords1d()
        m = assemble_an(kernel, self.grid)
        self.a_col = m.col
        self.a_row = m.row
        # prefix integrals of the profile over fine boxes:
        # cum[k] = integral of g over [x_0 - h/2, x_0 - h/2 + k h)
        # prefix integrals of the profile over offset cells with edges on the
        # integer lattice: box_cum[j] = integral of g over [-G h, (j - G) h)
        prof = kernel.profile
        G = self.grid.npoints
        h = self.h
        cells = np.empty(2 * G)
        ks = np.arange(2 * G)
        near = np.abs(ks - G) <= 1   # profile kink/singularity may sit inside
        for k in ks[near]:
            a = (k - G) * h
            pts = [-a] if (a < 0.0 < a + h) else None
            cells[k] = interval_quad(lambda s: prof(np.abs(a + s)),
                                     0.0, h, rtol=1e-10, points=pts)
        xg, wg = np.polynomial.legendre.leggauss(12)
        s = 0.5 * h + 0.5 * h * xg
        a_far = (ks[~near] - G) * h
        cells[~near] = prof(np.abs(a_far[:, None] + s[None, :])) @ (0.5 * h * wg)
        self.box_cum = np.concatenate([[0.0], np.cumsum(cells)])
        off = 1.0 / math.sqrt(3.0)
        self.gauss_x = np.concatenate([self.x - 0.5 * self.h * off,
                                       self.x + 0.5 * self.h * off])
        self.gauss_w = np.full(2 * G, 0.5 * self.h)

    # -- function transport --------------------------------------------------

    def samples(self, f) -> np.ndarray:
        return np.asarray(f(self.x), dtype=float)

    def apply_T(self, fvals: np.ndarray) -> np.ndarray:
        """Product-integration samples of Tf on the fine lattice."""
        return self.h * matmul_toeplitz((self.a_col, self.a_row), fvals)

    def _coarse_of_fine(self, n: int):
        """Coarse cell index (0-based) of every fine lattice point, or -1.

        Cells are centered at lattice points, so fine point ik belongs to
        coarse index floor(ik / 2^b + 1/2); the trailing half-cell at the
        right box edge has no coarse cell and maps to -1.
        """
        b = self.n_ref - n
        if b < 0:
            raise DomainError("projection level exceeds the reference level")
        ik = self.grid.axis_ik
        kc = np.floor_divide(2 * ik + 2 ** b, 2 ** (b + 1))
        kc0 = kc + (self.grid.axis_size >> (b + 0)) // 2
        n_coarse = self.grid.axis_size >> b
        kc0 = np.where((kc0 >= 0) & (kc0 < n_coarse), kc0, -1)
        return kc0, n_coarse

    def block_means(self, fvals: np.ndarray, n: int) -> np.ndarray:
        """Cell means on the level-n (center-aligned) cells from fine samples.

        Integrates the linear interpolant at the Gauss nodes; plain point
        averaging would be biased: cell edges coincide with fine lattice
        points, so the points inside a cell sit asymmetrically.
        """
        _, n_coarse = self._coarse_of_fine(n)
        h_n = 2.0 ** (-n)
        gv = self.gauss_from_fine(fvals)
        idx = np.floor(self.gauss_x / h_n + 0.5).astype(int) + n_coarse // 2
        ok = (idx >= 0) & (idx < n_coarse)
        sums = np.bincount(idx[ok], weights=gv[ok] * self.gauss_w[ok],
                           minlength=n_coarse)
        return sums / h_n

    def expand(self, means: np.ndarray, n: int) -> np.ndarray:
        kc0, _ = self._coarse_of_fine(n)
        out = np.zeros(self.grid.npoints)
        ok = kc0 >= 0
        out[ok] = means[kc0[ok]]
        return out

    def box_weights(self, n: int) -> np.ndarray:
        """Integral of the profile over coarse boxes centered at fine offsets.

        w[m] = integral of g over [m h - h_n/2, m h + h_n/2), m = -(G-1)..G-1.
        Coarse boxes have edges on the integer fine lattice (n < n_ref).
        """
        if n >= self.n_ref:
            raise DomainError("box weights need n < n_ref")
        half = 2 ** (self.n_ref - n - 1)
        G = self.grid.npoints
        cum = self.box_cum
        ms = np.arange(-(G - 1), G)
        idx_hi = np.clip(ms + G + half, 0, 2 * G)
        idx_lo = np.clip(ms + G - half, 0, 2 * G)
        return cum[idx_hi] - cum[idx_lo]

    def apply_T_pc(self, means: np.ndarray, n: int) -> np.ndarray:
        """Fine samples of T applied to a level-n piecewise-constant function.

        Both lattices share the origin, so coarse index j sits at fine index
        j * 2^(n_ref - n); the box-integrated kernel makes this exact up to
        quadrature for the piecewise-constant argument.
        """
        w = self.box_weights(n)
        G = self.grid.npoints
        step = 2 ** (self.n_ref - n)
        up = np.zeros(G)
        up[::step] = means
        col = w[G - 1:]
        row = w[G - 1::-1]
        return matmul_toeplitz((col, row), up)

    # -- Gauss-point evaluation ----------------------------------------------

    def gauss_from_fine(self, fvals: np.ndarray) -> np.ndarray:
        """Linear interpolation of fine-lattice samples at the Gauss nodes."""
        return np.interp(self.gauss_x, self.x, fvals)

    def gauss_from_pc(self, means: np.ndarray, n: int) -> np.ndarray:
        """Exact evaluation of a level-n piecewise-constant function."""
        h_n = 2.0 ** (-n)
        idx = np.floor(self.gauss_x / h_n + 0.5).astype(int) + means.size // 2
        ok = (idx >= 0) & (idx < means.size)
        out = np.zeros_like(self.gauss_x)
        out[ok] = means[idx[ok]]
        return out

    def norm(self, gauss_vals: np.ndarray, gauss_weight_vals: np.ndarray,
             p: float) -> float:
        return float(np.sum(np.abs(gauss_vals) ** p * gauss_weight_vals
                            * self.gauss_w) ** (1.0 / p))


# ---------------------------------------------------------------------------
# Approximation decay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ApproximationReport:
    p: float
    levels: tuple
    errors_tpn: tuple        # max-over-probes relative error of T P_n - T
    errors_pnt: tuple        # P_n T - T
    errors_pntpn: tuple      # P_n T P_n - T
    slope: float             # least-squares slope of log2(errors_pntpn) vs n


def approximation_error(kernel: KernelSpec, p: float, w: WeightSpec,
                        n_range: Sequence[int], probes: Sequence[Callable],
                        *, n_ref: Optional[int] = None) -> ApproximationReport:
    """Measured operator-approximation errors of the cell projections.

    For each level the max over probes of |(V - T) f|_{p,w} / |f|_{p,w} is
    recorded for V in {T P_n, P_n T, P_n T P_n}, with norms taken on the fine
    reference grid. The fitted slope tracks the predicted 2^{-n alpha} decay.
    """
    n_range = sorted(n_range)
    if n_ref is None:
        n_ref = min(max(n_range) + 2, 9)
    fm = FineModel(kernel, kernel.L, n_ref)
    wg = np.asarray(w.eval(fm.gauss_x), dtype=float)
    errs = {k: [] for k in ("tpn", "pnt", "pntpn")}
    samples = [fm.samples(f) for f in probes]
    tf_all = [fm.apply_T(s) for s in samples]
    fnorms = [fm.norm(fm.gauss_from_fine(s), wg, p) for s in samples]
    for n in n_range:
        worst = {k: 0.0 for k in errs}
        for s, tf, fn in zip(samples, tf_all, fnorms):
            means = fm.block_means(s, n)
            tf_g = fm.gauss_from_fine(tf)
            # T P_n f
            tpn = fm.apply_T_pc(means, n)
            e1 = fm.norm(fm.gauss_from_fine(tpn) - tf_g, wg, p) / fn
            # P_n T f
            pnt = fm.block_means(tf, n)
            e2 = fm.norm(fm.gauss_from_pc(pnt, n) - tf_g, wg, p) / fn
            # P_n T P_n f
            pntpn = fm.block_means(tpn, n)
            e3 = fm.norm(fm.gauss_from_pc(pntpn, n) - tf_g, wg, p) / fn
            worst["tpn"] = max(worst["tpn"], e1)
            worst["pnt"] = max(worst["pnt"], e2)
            worst["pntpn"] = max(worst["pntpn"], e3)
        for k in errs:
            errs[k].append(worst[k])
    slope = float(np.polyfit(n_range, np.log2(errs["pntpn"]), 1)[0])
    return ApproximationReport(p=p, levels=tuple(n_range),
                               errors_tpn=tuple(errs["tpn"]),
                               errors_pnt=tuple(errs["pnt"]),
                               errors_pntpn=tuple(errs["pntpn"]),
                               slope=slope)


def zero_spectrum_ratios(kernel: KernelSpec, n_range: Sequence[int], *,
                         p: float = 2.0, w: Optional[WeightSpec] = None,
                         n_ref: Optional[int] = None) -> list:
    """|T g_n| / |g_n| for g_n = hat - P_n hat; tends to zero with n."""
    if w is None:
        w = WeightSpec.trivial(1)
    n_range = sorted(n_range)
    if n_ref is None:
        n_ref = min(max(n_range) + 2, 9)
    fm = FineModel(kernel, kernel.L, n_ref)
    wg = np.asarray(w.eval(fm.gauss_x), dtype=float)
    hat_vals = fm.samples(hat_function)
    t_hat = fm.apply_T(hat_vals)
    out = []
    for n in n_range:
        means = fm.block_means(hat_vals, n)
        g_gauss = hat_function(fm.gauss_x) - fm.gauss_from_pc(means, n)
        tg_gauss = fm.gauss_from_fine(t_hat - fm.apply_T_pc(means, n))
        out.append(fm.norm(tg_gauss, wg, p) / fm.norm(g_gauss, wg, p))
    return out


# ---------------------------------------------------------------------------
# Stability constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityQuery:
    kernel: KernelSpec
    z: complex
    p: float
    weight: WeightSpec
    n: int
    L: float


@dataclass(frozen=True)
class StabilityResult:
    z: complex
    p: float
    weight: str
    value: float
    method: str               # 'exact-svd' | 'probe-descent'
    witness: np.ndarray = field(repr=False, default=None)
    converged: bool = True

    @property
    def witness_norm(self) -> float:
        return 0.0 if self.witness is None else float(np.linalg.norm(self.witness))


class StabilityScanner:
    """Holds one assembled discretization and answers s(z) queries.

    Safe to reuse across z values and (p, weight) pairs; the p=2 trivial
    eigendecomposition is cached (the matrix is normal for the symmetric
    convolution kernels handled here).
    """

    def __init__(self, kernel: KernelSpec, n: int, L: float, *, seed: int = 0):
        self.kernel = kernel
        self.grid = DyadicGrid(1, n, L)
        self.n = n
        self.L = L
        m = assemble_an(kernel, self.grid)
        scale = 2.0 ** (-n * self.grid.d)
        if m.kind == "toeplitz":
            self.b_col = scale * m.col
            self.b_row = scale * m.row
            self._dense_B = None
        else:
            self.b_col = None
            self._dense_B = scale * m.dense()
        self._eigs = None
        self._weights: dict = {}
        self._cache: dict = {}
        self._seed = seed

    # -- plumbing ------------------------------------------------------------

    @property
    def G(self) -> int:
        return self.grid.npoints

    def dense_B(self) -> np.ndarray:
        if self._dense_B is None:
            self._dense_B = toeplitz(self.b_col, self.b_row)
        return self._dense_B

    def apply_B(self, x: np.ndarray) -> np.ndarray:
        if self.b_col is not None:
            return matmul_toeplitz((self.b_col, self.b_row), x)
        return self._dense_B @ x

    def apply_Bt(self, x: np.ndarray) -> np.ndarray:
        if self.b_col is not None:
            return matmul_toeplitz((self.b_row, self.b_col), x)
        return self._dense_B.T @ x

    def symmetric(self) -> bool:
        if self.b_col is not None:
            return bool(np.allclose(self.b_col, self.b_row, atol=1e-13))
        return bool(np.allclose(self._dense_B, self._dense_B.T, atol=1e-13))

    def eigenvalues(self) -> np.ndarray:
        if self._eigs is None:
            if not self.symmetric():
                raise DomainError("eigenvalue shortcut needs a symmetric matrix")
            from scipy.linalg import eigvalsh
            self._eigs = eigvalsh(self.dense_B())
        return self._eigs

    def discrete_weight(self, w: WeightSpec) -> DiscreteWeight:
        key = w.descriptor or id(w)
        if key not in self._weights:
            self._weights[key] = discretize_weight(w, self.grid)
        return self._weights[key]

    # -- p = 2 ---------------------------------------------------------------

    def _sigma_min_weighted(self, z: complex, sqrt_w: np.ndarray):
        """Smallest singular value of D^{1/2}(zI - B)D^{-1/2} plus witness.

        Dense SVD up to DENSE_SVD_LIMIT points; beyond that a power
        iteration on (M^H M)^{-1} through one LU factorization. The reported
        value |M v|/|v| of the final iterate converges to sigma_min from
        above, so it stays a sound stability upper bound at any iteration
        count.
        """
        G = self.G
        inv_sqrt_w = 1.0 / sqrt_w
        complex_z = bool(np.iscomplexobj(np.asarray(z)) and np.imag(z) != 0)
        dtype = complex if complex_z else float
        Mat = (z * np.eye(G) - sqrt_w[:, None] * self.dense_B()
               * inv_sqrt_w[None, :]).astype(dtype)
        rng = np.random.Generator(np.random.PCG64(self._seed))
        v = rng.normal(size=G) + (1j * rng.normal(size=G) if complex_z else 0.0)
        if G <= DENSE_SVD_LIMIT:
            sigma = float(svdvals(Mat)[-1])
            lu = lu_factor(Mat)
            for _ in range(4):
                v = lu_solve(lu, lu_solve(lu, v, trans=2), trans=0)
                v = v / np.linalg.norm(v)
            return sigma, inv_sqrt_w * v
        try:
            lu = lu_factor(Mat)
        except np.linalg.LinAlgError:  # exactly singular shift
            sigma = float(svdvals(Mat)[-1])
            return sigma, inv_sqrt_w * v
        sigma_prev = math.inf
        stable = 0
        for _ in range(300):
            v = lu_solve(lu, lu_solve(lu, v, trans=2), trans=0)
            nv = np.linalg.norm(v)
            if not np.isfinite(nv) or nv == 0.0:
                break
            v = v / nv
            sigma = float(np.linalg.norm(Mat @ v))
            if abs(sigma - sigma_prev) <= 1e-12 * max(sigma, 1e-300):
                stable += 1
                if stable >= 3:
                    break
            else:
                stable = 0
            sigma_prev = sigma
        sigma = float(np.linalg.norm(Mat @ v))
        return sigma, inv_sqrt_w * v

    # -- p != 2 --------------------------------------------------------------

    def _descent(self, z: complex, p: float, wvals: np.ndarray,
                 seeds: np.ndarray, iters: int = 260):
        """Batched projected descent of |Mc|_{p,w}/|c|_{p,w} on the p-sphere."""
        w = wvals[:, None]
        conj_z = np.conj(z)

        def M(X):
            return z * X - self.apply_B(X)

        def Mh(X):
            return conj_z * X - self.apply_Bt(np.conj(X)).conj()

        def norm_pw(X):
            return (np.sum(w * np.abs(X) ** p, axis=0)) ** (1.0 / p)

        C = seeds.astype(complex)
        C = C / norm_pw(C)[None, :]
        R = norm_pw(M(C))
        eta = np.full(C.shape[1], 0.5)
        best_R = R.copy()
        best_C = C.copy()
        stall = 0
        snapshot = None
        for it in range(iters):
            if it == int(0.8 * iters):
                snapshot = float(np.min(best_R))
            r = M(C)
            absr = np.abs(r)
            eps = 1e-12 * np.maximum(absr.max(axis=0, keepdims=True), 1e-300)
            f = np.sum(w * absr ** p, axis=0)
            gradf = 0.5 * p * Mh(w * (absr ** 2 + eps ** 2) ** (0.5 * p - 1.0) * r)
            absc = np.abs(C)
            epsc = 1e-12 * np.maximum(absc.max(axis=0, keepdims=True), 1e-300)
            g = np.sum(w * absc ** p, axis=0)
            gradg = 0.5 * p * w * (absc ** 2 + epsc ** 2) ** (0.5 * p - 1.0) * C
            grad = (gradf * g - f * gradg) / (g * g)
            gnorm = np.linalg.norm(grad, axis=0)
            gnorm[gnorm == 0] = 1.0
            step = grad / gnorm[None, :]
            improved = np.zeros(C.shape[1], dtype=bool)
            for _ in range(25):
                trial = C - (eta * ~improved)[None, :] * step
                trial = trial / norm_pw(trial)[None, :]
                R_trial = norm_pw(M(trial))
                better = (R_trial < R) & ~improved
                if np.any(better):
                    C[:, better] = trial[:, better]
                    R[better] = R_trial[better]
                    eta[better] *= 1.25
                    improved |= better
                if np.all(improved):
                    break
                eta[~improved] *= 0.5
                if np.all(eta < 1e-14):
                    break
            gain = np.max((best_R - R) / np.maximum(best_R, 1e-300))
            hit = R < best_R
            best_R[hit] = R[hit]
            best_C[:, hit] = C[:, hit]
            if gain < 1e-9:
                stall += 1
                if stall >= 25:
                    break
            else:
                stall = 0
            eta = np.maximum(eta, 1e-12)
        j = int(np.argmin(best_R))
        final = float(best_R[j])
        converged = stall >= 25 or (
            snapshot is not None
            and snapshot - final <= 1e-4 * max(final, 1e-300))
        return final, best_C[:, j], converged

    def _descent_seeds(self, z: complex, count: int, rng) -> np.ndarray:
        x = self.grid.coords1d()
        G = self.G
        cols = []
        if self.kernel.is_convolution and self.symmetric():
            xi_grid = np.linspace(0.0, math.pi / self.grid.h, 512)
            sym = np.asarray(fourier_symbol(self.kernel, xi_grid))
            targets = np.where(np.abs(sym - np.real(z))
                               < 0.05 + 0.02 * np.abs(z))[0]
            picks = []
            if targets.size:
                picks = [xi_grid[targets[0]], xi_grid[targets[-1]]]
            picks.append(xi_grid[int(np.argmin(np.abs(sym - np.real(z))))])
            for xi0 in picks:
                for width, center in ((self.L / 3.0, 0.0), (self.L / 6.0, self.L / 2.0)):
                    env = np.exp(-((x - center) / width) ** 2)
                    cols.append(env * np.exp(1j * xi0 * x))
        # high-frequency alternation targets the vanishing symbol tail
        cols.append(np.exp(-(x / (self.L / 3.0)) ** 2) * np.cos(math.pi * x / self.grid.h))
        while len(cols) < count:
            cols.append(rng.normal(size=G) + 1j * rng.normal(size=G))
        return np.stack(cols[:max(count, len(cols))], axis=1)

    # -- public entry ----------------------------------------------------------

    def s_hat(self, z: complex, p: float, w: WeightSpec, *,
              n_starts: int = 16, iters: int = 260) -> StabilityResult:
        key = (complex(z), float(p), w.descriptor)
        if key in self._cache:
            return self._cache[key]
        dw = self.discrete_weight(w)
        wvals = dw.values
        if p == 2:
            sigma, witness = self._sigma_min_weighted(z, np.sqrt(wvals))
            res = StabilityResult(z=z, p=p, weight=w.descriptor, value=sigma,
                                  method="exact-svd", witness=witness)
            self._cache[key] = res
            return res
        rng = np.random.Generator(np.random.PCG64(self._seed + 7))
        seeds = self._descent_seeds(z, n_starts, rng)
        anchor = self.s_hat(z, 2.0, WeightSpec.trivial(1))
        if anchor.witness is not None:
            seeds = np.concatenate([anchor.witness[:, None], seeds], axis=1)
        value, witness, converged = self._descent(z, p, wvals, seeds, iters)
        res = StabilityResult(z=z, p=p, weight=w.descriptor, value=value,
                              method="probe-descent", witness=witness,
                              converged=converged)
        self._cache[key] = res
        return res


def stability_constant(q: StabilityQuery, *, seed: int = 0) -> StabilityResult:
    """One-shot stability-constant estimate for a query."""
    adm = q.weight.admissible(q.p)
    if adm is False:
        raise DomainError(
            f"weight {q.weight.descriptor} is not admissible for p={q.p}")
    scanner = StabilityScanner(q.kernel, q.n, q.L, seed=seed)
    return scanner.s_hat(q.z, q.p, q.weight)


# ---------------------------------------------------------------------------
# Spectrum scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    z: complex
    p: float
    weight: str
    s_hat: float
    method: str
    witness_norm: float
    classification: str        # 'in' | 'out' | 'uncertain'


@dataclass(frozen=True)
class StabilityReport:
    rows: list
    theta_low: float
    theta_high: float
    reference_spectrum: list   # interval list from the symbol, if available
    classifications_agree: bool

    def classification_of(self, z: complex, p: float, weight: str) -> str:
        for row in self.rows:
            if row.z == z and row.p == p and row.weight == weight:
                return row.classification
        raise KeyError((z, p, weight))


def spectrum_scan(kernel: KernelSpec, z_grid, pairs, *, n: int = 6,
                  L: float = 32.0, theta_low: float = 0.05,
                  theta_high: float = 0.2, seed: int = 0,
                  threads: int = 1) -> StabilityReport:
    """s(z) across the z grid for every (p, weight) pair, with in/out calls.

    pairs: iterable of (p, WeightSpec). Classification: 'in' when
    s < theta_low, 'out' when s > theta_high, else 'uncertain'. The report
    also says whether classifications agree across all pairs.
    """
    scanner = StabilityScanner(kernel, n, L, seed=seed)
    jobs = [(complex(z), float(p), w) for z in z_grid for (p, w) in pairs]

    def run(job):
        z, p, w = job
        res = scanner.s_hat(z, p, w)
        if res.value < theta_low:
            cls = "in"
        elif res.value > theta_high:
            cls = "out"
        else:
            cls = "uncertain"
        return ScanRow(z=z, p=p, weight=w.descriptor, s_hat=res.value,
                       method=res.method, witness_norm=res.witness_norm,
                       classification=cls)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(run, jobs))
    else:
        rows = [run(job) for job in jobs]

    agree = True
    for z in z_grid:
        calls = {row.classification for row in rows if row.z == complex(z)}
        if len(calls) > 1:
            agree = False
    ref = symbol_range(kernel) if kernel.is_convolution else []
    return StabilityReport(rows=rows, theta_low=theta_low, theta_high=theta_high,
                           reference_spectrum=ref, classifications_agree=agree)


def symbol_range(kernel: KernelSpec, xi_grid=None, *, gap_tol: float = 0.05):
    """Closure of the sampled symbol values union {0}, as an interval list."""
    if not kernel.is_convolution:
        raise DomainError("symbol range needs a convolution-type kernel")
    if xi_grid is None:
        xi_grid = np.linspace(0.0, 64.0, 2049)
    vals = np.asarray(fourier_symbol(kernel, np.asarray(xi_grid, float)))
    vals = np.sort(np.concatenate([[0.0], vals]))
    intervals = []
    lo = prev = vals[0]
    for v in vals[1:]:
        if v - prev > gap_tol:
            intervals.append((float(lo), float(prev)))
            lo = v
        prev = v
    intervals.append((float(lo), float(prev)))
    return intervals


# ---------------------------------------------------------------------------
# Bootstrap plan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BootstrapStage:
    lemma: str                 # 'weight-power-step' | 'small-power-bridge' | 'exponent-step'
    params: dict
    state_before: tuple        # (p, which_weight, power)
    state_after: tuple


@dataclass(frozen=True)
class BootstrapPlan:
    source: tuple              # (p, weight descriptor)
    target: tuple
    alpha: float
    d: int
    D1: float
    delta0: float
    delta1: float
    delta2: float
    delta0_target: float
    delta1_target: float
    l0: int
    l1: int
    l3: int
    stages: list

    def validate(self) -> list:
        """Range violations of every stage parameter; empty means valid."""
        bad = []
        for i, st in enumerate(self.stages):
            pr = st.params
            if st.lemma == "weight-power-step":
                if abs(pr["s"]) > pr["delta0"] + 1e-12:
                    bad.append((i, "s outside [-delta0, delta0]"))
                after_power = pr["r"] * (1 + pr["s"])
                if not (-1e-12 <= after_power <= 1 + 1e-12):
                    bad.append((i, "resulting power outside [0, 1]"))
            elif st.lemma == "small-power-bridge":
                if not (0 <= pr["r"] <= pr["delta1"] + 1e-12):
                    bad.append((i, "r outside [0, delta1]"))
                if not (0 <= pr["r_prime"] <= pr["delta1"] + 1e-12):
                    bad.append((i, "r' outside [0, delta1]"))
            elif st.lemma == "exponent-step":
                if abs(pr["s"]) > pr["delta2"] + 1e-12:
                    bad.append((i, "s outside [-delta2, delta2]"))
                if st.state_after[0] < 1 - 1e-12:
                    bad.append((i, "exponent drops below 1"))
            if st.state_before != (None,) and i > 0 \
                    and st.state_before != self.stages[i - 1].state_after:
                bad.append((i, "stage chain is not contiguous"))
        return bad

    def final_state(self) -> tuple:
        if not self.stages:
            return (self.source[0], "target", 1.0)
        return self.stages[-1].state_after

    def to_dict(self) -> dict:
        return {
            "source": {"p": self.source[0], "weight": self.source[1]},
            "target": {"p": self.target[0], "weight": self.target[1]},
            "alpha": self.alpha, "d": self.d, "D1": self.D1,
            "delta0": self.delta0, "delta1": self.delta1, "delta2": self.delta2,
            "delta0_target": self.delta0_target,
            "delta1_target": self.delta1_target,
            "l0": self.l0, "l1": self.l1, "l3": self.l3,
            "stages": [
                {"lemma": st.lemma, "params": st.params,
                 "before": list(st.state_before), "after": list(st.state_after)}
                for st in self.stages],
        }


def _delta0(p: float, d: int, ap: float, alpha: float) -> float:
    r0 = 2.0 ** (-(p + 3)) / (d + 1)
    return min(r0 / (2.0 * ap), alpha / (3.0 * d))


def _delta1(p: float, d: int, ap: float, alpha: float, D1: float) -> float:
    la = math.log(max(ap, 1.0))
    return min(D1 / (p * math.log(2.0) + 2.0 * la),
               alpha / (2.0 * (2 ** d + 1) + 2.0 * d + 4.0 * (2 ** d + 1) * la))


def bootstrap_plan(p: float, w: WeightSpec, p_target: float,
                   w_target: WeightSpec, alpha: float, ap_bounds: dict, *,
                   d: int = 1, D1: float = 0.125) -> BootstrapPlan:
    """Stage list moving stability from (p, w) to (p_target, w_target).

    ap_bounds supplies {'source': A_p(w), 'target': A_{p'}(w')} estimates.
    Stages: peel the source weight power down by factors (1 - delta0) until
    it enters the small-power bridge to zero; walk the exponent from p to p'
    in steps (p'/p)^{1/l1}; bridge back up and climb to the target weight by
    factors (1 + delta0').
    """
    if not (0 < alpha <= 1):
        raise DomainError("alpha must lie in (0, 1]")
    if p < 1 or p_target < 1:
        raise DomainError("exponents must be >= 1")
    if w_target.admissible(p_target) is False:
        raise DomainError(
            f"target weight {w_target.descriptor} not admissible for p'={p_target}")
    if w.admissible(p) is False:
        raise DomainError(f"source weight {w.descriptor} not admissible for p={p}")
    ap_src = float(ap_bounds.get("source", 1.0))
    ap_tgt = float(ap_bounds.get("target", 1.0))
    d0 = _delta0(p, d, ap_src, alpha)
    d1 = _delta1(p, d, ap_src, alpha, D1)
    d2 = alpha / (3.0 * d)
    d0t = _delta0(p_target, d, ap_tgt, alpha)
    d1t = _delta1(p_target, d, ap_tgt, alpha, D1)

    stages = []
    state = (p, "source", 1.0)

    l0 = 0
    if w.kind != "trivial":
        while (1 - d0) ** l0 > d1:
            l0 += 1
        for l in range(l0):
            r = (1 - d0) ** l
            nxt = (p, "source", r * (1 - d0))
            stages.append(BootstrapStage(
                "weight-power-step",
                {"s": -d0, "r": r, "delta0": d0}, state, nxt))
            state = nxt
        nxt = (p, "none", 0.0)
        stages.append(BootstrapStage(
            "small-power-bridge",
            {"r": (1 - d0) ** l0, "r_prime": 0.0, "delta1": d1}, state, nxt))
        state = nxt
    else:
        state = (p, "none", 0.0)

    l1 = 0
    if p_target != p:
        l1 = 1
        while abs((p_target / p) ** (1.0 / l1) - 1.0) > d2:
            l1 += 1
        s = (p_target / p) ** (1.0 / l1) - 1.0
        for l in range(l1):
            cur_p = p * (1 + s) ** l
            nxt = (cur_p * (1 + s), "none", 0.0)
            stages.append(BootstrapStage(
                "exponent-step", {"s": s, "p": cur_p, "delta2": d2}, state, nxt))
            state = nxt
    else:
        state = (p, "none", 0.0)

    l3 = 0
    if w_target.kind != "trivial":
        while (1 + d0t) ** (-l3) > d1t:
            l3 += 1
        nxt = (p_target, "target", (1 + d0t) ** (-l3))
        stages.append(BootstrapStage(
            "small-power-bridge",
            {"r": 0.0, "r_prime": (1 + d0t) ** (-l3), "delta1": d1t}, state, nxt))
        state = nxt
        for l in range(l3):
            r = (1 + d0t) ** (-l3 + l)
            nxt = (p_target, "target", r * (1 + d0t))
            stages.append(BootstrapStage(
                "weight-power-step",
                {"s": d0t, "r": r, "delta0": d0t}, state, nxt))
            state = nxt

    return BootstrapPlan(source=(p, w.descriptor), target=(p_target, w_target.descriptor),
                         alpha=alpha, d=d, D1=D1, delta0=d0, delta1=d1, delta2=d2,
                         delta0_target=d0t, delta1_target=d1t, l0=l0, l1=l1, l3=l3,
                         stages=stages)
