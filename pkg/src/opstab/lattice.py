"""Finitely supported lattice sequences: Beurling-type norms, convolution,
weighted p-norms, and the weighted matrix-boundedness check.

The Beurling norm of a sequence a on Z^d is

    |a|_B = sum over m in Z^d of  sup over |k| >= |m| of |a(k)|     (sup-norm),

computed exactly on the support. A matrix enters through its envelope
sup over |k - k'| >= |m| of |a(k, k')|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LatticeSequence", "WeightedVector", "beurling_norm", "convolve",
    "weighted_lp_norm", "matrix_beurling_norm", "schur_weighted_bound_check",
    "SchurReport",
]


@dataclass(frozen=True)
class LatticeSequence:
    """Values a(k) for |k|_inf <= R on Z^d, stored as a (2R+1)^d array."""

    d: int
    R: int
    values: np.ndarray

    def __post_init__(self):
        expect = (2 * self.R + 1,) * self.d
        if self.values.shape != expect:
            raise ValueError(f"values shape {self.values.shape} != {expect}")

    @classmethod
    def delta(cls, d: int = 1):
        v = np.zeros((1,) * d)
        v[(0,) * d] = 1.0
        return cls(d, 0, v)

    @classmethod
    def from_values(cls, values, d: int = 1):
        values = np.asarray(values, dtype=float)
        if values.ndim != d:
            raise ValueError(f"need a {d}-dim array")
        side = values.shape[0]
        if side % 2 == 0 or any(s != side for s in values.shape):
            raise ValueError("values must be a (2R+1)^d cube")
        return cls(d, (side - 1) // 2, values)

    def __getitem__(self, k):
        if self.d == 1:
            k = (k,) if np.isscalar(k) else tuple(k)
        idx = tuple(ki + self.R for ki in k)
        if any(i < 0 or i >= 2 * self.R + 1 for i in idx):
            return 0.0
        return float(self.values[idx])

    def radial_indices(self) -> np.ndarray:
        ax = np.abs(np.arange(-self.R, self.R + 1))
        if self.d == 1:
            return ax
        grids = np.meshgrid(*([ax] * self.d), indexing="ij")
        return np.maximum.reduce(grids)


def shell_count(d: int, r: int) -> int:
    """Number of lattice points with |k|_inf = r."""
    if r == 0:
        return 1
    return (2 * r + 1) ** d - (2 * r - 1) ** d


def beurling_norm(a: LatticeSequence) -> float:
    radii = a.radial_indices()
    mags = np.abs(a.values)
    rad_max = np.zeros(a.R + 1)
    np.maximum.at(rad_max, radii.ravel(), mags.ravel())
    envelope = np.maximum.accumulate(rad_max[::-1])[::-1]  # sup over |k| >= r
    counts = np.array([shell_count(a.d, r) for r in range(a.R + 1)], dtype=float)
    return float(np.dot(counts, envelope))


def convolve(a: LatticeSequence, b: LatticeSequence) -> LatticeSequence:
    if a.d != b.d:
        raise ValueError("dimension mismatch")
    from scipy.signal import convolve as sconv
    out = sconv(a.values, b.values, mode="full", method="direct")
    return LatticeSequence(a.d, a.R + b.R, out)


def weighted_lp_norm(values, weights, p: float) -> float:
    """(sum |c|^p w)^(1/p) on the common finite support."""
    if p < 1:
        raise ValueError("p must be >= 1")
    values = np.asarray(values)
    weights = np.asarray(weights, dtype=float)
    return float(np.sum(np.abs(values) ** p * weights) ** (1.0 / p))


@dataclass(frozen=True)
class WeightedVector:
    values: np.ndarray
    weights: np.ndarray
    p: float

    def norm(self) -> float:
        return weighted_lp_norm(self.values, self.weights, self.p)


def matrix_beurling_norm(A: np.ndarray, ilattice: np.ndarray | None = None) -> float:
    """Envelope norm of a matrix indexed by lattice points.

    ``ilattice`` holds the integer lattice point of each row/column (shape
    (G, d)); omitted means consecutive integers on Z^1.
    """
    A = np.asarray(A)
    G = A.shape[0]
    if ilattice is None:
        ilattice = np.arange(G)[:, None]
    ilattice = np.asarray(ilattice)
    if ilattice.ndim == 1:
        ilattice = ilattice[:, None]
    sep = np.max(np.abs(ilattice[:, None, :] - ilattice[None, :, :]), axis=-1)
    r_max = int(sep.max())
    rad_max = np.zeros(r_max + 1)
    np.maximum.at(rad_max, sep.ravel(), np.abs(A).ravel())
    envelope = np.maximum.accumulate(rad_max[::-1])[::-1]
    d = ilattice.shape[1]
    counts = np.array([shell_count(d, r) for r in range(r_max + 1)], dtype=float)
    return float(np.dot(counts, envelope))


@dataclass(frozen=True)
class SchurReport:
    p: float
    beurling: float
    ap_value: float
    quotients: np.ndarray     # per probe: |Ac| / ((A_p)^{1/p} |A|_B |c|), weighted norms
    c_emp: float

    @property
    def worst(self) -> float:
        return float(np.max(self.quotients))


def schur_weighted_bound_check(A: np.ndarray, weights, p: float, probes,
                               ap_value: float,
                               ilattice: np.ndarray | None = None) -> SchurReport:
    """Measure |Ac|_{p,w} / ((A_p)^{1/p} |A|_B |c|_{p,w}) over the probes."""
    A = np.asarray(A)
    weights = np.asarray(weights, dtype=float)
    nb = matrix_beurling_norm(A, ilattice)
    quots = []
    for c in probes:
        c = np.asarray(c)
        denom = ap_value ** (1.0 / p) * nb * weighted_lp_norm(c, weights, p)
        if denom == 0:
            continue
        quots.append(weighted_lp_norm(A @ c, weights, p) / denom)
    quots = np.asarray(quots)
    return SchurReport(p=p, beurling=nb, ap_value=ap_value, quotients=quots,
                       c_emp=float(np.max(quots)) if quots.size else 0.0)
