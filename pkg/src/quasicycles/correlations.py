"""Finite-volume estimators for correlations and moments of a patch.

All inner sums are windowed to the 6-sigma support of each Gaussian.  Outer
sums run over fixed chunks (see ``_parallel``) and are reduced with numpy's
pairwise summation over arrays in a fixed order, so results do not depend on
the thread count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._parallel import map_chunks
from .errors import MarginError, NumericContractError
from .gaussian import SUPPORT_SIGMAS, GaussianTestFunction
from .modelset import PointPatch

N_BATCHES = 20


@dataclass(frozen=True)
class TestSum:
    value: complex
    truncation: float


@dataclass(frozen=True)
class Estimate:
    value: complex
    stderr: float
    count: int


@dataclass(frozen=True)
class ReducedMomentReport:
    n: int
    lhs: complex
    rhs: complex
    lhs_stderr: float
    discrepancy: float


@dataclass(frozen=True)
class TranslateGrid:
    """Regular grid of translates inside C_R, kept ``margin`` away from its faces."""

    spacing: float
    margin: float = 0.0

    def __post_init__(self):
        if not self.spacing > 0:
            raise NumericContractError("grid spacing must be positive")
        if self.margin < 0:
            raise NumericContractError("grid margin must be non-negative")

    @classmethod
    def for_functions(cls, functions, spacing=None, extra=0.0):
        """Default grid: spacing 0.25 * min sigma, margin = largest reach."""
        functions = list(functions)
        if spacing is None:
            spacing = 0.25 * min(f.sigma for f in functions)
        return cls(spacing, max(f.reach for f in functions) + extra)

    def axis(self, R):
        length = R - 2 * self.margin
        if length <= 0:
            return np.zeros(0)
        count = int(math.floor(length / self.spacing + 1e-9))
        return (np.arange(count) + 0.5 - count / 2) * self.spacing

    def points(self, R, d):
        ax = self.axis(R)
        if d == 1:
            return ax[:, None]
        mesh = np.meshgrid(*([ax] * d), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, d)


def _neighbour_pairs(points, queries, radius):
    """(iq, ip) with |points[ip] - queries[iq]|_inf <= radius, grouped by iq."""
    if points.shape[1] == 1:
        x = points[:, 0]
        q = queries[:, 0]
        lo = np.searchsorted(x, q - radius, side="left")
        hi = np.searchsorted(x, q + radius, side="right")
        counts = hi - lo
        iq = np.repeat(np.arange(len(q)), counts)
        start = np.repeat(lo - (np.cumsum(counts) - counts), counts)
        ip = start + np.arange(counts.sum())
        return iq, ip
    tree = cKDTree(points)
    hits = tree.query_ball_point(queries, r=radius, p=np.inf, return_sorted=True)
    counts = np.fromiter((len(h) for h in hits), dtype=np.int64, count=len(hits))
    iq = np.repeat(np.arange(len(queries)), counts)
    ip = np.fromiter((j for h in hits for j in h), dtype=np.int64, count=int(counts.sum()))
    return iq, ip


def local_sums(patch: PointPatch, h: GaussianTestFunction, queries, weights=None):
    """S(q) = sum over patch points x of w(x) h(x - q), for each row q of ``queries``."""
    queries = np.asarray(queries, dtype=float)
    pts = patch.points
    shift = np.asarray(h.center)

    def chunk(a, b):
        q = queries[a:b]
        iq, ip = _neighbour_pairs(pts, q + shift, h.support_radius)
        vals = h(pts[ip] - q[iq])
        if weights is not None:
            vals = vals * weights[ip]
        re = np.bincount(iq, weights=vals.real, minlength=b - a)
        im = np.bincount(iq, weights=vals.imag, minlength=b - a)
        return re + 1j * im

    return map_chunks(chunk, len(queries))


def _batch_stderr(values, scale=1.0):
    if len(values) < 2 * N_BATCHES:
        if len(values) < 2:
            return 0.0
        return float(scale * np.std(values) / math.sqrt(len(values)))
    means = np.array([np.mean(b) for b in np.array_split(values, N_BATCHES)])
    return float(scale * np.std(means, ddof=1) / math.sqrt(N_BATCHES))


def eval_test_sum(patch: PointPatch, h: GaussianTestFunction, origin_shift=None) -> TestSum:
    """N_h(-s + Lambda) restricted to the patch, plus a bound on the missing tail."""
    d = patch.d
    s = np.zeros(d) if origin_shift is None else np.atleast_1d(np.asarray(origin_shift, float))
    if len(patch) == 0 or h.amplitude == 0:
        value = 0j
    else:
        value = complex(np.sum(h(patch.points - s)))
    delta = patch.R / 2 - float(np.max(np.abs(s + np.asarray(h.center))))
    return TestSum(value, _gaussian_tail(abs(h.amplitude), h.sigma, delta, patch.r_min, d))


def _gaussian_tail(amp, sigma, delta, r, d):
    if amp == 0:
        return 0.0
    delta = max(delta, 0.0)
    total = 0.0
    for j in range(100000):
        s = delta + j * r
        term = (2 * (s + r) / r + 2) ** d * math.exp(-s * s / (2 * sigma * sigma))
        total += term
        if s > delta + 10 * sigma and term < 1e-300:
            break
    return amp * total


def _check_fits(patch, reach):
    if not reach < patch.R / 4:
        raise MarginError(f"test-function reach {reach:.4g} does not fit in C_R with R={patch.R}")


def npoint_correlation(patch: PointPatch, gs) -> Estimate:
    """Truncated (n+1)-point correlation for the separable function g_1 x ... x g_n.

    (1/vol C_R) sum_x prod_i sum_y g_i(y - x), with x, y in the patch.
    """
    gs = list(gs)
    if not gs:
        raise NumericContractError("need at least one test function")
    _check_fits(patch, max(g.reach for g in gs))
    prod = _pointwise_products(patch, gs)
    scale = len(patch) / patch.volume
    value = complex(np.sum(prod)) / patch.volume
    return Estimate(value, _batch_stderr(prod, scale), len(patch))


def _pointwise_products(patch, gs):
    prod = np.ones(len(patch), dtype=complex)
    for g in gs:
        prod *= local_sums(patch, g, patch.points)
    return prod


def _grid(patch, grid, reach, sigma_max):
    if grid.margin < SUPPORT_SIGMAS * sigma_max - 1e-12 or grid.margin < reach - 1e-12:
        raise MarginError(
            f"grid margin {grid.margin} below required {max(reach, SUPPORT_SIGMAS * sigma_max):.4g}")
    t = grid.points(patch.R, patch.d)
    if len(t) == 0:
        raise NumericContractError("translate grid is empty")
    return t


def birkhoff_moment(patch: PointPatch, hs, grid: TranslateGrid) -> Estimate:
    """Average over grid translates t of prod_i N_{h_i}(-t + Lambda)."""
    hs = list(hs)
    if not hs:
        raise NumericContractError("need at least one test function")
    t = _grid(patch, grid, max(h.reach for h in hs), max(h.sigma for h in hs))
    prod = np.ones(len(t), dtype=complex)
    for h in hs:
        if h.amplitude == 0:
            return Estimate(0j, 0.0, len(t))
        prod *= local_sums(patch, h, t)
    return Estimate(complex(np.mean(prod)), _batch_stderr(prod), len(t))


def verify_reduced_moment_identity(patch: PointPatch, g: GaussianTestFunction, hs,
                                   grid: TranslateGrid) -> ReducedMomentReport:
    """Compare mu_n(g (T_x h_1) ... ) with (int g) * gamma^(n)(h_1, ...).

    The left side is a Birkhoff average over translates of
    sum_x g(x - t) prod_i sum_y h_i(y - x); the right side uses the truncated
    correlation of the same patch.
    """
    hs = list(hs)
    if not hs:
        raise NumericContractError("reduced moments need n >= 2")
    inner = max(h.reach for h in hs)
    t = _grid(patch, grid, g.reach + inner, max([g.sigma] + [h.sigma for h in hs]))
    _check_fits(patch, inner)
    prod = _pointwise_products(patch, hs)
    if g.amplitude == 0:
        lhs_vals = np.zeros(len(t), dtype=complex)
    else:
        lhs_vals = local_sums(patch, g, t, weights=prod)
    lhs = complex(np.mean(lhs_vals))
    rhs = g.integral() * complex(np.sum(prod)) / patch.volume
    scale = max(abs(rhs), abs(lhs))
    disc = 0.0 if scale == 0 else abs(lhs - rhs) / scale
    return ReducedMomentReport(len(hs) + 1, lhs, rhs, _batch_stderr(lhs_vals), disc)
