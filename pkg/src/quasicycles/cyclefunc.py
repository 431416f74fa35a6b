"""The cycle function a on zero-sum tuples of Bragg vectors.

Two estimators are provided.  ``estimate_a`` multiplies volume-averaged
exponential sums from a single patch.  ``cyclefunction_from_moments`` reads a
off a Birkhoff moment of test functions whose transforms are narrow bumps at
the cycle entries.  ``moment_from_cyclefunction`` goes the other way and
rebuilds moments from the diffraction and a.
"""
from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .correlations import TranslateGrid, birkhoff_moment
from .cycles import Cycle, canonical_form, concat, decompose, inverse, sum_as_bragg
from .errors import (LeakageError, MissingValueError, NotBraggError, NumericContractError,
                     ResourceError, TailBudgetError)
from .gaussian import bump_at
from .modelset import PointPatch
from .spectrum import SpectrumTable, bombieri_taylor_many

MAX_PEAKS = 200
MAX_ORDER = 5
LEAKAGE_TOL = 0.1
WEIGHT_FLOOR = 1e-15


@dataclass(frozen=True)
class CycleFunctionEstimate:
    cycle: tuple  # canonical entries
    value: complex
    raw_modulus: float
    R: float
    phase_error: float
    method: str = "exponential-sums"

    def to_dict(self):
        return {"cycle": [list(k) for k in self.cycle], "re": self.value.real,
                "im": self.value.imag, "raw_modulus": self.raw_modulus,
                "phase_error": self.phase_error, "R": self.R, "method": self.method}


def _as_cycle(c):
    return c if isinstance(c, Cycle) else Cycle(tuple(c))


def _unit(z):
    return z / abs(z) if z != 0 else complex(1.0)


class AmplitudeCache:
    """Exponential sums of one patch at table vectors, computed on demand."""

    def __init__(self, patch: PointPatch, table: SpectrumTable):
        if patch.scheme != table.scheme or patch.window != table.window:
            raise NumericContractError("patch and table come from different model sets")
        self.patch = patch
        self.table = table
        self._values: dict = {}

    def __call__(self, keys):
        missing = [k for k in dict.fromkeys(keys) if k not in self._values]
        if missing:
            phys = self.table.scheme.embed_many(np.array(missing, dtype=np.int64))[:, : self.table.scheme.d]
            for k, f in zip(missing, bombieri_taylor_many(self.patch, phys)):
                self._values[k] = complex(f)
        return [self._values[k] for k in keys]


def _entry_error(f, g, patch):
    floor = 2 * patch.d / patch.R
    return max(abs(abs(f) - g), floor) / g


def estimate_a(patch: PointPatch, cycle, table: SpectrumTable, cache=None) -> CycleFunctionEstimate:
    """a(k_1,...,k_n) = normalize(prod f_k / prod sqrt(gamma^(k))) from one patch.

    The product runs over the sorted entry list, so the value is independent
    of the entry order.  The phase error adds, per entry, the larger of the
    modulus mismatch ||f_k| - sqrt(gamma^(k))| and a boundary term 2d/R,
    relative to sqrt(gamma^(k)).
    """
    c = _as_cycle(cycle)
    cache = cache or AmplitudeCache(patch, table)
    if cache.patch.identity != patch.identity:
        raise NumericContractError("amplitude cache belongs to a different patch")
    keys = sorted(table.canonical(k) for k in c.entries)
    for k in keys:
        if not table.is_bragg(k):
            raise NotBraggError(f"{k} is not a Bragg peak of the table")
    prod = complex(1.0)
    err = 0.0
    for k, f in zip(keys, cache(keys)):
        g = math.sqrt(table.intensity_of(k))
        prod *= f / g
        err += _entry_error(f, g, patch)
    return CycleFunctionEstimate(canonical_form(keys), _unit(prod), abs(prod), patch.R, err)


class CycleFunction:
    """a on all cycles: direct estimates up to length 2n+1, decomposition beyond.

    Longer cycles are factored with ``decompose`` and the factor values are
    multiplied, which is how the short cycles determine all others.  Values
    are cached by canonical form.
    """

    def __init__(self, patch: PointPatch, table: SpectrumTable, n: int = 1,
                 sum_oracle=None, direct_max: int | None = None):
        self.patch = patch
        self.table = table
        self.n = n
        self.direct_max = 2 * n + 1 if direct_max is None else direct_max
        self.sum_oracle = sum_oracle or (lambda target, m: sum_as_bragg(table, target, m))
        self.amplitudes = AmplitudeCache(patch, table)
        self._cache: dict = {}

    def direct(self, cycle) -> CycleFunctionEstimate:
        return estimate_a(self.patch, cycle, self.table, self.amplitudes)

    def __call__(self, cycle) -> CycleFunctionEstimate:
        c = _as_cycle(cycle)
        key = canonical_form([self.table.canonical(k) for k in c.entries])
        if key not in self._cache:
            if len(key) <= self.direct_max:
                self._cache[key] = self.direct(key)
            else:
                self._cache[key] = self.extend(Cycle(key))
        return self._cache[key]

    def batch(self, coords, rows):
        """Values and errors for many multisets of ``coords`` rows at once.

        Equivalent to calling the instance on each row: zeros and +-pairs are
        cancelled, short cycles use the exponential-sum product directly and
        longer ones fall back to decomposition.
        """
        keys = [tuple(int(x) for x in c) for c in coords]
        for k in keys:
            if not self.table.is_bragg(k):
                raise NotBraggError(f"{k} is not a Bragg peak of the table")
        f = np.array(self.amplitudes(keys))
        g = np.sqrt([self.table.intensity_of(k) for k in keys])
        u = f / g
        err = np.array([_entry_error(a, b, self.patch) for a, b in zip(f, g)])
        index = {k: i for i, k in enumerate(keys)}
        neg = np.array([index.get(tuple(-x for x in k), -1) for k in keys])
        rows = np.asarray(rows)
        alive = np.array([any(k) for k in keys])[rows]
        width = rows.shape[1]
        for i in range(width):
            partner = neg[rows[:, i]]
            for j in range(i + 1, width):
                hit = alive[:, i] & alive[:, j] & (rows[:, j] == partner)
                alive[hit, i] = False
                alive[hit, j] = False
        prod = np.prod(np.where(alive, u[rows], 1.0), axis=1)
        values = np.where(prod != 0, prod / np.where(prod != 0, np.abs(prod), 1.0), 1.0)
        errors = np.sum(np.where(alive, err[rows], 0.0), axis=1)
        for r in np.flatnonzero(alive.sum(axis=1) > self.direct_max):
            est = self([keys[i] for i in rows[r]])
            values[r], errors[r] = est.value, est.phase_error
        return values.astype(complex), errors

    def extend(self, c: Cycle) -> CycleFunctionEstimate:
        parts = [self(f) for f in decompose(c, self.n, self.sum_oracle)]
        value = complex(1.0)
        raw = 1.0
        for p in parts:
            value *= p.value
            raw *= p.raw_modulus
        return CycleFunctionEstimate(c.canonical, _unit(value), raw, self.patch.R,
                                     sum(p.phase_error for p in parts), "decomposition")


# -- algebraic checks ---------------------------------------------------------

@dataclass(frozen=True)
class PropertyReport:
    zero: float
    pair: float
    homomorphism: float
    permutation: float
    insertion: float
    reflection: float
    max_phase_error: float
    details: dict = field(default_factory=dict, repr=False)


def check_properties(patch: PointPatch, table: SpectrumTable, cycles) -> PropertyReport:
    """Residuals of the algebraic rules for a over the given cycles.

    zero: |a(0) - 1|; pair: max |a(k,-k) - 1| over entries; homomorphism:
    |a(c1)a(c2) - a(c1 c2)| over consecutive pairs; permutation: reversed and
    rotated entry order; insertion: a pair (k,-k) of the strongest peak
    inserted in the middle; reflection: |a(-c) - conj a(c)|.
    """
    cycles = [_as_cycle(c) for c in cycles]
    if not cycles:
        raise NumericContractError("no cycles to check")
    cache = AmplitudeCache(patch, table)

    def a(c):
        return estimate_a(patch, c, table, cache)

    dim = table.coords.shape[1]
    zero = abs(a(Cycle(((0,) * dim,))).value - 1)
    ins = table.bragg_coords()[1] if len(table.bragg_coords()) > 1 else (0,) * dim
    res = {"pair": [], "homomorphism": [], "permutation": [], "insertion": [], "reflection": []}
    errs = []
    for i, c in enumerate(cycles):
        est = a(c)
        errs.append(est.phase_error)
        for k in c.entries:
            res["pair"].append(abs(a(Cycle((k, tuple(-x for x in k)))).value - 1))
        nxt = cycles[(i + 1) % len(cycles)]
        res["homomorphism"].append(abs(est.value * a(nxt).value - a(concat(c, nxt)).value))
        e = c.entries
        perm = max(abs(a(Cycle(e[::-1])).value - est.value),
                   abs(a(Cycle(e[1:] + e[:1])).value - est.value))
        res["permutation"].append(perm)
        mid = len(e) // 2
        with_pair = e[:mid] + (ins, tuple(-x for x in ins)) + e[mid:]
        res["insertion"].append(abs(a(Cycle(with_pair)).value - est.value))
        res["reflection"].append(abs(a(inverse(c)).value - est.value.conjugate()))
    return PropertyReport(zero, *(max(res[k]) for k in
                                  ("pair", "homomorphism", "permutation", "insertion", "reflection")),
                          max(errs), res)


# -- moments from (gamma^, a) -------------------------------------------------

@dataclass(frozen=True)
class SpectralMoment:
    value: complex
    tail_bound: float
    a_error: float
    n_peaks: int
    n_tuples: int

    @property
    def error(self):
        return self.tail_bound + self.a_error


def _a_getter(a_values):
    if isinstance(a_values, Mapping):
        def get(entries):
            key = canonical_form(entries)
            if not key:
                return complex(1.0), 0.0
            if key in a_values:
                v = a_values[key]
            elif Cycle(key) in a_values:
                v = a_values[Cycle(key)]
            else:
                raise MissingValueError(f"no a-value for cycle {key}")
            if isinstance(v, CycleFunctionEstimate):
                return v.value, v.phase_error
            return complex(v), 0.0
        return get

    def get(entries):
        key = canonical_form(entries)
        if not key:
            return complex(1.0), 0.0
        v = a_values(Cycle(key))
        if isinstance(v, CycleFunctionEstimate):
            return v.value, v.phase_error
        return complex(v), 0.0
    if isinstance(a_values, CycleFunction):
        get.batch = a_values.batch
    return get


def _peak_set(table, ft_abs, max_peaks):
    """Strongest Bragg rows by max_i |h_i^(k)| sqrt(gamma^(k)), closed under negation.

    Rows whose weight is below WEIGHT_FLOOR times the largest weight are left
    to the tail estimate.
    """
    bragg = table.bragg_indices()
    w = ft_abs[:, bragg].max(axis=0) * np.sqrt(table.intensity[bragg])
    keep = w > WEIGHT_FLOOR * w.max(initial=0.0)
    order = bragg[keep][np.argsort(-w[keep], kind="stable")]
    chosen: dict = {}
    zero = table.index((0,) * table.coords.shape[1])
    if zero is not None:
        chosen[zero] = None
    for i in order:
        if len(chosen) + 2 > max_peaks:
            break
        if i in chosen:
            continue
        chosen[int(i)] = None
        j = table.index(tuple(-table.coords[i]))
        if j is not None:
            chosen[j] = None
    return np.array(list(chosen), dtype=np.int64)


def _zero_sum_tuples(coords, n):
    """All ordered n-tuples of row indices of ``coords`` whose rows sum to zero."""
    p, dim = coords.shape
    shift = n * int(np.abs(coords).max(initial=0)) + 1
    base = 2 * shift + 1
    if dim * math.log(base) > math.log(2**62):
        raise ResourceError("coordinates too large for linear key encoding")
    powers = base ** np.arange(dim, dtype=np.int64)
    keys = coords.astype(np.int64) @ powers
    a = n // 2
    b = n - a
    if p**b > 2 * 10**7:
        raise ResourceError(f"{p}^{b} partial sums exceed the enumeration cap")

    def half(m):
        if m == 0:
            return np.zeros((1, 0), dtype=np.int64), np.zeros(1, dtype=np.int64)
        idx = np.indices((p,) * m).reshape(m, -1).T
        return idx, keys[idx].sum(axis=1)

    li, lk = half(a)
    ri, rk = half(b)
    order = np.argsort(rk, kind="stable")
    ri, rk = ri[order], rk[order]
    lo = np.searchsorted(rk, -lk, side="left")
    hi = np.searchsorted(rk, -lk, side="right")
    counts = hi - lo
    left_rows = np.repeat(np.arange(len(lk)), counts)
    right_rows = np.repeat(lo - (np.cumsum(counts) - counts), counts) + np.arange(counts.sum())
    return np.hstack([li[left_rows], ri[right_rows]])


def _spectral_sum(table, peaks, ft_vals, get_a, n):
    coords = table.coords[peaks]
    tuples = _zero_sum_tuples(coords, n)
    g = np.sqrt(table.intensity[peaks])
    terms = np.ones(len(tuples), dtype=complex)
    for j in range(n):
        terms *= ft_vals[j, peaks][tuples[:, j]] * g[tuples[:, j]]
    if len(tuples) == 0:
        return 0j, 0.0, 0
    keyrows = np.sort(tuples, axis=1)
    codes = keyrows @ (len(peaks) ** np.arange(n, dtype=np.int64))
    _, first, inverse_idx = np.unique(codes, return_index=True, return_inverse=True)
    uniq = keyrows[first]
    if hasattr(get_a, "batch"):
        avals, aerr = get_a.batch(coords, uniq)
    else:
        avals = np.empty(len(uniq), dtype=complex)
        aerr = np.empty(len(uniq))
        for u, row in enumerate(uniq):
            entries = [tuple(int(x) for x in coords[i]) for i in row]
            avals[u], aerr[u] = get_a(entries)
    inverse_idx = inverse_idx.reshape(-1)
    value = complex(np.sum(terms * avals[inverse_idx]))
    a_error = float(np.sum(np.abs(terms) * aerr[inverse_idx]))
    return value, a_error, len(tuples)


def _excluded_l2(table, hs, ft_abs, peaks):
    """Per test function: sqrt of sum |h^|^2 gamma^ over Bragg-table rows outside
    the peak set plus an estimate for vectors outside the table."""
    mask = np.ones(len(table), dtype=bool)
    mask[peaks] = False
    w = table.window
    star_frac = 2 * (w.boundary_measure / (2 * math.pi)) ** 2 / max(table.star_cut, 1e-300)
    out = []
    for j, h in enumerate(hs):
        inside = float(np.sum(ft_abs[j, mask] ** 2 * table.intensity[mask]))
        beyond = (h.l2_norm_sq() * star_frac * w.e / table.scheme.covolume
                  + h.ft_tail_l2_sq(table.k_max) * table.density)
        out.append(math.sqrt(inside + beyond))
    return np.array(out)


def moment_from_cyclefunction(table: SpectrumTable, a_values, hs, tail_budget=math.inf,
                              max_peaks: int = MAX_PEAKS) -> SpectralMoment:
    """mu_n(h_1..h_n) = sum over zero-sum tuples of prod h_i^(k_i) a(k) prod sqrt(gamma^(k_i)).

    The sum runs over the ``max_peaks`` Bragg vectors with the largest
    weight max_i |h_i^(k)| sqrt(gamma^(k)), closed under negation.  Zero-sum
    tuples are found exactly (integer keys, meet in the middle).

    The tail estimate is the larger of
      * a Cauchy-Schwarz/Young estimate from the excluded l2 mass of each
        slot, with the remaining slots measured in l2 and l1 over the peak set;
      * the change of the sum when the peak set is halved.
    ``a_values`` is a mapping from canonical cycles or a callable such as a
    ``CycleFunction``.
    """
    hs = list(hs)
    n = len(hs)
    if not 1 <= n <= MAX_ORDER:
        raise NumericContractError(f"moment order must be between 1 and {MAX_ORDER}")
    get_a = _a_getter(a_values)
    ft_vals = np.array([h.ft(table.k_phys) for h in hs]).reshape(n, len(table))
    ft_abs = np.abs(ft_vals)
    peaks = _peak_set(table, ft_abs, max_peaks)
    value, a_err, count = _spectral_sum(table, peaks, ft_vals, get_a, n)
    half = _peak_set(table, ft_abs, max(3, len(peaks) // 2))
    half_value = _spectral_sum(table, half, ft_vals, get_a, n)[0] if len(half) < len(peaks) else value
    g = ft_abs[:, peaks] * np.sqrt(table.intensity[peaks])
    l1 = g.sum(axis=1)
    excl = _excluded_l2(table, hs, ft_abs, peaks)
    l2 = np.sqrt((g**2).sum(axis=1) + excl**2)
    if n == 1:
        # the only zero-sum 1-tuple is k = 0, which is always in the peak set
        young = 0.0
    else:
        young = 0.0
        for j in range(n):
            others = [i for i in range(n) if i != j]
            big = max(others, key=lambda i: l2[i])
            young += excl[j] * l2[big] * float(np.prod([l1[i] for i in others if i != big]))
    tail = float(max(young, abs(value - half_value)))
    if tail > tail_budget:
        raise TailBudgetError(f"tail bound {tail:.3g} exceeds budget {tail_budget:.3g}")
    return SpectralMoment(value, tail, a_err, len(peaks), count)


# -- a from moments -----------------------------------------------------------

def cyclefunction_from_moments(patch: PointPatch, cycle, table: SpectrumTable, sigma_k: float,
                               grid: TranslateGrid | None = None,
                               leakage_tol: float = LEAKAGE_TOL) -> CycleFunctionEstimate:
    """Read a(k_1..k_n) off the Birkhoff moment of bumps centred at the k_j.

    h_j has transform exp(-|k - k_j|^2 / (2 sigma_k^2)).  The moment divided by
    prod sqrt(gamma^(k_j)) is normalized to the unit circle.  The leakage
    bound is sum_j sum_{k' != k_j} |h_j^(k')| sqrt(gamma^(k')) / sqrt(gamma^(k_j))
    over the table's Bragg peaks; it raises LeakageError above ``leakage_tol``.
    """
    c = _as_cycle(cycle)
    entries = [table.canonical(k) for k in c.entries]
    if not entries:
        entries = [(0,) * table.coords.shape[1]]
    for k in entries:
        if not table.is_bragg(k):
            raise NotBraggError(f"{k} is not a Bragg peak of the table")
    idx = [table.index(k) for k in entries]
    hs = [bump_at(table.k_phys[i], sigma_k) for i in idx]
    bragg = table.bragg_indices()
    sq = np.sqrt(table.intensity)
    leak = 0.0
    for h, i in zip(hs, idx):
        amp = np.abs(h.ft(table.k_phys[bragg])) * sq[bragg]
        leak += float(np.sum(amp[bragg != i])) / sq[i]
    if leak > leakage_tol:
        raise LeakageError(f"leakage bound {leak:.3g} exceeds {leakage_tol}; reduce sigma_k or enlarge R")
    grid = grid or TranslateGrid.for_functions(hs)
    mom = birkhoff_moment(patch, hs, grid)
    norm = float(np.prod(sq[idx]))
    raw = mom.value / norm
    rel = mom.stderr / max(abs(mom.value), 1e-300)
    return CycleFunctionEstimate(canonical_form(entries), _unit(raw), abs(raw), patch.R,
                                 leak + 3 * rel, "moments")


# -- end-to-end reconstruction ------------------------------------------------

@dataclass(frozen=True)
class MomentComparison:
    order: int
    spec_hash: str
    spectral: complex
    birkhoff: complex
    birkhoff_stderr: float
    tail_bound: float
    a_error: float

    @property
    def residual(self):
        return abs(self.spectral - self.birkhoff)

    @property
    def relative_residual(self):
        return self.residual / max(abs(self.birkhoff), 1e-300)

    @property
    def covered(self):
        return self.residual <= self.tail_bound + self.a_error + 3 * self.birkhoff_stderr


@dataclass(frozen=True)
class ReconstructionReport:
    n: int
    n_direct: int
    comparisons: list
    extension: list  # (canonical cycle, direct value, extended value, residual, combined error)

    @property
    def max_relative_residual(self):
        return max((c.relative_residual for c in self.comparisons), default=0.0)

    @property
    def max_extension_residual(self):
        return max((e[3] for e in self.extension), default=0.0)


def _short_cycles(table, peaks, max_len):
    """Canonical zero-sum cycles of length 2..max_len over the given peak rows."""
    coords = table.coords[peaks]
    out = set()
    for m in range(2, max_len + 1):
        if len(peaks) ** (m // 2 + (m - m // 2)) > 10**7:
            break
        for row in _zero_sum_tuples(coords, m):
            key = canonical_form([tuple(int(x) for x in coords[i]) for i in row])
            if len(key) == m:
                out.add(key)
    return sorted(out, key=lambda k: (len(k), k))


def reconstruct_pipeline(table: SpectrumTable, patch: PointPatch, n: int | None,
                         test_moments, grid: TranslateGrid | None = None,
                         direct_peaks: int = 10, extension_cycles: int = 5,
                         max_peaks: int = MAX_PEAKS, tail_budget=math.inf) -> ReconstructionReport:
    """Rebuild higher moments from gamma^ and short-cycle values of a.

    1. estimate a on canonical cycles of length <= 2n+1 over the strongest
       ``direct_peaks`` peaks with |k_phys| <= k_max / (2(n+1));
    2. extend a to longer cycles by decomposition (``CycleFunction``);
    3. compute each requested moment from (gamma^, a);
    4. compare with direct Birkhoff averages on the same patch.
    With n=None, n is 1 when the table has no extinctions and 2 otherwise.
    """
    from .gaussian import spec_hash

    if n is None:
        n = 1 if len(table.extinctions()) == 0 else 2
    cf = CycleFunction(patch, table, n)
    # keep block sums of n+1 peaks well inside the table
    top = table.top_bragg(direct_peaks, k_phys_max=table.k_max / (2 * (n + 1)))
    closed = sorted({*top, *(table.index(tuple(-table.coords[i])) for i in top)})
    short = _short_cycles(table, np.array(closed, dtype=np.int64), 2 * n + 1)
    for key in short:
        cf(key)
    comparisons = []
    for hs in test_moments:
        hs = list(hs)
        spec = moment_from_cyclefunction(table, cf, hs, tail_budget, max_peaks)
        g = grid or TranslateGrid.for_functions(hs)
        direct = birkhoff_moment(patch, hs, g)
        comparisons.append(MomentComparison(len(hs), spec_hash(hs), spec.value, direct.value,
                                            direct.stderr, spec.tail_bound, spec.a_error))
    extension = []
    long = _long_cycles(table, np.array(closed, dtype=np.int64), 2 * n + 3, extension_cycles)
    for key in long:
        direct = cf.direct(key)
        ext = cf.extend(Cycle(key))
        extension.append((key, direct.value, ext.value, abs(direct.value - ext.value),
                          direct.phase_error + ext.phase_error))
    return ReconstructionReport(n, len(short), comparisons, extension)


def _long_cycles(table, peaks, length, count, seed=0, attempts=2000):
    """Canonical cycles of exactly ``length`` entries: length-1 peaks drawn with
    a seeded PCG64 generator, closed by a Bragg vector."""
    coords = [tuple(int(x) for x in r) for r in table.coords[peaks]]
    nonzero = [r for r in coords if any(r)]
    rng = np.random.Generator(np.random.PCG64(seed))
    out, seen = [], set()
    for _ in range(attempts):
        if len(out) >= count or not nonzero:
            break
        entries = [nonzero[i] for i in rng.integers(len(nonzero), size=length - 1)]
        closing = tuple(-x for x in np.sum(entries, axis=0).tolist())
        if not table.is_bragg(closing):
            continue
        key = canonical_form(entries + [closing])
        if len(key) == length and key not in seen:
            seen.add(key)
            out.append(key)
    return out
