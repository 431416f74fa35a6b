"""Bragg amplitudes, model-set intensities and the enumerated Fourier module."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._lattice import lattice_points_in_box
from ._parallel import map_chunks
from .errors import NumericContractError
from .modelset import PointPatch
from .scheme import FOURIER, CutProjectScheme, ModuleVector
from .window import Window, window_ft

BRAGG = "bragg"
EXTINCTION = "extinction"
BELOW = "below-threshold"

EPS_EXT = 1e-12
EPS_BRAGG_REL = 1e-6
RECORD_CAP = 2 * 10**6
_K_CHUNK = 64


def _coords_of(k):
    if isinstance(k, ModuleVector):
        if k.side != FOURIER:
            raise NumericContractError("expected a Fourier-side module vector")
        return k.coords
    return tuple(int(c) for c in k)


# -- amplitudes ---------------------------------------------------------------

def bombieri_taylor_many(patch: PointPatch, ks) -> np.ndarray:
    """(1/vol C_R) sum_x exp(2 pi i k.x) for every row k of ``ks``.

    Cosine and sine parts are summed separately so that the value at -k is
    the exact conjugate of the value at k.
    """
    ks = np.asarray(ks, dtype=float)
    if ks.ndim == 1:
        ks = ks[:, None] if patch.d == 1 else ks[None, :]
    if ks.shape[1] != patch.d:
        raise NumericContractError("wave vectors must have the physical dimension")
    x = patch.points
    vol = patch.volume

    def chunk(a, b):
        phase = 2 * math.pi * (ks[a:b] @ x.T)
        return (np.sum(np.cos(phase), axis=1) + 1j * np.sum(np.sin(phase), axis=1)) / vol

    return map_chunks(chunk, len(ks), chunk=_K_CHUNK)


def bombieri_taylor(patch: PointPatch, k_phys) -> complex:
    """Volume-averaged exponential sum of the patch at physical wave vector k."""
    if len(patch) == 0:
        raise NumericContractError("empty patch")
    k = np.atleast_1d(np.asarray(k_phys, dtype=float))
    return complex(bombieri_taylor_many(patch, k[None, :])[0])


# -- theory -------------------------------------------------------------------

def theoretical_intensity(scheme: CutProjectScheme, window: Window, k) -> float:
    """|1_W^(-k*)|^2 / covolume^2, so that the value at k = 0 is density^2."""
    kv = k if isinstance(k, ModuleVector) else ModuleVector(_coords_of(k))
    star = scheme.embed(kv)[scheme.d:]
    return abs(window_ft(window, -star if window.e > 1 else -star[0])) ** 2 / scheme.covolume**2


def _intensities(scheme, window, stars):
    ft = window_ft(window, -stars if window.e > 1 else -stars[:, 0])
    return np.abs(np.atleast_1d(ft)) ** 2 / scheme.covolume**2


# -- tables -------------------------------------------------------------------

@dataclass(frozen=True)
class PeakRecord:
    k: ModuleVector
    k_phys: tuple[float, ...]
    k_star: tuple[float, ...]
    intensity_theory: float
    classification: str
    amplitude: complex | None = None


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    """Fourier-module points with |k_phys| <= k_max and |k_star| <= star_cut.

    Rows are sorted by integer coordinates.  The table is closed under
    negation and complete for intensities >= eps_bragg.
    """

    scheme: CutProjectScheme
    window: Window
    k_max: float
    eps_bragg: float
    eps_ext: float
    star_cut: float
    coords: np.ndarray
    k_phys: np.ndarray
    k_star: np.ndarray
    intensity: np.ndarray
    classification: np.ndarray
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for arr in (self.coords, self.k_phys, self.k_star, self.intensity, self.classification):
            arr.setflags(write=False)
        self._index.update({tuple(int(c) for c in row): i for i, row in enumerate(self.coords)})
        bragg = np.flatnonzero(self.classification == BRAGG)
        norm = np.linalg.norm(self.k_phys[bragg], axis=1)
        order = np.lexsort(tuple(self.coords[bragg].T[::-1]) + (norm, -self.intensity[bragg]))
        object.__setattr__(self, "_bragg_order", bragg[order])
        object.__setattr__(self, "_bragg_set", {tuple(int(c) for c in self.coords[i])
                                                for i in bragg})

    def __len__(self):
        return len(self.coords)

    @property
    def density(self):
        return self.window.volume / self.scheme.covolume

    def canonical(self, k) -> tuple[int, ...]:
        return self.scheme.canonical_coords(_coords_of(k))

    def index(self, k):
        return self._index.get(self.canonical(k))

    def record(self, i, amplitude=None) -> PeakRecord:
        return PeakRecord(ModuleVector(tuple(int(c) for c in self.coords[i])),
                          tuple(self.k_phys[i]), tuple(self.k_star[i]),
                          float(self.intensity[i]), str(self.classification[i]), amplitude)

    def lookup(self, k) -> PeakRecord | None:
        i = self.index(k)
        return None if i is None else self.record(i)

    def records(self):
        return [self.record(i) for i in range(len(self))]

    def is_bragg(self, k) -> bool:
        return self.canonical(k) in self._bragg_set

    def intensity_of(self, k) -> float:
        i = self.index(k)
        if i is None:
            raise NumericContractError(f"{k} is outside the enumerated range")
        return float(self.intensity[i])

    def bragg_indices(self) -> np.ndarray:
        """Bragg rows by decreasing intensity, then increasing |k_phys|, then coordinates."""
        return self._bragg_order

    def bragg_coords(self):
        return [tuple(int(c) for c in self.coords[i]) for i in self._bragg_order]

    def top_bragg(self, count, k_phys_max=None, include_zero=False):
        """Strongest Bragg rows (indices), taken in whole +-k pairs where possible."""
        out = []
        for i in self._bragg_order:
            if not include_zero and not np.any(self.coords[i]):
                continue
            if k_phys_max is not None and np.linalg.norm(self.k_phys[i]) > k_phys_max:
                continue
            out.append(int(i))
            if len(out) >= count:
                break
        return out

    def indices_of(self, cls):
        return np.flatnonzero(self.classification == cls)

    def extinctions(self):
        return [self.record(i) for i in self.indices_of(EXTINCTION)]


def default_eps_bragg(scheme, window):
    return EPS_BRAGG_REL * (window.volume / scheme.covolume) ** 2


def enumerate_spectrum(scheme: CutProjectScheme, window: Window, k_max: float,
                       eps_bragg: float | None = None, eps_ext: float = EPS_EXT,
                       star_cut: float | None = None, cap: int = RECORD_CAP) -> SpectrumTable:
    """Enumerate Fourier-module points and classify them by theoretical intensity.

    By default the internal cut is the radius beyond which the window
    transform cannot reach intensity ``eps_bragg``, which makes the table
    complete for Bragg peaks.  Extinctions are detected inside the same range.
    """
    if not k_max > 0:
        raise NumericContractError("k_max must be positive")
    if eps_bragg is None:
        eps_bragg = default_eps_bragg(scheme, window)
    if not 0 < eps_ext <= eps_bragg:
        raise NumericContractError("need 0 < eps_ext <= eps_bragg")
    if star_cut is None:
        star_cut = window.star_cut(math.sqrt(eps_bragg) * scheme.covolume)
    d, e = scheme.d, scheme.e
    lo = np.concatenate([np.full(d, -k_max), np.full(e, -star_cut)])
    hi = -lo
    c = lattice_points_in_box(scheme.dual_basis, lo, hi, cap=cap)
    full = scheme.embed_many(c)
    keep = (np.linalg.norm(full[:, :d], axis=1) <= k_max) & (np.linalg.norm(full[:, d:], axis=1) <= star_cut)
    c = c[keep]
    if scheme.kernel_axes:
        c = np.unique(scheme.canonical_coords(c), axis=0)
    if len(c) > cap:
        raise NumericContractError(f"{len(c)} records exceed cap {cap}")
    c = c[np.lexsort(c.T[::-1])]
    full = scheme.embed_many(c)
    # evaluate each +-k pair once so the intensities agree exactly
    neg_idx = _negation_index(c)
    rep = np.maximum(np.arange(len(c)), neg_idx)
    inten = _intensities(scheme, window, full[rep, d:])
    zero = ~np.any(c, axis=1)
    inten[zero] = (window.volume / scheme.covolume) ** 2
    cls = np.full(len(c), BELOW, dtype=object)
    cls[inten >= eps_bragg] = BRAGG
    cls[inten < eps_ext] = EXTINCTION
    return SpectrumTable(scheme, window, float(k_max), float(eps_bragg), float(eps_ext),
                         float(star_cut), np.ascontiguousarray(c), full[:, :d].copy(),
                         full[:, d:].copy(), inten, cls.astype(str))


def _negation_index(c):
    index = {tuple(row): i for i, row in enumerate(c.tolist())}
    return np.array([index[tuple(-x for x in row)] for row in c.tolist()], dtype=np.int64)


# -- checks -------------------------------------------------------------------

@dataclass(frozen=True)
class BraggReport:
    checked: int
    tol: float
    max_rel_err: float
    failures: list  # (coords, relative error)

    @property
    def ok(self):
        return not self.failures


def verify_bragg_consistency(patch: PointPatch, table: SpectrumTable, tol: float,
                             indices=None) -> BraggReport:
    """Compare |f_k|^2 from the patch against the theoretical intensity."""
    if patch.scheme != table.scheme or patch.window != table.window:
        raise NumericContractError("patch and table come from different model sets")
    idx = table.bragg_indices() if indices is None else np.asarray(indices, dtype=np.int64)
    amps = bombieri_taylor_many(patch, table.k_phys[idx])
    theory = table.intensity[idx]
    rel = np.abs(np.abs(amps) ** 2 - theory) / theory
    fails = [(tuple(int(x) for x in table.coords[i]), float(r))
             for i, r in zip(idx, rel) if r > tol]
    return BraggReport(len(idx), tol, float(rel.max()) if len(rel) else 0.0, fails)


@dataclass(frozen=True)
class ExtinctionReport:
    witnesses: dict  # extinction coords -> (s1, s2)
    unresolved: list

    @property
    def ok(self):
        return not self.unresolved

    def __len__(self):
        return len(self.witnesses) + len(self.unresolved)


def verify_extinction_sum_decomposition(table: SpectrumTable) -> ExtinctionReport:
    """Write each extinction as a sum of two Bragg vectors from the table.

    Among all witness pairs the one with the largest product of intensities
    is kept (ties broken lexicographically).  Unresolved extinctions may only
    reflect the finite enumeration range.
    """
    bragg = table.bragg_indices()
    bcoords = table.coords[bragg]
    binten = table.intensity[bragg]
    lookup = {tuple(row): i for i, row in enumerate(bcoords.tolist())}
    witnesses, unresolved = {}, []
    for i in table.indices_of(EXTINCTION):
        k = table.coords[i]
        best = None
        for a, rest in enumerate((k - bcoords).tolist()):
            b = lookup.get(tuple(rest))
            if b is None:
                continue
            score = binten[a] * binten[b]
            if best is None or score > best[0]:
                best = (score, a, b)
        key = tuple(int(x) for x in k)
        if best is None:
            unresolved.append(key)
        else:
            witnesses[key] = (tuple(int(x) for x in bcoords[best[1]]),
                              tuple(int(x) for x in bcoords[best[2]]))
    return ExtinctionReport(witnesses, unresolved)
