"""Finite patches of regular model sets and torus-parametrized hull samples."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from ._lattice import lattice_points_in_box
from .errors import NumericContractError, ResourceError, RetryExhausted, SingularityError
from .scheme import CutProjectScheme
from .window import Window

SINGULAR_TOL = 1e-9
POINT_CAP = 10**7


@dataclass(frozen=True)
class HullPoint:
    """Torus coordinates (u, v): physical translate u, internal translate v."""

    u: tuple[float, ...]
    v: tuple[float, ...]
    singular_margin: float = math.inf

    @classmethod
    def at(cls, u, v):
        return cls(tuple(float(x) for x in np.atleast_1d(u)),
                   tuple(float(x) for x in np.atleast_1d(v)))


@dataclass(frozen=True, eq=False)
class PointPatch:
    """Points of Lambda(W) (translated by the hull point) inside the open cube C_R.

    ``coords`` holds the integer lattice coordinates (N, d+e) and ``points`` the
    physical positions (N, d), both sorted by physical position.
    """

    scheme: CutProjectScheme
    window: Window
    hull: HullPoint
    R: float
    coords: np.ndarray
    points: np.ndarray
    r_min: float
    seed: int | None = None
    identity: str = field(default="", repr=False)

    def __post_init__(self):
        for arr in (self.coords, self.points):
            arr.setflags(write=False)
        if not self.identity:
            h = hashlib.sha256()
            h.update(self.scheme.to_json().encode())
            h.update(self.window.to_json().encode())
            h.update(repr((self.hull.u, self.hull.v, float(self.R))).encode())
            h.update(np.ascontiguousarray(self.coords).tobytes())
            object.__setattr__(self, "identity", h.hexdigest()[:16])

    def __len__(self):
        return len(self.points)

    @property
    def d(self):
        return self.scheme.d

    @property
    def volume(self):
        return float(self.R) ** self.scheme.d

    @property
    def star(self):
        return self.coords.astype(float) @ self.scheme.basis[self.scheme.d:].T

    def restrict(self, R):
        """Sub-patch inside the smaller cube C_R."""
        if R > self.R:
            raise NumericContractError("can only restrict to a smaller cube")
        keep = np.all(np.abs(self.points) < R / 2, axis=1)
        return PointPatch(self.scheme, self.window, self.hull, R,
                          self.coords[keep].copy(), self.points[keep].copy(),
                          self.r_min, self.seed)


def packing_radius(scheme: CutProjectScheme, window: Window) -> float:
    """Lower bound on the distance between distinct points of any patch.

    Minimal nonzero |phys(g)| over lattice vectors g with star(g) strictly
    inside the bounding box of W - W.
    """
    dlo, dhi = window.difference_bbox()
    dlo = dlo + SINGULAR_TOL
    dhi = dhi - SINGULAR_TOL
    rho = 1.0
    for _ in range(40):
        lo = np.concatenate([np.full(scheme.d, -rho), dlo])
        hi = np.concatenate([np.full(scheme.d, rho), dhi])
        g = lattice_points_in_box(scheme.basis, lo, hi)
        full = g.astype(float) @ scheme.basis.T
        inside = np.all((full[:, scheme.d:] > dlo) & (full[:, scheme.d:] < dhi), axis=1)
        norms = np.linalg.norm(full[inside, : scheme.d], axis=1)
        norms = norms[norms > 1e-12]
        if len(norms):
            return float(norms.min())
        rho *= 2
    raise NumericContractError("no packing radius found; window too small?")


def generate_patch(scheme: CutProjectScheme, window: Window, hull: HullPoint, R: float,
                   cap: int = POINT_CAP, seed: int | None = None) -> PointPatch:
    """Enumerate {phys(m) + u in C_R : star(m) + v in W}.

    Raises SingularityError if any candidate lands within 1e-9 of the window
    boundary, ResourceError if the candidate count would exceed ``cap``.
    """
    if not R > 0:
        raise NumericContractError("R must be positive")
    if window.e != scheme.e:
        raise NumericContractError("window dimension does not match the scheme")
    d = scheme.d
    u = np.asarray(hull.u, dtype=float)
    v = np.asarray(hull.v, dtype=float)
    if u.shape != (d,) or v.shape != (scheme.e,):
        raise NumericContractError("hull point has wrong dimensions")
    wlo, whi = window.bbox
    est = R**d * float(np.prod(whi - wlo + 2 * SINGULAR_TOL)) / scheme.covolume
    if est > cap:
        raise ResourceError(f"about {est:.3g} candidates exceed cap {cap}")
    lo = np.concatenate([np.full(d, -R / 2) - u, wlo - v - SINGULAR_TOL])
    hi = np.concatenate([np.full(d, R / 2) - u, whi - v + SINGULAR_TOL])
    m = lattice_points_in_box(scheme.basis, lo, hi, cap=max(cap, 10))
    full = m.astype(float) @ scheme.basis.T
    x = full[:, :d] + u
    y = full[:, d:] + v
    in_cube = np.all(np.abs(x) < R / 2, axis=1)
    m, x, y = m[in_cube], x[in_cube], y[in_cube]
    dist = window.boundary_distance(y)
    if len(dist) and dist.min() < SINGULAR_TOL:
        i = int(np.argmin(dist))
        raise SingularityError(
            f"lattice point {tuple(m[i])} has internal coordinate {y[i]} "
            f"within {dist[i]:.2e} of the window boundary")
    inside = window.contains(y)
    margin = float(dist.min()) if len(dist) else math.inf
    m, x = m[inside], x[inside]
    order = np.lexsort(x.T[::-1]) if len(x) else np.zeros(0, dtype=np.int64)
    hull = HullPoint(hull.u, hull.v, margin)
    return PointPatch(scheme, window, hull, float(R), np.ascontiguousarray(m[order]),
                      np.ascontiguousarray(x[order]), packing_radius(scheme, window), seed)


def sample_hull(scheme: CutProjectScheme, window: Window, seed: int,
                R_check: float = 100.0, max_retries: int = 64) -> HullPoint:
    """Draw (u, v) uniformly from a fundamental domain of the lattice.

    Uses numpy's PCG64 generator seeded with ``seed``.  Draws whose patch of
    side ``R_check`` would be singular are rejected and redrawn.
    """
    if window.e != scheme.e:
        raise NumericContractError("window dimension does not match the scheme")
    rng = np.random.Generator(np.random.PCG64(seed))
    for _ in range(max_retries):
        xi = rng.random(scheme.n)
        full = scheme.basis @ xi
        hull = HullPoint.at(full[: scheme.d], full[scheme.d:])
        try:
            patch = generate_patch(scheme, window, hull, R_check)
        except SingularityError:
            continue
        return patch.hull
    raise RetryExhausted(f"no nonsingular hull point after {max_retries} draws")


def density(patch: PointPatch) -> float:
    if len(patch) == 0:
        raise NumericContractError("density of an empty patch is undefined")
    return len(patch) / patch.volume


def nearest_neighbour_gaps(patch: PointPatch) -> np.ndarray:
    if patch.d != 1:
        raise NumericContractError("gaps are defined for one-dimensional patches")
    return np.diff(patch.points[:, 0])
