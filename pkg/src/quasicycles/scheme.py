"""Cut-and-project schemes with exact integer module coordinates.

A scheme is an invertible (d+e)x(d+e) matrix whose columns generate the
embedded lattice in R^d x R^e.  The first d rows are physical coordinates,
the last e rows internal coordinates.  Points of the physical module L and of
the Fourier module are carried as integer coordinate vectors; only the
projections are floating point.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DimensionError, NumericContractError

DET_FLOOR = 1e-12
RANK_TOL = 1e-10

PHYSICAL = "physical"
FOURIER = "fourier"

TAU = (1.0 + math.sqrt(5.0)) / 2.0
SILVER = 1.0 + math.sqrt(2.0)


@dataclass(frozen=True, order=True, slots=True)
class ModuleVector:
    """Exact point of the physical module (``side='physical'``) or Fourier module."""

    coords: tuple[int, ...]
    side: Literal["physical", "fourier"] = FOURIER

    def __post_init__(self):
        if self.side not in (PHYSICAL, FOURIER):
            raise ValueError(f"unknown side {self.side!r}")
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))

    def _check(self, other):
        if not isinstance(other, ModuleVector):
            return NotImplemented
        if other.side != self.side:
            raise DimensionError("cannot combine physical and Fourier module vectors")
        if len(other.coords) != len(self.coords):
            raise DimensionError("coordinate length mismatch")
        return None

    def __add__(self, other):
        bad = self._check(other)
        if bad is NotImplemented:
            return bad
        return ModuleVector(tuple(a + b for a, b in zip(self.coords, other.coords)), self.side)

    def __sub__(self, other):
        bad = self._check(other)
        if bad is NotImplemented:
            return bad
        return ModuleVector(tuple(a - b for a, b in zip(self.coords, other.coords)), self.side)

    def __neg__(self):
        return ModuleVector(tuple(-a for a in self.coords), self.side)

    def is_zero(self):
        return not any(self.coords)

    def __repr__(self):
        tag = "k" if self.side == FOURIER else "m"
        return f"{tag}{self.coords}"


def fourier(*coords) -> ModuleVector:
    if len(coords) == 1 and not isinstance(coords[0], (int, np.integer)):
        coords = tuple(coords[0])
    return ModuleVector(tuple(coords), FOURIER)


def physical(*coords) -> ModuleVector:
    if len(coords) == 1 and not isinstance(coords[0], (int, np.integer)):
        coords = tuple(coords[0])
    return ModuleVector(tuple(coords), PHYSICAL)


class CutProjectScheme:
    """Embedded lattice with physical/internal projections and its dual.

    ``kernel_axes`` lists integer coordinate axes that project to zero in
    physical space (a degenerate scheme such as the integer-lattice fixture).
    Fourier vectors are identified modulo those axes by zeroing the
    corresponding coordinates.
    """

    def __init__(self, d, e, basis, label="custom", provenance="", kernel_axes=(),
                 physical_kernel_axes=None):
        basis = np.array(basis, dtype=float)
        n = d + e
        if d < 1 or e < 1:
            raise DimensionError("d and e must both be >= 1")
        if basis.shape != (n, n):
            raise DimensionError(f"basis must be {n}x{n}, got {basis.shape}")
        det = float(np.linalg.det(basis))
        if abs(det) <= DET_FLOOR:
            raise NumericContractError(f"singular basis (|det| = {abs(det):.3g})")
        if np.linalg.matrix_rank(basis[:d], tol=RANK_TOL) != d:
            raise NumericContractError("physical block is rank deficient")
        if np.linalg.matrix_rank(basis[d:], tol=RANK_TOL) != e:
            raise NumericContractError("internal block is rank deficient")
        basis.setflags(write=False)
        self.d = int(d)
        self.e = int(e)
        self.basis = basis
        self.label = label
        self.provenance = provenance
        self.covolume = abs(det)
        self.kernel_axes = tuple(sorted(int(a) for a in kernel_axes))
        self.physical_kernel_axes = tuple(sorted(
            int(a) for a in (kernel_axes if physical_kernel_axes is None else physical_kernel_axes)))
        inv = np.linalg.inv(basis)
        inv.setflags(write=False)
        self.inverse = inv
        dual = np.ascontiguousarray(inv.T)
        dual.setflags(write=False)
        self.dual_basis = dual
        for ax in self.kernel_axes:
            if np.any(np.abs(dual[:d, ax]) > RANK_TOL):
                raise NumericContractError(f"kernel axis {ax} does not vanish in physical space")

    @property
    def n(self):
        return self.d + self.e

    def _matrix(self, side):
        return self.basis if side == PHYSICAL else self.dual_basis

    def _coords(self, m):
        c = np.asarray(m.coords if isinstance(m, ModuleVector) else m, dtype=float)
        if c.shape[-1] != self.n:
            raise DimensionError(f"expected {self.n} coordinates, got {c.shape[-1]}")
        return c

    def embed(self, m: ModuleVector) -> np.ndarray:
        """Full (d+e)-dimensional embedded point."""
        return self._matrix(m.side) @ self._coords(m)

    def embed_many(self, coords, side=FOURIER) -> np.ndarray:
        """Embed an (N, d+e) integer array; returns (N, d+e)."""
        c = np.asarray(coords, dtype=float)
        if c.ndim != 2 or c.shape[1] != self.n:
            raise DimensionError("coords must have shape (N, d+e)")
        return c @ self._matrix(side).T

    def canonical_coords(self, coords):
        """Representative of a Fourier vector modulo the physical kernel."""
        if not self.kernel_axes:
            return coords
        if isinstance(coords, np.ndarray):
            out = coords.copy()
            out[..., list(self.kernel_axes)] = 0
            return out
        return tuple(0 if i in self.kernel_axes else int(c) for i, c in enumerate(coords))

    def to_dict(self):
        out = {
            "label": self.label,
            "d": self.d,
            "e": self.e,
            "basis": [[float(x) for x in row] for row in self.basis],
            "provenance": self.provenance,
        }
        if self.kernel_axes:
            out["kernel_axes"] = list(self.kernel_axes)
        if self.physical_kernel_axes != self.kernel_axes:
            out["physical_kernel_axes"] = list(self.physical_kernel_axes)
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(int(data["d"]), int(data["e"]), data["basis"],
                       label=data.get("label", "custom"),
                       provenance=data.get("provenance", ""),
                       kernel_axes=data.get("kernel_axes", ()),
                       physical_kernel_axes=data.get("physical_kernel_axes"))
        except KeyError as exc:
            raise NumericContractError(f"scheme description lacks {exc}") from None

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, CutProjectScheme):
            return NotImplemented
        return (self.d, self.e, self.label, self.kernel_axes) == (
            other.d, other.e, other.label, other.kernel_axes) and np.array_equal(
            self.basis, other.basis)

    def __hash__(self):
        return hash((self.d, self.e, self.label, self.basis.tobytes()))

    def __repr__(self):
        return f"CutProjectScheme({self.label!r}, d={self.d}, e={self.e}, covolume={self.covolume:.6g})"


def phys_coords(scheme: CutProjectScheme, m: ModuleVector) -> np.ndarray:
    return scheme.embed(m)[: scheme.d]


def star_coords(scheme: CutProjectScheme, m: ModuleVector) -> np.ndarray:
    return scheme.embed(m)[scheme.d:]


def dual_scheme(scheme: CutProjectScheme) -> CutProjectScheme:
    """Scheme whose lattice is the dual lattice (basis = inverse transpose)."""
    label = scheme.label[:-5] if scheme.label.endswith("/dual") else scheme.label + "/dual"
    return CutProjectScheme(scheme.d, scheme.e, scheme.dual_basis, label=label,
                            provenance=scheme.provenance,
                            kernel_axes=scheme.physical_kernel_axes,
                            physical_kernel_axes=scheme.kernel_axes)


def _ammann_beenker_basis():
    th = math.pi / 4
    cols = [(math.cos(j * th), math.sin(j * th), math.cos(3 * j * th), math.sin(3 * j * th))
            for j in range(4)]
    return np.array(cols).T


PRESETS = {
    "z-fixture": dict(
        d=1, e=1, basis=[[1.0, 0.0], [0.0, 1.0]],
        provenance="integer lattice; internal coordinate is a spectator",
        kernel_axes=(1,)),
    "fibonacci": dict(
        d=1, e=1, basis=[[1.0, TAU], [1.0, 1.0 - TAU]],
        provenance="Z[tau] with Galois conjugation as star map"),
    "silver-mean": dict(
        d=1, e=1, basis=[[1.0, SILVER], [1.0, 2.0 - SILVER]],
        provenance="Z[1+sqrt2] with Galois conjugation as star map"),
    "ammann-beenker": dict(
        d=2, e=2, basis=_ammann_beenker_basis(),
        provenance="Z^4 with eightfold star vectors; internal star rotated by 3pi/4"),
}


def preset(name: str) -> CutProjectScheme:
    try:
        spec = PRESETS[name]
    except KeyError:
        raise NumericContractError(
            f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return CutProjectScheme(label=name, **spec)
