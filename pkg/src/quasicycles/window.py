"""Acceptance windows in internal space and their Fourier transforms."""
from __future__ import annotations

import json
import math

import numpy as np

from .errors import DimensionError, NumericContractError

VOLUME_FLOOR = 1e-9
# below this value of |2 pi y| * diameter the polygon transform is integrated
# by quadrature instead of the boundary formula (cancellation)
_SMALL_OMEGA = 1.0


class Window:
    """Closed interval (e=1) or convex counterclockwise polygon (e=2)."""

    def __init__(self, interval=None, polygon=None):
        if (interval is None) == (polygon is None):
            raise NumericContractError("give exactly one of interval or polygon")
        if interval is not None:
            lo, hi = (float(x) for x in interval)
            if not hi - lo >= VOLUME_FLOOR:
                raise NumericContractError(f"degenerate interval window [{lo}, {hi}]")
            self.kind = "interval"
            self.e = 1
            self.lo, self.hi = lo, hi
            self.vertices = None
            self.volume = hi - lo
            self.boundary_measure = 2.0
            self.bbox = (np.array([lo]), np.array([hi]))
        else:
            v = np.array(polygon, dtype=float)
            if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
                raise DimensionError("polygon needs >= 3 vertices in the plane")
            nxt = np.roll(v, -1, axis=0)
            area = 0.5 * float(np.sum(v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]))
            if area < VOLUME_FLOOR:
                raise NumericContractError(
                    "polygon must be counterclockwise with area >= 1e-9")
            edges = nxt - v
            turn = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
            if np.any(turn < -1e-12):
                raise NumericContractError("polygon window must be convex")
            v.setflags(write=False)
            self.kind = "polygon"
            self.e = 2
            self.vertices = v
            self.volume = area
            self.boundary_measure = float(np.sum(np.hypot(edges[:, 0], edges[:, 1])))
            self.bbox = (v.min(axis=0), v.max(axis=0))
        self.diameter = float(np.linalg.norm(self.bbox[1] - self.bbox[0]))

    # -- geometry -----------------------------------------------------------
    def _as_points(self, y):
        y = np.asarray(y, dtype=float)
        if self.e == 1 and (y.ndim == 0 or y.shape[-1] != 1):
            y = y[..., None]
        if y.shape[-1] != self.e:
            raise DimensionError(f"window lives in dimension {self.e}")
        return y

    def contains(self, y):
        y = self._as_points(y)
        if self.kind == "interval":
            return (y[..., 0] >= self.lo) & (y[..., 0] <= self.hi)
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        rel = y[..., None, :] - v
        cross = e[:, 0] * rel[..., 1] - e[:, 1] * rel[..., 0]
        return np.all(cross >= 0, axis=-1)

    def boundary_distance(self, y):
        """Unsigned distance from each point to the window boundary."""
        y = self._as_points(y)
        if self.kind == "interval":
            return np.minimum(np.abs(y[..., 0] - self.lo), np.abs(y[..., 0] - self.hi))
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        rel = y[..., None, :] - v
        t = np.clip(np.sum(rel * e, axis=-1) / np.sum(e * e, axis=-1), 0.0, 1.0)
        d = rel - t[..., None] * e
        return np.min(np.hypot(d[..., 0], d[..., 1]), axis=-1)

    def difference_bbox(self):
        """Bounding box of W - W."""
        lo, hi = self.bbox
        return lo - hi, hi - lo

    def ft_bound(self, radius):
        """Upper bound on |window_ft(y)| for |y| >= radius."""
        if radius <= 0:
            return self.volume
        return min(self.volume, self.boundary_measure / (2 * math.pi * radius))

    def star_cut(self, amplitude):
        """Smallest radius beyond which |window_ft| < amplitude is guaranteed."""
        if amplitude >= self.volume:
            return 0.0
        return self.boundary_measure / (2 * math.pi * amplitude)

    # -- serialization ------------------------------------------------------
    def to_dict(self):
        if self.kind == "interval":
            return {"interval": [self.lo, self.hi]}
        return {"polygon": [[float(a), float(b)] for a, b in self.vertices]}

    @classmethod
    def from_dict(cls, data):
        if isinstance(data, (list, tuple)):
            return cls(interval=data)
        if "interval" in data:
            return cls(interval=data["interval"])
        if "polygon" in data:
            return cls(polygon=data["polygon"])
        raise NumericContractError(f"cannot parse window {data!r}")

    def to_json(self):
        return json.dumps(self.to_dict())

    def __eq__(self, other):
        if not isinstance(other, Window):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.to_json())

    def __repr__(self):
        if self.kind == "interval":
            return f"Window([{self.lo!r}, {self.hi!r}])"
        return f"Window(polygon with {len(self.vertices)} vertices)"


def regular_octagon(edge=1.0):
    r = edge / (2 * math.sin(math.pi / 8))
    ang = math.pi / 8 + np.arange(8) * math.pi / 4
    return Window(polygon=np.column_stack([r * np.cos(ang), r * np.sin(ang)]))


DEFAULT_WINDOWS = {
    "z-fixture": lambda: Window(interval=(-0.5, 0.5)),
    "fibonacci": lambda: Window(interval=(0.0, (1 + math.sqrt(5)) / 2)),
    "silver-mean": lambda: Window(interval=(0.0, math.sqrt(2))),
    "ammann-beenker": regular_octagon,
}


def default_window(label):
    try:
        return DEFAULT_WINDOWS[label]()
    except KeyError:
        raise NumericContractError(f"no default window for scheme {label!r}") from None


# -- Fourier transform ------------------------------------------------------

def _duffy_rule(order=12):
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    s, t = np.meshgrid(x, x, indexing="ij")
    ws, wt = np.meshgrid(w, w, indexing="ij")
    return s.ravel(), t.ravel(), (ws * wt).ravel()


_DUFFY = _duffy_rule()


def _polygon_ft_quadrature(vertices, y):
    s, t, w = _DUFFY
    a = vertices[0]
    out = np.zeros(y.shape[:-1], dtype=complex)
    for b, c in zip(vertices[1:-1], vertices[2:]):
        jac = abs((b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]))
        pts = a + s[:, None] * (b - a) + (s * t)[:, None] * (c - b)
        phase = -2j * math.pi * (y @ pts.T)
        out += np.exp(phase) @ (w * s * jac)
    return out


def _polygon_ft_boundary(vertices, y):
    om = 2 * math.pi * y
    nxt = np.roll(vertices, -1, axis=0)
    d = nxt - vertices
    mid = 0.5 * (nxt + vertices)
    flux = om[..., :1] * d[:, 1] - om[..., 1:] * d[:, 0]
    arg = 0.5 * (om @ d.T)
    terms = flux * np.exp(-1j * (om @ mid.T)) * np.sinc(arg / math.pi)
    return 1j * np.sum(terms, axis=-1) / np.sum(om * om, axis=-1)


def window_ft(window: Window, y) -> np.ndarray | complex:
    """Closed-form transform  int_W exp(-2 pi i y.v) dv  (vectorized over y)."""
    scalar = np.ndim(y) == 0 or (window.e > 1 and np.ndim(y) == 1)
    yy = window._as_points(y)
    if window.kind == "interval":
        a = window.volume
        c = 0.5 * (window.lo + window.hi)
        z = yy[..., 0]
        out = a * np.exp(-2j * math.pi * z * c) * np.sinc(z * a)
    else:
        out = np.empty(yy.shape[:-1], dtype=complex)
        small = np.linalg.norm(2 * math.pi * yy, axis=-1) * window.diameter < _SMALL_OMEGA
        if np.any(small):
            out[small] = _polygon_ft_quadrature(window.vertices, yy[small])
        if np.any(~small):
            out[~small] = _polygon_ft_boundary(window.vertices, yy[~small])
    if scalar:
        return complex(np.asarray(out).reshape(-1)[0])
    return out
