"""Modulated Gaussian test functions with closed-form Fourier transforms.

    h(x) = A exp(-|x - c|^2 / (2 sigma^2)) exp(2 pi i q.x)
    h^(k) = A (2 pi sigma^2)^(d/2) exp(-2 pi^2 sigma^2 |k - q|^2) exp(-2 pi i (k - q).c)

with the convention h^(k) = int h(x) exp(-2 pi i k.x) dx.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericContractError

SIGMA_FLOOR = 1e-6
SUPPORT_SIGMAS = 6.0


def _vec(x):
    return tuple(float(a) for a in np.atleast_1d(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class GaussianTestFunction:
    center: tuple[float, ...]
    sigma: float
    amplitude: complex = 1.0
    frequency: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        if self.frequency is not None:
            q = _vec(self.frequency)
            if len(q) != len(self.center):
                raise NumericContractError("frequency and center dimensions differ")
            object.__setattr__(self, "frequency", None if not any(q) else q)
        if not self.sigma >= SIGMA_FLOOR:
            raise NumericContractError(f"sigma must be >= {SIGMA_FLOOR}")
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def d(self):
        return len(self.center)

    @property
    def support_radius(self):
        return SUPPORT_SIGMAS * self.sigma

    @property
    def reach(self):
        """Sup-norm distance from the origin beyond which h is negligible."""
        return max(abs(c) for c in self.center) + self.support_radius

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        r = x - np.asarray(self.center)
        out = self.amplitude * np.exp(-np.sum(r * r, axis=-1) / (2 * self.sigma**2))
        if self.frequency is not None:
            out = out * np.exp(2j * math.pi * (x @ np.asarray(self.frequency)))
        return out

    def ft(self, k):
        k = np.asarray(k, dtype=float)
        if self.d == 1 and (k.ndim == 0 or k.shape[-1] != 1):
            k = k[..., None]
        q = np.asarray(self.frequency) if self.frequency is not None else 0.0
        kq = k - q
        s2 = self.sigma**2
        mag = self.amplitude * (2 * math.pi * s2) ** (self.d / 2)
        return mag * np.exp(-2 * math.pi**2 * s2 * np.sum(kq * kq, axis=-1)
                            - 2j * math.pi * (kq @ np.asarray(self.center)))

    def integral(self) -> complex:
        return complex(self.ft(np.zeros(self.d)))

    def l2_norm_sq(self) -> float:
        return abs(self.amplitude) ** 2 * (math.pi * self.sigma**2) ** (self.d / 2)

    def ft_tail_l2_sq(self, radius):
        """Integral of |h^(k)|^2 over |k - q|_inf > radius (per-axis bound)."""
        if radius <= 0:
            return self.l2_norm_sq()
        a = 2 * math.pi * self.sigma
        return self.l2_norm_sq() * min(1.0, self.d * math.erfc(a * radius))

    def ft_sup_beyond(self, radius):
        """Sup of |h^(k)| for |k - q| >= radius."""
        mag = abs(self.amplitude) * (2 * math.pi * self.sigma**2) ** (self.d / 2)
        return mag * math.exp(-2 * math.pi**2 * self.sigma**2 * max(radius, 0.0) ** 2)

    def conjugate(self) -> "GaussianTestFunction":
        """Pointwise complex conjugate of h."""
        q = None if self.frequency is None else tuple(-a for a in self.frequency)
        return GaussianTestFunction(self.center, self.sigma, self.amplitude.conjugate(), q)

    def scaled(self, c) -> "GaussianTestFunction":
        return GaussianTestFunction(self.center, self.sigma, self.amplitude * c, self.frequency)

    def to_dict(self):
        out = {"center": list(self.center), "sigma": self.sigma,
               "amplitude": [self.amplitude.real, self.amplitude.imag]}
        if self.frequency is not None:
            out["frequency"] = list(self.frequency)
        return out

    @classmethod
    def from_dict(cls, data):
        amp = data.get("amplitude", 1.0)
        if isinstance(amp, (list, tuple)):
            amp = complex(amp[0], amp[1])
        try:
            return cls(data["center"], data["sigma"], amp, data.get("frequency"))
        except KeyError as exc:
            raise NumericContractError(f"gaussian spec lacks {exc}") from None


def spec_hash(functions) -> str:
    text = json.dumps([f.to_dict() for f in functions], sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def bump_at(k, sigma_k, d=None) -> GaussianTestFunction:
    """Test function whose transform is exp(-|k' - k|^2 / (2 sigma_k^2)) (peak value 1)."""
    k = _vec(k)
    d = len(k) if d is None else d
    sigma_x = 1.0 / (2 * math.pi * sigma_k)
    amp = (2 * math.pi * sigma_k**2) ** (d / 2)
    return GaussianTestFunction((0.0,) * d, sigma_x, amp, k)
