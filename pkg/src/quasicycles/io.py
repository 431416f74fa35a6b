"""Patch files, experiment configs and atomic output writing."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericContractError
from .gaussian import GaussianTestFunction
from .modelset import HullPoint, PointPatch
from .scheme import CutProjectScheme, preset
from .window import Window, default_window


class ConfigError(ValueError):
    """Malformed or inconsistent configuration (CLI exit code 1)."""


# -- atomic writes ------------------------------------------------------------

def write_atomic(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def csv_text(header, rows, comment=None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# -- patch files --------------------------------------------------------------

def patch_text(patch: PointPatch, config_hash: str = "") -> str:
    hull = {"u": list(patch.hull.u), "v": list(patch.hull.v)}
    lines = [
        f"# scheme={patch.scheme.label}",
        f"# basis={patch.scheme.to_json()}",
        f"# R={patch.R!r}",
        f"# window={patch.window.to_json()}",
        f"# hull={json.dumps(hull)}",
        f"# singular_margin={patch.hull.singular_margin!r}",
        f"# seed={'' if patch.seed is None else patch.seed}",
        f"# r_min={patch.r_min!r}",
    ]
    if config_hash:
        lines.append(f"# config_hash={config_hash}")
    for m, x in zip(patch.coords, patch.points):
        lines.append(" ".join(str(int(c)) for c in m) + "\t" + " ".join("%.17g" % v for v in x))
    return "\n".join(lines) + "\n"


def write_patch(path, patch: PointPatch, config_hash: str = ""):
    write_atomic(path, patch_text(patch, config_hash))


def read_patch(path) -> PointPatch:
    header = {}
    coords, points = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                header[key.strip()] = value
                continue
            left, _, right = line.partition("\t")
            coords.append([int(c) for c in left.split()])
            points.append([float(v) for v in right.split()])
    try:
        scheme = CutProjectScheme.from_json(header["basis"])
        window = Window.from_dict(json.loads(header["window"]))
        hull = json.loads(header["hull"])
        margin = float(header.get("singular_margin", "inf"))
        R = float(header["R"])
        r_min = float(header["r_min"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad patch header in {path}: {exc}") from None
    seed = int(header["seed"]) if header.get("seed") else None
    n = scheme.n
    c = np.array(coords, dtype=np.int64).reshape(-1, n)
    x = np.array(points, dtype=float).reshape(-1, scheme.d)
    return PointPatch(scheme, window, HullPoint(tuple(hull["u"]), tuple(hull["v"]), margin),
                      R, c, x, r_min, seed)


# -- configuration ------------------------------------------------------------

CONFIG_KEYS = {
    "scheme", "window", "R", "seed", "hull", "k_max", "eps_bragg", "eps_ext", "star_cut",
    "grid", "gaussians", "cycles", "cycle", "n", "sigma_k", "top_peaks", "max_peaks",
    "tolerances", "patch",
}


@dataclass
class ExperimentConfig:
    scheme: object = "z-fixture"
    window: object = None
    R: float = 1000.0
    seed: int = 0
    hull: dict | None = None
    k_max: float = 5.0
    eps_bragg: float | None = None
    eps_ext: float = 1e-12
    star_cut: float | None = None
    grid: dict | None = None
    gaussians: list = field(default_factory=list)
    cycles: list | None = None
    cycle: list | None = None
    n: int | None = None
    sigma_k: float = 0.005
    top_peaks: int = 20
    max_peaks: int = 200
    tolerances: dict = field(default_factory=dict)
    patch: str | None = None

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from None
        return cls.from_dict(data)

    def validate(self):
        try:
            self.R = float(self.R)
            self.k_max = float(self.k_max)
            self.seed = int(self.seed)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad numeric config value: {exc}") from None
        if not (self.R > 0 and math.isfinite(self.R)):
            raise ConfigError("R must be a positive number")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not isinstance(self.gaussians, list):
            raise ConfigError("gaussians must be a list of lists of Gaussian specs")

    def to_dict(self):
        return asdict(self)

    def hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    # -- builders -----------------------------------------------------------
    def build_scheme(self) -> CutProjectScheme:
        if isinstance(self.scheme, str):
            return preset(self.scheme)
        if isinstance(self.scheme, dict):
            return CutProjectScheme.from_dict(self.scheme)
        raise ConfigError("scheme must be a preset name or a scheme object")

    def build_window(self, scheme) -> Window:
        if self.window is None:
            return default_window(scheme.label)
        return Window.from_dict(self.window)

    def build_gaussians(self):
        out = []
        for group in self.gaussians:
            if isinstance(group, dict):
                group = [group]
            try:
                out.append([GaussianTestFunction.from_dict(g) for g in group])
            except (TypeError, AttributeError, NumericContractError) as exc:
                raise ConfigError(f"bad Gaussian spec: {exc}") from None
        return out

    def build_hull(self):
        if self.hull is None:
            return None
        try:
            return HullPoint.at(self.hull["u"], self.hull["v"])
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"hull needs u and v: {exc}") from None

    def tol(self, name, default):
        return float(self.tolerances.get(name, default))


def check_dims(patch, functions):
    for f in functions:
        if f.d != patch.d:
            raise NumericContractError("test function dimension differs from the patch")
