"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 numeric contract
violation (including failed verification checks), 3 oracle failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import _parallel
from .correlations import (TranslateGrid, npoint_correlation,
                           verify_reduced_moment_identity)
from .cyclefunc import (CycleFunction, check_properties, cyclefunction_from_moments,
                        estimate_a, reconstruct_pipeline)
from .cycles import Cycle, canonical_form, concat, decompose, inverse, reduce, sum_as_bragg
from .errors import OracleFailure, QuasicyclesError
from .gaussian import spec_hash
from .io import (ConfigError, ExperimentConfig, check_dims, csv_text, dumps_json, read_patch,
                 write_atomic, write_patch)
from .modelset import density, generate_patch, sample_hull
from .scheme import dual_scheme
from .spectrum import (bombieri_taylor_many, enumerate_spectrum,
                       verify_bragg_consistency, verify_extinction_sum_decomposition)

log = logging.getLogger("quasicycles")

COMMANDS = ("scheme", "generate", "diffract", "correlate", "cyclefn", "decompose",
            "reconstruct", "verify")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


class Context:
    """Config plus lazily built scheme, window, patch and table."""

    def __init__(self, cfg: ExperimentConfig, out: Path, patch_path=None):
        self.cfg = cfg
        self.out = out
        self.hash = cfg.hash()
        self.scheme = cfg.build_scheme()
        self.window = cfg.build_window(self.scheme)
        self._patch_path = patch_path or cfg.patch
        self._patch = None
        self._table = None

    @property
    def patch(self):
        if self._patch is None:
            if self._patch_path:
                self._patch = read_patch(self._patch_path)
            else:
                hull = self.cfg.build_hull() or sample_hull(
                    self.scheme, self.window, self.cfg.seed, R_check=self.cfg.R)
                self._patch = generate_patch(self.scheme, self.window, hull, self.cfg.R,
                                             seed=self.cfg.seed)
        return self._patch

    @property
    def table(self):
        if self._table is None:
            c = self.cfg
            self._table = enumerate_spectrum(self.scheme, self.window, c.k_max, c.eps_bragg,
                                             c.eps_ext, c.star_cut)
        return self._table

    def write(self, name, text):
        path = self.out / name
        write_atomic(path, text)
        log.info("wrote %s", path)
        return path

    def meta(self):
        return {"config_hash": self.hash, "scheme": self.scheme.label,
                "window": self.window.to_dict()}


# -- commands -----------------------------------------------------------------

def cmd_scheme(ctx: Context):
    s = ctx.scheme
    doc = dict(ctx.meta(), description=s.to_dict(), covolume=s.covolume,
               dual_basis=[list(map(float, r)) for r in s.dual_basis],
               density=ctx.window.volume / s.covolume)
    ctx.write("scheme.json", dumps_json(doc))


def cmd_generate(ctx: Context):
    write_patch(ctx.out / "patch.txt", ctx.patch, ctx.hash)


def cmd_diffract(ctx: Context):
    t, p = ctx.table, ctx.patch
    keep = np.flatnonzero(np.linalg.norm(t.k_phys, axis=1) <= t.k_max)
    amps = bombieri_taylor_many(p, t.k_phys[keep])
    rows, records = [], []
    for i, f in zip(keep, amps):
        k = [int(x) for x in t.coords[i]]
        kp = [float(x) for x in t.k_phys[i]]
        ks = [float(x) for x in t.k_star[i]]
        row = [" ".join(map(str, k)), " ".join(map(repr, kp)), " ".join(map(repr, ks)),
               float(f.real), float(f.imag), float(abs(f) ** 2), float(t.intensity[i]),
               str(t.classification[i])]
        rows.append(row)
        records.append({"k": k, "k_phys": kp, "k_star": ks, "re": float(f.real),
                        "im": float(f.imag), "intensity_theory": float(t.intensity[i]),
                        "class": str(t.classification[i])})
    header = ["k", "k_phys", "k_star", "re_f", "im_f", "abs_f_sq", "intensity_theory", "class"]
    ctx.write("peaks.csv", csv_text(header, rows, f"config_hash={ctx.hash}"))
    doc = dict(ctx.meta(), R=p.R, k_max=t.k_max, eps_bragg=t.eps_bragg, eps_ext=t.eps_ext,
               star_cut=t.star_cut, density=density(p), records=records)
    ctx.write("peaks.json", dumps_json(doc))


def cmd_correlate(ctx: Context):
    p = ctx.patch
    rows = []
    for group in ctx.cfg.build_gaussians():
        check_dims(p, group)
        est = npoint_correlation(p, group)
        rows.append([len(group) + 1, spec_hash(group), est.value.real, est.value.imag,
                     est.stderr, p.R])
    header = ["n", "spec_hash", "re", "im", "stderr", "R"]
    ctx.write("correlations.csv", csv_text(header, rows, f"config_hash={ctx.hash}"))


def _default_cycles(table, count):
    """Canonical 3-cycles (a, b, -(a+b)) over the strongest peaks, Bragg closure only."""
    top = [tuple(int(x) for x in table.coords[i]) for i in table.top_bragg(count)]
    out, seen = [], set()
    for i, a in enumerate(top):
        for b in top[i:]:
            c = tuple(-x - y for x, y in zip(a, b))
            if not any(c) or not table.is_bragg(c):
                continue
            key = canonical_form([a, b, c])
            if len(key) == 3 and key not in seen:
                seen.add(key)
                out.append(key)
    return out


def _cycles_from_config(ctx):
    if ctx.cfg.cycles is not None:
        return [Cycle(tuple(tuple(k) for k in c)) for c in ctx.cfg.cycles]
    return [Cycle(k) for k in _default_cycles(ctx.table, min(ctx.cfg.top_peaks, 10))]


def cmd_cyclefn(ctx: Context):
    cf = CycleFunction(ctx.patch, ctx.table, ctx.cfg.n or 1)
    out = []
    for c in _cycles_from_config(ctx):
        est = estimate_a(ctx.patch, c, ctx.table, cf.amplitudes)
        out.append({"cycle": [list(k) for k in est.cycle], "re": est.value.real,
                    "im": est.value.imag, "raw_modulus": est.raw_modulus,
                    "phase_error": est.phase_error})
    ctx.write("cyclefn.json", dumps_json(dict(ctx.meta(), R=ctx.patch.R, values=out)))


def cmd_decompose(ctx: Context):
    if ctx.cfg.cycle is None:
        raise ConfigError("decompose needs a 'cycle' entry in the config")
    n = ctx.cfg.n or 1
    c = Cycle(tuple(tuple(k) for k in ctx.cfg.cycle))
    table = ctx.table
    factors = decompose(c, n, lambda target, m: sum_as_bragg(table, target, m))
    doc = dict(ctx.meta(), n=n, cycle=c.to_json(), canonical=[list(k) for k in c.canonical],
               factors=[f.to_json() for f in factors])
    ctx.write("factors.json", dumps_json(doc))


def _grid(cfg):
    if cfg.grid is None:
        return None
    return TranslateGrid(float(cfg.grid["spacing"]), float(cfg.grid.get("margin", 0.0)))


def cmd_reconstruct(ctx: Context):
    groups = ctx.cfg.build_gaussians()
    for g in groups:
        check_dims(ctx.patch, g)
    rep = reconstruct_pipeline(ctx.table, ctx.patch, ctx.cfg.n, groups, grid=_grid(ctx.cfg),
                               max_peaks=ctx.cfg.max_peaks)
    rows = [[c.order, c.spec_hash, c.spectral.real, c.spectral.imag, c.birkhoff.real,
             c.birkhoff.imag, c.birkhoff_stderr, c.tail_bound, c.a_error, c.relative_residual,
             int(c.covered)] for c in rep.comparisons]
    header = ["order", "spec_hash", "spectral_re", "spectral_im", "birkhoff_re", "birkhoff_im",
              "birkhoff_stderr", "tail_bound", "a_error", "relative_residual", "covered"]
    ctx.write("reconstruct.csv", csv_text(header, rows, f"config_hash={ctx.hash}"))
    lines = [f"config_hash={ctx.hash}",
             f"cycle length bound 2n+1 with n={rep.n}; {rep.n_direct} short cycles estimated directly",
             f"moments compared: {len(rep.comparisons)}; "
             f"max relative residual {rep.max_relative_residual:.3e}",
             f"extension checks: {len(rep.extension)}; "
             f"max residual {rep.max_extension_residual:.3e}"]
    ctx.write("reconstruct.txt", "\n".join(lines) + "\n")


# -- verify -------------------------------------------------------------------

def _check(results, name, value, tol, ok=None):
    value = float(value)
    passed = bool(value <= tol) if ok is None else bool(ok)
    results.append({"check": name, "value": value, "tolerance": float(tol), "pass": passed})


def run_verify(ctx: Context):
    """Deterministic battery of consistency checks on the configured fixture."""
    cfg, s, w = ctx.cfg, ctx.scheme, ctx.window
    res = []
    back = dual_scheme(dual_scheme(s))
    _check(res, "dual involution", np.max(np.abs(back.basis - s.basis)), 1e-12)
    pairing = s.basis.T @ s.dual_basis
    _check(res, "dual pairing integrality", np.max(np.abs(pairing - np.round(pairing))), 1e-9)

    p, t = ctx.patch, ctx.table
    theory = w.volume / s.covolume
    _check(res, "density", abs(density(p) - theory), cfg.tol("density", 2 * s.d * 2.0 / p.R + 1e-3))
    top = t.top_bragg(cfg.top_peaks, k_phys_max=t.k_max)
    rep = verify_bragg_consistency(p, t, cfg.tol("bragg", 0.05), top)
    _check(res, "bragg intensities (max relative error)", rep.max_rel_err, rep.tol)
    f = bombieri_taylor_many(p, np.vstack([t.k_phys[top], -t.k_phys[top]]))
    _check(res, "hermitian symmetry", np.max(np.abs(f[: len(top)] - np.conj(f[len(top):]))), 0.0)
    ext = verify_extinction_sum_decomposition(t)
    _check(res, "extinctions without a Bragg pair witness", len(ext.unresolved), 0)
    _check(res, "extinctions found", len(ext), 0, ok=True)

    cycles = [Cycle(k) for k in _default_cycles(t, 10)][:10]
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    algebra = 0
    for c in cycles:
        d = cycles[int(rng.integers(len(cycles)))]
        algebra += reduce(concat(c, inverse(c))).entries != ()
        algebra += reduce(concat(c, d)).entries != reduce(concat(reduce(d), reduce(c))).entries
    _check(res, "cycle group laws (violations)", algebra, 0)
    if cycles:
        props = check_properties(p, t, cycles)
        _check(res, "a(0) - 1", props.zero, 0.0)
        _check(res, "a(k,-k) - 1", props.pair, cfg.tol("pair", 0.02))
        _check(res, "homomorphism residual", props.homomorphism, cfg.tol("homomorphism", 0.05))
        _check(res, "reflection residual", props.reflection, cfg.tol("reflection", 0.02))
        worst = 0.0
        for c in cycles:
            a1 = estimate_a(p, c, t)
            a2 = cyclefunction_from_moments(p, c, t, cfg.sigma_k)
            worst = max(worst, abs(a1.value - a2.value) / (a1.phase_error + a2.phase_error))
        _check(res, "cross-estimator residual / combined error", worst, 1.0)

    groups = ctx.cfg.build_gaussians()
    if groups:
        rep = reconstruct_pipeline(t, p, cfg.n, groups, grid=_grid(cfg), max_peaks=cfg.max_peaks)
        _check(res, "moment reconstruction (max relative residual)",
               rep.max_relative_residual, cfg.tol("moments", 0.05))
        _check(res, "moment residual covered by error bound",
               sum(not c.covered for c in rep.comparisons), 0)
        _check(res, "extension consistency", rep.max_extension_residual, 0.05)
        g0 = groups[0][0]
        worst = 0.0
        for group in groups:
            if len(group) < 2:
                continue
            hs = group[1:]
            reach = g0.reach + max(h.reach for h in hs)
            sig = min([g0.sigma] + [h.sigma for h in hs])
            grid = TranslateGrid(0.25 * sig, math.ceil(reach))
            worst = max(worst, verify_reduced_moment_identity(p, g0, hs, grid).discrepancy)
        _check(res, "reduced-moment identity", worst, cfg.tol("reduced", 0.05))
    ok = all(r["pass"] for r in res)
    doc = dict(ctx.meta(), R=p.R, hull={"u": list(p.hull.u), "v": list(p.hull.v)},
               checks=res, all_pass=ok)
    ctx.write("verify.json", dumps_json(doc))
    for r in res:
        print(f"{'PASS' if r['pass'] else 'FAIL'}  {r['check']}: {r['value']:.3e} (tol {r['tolerance']:.3g})")
    return 0 if ok else 2


def cmd_verify(ctx: Context):
    return run_verify(ctx)


HANDLERS = {"scheme": cmd_scheme, "generate": cmd_generate, "diffract": cmd_diffract,
            "correlate": cmd_correlate, "cyclefn": cmd_cyclefn, "decompose": cmd_decompose,
            "reconstruct": cmd_reconstruct, "verify": cmd_verify}


def build_parser():
    parser = _Parser(prog="quasicycles", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--seed", type=int, help="overrides the config seed (unsigned 64-bit)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (speed only)")
    parser.add_argument("--patch", help="read the point patch from this file")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = ExperimentConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.validate()
        ctx = Context(cfg, Path(args.out), args.patch)
        log.info("config_hash=%s artifact=%s numpy=%s scipy=%s", ctx.hash, _version(),
                 np.__version__, scipy.__version__)
        _parallel.set_threads(args.threads)
        return HANDLERS[args.command](ctx) or 0
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OracleFailure as exc:
        print(f"oracle failure: target {exc.target} (n={exc.n}): {exc}", file=sys.stderr)
        return 3
    except QuasicyclesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    finally:
        _parallel.set_threads(1)


if __name__ == "__main__":
    sys.exit(main())
