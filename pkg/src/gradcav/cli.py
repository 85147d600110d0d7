"""Command-line front end.

    gradcav spectrum    --omega-max 25
    gradcav verify      --n-modes 50 --omega-max 12
    gradcav observables --kappa 0.2 --omega-max 50
    gradcav sweep       --param alpha --values 0.5,1,2
    gradcav field       --mode TE,1,0,1 --grid 9,9,17

Exit status: 0 success, 2 validation error, 3 solver failure, 4 tolerance
violation.
"""
import argparse
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .bessel import BesselDomainError, BesselRangeError
from .config import ConfigError, load_config
from .fields import NormalizationError, eval_fields, normalize_mode, normalize_table
from .observables import (
    face_force,
    force_difference_closed_form,
    homogeneous_subtraction,
    mode_energy,
    regularized_sum,
)
from .output import CSV_COLUMNS, OutputDir, SpectrumCache, fmt_float, spectrum_csv_rows
from .quadrature import QuadratureError
from .spectrum import SMALL_ALPHA, ModeIndex, Polarization, RootFindingError, ZetaDegeneracyError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_TOLERANCE = 4

SOLVER_ERRORS = (RootFindingError, ZetaDegeneracyError, BesselRangeError, BesselDomainError, NormalizationError,
                 QuadratureError)

# flag -> config key
_OVERRIDES = {
    "Lx": "Lx", "Ly": "Ly", "Lz": "Lz", "alpha": "alpha", "beta": "beta", "omega_max": "omega_max",
    "kappa": "kappa", "regulator": "regulator", "units": "units", "out": "out", "threads": "threads",
    "n_modes": "n_modes", "allow_unregulated": "allow_unregulated", "hom_eps_r": "hom_eps_r",
    "tm_p0": "tm_p0", "quad_rtol": "quad_rtol", "tail_rtol": "tail_rtol", "verify_tol": "verify_tol",
}


class UsageError(ValueError):
    pass


def _float(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", help="flat key = value file; flags override it")
    for flag in ("Lx", "Ly", "Lz", "alpha", "beta"):
        g.add_argument(f"--{flag}", type=_float, default=None)
    g.add_argument("--omega-max", dest="omega_max", type=_float, default=None)
    g.add_argument("--kappa", type=_float, default=None)
    g.add_argument("--regulator", choices=("exponential", "gaussian", "none"), default=None)
    g.add_argument("--units", choices=("natural", "SI"), default=None)
    g.add_argument("--out", default=None)
    g.add_argument("--threads", type=int, default=None)
    g.add_argument("--n-modes", dest="n_modes", type=int, default=None)
    g.add_argument("--allow-unregulated", dest="allow_unregulated", action="store_const", const=True, default=None)
    g.add_argument("--hom-eps-r", dest="hom_eps_r", type=_float, default=None,
                   help="reference permittivity for the subtraction (default beta*exp(alpha/2))")
    g.add_argument("--tm-p0", dest="tm_p0", action=argparse.BooleanOptionalAction, default=None,
                   help="keep the TM p=0 modes in the homogeneous reference")
    g.add_argument("--quad-rtol", dest="quad_rtol", type=_float, default=None)
    g.add_argument("--tail-rtol", dest="tail_rtol", type=_float, default=None)
    g.add_argument("--verify-tol", dest="verify_tol", type=_float, default=None)

    p = argparse.ArgumentParser(prog="gradcav", description="Graded-dielectric cavity modes and vacuum sums.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="enumerate eigenfrequencies up to omega_max")
    sub.add_parser("verify", parents=[common], help="energy and force-difference checks on the lowest modes")
    sub.add_parser("observables", parents=[common], help="regularised energy, force difference, subtraction")
    sw = sub.add_parser("sweep", parents=[common], help="observables over a list of parameter values")
    sw.add_argument("--param", required=True, choices=("alpha", "beta", "kappa", "Lz"))
    sw.add_argument("--values", required=True, help="comma separated list")
    fd = sub.add_parser("field", parents=[common], help="mode fields on a grid")
    fd.add_argument("--mode", required=True, help="POL,nx,ny,p e.g. TE,1,0,1")
    fd.add_argument("--grid", default="9,9,9", help="points per axis nx,ny,nz (walls included)")
    return p


def config_from_args(args):
    over = {key: getattr(args, flag) for flag, key in _OVERRIDES.items() if getattr(args, flag, None) is not None}
    return load_config(args.config, **over)


# -- shared pieces -------------------------------------------------------------

def _graded_table(cfg, cache):
    geom = cfg.geometry()
    prof = cfg.profile()
    return cache.graded(geom, prof, cfg.omega_max_nat(), threads=cfg.threads)


def _needs_fields(cfg):
    if cfg.alpha < SMALL_ALPHA:
        raise UsageError(f"field-level commands need alpha >= {SMALL_ALPHA:g} (smaller alpha uses the "
                         "homogeneous closed form, which has no graded fields)")


def echo_inputs(cfg):
    """Inputs reconstructed from the internal natural-unit values."""
    g = cfg.geometry()
    us = cfg.unit_system
    if cfg.units == "SI":
        om = us.omega_to_si(cfg.omega_max_nat())
        kap = us.time_to_si(cfg.kappa_nat())
    else:
        om = cfg.omega_max_nat() / cfg.Lz
        kap = cfg.kappa_nat() * cfg.Lz
    return {"Lx": g.Lx * cfg.Lz, "Ly": g.Ly * cfg.Lz, "Lz": g.Lz * cfg.Lz, "omega_max": om, "kappa": kap}


def _units_block(cfg):
    return {"system": cfg.units, "Lz": cfg.Lz, "omega_scale": cfg.omega_out(1.0), "energy_scale": cfg.energy_out(1.0),
            "force_scale": cfg.force_out(1.0), "length_scale": cfg.length_out(1.0)}


def _sum_json(res, scale):
    d = res.to_json_dict()
    d["value_natural"] = d["value"]
    d["tail_bound_natural"] = d["tail_bound"]
    d["value"] = res.value * scale
    d["tail_bound"] = res.tail_bound * scale
    return d


def compute_observables(cfg, cache):
    """Energy, force difference and subtraction; returns (dict, warnings, cache files)."""
    reg = cfg.regulator_nat()
    unregulated = reg.kind == "none" or reg.kappa == 0.0
    if unregulated and not cfg.allow_unregulated:
        raise UsageError("kappa = 0 or regulator = none needs --allow-unregulated (sum truncated at omega_max)")
    k1, table = _graded_table(cfg, cache)
    files = [cache.relpath(k1)]
    warnings = []
    e = regularized_sum(table, reg, "energy", allow_unregulated=True, rtol=cfg.tail_rtol)
    f = regularized_sum(table, reg, "force_difference", allow_unregulated=True, rtol=cfg.tail_rtol)
    out = {
        "energy": _sum_json(e, cfg.energy_out(1.0)),
        "force_difference": _sum_json(f, cfg.force_out(1.0)),
    }
    warnings += [f"energy: {w}" for w in e.warnings] + [f"force_difference: {w}" for w in f.warnings]
    ratio = f.value / e.value if e.value != 0.0 else math.nan
    out["force_to_energy_ratio"] = ratio * cfg.force_out(1.0) / cfg.energy_out(1.0)
    out["expected_ratio"] = cfg.alpha / (2.0 * cfg.Lz)
    if unregulated:
        warnings.append("homogeneous subtraction skipped: needs a finite kappa")
    else:
        k2, hom = cache.homogeneous(table.geometry, table.profile, cfg.hom_eps(), table.omega_max, cfg.tm_p0)
        files.append(cache.relpath(k2))
        s = homogeneous_subtraction(table, hom, reg, rtol=cfg.tail_rtol)
        out["energy_subtracted"] = _sum_json(s, cfg.energy_out(1.0))
        out["energy_subtracted"]["hom_eps_r"] = cfg.hom_eps()
        out["energy_subtracted"]["tm_p0"] = cfg.tm_p0
        warnings += [f"energy_subtracted: {w}" for w in s.warnings]
    return out, warnings, files


# -- commands ----------------------------------------------------------------

def cmd_spectrum(cfg, outdir, cache):
    key, table = _graded_table(cfg, cache)
    if table.provenance.get("method") != "small-alpha-homogeneous":
        table = normalize_table(table)
    doc = table.to_json_dict()
    doc["provenance"] = dict(doc["provenance"], code_version=__version__, root_rtol="4*eps",
                             omega_max=table.omega_max)
    doc["units"] = _units_block(cfg)
    doc["inputs"] = echo_inputs(cfg)
    outdir.write_csv("spectrum.csv", CSV_COLUMNS, spectrum_csv_rows(table, cfg.omega_out(1.0)))
    outdir.write_json("spectrum.json", doc)
    outdir.register(cache.relpath(key))
    return EXIT_OK, {"modes": len(table)}, 1.0, []


def _verify_mode(mode, geom, prof, rtol):
    try:
        m = normalize_mode(mode, geom, prof)
        en = mode_energy(m, geom, prof, rtol=rtol, parts=True)
        f0 = face_force(m, geom, prof, 0.0)
        fl = face_force(m, geom, prof, geom.Lz)
    except SOLVER_ERRORS as exc:
        return {"mode": str(mode.index), "omega": mode.omega, "error": f"{type(exc).__name__}: {exc}"}
    half = 0.5 * prof.hbar * mode.omega
    return {
        "mode": str(mode.index),
        "omega": mode.omega,
        "norm": m.norm,
        "energy": en.total,
        "energy_electric": en.electric,
        "energy_magnetic": en.magnetic,
        "energy_quad_error": en.error,
        "energy_ratio": en.total / half,
        "force_0": f0,
        "force_L": fl,
        "force_difference": f0 - fl,
        "force_difference_raw_ratio": (f0 - fl) / force_difference_closed_form(m, geom, prof),
    }


def cmd_verify(cfg, outdir, cache):
    _needs_fields(cfg)
    key, table = _graded_table(cfg, cache)
    outdir.register(cache.relpath(key))
    modes = list(table.records[: cfg.n_modes])
    if not modes:
        outdir.write_json("verify.json", {"status": "nothing to verify", "n_modes": 0, "modes": []})
        return EXIT_OK, {"modes": 0}, 1.0, ["nothing to verify: no mode below omega_max"]
    geom, prof = table.geometry, table.profile
    args = [(m, geom, prof, cfg.quad_rtol) for m in modes]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            rows = list(ex.map(lambda a: _verify_mode(*a), args))
    else:
        rows = [_verify_mode(*a) for a in args]
    failures = [r for r in rows if "error" in r]
    good = [r for r in rows if "error" not in r]
    warnings = [f"{r['mode']}: {r['error']}" for r in failures]
    c = float(np.mean([r["energy_ratio"] for r in good])) if good else math.nan
    for r in good:
        r["force_difference_ratio"] = r["force_difference_raw_ratio"] / c
    er = np.array([r["energy_ratio"] for r in good])
    fr = np.array([r["force_difference_ratio"] for r in good])
    spread = float((er.max() - er.min()) / c) if good else math.nan
    fdev = float(np.max(np.abs(fr - 1.0))) if good else math.nan
    tol = cfg.verify_tol
    ok_e = spread <= tol
    ok_f = fdev <= tol
    if failures:
        status, code = "solver failure", EXIT_SOLVER
    elif ok_e and ok_f:
        status, code = "ok", EXIT_OK
    else:
        status, code = "tolerance violation", EXIT_TOLERANCE
    doc = {
        "status": status,
        "n_modes": len(modes),
        "tolerance": tol,
        "convention_constant": c,
        "energy_ratio_spread": spread,
        "max_force_ratio_deviation": fdev,
        "energy_check_passed": bool(ok_e),
        "force_check_passed": bool(ok_f),
        "modes": rows,
        "failures": failures,
    }
    outdir.write_json("verify.json", doc)
    return code, {"modes": len(modes)}, c, warnings


def cmd_observables(cfg, outdir, cache):
    obs, warnings, files = compute_observables(cfg, cache)
    doc = dict(obs, units=_units_block(cfg), inputs=echo_inputs(cfg))
    outdir.write_json("observables.json", doc)
    for f in files:
        outdir.register(f)
    return EXIT_OK, {}, 1.0, warnings


SWEEP_COLUMNS = ("param", "value", "observable", "result", "mode_count", "tail_bound", "complete", "status")


def cmd_sweep(cfg, outdir, cache, param, values):
    rows = []
    warnings = []
    files = set()
    failed = False
    for v in values:
        try:
            c2 = cfg.with_overrides(**{param: v})
            obs, w, fl = compute_observables(c2, cache)
        except (ConfigError, UsageError, ValueError) + SOLVER_ERRORS as exc:
            failed = True
            rows.append([param, fmt_float(v), "", "", "", "", "", f"error: {type(exc).__name__}: {exc}"])
            warnings.append(f"{param}={v!r}: {exc}")
            continue
        files.update(fl)
        warnings += [f"{param}={v!r}: {x}" for x in w]
        for name in ("energy", "force_difference", "energy_subtracted"):
            if name not in obs:
                continue
            r = obs[name]
            rows.append([param, fmt_float(v), name, fmt_float(r["value"]), r["mode_count"], fmt_float(r["tail_bound"]),
                         "true" if r["complete"] else "false", "ok"])
    outdir.write_csv(f"sweep_{param}.csv", SWEEP_COLUMNS, rows)
    for f in sorted(files):
        outdir.register(f)
    return (EXIT_SOLVER if failed else EXIT_OK), {"points": len(values)}, 1.0, warnings


def parse_mode(text):
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 4:
        raise UsageError("--mode expects POL,nx,ny,p")
    try:
        pol = Polarization(parts[0].upper())
        nx, ny, p = (int(s) for s in parts[1:])
        ModeIndex(pol, nx, ny, p)
    except ValueError as exc:
        raise UsageError(f"bad --mode {text!r}: {exc}") from None
    return pol, nx, ny, p


def parse_grid(text):
    try:
        g = tuple(int(s) for s in text.split(","))
    except ValueError:
        raise UsageError(f"bad --grid {text!r}") from None
    if len(g) != 3 or min(g) < 1:
        raise UsageError("--grid expects three positive integers nx,ny,nz")
    return g


FIELD_QUANTITIES = ("A", "e", "b", "d", "h")


def field_columns():
    cols = ["x", "y", "z"]
    for q in FIELD_QUANTITIES:
        for c in "xyz":
            cols += [f"{q}_{c}_re", f"{q}_{c}_im"]
    return cols


def field_grid(geometry, grid):
    axes = [np.linspace(0.0, L, n) if n > 1 else np.array([0.5 * L])
            for L, n in zip((geometry.Lx, geometry.Ly, geometry.Lz), grid)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    return X.ravel(), Y.ravel(), Z.ravel()


def cmd_field(cfg, outdir, cache, mode_text, grid_text):
    _needs_fields(cfg)
    pol, nx, ny, p = parse_mode(mode_text)
    grid = parse_grid(grid_text)
    key, table = _graded_table(cfg, cache)
    outdir.register(cache.relpath(key))
    try:
        mode = table.find(pol, nx, ny, p)
    except KeyError:
        raise UsageError(f"mode {pol.value}({nx},{ny},{p}) is not in the spectrum below omega_max") from None
    geom, prof = table.geometry, table.profile
    mode = normalize_mode(mode, geom, prof)
    X, Y, Z = field_grid(geom, grid)
    f = eval_fields(mode, geom, prof, X, Y, Z)
    sc = cfg.field_scales()
    L = cfg.length_out(1.0)
    cols = [X * L, Y * L, Z * L]
    for q in FIELD_QUANTITIES:
        arr = getattr(f, q) * sc[q]
        for c in range(3):
            cols += [arr[:, c].real, arr[:, c].imag]
    data = np.column_stack(cols)
    rows = ([fmt_float(v) for v in r] for r in data)
    outdir.write_csv(f"field_{pol.value}_{nx}_{ny}_{p}.csv", field_columns(), rows)
    return EXIT_OK, {"points": len(X)}, 1.0, []


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, OSError) as exc:
        print(f"gradcav: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    outdir = OutputDir(cfg.out)
    cache = SpectrumCache(cfg.out)
    t0 = time.perf_counter()
    try:
        if args.command == "spectrum":
            code, info, c, warnings = cmd_spectrum(cfg, outdir, cache)
        elif args.command == "verify":
            code, info, c, warnings = cmd_verify(cfg, outdir, cache)
        elif args.command == "observables":
            code, info, c, warnings = cmd_observables(cfg, outdir, cache)
        elif args.command == "sweep":
            try:
                values = [float(s) for s in args.values.split(",") if s.strip()]
            except ValueError:
                raise UsageError(f"bad --values {args.values!r}") from None
            if not values:
                raise UsageError("--values is empty")
            code, info, c, warnings = cmd_sweep(cfg, outdir, cache, args.param, values)
        else:
            code, info, c, warnings = cmd_field(cfg, outdir, cache, args.mode, args.grid)
    except (UsageError, ConfigError) as exc:
        print(f"gradcav: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SOLVER_ERRORS as exc:
        idx = getattr(exc, "index", None)
        where = f" [{idx}]" if idx else ""
        print(f"gradcav: solver failure{where}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    timing = {"wall_seconds": time.perf_counter() - t0, "cache_hits": cache.hits, "cache_misses": cache.misses}
    outdir.write_manifest(args.command, cfg, timing=timing, convention_constant=c, warnings=warnings)
    for w in warnings:
        print(f"gradcav: warning: {w}", file=sys.stderr)
    print(f"gradcav {args.command}: exit {code} {info} -> {cfg.out}")
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
