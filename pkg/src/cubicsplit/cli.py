"""Command-line front end.

Exit codes: 0 success, 1 acceptance failure, 2 input error, 3 internal fault.
Global flags go before the subcommand.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, config as cfgmod, report
from .errors import InputError, InternalFault
from .pipeline import Analysis, run_analyze, table_records
from .resonances import brute_scan, enumerate_primitives, verify_scan
from .splitting import h_profiles, max_splitting_estimate
from .torus import j1_star, torus_grid
from .verify import all_passed, run_verify

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cubicsplit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", metavar="PATH", help="JSON or TOML analysis config")
    p.add_argument("--preset", metavar="NAME", help="named config, e.g. cubic-golden")
    p.add_argument("--precision", type=int, metavar="N", help="significant digits for extended precision")
    p.add_argument("--out", metavar="DIR", help="output directory (default: out)")
    p.add_argument("--json", action="store_true", help="print machine-readable JSON")
    p.add_argument("--window", choices=("ceil", "floor"), help="dominance window rounding")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("koch", help="principal Koch matrix and spectral data")

    sp = sub.add_parser("primitives", help="primitive vectors and their constants")
    sp.add_argument("--gamma-cut", type=float, help="list primitives with gamma- below this value")

    sp = sub.add_parser("scan", help="brute-force quasi-resonance scan")
    sp.add_argument("--kmax", type=int, help="largest |k| scanned")
    sp.add_argument("--scatter", metavar="CSV", help="write scatter data here")

    sp = sub.add_parser("profile", help="h1/h2 envelope on a zeta grid")
    sp.add_argument("--zeta-min", type=float)
    sp.add_argument("--zeta-max", type=float)
    sp.add_argument("--step", type=float)
    sp.add_argument("--out", dest="out_file", metavar="CSV")

    sp = sub.add_parser("torus", help="torus interpolant and its extrema")
    sp.add_argument("--res", type=int)
    sp.add_argument("--out", dest="out_file", metavar="CSV")

    sp = sub.add_parser("estimate", help="maximal splitting estimate at one eps")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--mu", type=float, help="perturbation size (default eps^4)")
    sp.add_argument("--sharp", action="store_true", help="use J1* in place of h1")

    sub.add_parser("analyze", help="run everything and write the report bundle")

    sp = sub.add_parser("verify", help="replay the acceptance suite on a preset")
    sp.add_argument("--tolerance", type=float, help="override every tolerance (negative test)")
    sp.add_argument("--only", type=int, nargs="+", help="criterion numbers to run")
    return p


def load_config(args) -> cfgmod.AnalysisConfig:
    if args.config:
        cfg = cfgmod.load(args.config)
    else:
        cfg = cfgmod.preset(args.preset or "cubic-golden")
    changes = {}
    if args.precision is not None:
        changes["precision_digits"] = args.precision
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.window is not None:
        changes["window"] = args.window
    for attr, key in (("zeta_min", "zeta_min"), ("zeta_max", "zeta_max"), ("step", "zeta_step"),
                      ("res", "torus_res"), ("kmax", "kmax"), ("gamma_cut", "gamma_cut")):
        v = getattr(args, attr, None)
        if v is not None:
            changes[key] = v
    return cfg.replace(**changes) if changes else cfg


def _emit(args, payload: dict, text: str):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def cmd_koch(args, a: Analysis) -> int:
    s = report.koch_summary(a)
    text = "\n".join([
        "T = " + str(s["T"]),
        "U = " + str(s["U"]),
        "lambda = " + s["lambda"]["value"] + "  (coords " + ", ".join(s["lambda_coords"]) + ")",
        "phi = " + s["phi"]["value"],
        "kappa = " + s["kappa"]["value"],
    ])
    _emit(args, s, text)
    return EXIT_OK


def cmd_primitives(args, a: Analysis) -> int:
    recs = (enumerate_primitives(a.koch, args.gamma_cut) if args.gamma_cut is not None
            else table_records(a.koch))
    text = report.primitives_csv(a, recs)
    out = Path(a.config.out_dir) / "primitives.csv"
    report._write(out, text)
    payload = [{"q": list(r.q), "k0": list(r.k0), "essential": r.essential,
                "gamma_minus": float(r.gamma_minus), "gamma_star": float(r.gamma_star),
                "gamma_plus": float(r.gamma_plus), "gamma_star_norm": float(r.gamma_star_norm)}
               for r in recs]
    _emit(args, {"primitives": payload, "file": str(out)}, text.rstrip())
    return EXIT_OK


def cmd_scan(args, a: Analysis) -> int:
    scan = brute_scan(a.koch, a.config.kmax)
    bad = verify_scan(a.koch, scan)
    if args.scatter:
        report._write(Path(args.scatter), report.scatter_csv(a, scan))
        if not args.no_figures:
            report.plot_scatter(a, scan, Path(args.scatter).with_suffix(".png"))
    payload = {
        "kmax": scan.k_max, "points": len(scan.points), "sequences": len(scan.sequences),
        "min_gamma": scan.min_gamma, "argmin_k": list(scan.argmin_k),
        "unmatched": len(bad), "exact_fallbacks": scan.exact_fallbacks,
    }
    _emit(args, payload, "\n".join(f"{k}: {v}" for k, v in payload.items()))
    return EXIT_OK if not bad else EXIT_INTERNAL


def cmd_profile(args, a: Analysis) -> int:
    prof = h_profiles(a.zeta_grid(), a.params, a.families)
    out = Path(args.out_file) if args.out_file else Path(a.config.out_dir) / "profile.csv"
    report._write(out, report.profile_csv(a, prof))
    if not args.no_figures:
        report.plot_profile(a, prof, out.with_suffix(".png"))
    payload = {"file": str(out), "points": int(len(prof.zeta)), "corners": len(prof.corners),
               "F1_min": float(prof.F1.min()), "F1_max": float(prof.F1.max()),
               "zeta0": a.params.zeta0, "window": prof.window}
    _emit(args, payload, "\n".join(f"{k}: {v}" for k, v in payload.items()))
    return EXIT_OK


def cmd_torus(args, a: Analysis) -> int:
    grid = torus_grid(a.params, a.config.torus_res)
    sb = j1_star(a.params, grid)
    out = Path(args.out_file) if args.out_file else Path(a.config.out_dir) / "torus.csv"
    report._write(out, report.torus_csv(a, grid))
    if not args.no_figures:
        report.plot_torus(a, grid, out.with_suffix(".png"), sb)
    payload = {"file": str(out), "resolution": a.config.torus_res, "min": grid.min,
               "J0_minus": a.params.J0_minus, "J1_star": sb.value, "argmax": [sb.x, sb.y],
               "labels": list(sb.labels)}
    _emit(args, payload, "\n".join(f"{k}: {v}" for k, v in payload.items()))
    return EXIT_OK


def cmd_estimate(args, a: Analysis) -> int:
    mu = args.mu if args.mu is not None else args.eps ** 4
    override = None
    if args.sharp:
        override = j1_star(a.params, torus_grid(a.params, a.config.torus_res)).value
    e = max_splitting_estimate(args.eps, mu, a.params, a.families, h1_override=override)
    rec = report.estimate_record(e)
    _emit(args, rec, "\n".join(f"{k}: {v}" for k, v in rec.items()))
    return EXIT_OK


def cmd_analyze(args, a: Analysis) -> int:
    prof = h_profiles(a.zeta_grid(), a.params, a.families)
    grid = torus_grid(a.params, a.config.torus_res)
    sb = j1_star(a.params, grid)
    scan = brute_scan(a.koch, a.config.kmax)
    b = report.write_bundle(a, a.config.out_dir, scan=scan, profile=prof, grid=grid, sharp=sb,
                            figures=not args.no_figures)
    payload = {"out_dir": str(b.out_dir), "files": {k: str(v) for k, v in sorted(b.files.items())}}
    _emit(args, payload, "\n".join(f"{k}: {v}" for k, v in sorted(b.files.items())))
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = load_config(args) if args.config else None
    name = args.preset or "cubic-golden"
    results = run_verify(name, tolerance=args.tolerance, only=set(args.only or ()), config=cfg)
    if args.json:
        print(json.dumps([r.to_dict() for r in results], indent=2))
    else:
        for r in results:
            print(r.line())
            if r.note:
                print("    " + r.note)
    return EXIT_OK if all_passed(results) else EXIT_FAIL


COMMANDS = {
    "koch": cmd_koch, "primitives": cmd_primitives, "scan": cmd_scan, "profile": cmd_profile,
    "torus": cmd_torus, "estimate": cmd_estimate, "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        a = run_analyze(load_config(args))
        return COMMANDS[args.command](args, a)
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InternalFault as exc:
        print(f"internal fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ValueError, ZeroDivisionError) as exc:
        # library value errors not tied to user input (e.g. an undersized primitive cut)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
