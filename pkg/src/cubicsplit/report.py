"""Deterministic CSV/JSON output and matplotlib figures.

CSV files start with ``#`` provenance lines (package version, config hash,
digits) followed by a header row.  Doubles are written with 15 significant
digits and extended-precision values with the configured number of digits;
both conversions round half to even.  Only ``run.json`` carries a timestamp,
so every other file is byte-identical across runs with the same config.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Iterable, Sequence

import mpmath
import numpy as np

from . import __version__
from .pipeline import Analysis, table_records
from .resonances import ScanReport
from .splitting import SplittingEstimate, SplittingProfile, max_splitting_estimate
from .torus import SharpBound, TorusGrid

DOUBLE_DIGITS = 15

PROFILE_COLUMNS = ("zeta", "eps", "F1", "F1_bar", "h2", "S1_q1", "S1_q2", "S1_n", "is_corner")
TORUS_COLUMNS = ("x", "y", "value", "region_n")
SCATTER_COLUMNS = ("ln_norm", "neg_ln_divisor", "sequence_id", "is_primary")
PRIMITIVE_COLUMNS = ("q1", "q2", "k0", "essential", "gamma_minus", "gamma_star", "gamma_plus", "gamma_star_norm")


def fmt_double(x) -> str:
    return format(float(x), f".{DOUBLE_DIGITS}g")


def fmt_mp(x, digits: int) -> str:
    return mpmath.nstr(mpmath.mpf(x), digits, min_fixed=-5, max_fixed=12)


def _header(analysis: Analysis, digits: int, extra: Sequence[str] = ()) -> str:
    lines = [
        f"# cubicsplit {__version__}",
        f"# config {analysis.config.digest()}",
        f"# digits {digits}",
        *(f"# {e}" for e in extra),
    ]
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def _csv_text(header: str, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


# -- tables --------------------------------------------------------------------------


def koch_summary(analysis: Analysis) -> dict:
    k = analysis.koch
    d = analysis.config.precision_digits
    return {
        "T": [list(map(int, row)) for row in k.T],
        "U": [list(map(int, row)) for row in k.U],
        "lambda_coords": [str(c) for c in k.lambda_exact.coords],
        "lambda": {"value": fmt_mp(k.lam, d), "digits": d},
        "phi": {"value": fmt_mp(k.phi, d), "digits": d},
        "mu2": {"value": fmt_mp(k.mu2, d), "digits": d},
        "mu3": {"value": fmt_mp(k.mu3, d), "digits": d},
        "kappa": {"value": fmt_mp(k.kappa, d), "digits": d},
        "norm_T": {"value": fmt_double(k.norm_T), "digits": DOUBLE_DIGITS},
        "sign_s": int(k.field.sign_s),
    }


def constants_summary(analysis: Analysis, sharp: SharpBound | None = None,
                      grid: TorusGrid | None = None) -> dict:
    c, p = analysis.consts, analysis.params
    d = analysis.config.precision_digits
    ext = {
        "delta_field": c.delta, "theta": c.theta, "Z1": c.Z1, "Z2": c.Z2, "Q0": c.Q0,
        "gamma_star": c.gamma_star_min, "gamma_minus": c.gamma_asymptotic,
        "gamma_star_norm_second": c.gamma_star_norm_hathat, "psi_hat": c.psi_hat, "K_hat": c.K_hat,
        "J0_plus": c.J0_plus, "B0_minus": c.B0_minus,
    }
    dbl = {
        "delta_envelope": p.delta, "xi0": p.xi0, "J1_0": p.J1_0, "J0_minus": p.J0_minus,
        "J1_plus": p.J1_plus, "N_minus": p.N_minus, "N_plus": p.N_plus, "zeta0": p.zeta0,
        "C0": p.C0, "D0": p.D0, "rho": p.rho,
    }
    if sharp is not None:
        dbl["J1_star"] = sharp.value
    if grid is not None:
        dbl["J0_minus_observed"] = grid.min
    out = {k: {"value": fmt_mp(v, d), "digits": d} for k, v in ext.items()}
    out.update({k: {"value": fmt_double(v), "digits": DOUBLE_DIGITS} for k, v in dbl.items()})
    out["gamma_star_coords"] = [str(x) for x in c.primary.gamma_star_exact.coords]
    out["q_hat"] = list(c.q_hat)
    out["q_hathat"] = list(c.q_hathat)
    out["weak_sep"] = c.weak_sep
    out["strong_sep"] = c.strong_sep
    out["primary_tie"] = c.primary_tie
    out["window"] = {"mode": p.window, "N_minus": p.window_ints[0], "N_plus": p.window_ints[1]}
    if sharp is not None:
        out["J1_star_point"] = [fmt_double(sharp.x), fmt_double(sharp.y)]
        out["J1_star_labels"] = list(sharp.labels)
    return dict(sorted(out.items()))


def primitives_csv(analysis: Analysis, records=None) -> str:
    d = analysis.config.precision_digits
    records = records if records is not None else table_records(analysis.koch)
    rows = [
        (r.q[0], r.q[1], " ".join(map(str, r.k0)), int(r.essential),
         fmt_mp(r.gamma_minus, d), fmt_mp(r.gamma_star, d), fmt_mp(r.gamma_plus, d),
         fmt_mp(r.gamma_star_norm, d))
        for r in records
    ]
    return _csv_text(_header(analysis, d), PRIMITIVE_COLUMNS, rows)


def profile_csv(analysis: Analysis, prof: SplittingProfile) -> str:
    rows = (
        (fmt_double(z), fmt_double(e), fmt_double(f), fmt_double(fb), fmt_double(h2),
         int(s[0]), int(s[1]), int(s[2]), int(c))
        for z, e, f, fb, h2, s, c in zip(prof.zeta, prof.eps, prof.F1, prof.F1_bar, prof.F2, prof.S1,
                                         prof.is_corner)
    )
    extra = [f"window {prof.window}", f"zeta0 {fmt_double(analysis.params.zeta0)}"]
    return _csv_text(_header(analysis, DOUBLE_DIGITS, extra), PROFILE_COLUMNS, rows)


def torus_csv(analysis: Analysis, grid: TorusGrid) -> str:
    X, Y = np.meshgrid(grid.x, grid.y)
    buf = io.StringIO()
    buf.write(_header(analysis, DOUBLE_DIGITS))
    buf.write(",".join(TORUS_COLUMNS) + "\n")
    data = np.column_stack([X.ravel(), Y.ravel(), grid.values.ravel(), grid.labels.ravel()])
    np.savetxt(buf, data, fmt=["%.15g", "%.15g", "%.15g", "%d"], delimiter=",")
    return buf.getvalue()


def scatter_csv(analysis: Analysis, scan: ScanReport) -> str:
    rows = (
        (fmt_double(a), fmt_double(b), i, int(pr))
        for a, b, i, pr in scan.scatter_rows(analysis.consts.q_hat)
    )
    return _csv_text(_header(analysis, DOUBLE_DIGITS, [f"kmax {scan.k_max}"]), SCATTER_COLUMNS, rows)


def estimate_record(e: SplittingEstimate) -> dict:
    return {
        "eps": fmt_double(e.eps), "mu": fmt_double(e.mu), "zeta": fmt_double(e.zeta),
        "h1": fmt_double(e.h1), "h2": fmt_double(e.h2), "estimate": fmt_double(e.estimate),
        "log_estimate": fmt_double(e.log_estimate), "eta21": fmt_double(e.eta21),
        "near_corner": e.near_corner, "r": fmt_double(e.r), "r_condition_met": e.r_condition_met,
        "sharp_bound_mode": e.sharp_bound_mode, "digits": DOUBLE_DIGITS,
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- figures -------------------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, metadata={"Software": None})


def plot_profile(analysis: Analysis, prof: SplittingProfile, path: Path) -> Path:
    plt = _pyplot()
    p = analysis.params
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(prof.zeta, prof.F2, lw=0.6, color="0.6", label="h2")
    ax.plot(prof.zeta, prof.F1, lw=1.0, color="C0", label="h1 = F1")
    for y, name in ((p.J0_minus, "J0-"), (p.J1_plus, "J1+")):
        ax.axhline(y, ls="--", lw=0.6, color="C3")
        ax.text(prof.zeta[0], y, name, va="bottom", fontsize=8, color="C3")
    ax.axvline(p.zeta0, ls=":", lw=0.6, color="k")
    ax.set_xlabel("zeta")
    ax.set_ylim(p.J0_minus - 0.03, min(prof.F2.max(), p.J1_plus + 0.05))
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
    return path


def plot_torus(analysis: Analysis, grid: TorusGrid, path: Path, sharp: SharpBound | None = None) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 5))
    im = ax.imshow(grid.values, origin="lower", extent=(0, 1, 0, 1), cmap="viridis", aspect="equal")
    ax.contour(grid.x, grid.y, grid.labels, levels=np.unique(grid.labels)[:-1] + 0.5,
               colors="w", linewidths=0.4)
    if sharp is not None:
        ax.plot([sharp.x], [sharp.y], "r+", ms=10)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
    return path


def plot_scatter(analysis: Analysis, scan: ScanReport, path: Path) -> Path:
    plt = _pyplot()
    rows = np.array([(a, b, pr) for a, b, _, pr in scan.scatter_rows(analysis.consts.q_hat)])
    fig, ax = plt.subplots(figsize=(6, 4.5))
    sec = rows[:, 2] == 0
    ax.scatter(rows[sec, 0], rows[sec, 1], s=1, color="0.6", label="secondary")
    ax.scatter(rows[~sec, 0], rows[~sec, 1], s=6, color="C3", label="primary")
    x = np.linspace(0, rows[:, 0].max(), 50)
    r = analysis.consts.primary
    for g in (r.gamma_minus, r.gamma_plus):
        ax.plot(x, 2 * x - np.log(float(g)), lw=0.6, color="C0")
    ax.set_xlabel("ln|k|")
    ax.set_ylabel("-ln|<k, omega>|")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
    return path


# -- bundle --------------------------------------------------------------------------


@dataclass
class ReportBundle:
    out_dir: Path
    files: dict[str, Path] = dc_field(default_factory=dict)
    koch: dict = dc_field(default_factory=dict)
    constants: dict = dc_field(default_factory=dict)
    estimates: list = dc_field(default_factory=list)

    def add(self, name: str, path: Path):
        self.files[name] = path


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def write_bundle(analysis: Analysis, out_dir: str | Path, *, scan: ScanReport | None = None,
                 profile: SplittingProfile | None = None, grid: TorusGrid | None = None,
                 sharp: SharpBound | None = None, figures: bool = True) -> ReportBundle:
    out = Path(out_dir)
    b = ReportBundle(out)
    b.koch = koch_summary(analysis)
    b.constants = constants_summary(analysis, sharp, grid)
    b.add("koch", _write(out / "koch.json", dumps(b.koch)))
    b.add("constants", _write(out / "constants.json", dumps(b.constants)))
    b.add("primitives", _write(out / "primitives.csv", primitives_csv(analysis)))
    if profile is not None:
        b.add("profile", _write(out / "profile.csv", profile_csv(analysis, profile)))
        if figures:
            b.add("profile_png", plot_profile(analysis, profile, out / "profile.png"))
    if grid is not None:
        b.add("torus", _write(out / "torus.csv", torus_csv(analysis, grid)))
        if figures:
            b.add("torus_png", plot_torus(analysis, grid, out / "torus.png", sharp))
    if scan is not None:
        b.add("scatter", _write(out / "scatter.csv", scatter_csv(analysis, scan)))
        if figures:
            b.add("scatter_png", plot_scatter(analysis, scan, out / "scatter.png"))
    mu = analysis.config.mu
    for eps in analysis.config.eps_values:
        e = max_splitting_estimate(eps, mu if mu is not None else eps ** 4, analysis.params,
                                   analysis.families)
        b.estimates.append(estimate_record(e))
    b.add("estimates", _write(out / "estimates.json", dumps(b.estimates)))
    manifest = {
        "version": __version__,
        "config_hash": analysis.config.digest(),
        "config": analysis.config.to_dict(),
        "timestamp": _timestamp(),
        "files": {name: {"path": p.name, "sha256": hashlib.sha256(p.read_bytes()).hexdigest()}
                  for name, p in sorted(b.files.items())},
    }
    b.add("run", _write(out / "run.json", dumps(manifest)))
    return b
