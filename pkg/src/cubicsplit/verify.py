"""Golden-vector acceptance suite: measured vs expected values per criterion."""

from __future__ import annotations

import math
import random
import time
from dataclasses import asdict, dataclass, field as dc_field
from typing import Callable

import mpmath
import numpy as np
from mpmath import mp

from . import linalg3
from .config import AnalysisConfig, preset
from .field import CubicField
from .koch import principal_koch
from .pipeline import Analysis, run_analyze, table_records
from .resonances import (
    brute_scan,
    enumerate_primitives,
    lower_bound,
    sequence,
    verify_scan,
)
from .splitting import (
    dominant_vector,
    f1,
    f1_bar,
    h_profiles,
    max_splitting_estimate,
    s1_norm_bounds,
    two_lowest,
    zeta_of_eps,
)
from .torus import chi, j1_star, torus_grid, upsilon

# golden reference values
GOLDEN_T = ((1, 0, 1), (1, 0, 0), (0, 1, 0))
GOLDEN_TABLE = {
    (0, 0, 1): (0.345858, 0.486749, 0.627640, 1),
    (-1, 2, 0): (1.037575, 1.460248, 1.882920, 3),
    (-2, 1, 2): (3.112725, 4.380743, 5.648761, 9),
    (0, 2, -2): (2.766867, 3.893994, 5.021121, 8),
}
SMALL_N_EXCEPTIONS = 10

# fields used for the exact-arithmetic checks, beyond the golden one
EXTRA_FIELDS = (
    (1, 1, 0, 0, 0, 1),
    (1, 0, 1, 0, 0, 1),
    (2, 0, 0, 0, 0, 1),
    (1, -1, 0, 1, 1, 1),
)


@dataclass
class Check:
    name: str
    measured: object
    expected: object
    tolerance: object
    passed: bool | None
    detail: str = ""


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = dc_field(default_factory=list)
    runtime: float = 0.0
    applicable: bool = True
    note: str = ""

    @property
    def passed(self) -> bool | None:
        if not self.applicable:
            return None
        return all(c.passed for c in self.checks if c.passed is not None)

    def line(self) -> str:
        status = "N/A " if self.passed is None else ("PASS" if self.passed else "FAIL")
        failing = [c for c in self.checks if c.passed is False]
        extra = ""
        if failing:
            extra = "; " + "; ".join(
                f"{c.name}: measured {_short(c.measured)} expected {_short(c.expected)} tol {_short(c.tolerance)}"
                for c in failing
            )
        na = [c.name for c in self.checks if c.passed is None]
        if na:
            extra += "; not applicable: " + ", ".join(na)
        return f"[{status}] criterion {self.number}: {self.title} ({self.runtime:.2f}s){extra}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        for c in d["checks"]:
            for key in ("measured", "expected", "tolerance"):
                c[key] = _jsonable(c[key])
        return d


def _short(x) -> str:
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def _jsonable(x):
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    if isinstance(x, float):
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    try:
        return float(x)
    except (TypeError, ValueError):
        return str(x)


class Context:
    """Shared state: one analysis run plus optional tolerance override."""

    def __init__(self, config: AnalysisConfig, tolerance: float | None = None):
        self.config = config
        self.tolerance = tolerance
        self.analysis: Analysis = run_analyze(config)
        self.diagnostic = config.delta_override is not None

    def tol(self, t: float) -> float:
        return t if self.tolerance is None else self.tolerance

    def approx(self, name, measured, expected, tol) -> Check:
        tol = self.tol(tol)
        m = float(measured)
        ok = abs(m - float(expected)) <= tol
        return Check(name, m, float(expected), tol, bool(ok), f"delta {abs(m - float(expected)):.3g}")

    def at_most(self, name, measured, limit, tol=0.0) -> Check:
        tol = self.tol(tol)
        m = float(measured)
        return Check(name, m, f"<= {float(limit):.9g}", tol, bool(m <= float(limit) + tol))

    def at_least(self, name, measured, limit, tol=0.0) -> Check:
        tol = self.tol(tol)
        m = float(measured)
        return Check(name, m, f">= {float(limit):.9g}", tol, bool(m >= float(limit) - tol))

    @staticmethod
    def flag(name, value: bool, expected: bool = True, detail: str = "") -> Check:
        return Check(name, bool(value), expected, None, bool(value) == expected, detail)


# -- criteria ------------------------------------------------------------------------


def c1_koch(ctx: Context) -> CriterionResult:
    res = CriterionResult(1, "principal Koch matrix")
    t = time.perf_counter()
    koch = principal_koch(ctx.config.field())
    elapsed = time.perf_counter() - t
    field = koch.field
    res.checks += [
        ctx.flag("T", koch.T == GOLDEN_T, detail=str(koch.T)),
        ctx.approx("lambda", koch.lam, 1.465571, 1e-6),
        ctx.flag("lambda = 1 + Omega^2", koch.lambda_exact == field.element(1, 0, 1)),
        ctx.approx("phi", koch.phi, 0.590935, 1e-6),
        ctx.at_most("runtime_s", elapsed, 1.0),
    ]
    return res


def c2_oscillation(ctx: Context) -> CriterionResult:
    res = CriterionResult(2, "oscillation constants")
    a = ctx.analysis
    osc, field = a.osc, a.field
    target = field.element(-1, 5, -5)
    with mp.workdps(field.dps):
        gap = abs(osc.delta ** 2 - target.to_real())
    res.checks += [
        ctx.approx("delta", osc.delta, 0.289453, 1e-6),
        ctx.flag("delta^2 = -1 + 5 Omega - 5 Omega^2 (exact)", osc.delta_sq_exact == target),
        ctx.at_most("|delta^2 - (-1 + 5 Omega - 5 Omega^2)|", gap, 1e-12),
        ctx.approx("theta", osc.theta, -1.054837, 1e-5),
        ctx.approx("psi_qhat", a.consts.psi_hat, -2.007416, 1e-5),
    ]
    return res


def c3_primitives(ctx: Context) -> CriterionResult:
    res = CriterionResult(3, "primitive table")
    a = ctx.analysis
    t = time.perf_counter()
    rows = {r.k0: r for r in table_records(a.koch)}
    for k0, (gm, gs, gp, gn) in GOLDEN_TABLE.items():
        r = rows.get(k0)
        if r is None:
            res.checks.append(Check(f"k0={k0} present", False, True, None, False))
            continue
        for name, m, e in (("gamma-", r.gamma_minus, gm), ("gamma*", r.gamma_star, gs),
                           ("gamma+", r.gamma_plus, gp), ("gamma~*", r.gamma_star_norm, gn)):
            res.checks.append(ctx.approx(f"{name} k0={k0}", m, e, 1e-5))
    g = a.consts.primary
    res.checks.append(ctx.approx("gamma*", g.gamma_star, 0.486749, 1e-6))
    res.checks.append(ctx.flag("gamma* = (2/31)(5 + Omega + 4 Omega^2) (exact)",
                               g.gamma_star_exact == a.field.element(10, 2, 8) / 31))
    bound = 1.274218
    res.checks.append(ctx.approx("lower bound at |q|=3", lower_bound(a.koch, 3), bound, 1e-5))
    # complete up to gamma^- <= 1.3, so any |q| >= 3 primitive below the bound would appear
    far = [r for r in enumerate_primitives(a.koch, 1.3) if r.norm_q >= 3]
    smallest = min((float(r.gamma_minus) for r in far), default=math.inf)
    res.checks.append(ctx.at_least("min gamma- over |q|>=3 with gamma- <= 1.3", smallest, bound, 1e-5))
    res.checks.append(ctx.at_most("runtime_s", time.perf_counter() - t, 5.0))
    return res


def c4_asymptotic(ctx: Context) -> CriterionResult:
    res = CriterionResult(4, "asymptotic Diophantine constant")
    a = ctx.analysis
    g = a.consts.primary
    samples = sequence(a.koch, g, 40)
    lam = float(a.koch.lam)
    gstar = float(g.gamma_star)
    mins = min(float(s.gamma) for s in samples[20:41])
    res.checks.append(ctx.approx("min gamma_{s0(n)}, n in [20,40]", mins, 0.345858, 1e-3))
    scaled = [abs(float(s.gamma) - gstar * float(s.b_model)) * lam ** (1.5 * s.n) for s in samples]
    early = max(scaled[5:21])
    late = max(scaled[21:41])
    # bounded: the tail does not grow past the level reached early on
    res.checks.append(ctx.at_most("max residual*lambda^(3n/2), n in [21,40]", late, 2 * early))
    res.note = f"max scaled residual on [5,20] = {early:.6g}"
    return res


def c5_scan(ctx: Context, k_max: int = 200) -> CriterionResult:
    res = CriterionResult(5, "brute-scan coverage")
    a = ctx.analysis
    t = time.perf_counter()
    scan = brute_scan(a.koch, k_max)
    bad = verify_scan(a.koch, scan)
    elapsed = time.perf_counter() - t
    ctx.scan = scan
    g = a.consts.primary
    gm, gp = float(g.gamma_minus), float(g.gamma_plus)
    prim = [p for p in scan.points if p.q == a.consts.q_hat]
    outside = sorted((p.n, p.k, p.gamma) for p in prim if not (gm <= p.gamma <= gp))
    res.checks += [
        ctx.flag("every quasi-resonance reproduced as sign*U^n k0(q)", not bad,
                 detail=f"{len(bad)} unmatched of {len(scan.points)}"),
        ctx.flag("every q reached is primitive", not scan.nonprimitive_q),
        ctx.at_most("largest n outside [gamma-, gamma+] (primary)",
                    max((n for n, _, _ in outside), default=0), SMALL_N_EXCEPTIONS),
        ctx.at_most("runtime_s", elapsed, 60.0),
    ]
    res.note = "exceptions: " + ", ".join(f"n={n} k={k} gamma={gm_:.6f}" for n, k, gm_ in outside)
    return res


def c6_envelope(ctx: Context) -> CriterionResult:
    res = CriterionResult(6, "envelope constants")
    a = ctx.analysis
    p, c = a.params, a.consts
    if ctx.diagnostic:
        # include the crossings n + xi0, where the maxima sit
        z = np.concatenate([np.linspace(p.zeta0, p.zeta0 + 40, 10_000),
                            np.arange(math.ceil(p.zeta0), math.ceil(p.zeta0) + 40) + p.xi0])
        fb, _ = f1_bar(z, p)
        res.checks += [
            ctx.approx("min F1_bar (delta=0)", fb.min(), 1.0, 1e-6),
            ctx.approx("max F1_bar (delta=0)", fb.max(), p.J1_0, 1e-6),
            ctx.approx("J1^(0)", p.J1_0, 1.009141, 1e-5),
        ]
        return res
    for name, m, e in (("xi0", p.xi0, 0.492049), ("J1^(0)", p.J1_0, 1.009141),
                       ("J0-", p.J0_minus, 0.892341), ("J1+", p.J1_plus, 1.098383),
                       ("J0+", c.J0_plus, 1.088433), ("B0-", c.B0_minus, 1.286979)):
        res.checks.append(ctx.approx(name, m, e, 1e-5))
    res.checks.append(ctx.approx("N-", p.N_minus, 3.65, 0.01))
    res.checks.append(ctx.approx("N+", p.N_plus, 3.97, 0.01))
    res.checks.append(ctx.flag("strong separation", c.strong_sep))
    z = np.linspace(0.0, p.zeta0 + 40, 10_000)
    v, _, _ = f1(z, p, a.families)
    vb, _ = f1_bar(z, p)
    res.checks.append(ctx.at_most("max |F1 - F1_bar| on 1e4 points", np.abs(v - vb).max(), 1e-9))
    return res


def c7_sharp(ctx: Context, res_: int = 1024) -> CriterionResult:
    res = CriterionResult(7, "sharp supremum J1*")
    p = ctx.analysis.params
    t = time.perf_counter()
    grid = torus_grid(p, res_)
    sb = j1_star(p, grid)
    elapsed = time.perf_counter() - t
    ctx.grid, ctx.sharp = grid, sb
    if ctx.diagnostic:
        res.checks.append(ctx.approx("J1* (delta=0)", sb.value, p.J1_0, 5e-5))
    else:
        res.checks.append(ctx.approx("J1*", sb.value, 1.010619, 5e-5))
        res.checks.append(ctx.flag("argmax at chi_-1/chi_1/chi_2 confluence",
                                   set(sb.labels) == {-1, 1, 2}, detail=str(sb.labels)))
    res.checks.append(ctx.at_most("runtime_s", elapsed, 60.0))
    return res


def c8_interpolation(ctx: Context) -> CriterionResult:
    res = CriterionResult(8, "quasi-periodic interpolation")
    p = ctx.analysis.params
    z = np.linspace(p.zeta0, p.zeta0 + 40, 1000)
    fb, _ = f1_bar(z, p)
    with mp.workdps(40):
        y = np.array([float(mpmath.frac(mpmath.mpf(float(x)) * p.phi_hp)) for x in z])
    u = upsilon(z, y, p)
    res.checks.append(ctx.at_most("max |Upsilon(zeta,{phi zeta}) - F1_bar|", np.abs(u - fb).max(), 1e-10))
    rng = np.random.default_rng(0)
    xs, ys = rng.random(200), rng.random(200)
    gap = 0.0
    for n in (-3, 0, 2, 5):
        gap = max(gap, float(np.abs(chi(xs + 1, ys, n, p) - chi(xs, ys, n - 1, p)).max()))
    res.checks.append(ctx.at_most("max |chi_n(x+1,y) - chi_{n-1}(x,y)|", gap, 1e-12))
    w = np.linspace(p.zeta0, p.zeta0 + 22, 22_001)
    base, _ = f1_bar(w, p)
    shift1, _ = f1_bar(w + 1, p)
    d1 = float(np.abs(shift1 - base).max())
    if ctx.diagnostic:
        res.checks.append(ctx.at_most("max |F1_bar(zeta+1) - F1_bar(zeta)| (1-periodic)", d1, 1e-9))
        res.checks.append(Check("max |F1_bar(zeta+1) - F1_bar(zeta)| > 1e-3 (non-periodicity)", d1,
                                "> 0.001", None, None, "not applicable for delta = 0"))
    else:
        shift22, _ = f1_bar(w + 22, p)
        res.checks.append(ctx.at_most("max |F1_bar(zeta+22) - F1_bar(zeta)|",
                                      np.abs(shift22 - base).max(), 0.02))
        res.checks.append(ctx.at_least("max |F1_bar(zeta+1) - F1_bar(zeta)|", d1, 1e-3))
    return res


def _exact_checks(field: CubicField, rng: random.Random) -> tuple[bool, bool]:
    koch = principal_koch(field)
    f = koch.field
    om = f.omega_vector
    lam = koch.lambda_exact
    Tw = tuple(sum((f.element(koch.T[i][j]) * om[j] for j in range(3)), f.zero) for i in range(3))
    eigen = all(Tw[i] == lam * om[i] for i in range(3))
    lam_inv = 1 / lam
    contraction = True
    for _ in range(25):
        k = tuple(rng.randint(-50, 50) for _ in range(3))
        if not any(k):
            continue
        if f.dot(linalg3.matvec(koch.U, k)) != f.dot(k) * lam_inv:
            contraction = False
    return eigen, contraction


def c9_properties(ctx: Context) -> CriterionResult:
    res = CriterionResult(9, "exact-arithmetic and envelope properties")
    a = ctx.analysis
    p = a.params
    rng = random.Random(9)
    fields = [a.field] + [CubicField(*c, precision_digits=a.config.precision_digits) for c in EXTRA_FIELDS]
    eig_ok = con_ok = True
    for f in fields:
        e, c = _exact_checks(f, rng)
        eig_ok &= e
        con_ok &= c
    res.checks.append(ctx.flag(f"T omega = lambda omega exactly ({len(fields)} fields)", eig_ok))
    res.checks.append(ctx.flag(f"<U k, omega> = <k, omega>/lambda exactly ({len(fields)} fields)", con_ok))

    z = np.linspace(p.zeta0, p.zeta0 + 40, 10_000)
    v, _, _ = f1(z, p, a.families)
    vb, _ = f1_bar(z, p)
    res.checks.append(ctx.at_least("min (F1 - J0-)", (v - p.J0_minus).min(), 0.0, 1e-9))
    res.checks.append(ctx.at_most("max (F1 - F1_bar)", (v - vb).max(), 0.0, 1e-9))
    res.checks.append(ctx.at_most("max (F1_bar - J1+)", (vb - p.J1_plus).max(), 0.0, 1e-9))

    prof = h_profiles(np.arange(p.zeta0, p.zeta0 + 40, 1e-3), p, a.families)
    duality = 0.0
    for c in prof.corners:
        h1, h2, _, _ = two_lowest(np.array([c.zeta]), p, a.families)
        duality = max(duality, float(h2[0] - h1[0]))
    res.checks.append(ctx.at_most(f"max |h1 - h2| at {len(prof.corners)} corners", duality, 1e-8))

    eps = np.logspace(-12, -2, 301)
    zs = zeta_of_eps(eps, p)
    _, fam_idx, ns = f1(zs, p, a.families)
    scaled = []
    for e, fi, n in zip(eps, fam_idx, ns):
        k = dominant_vector(a.koch, a.families[int(fi)], int(n))
        scaled.append(math.sqrt(sum(x * x for x in k)) * e ** (1 / 6))
    c1, c2 = s1_norm_bounds(p)
    res.checks.append(ctx.at_least("min |S1| eps^(1/6)", min(scaled), c1))
    res.checks.append(ctx.at_most("max |S1| eps^(1/6)", max(scaled), c2))
    return res


def c10_estimate(ctx: Context, eps: float = 1e-6) -> CriterionResult:
    res = CriterionResult(10, "splitting estimate and dominance gap")
    a = ctx.analysis
    p = a.params
    mu = eps ** 4
    est = max_splitting_estimate(eps, mu, p, a.families)
    direct = mu / eps ** (1 / 3) * math.exp(-p.C0 * est.h1 / eps ** (1 / 6))
    res.checks.append(ctx.at_most("relative gap of estimate vs mu eps^(-1/3) exp(-C0 h1/eps^(1/6))",
                                  abs(est.estimate - direct) / direct, 1e-12))
    z = float(zeta_of_eps(eps, p))
    prof = h_profiles(np.arange(z - 2, z + 2, 1e-3), p, a.families)
    dist = min((abs(c.zeta - z) for c in prof.corners), default=math.inf)
    res.checks.append(ctx.at_least("distance in zeta to nearest corner", dist, 0.1))
    res.checks.append(ctx.at_most("eta21 at eps=1e-6", est.eta21, 1e-3))
    res.note = (f"zeta={z:.6f} h1={est.h1:.6f} h2={est.h2:.6f} C0={p.C0:.6f}; "
                f"eta21 < 1e-3 needs h2 - h1 > {math.log(1e3) * eps ** (1 / 6) / p.C0:.4f}")
    return res


CRITERIA: tuple[Callable[[Context], CriterionResult], ...] = (
    c1_koch, c2_oscillation, c3_primitives, c4_asymptotic, c5_scan,
    c6_envelope, c7_sharp, c8_interpolation, c9_properties, c10_estimate,
)


def run_verify(preset_name: str = "cubic-golden", tolerance: float | None = None,
               only: set[int] | None = None, config: AnalysisConfig | None = None) -> list[CriterionResult]:
    cfg = config if config is not None else preset(preset_name)
    ctx = Context(cfg, tolerance)
    out = []
    for i, fn in enumerate(CRITERIA, start=1):
        if only and i not in only:
            continue
        t = time.perf_counter()
        r = fn(ctx)
        r.runtime = time.perf_counter() - t
        out.append(r)
    return out


def all_passed(results: list[CriterionResult]) -> bool:
    return all(r.passed is not False for r in results)
