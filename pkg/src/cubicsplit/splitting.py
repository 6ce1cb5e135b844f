"""Exponent landscape of the dominant Melnikov harmonics.

Works in the logarithmic variable zeta, where every harmonic of a resonant
sequence becomes a shifted and scaled copy of the convex profile
C0(z) = (2 lambda^{-z/2} + lambda^z) / 3.  The lower envelope of these copies
is h1 (the exponent of the maximal splitting distance) and the second lowest
value is h2.  Everything here runs in double precision except the phases
{n phi}, which are reduced modulo 1 from a high-precision phi.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import mpmath
import numpy as np
from mpmath import mp

from .errors import (
    CoincidentDescriptors,
    InsufficientPrimitiveCut,
    NonPositiveEps,
    NonPositiveInputs,
)
from .koch import KochData
from .resonances import PrimitiveRecord, ResonanceConstants

WINDOW_MODES = ("ceil", "floor")


@dataclass(frozen=True)
class HarmonicParams:
    """Scalar data that fixes the envelope of the primary sequence.

    ``phi_hp`` is phi as an mpmath number so that {n phi} stays accurate for
    large n.  ``window`` picks how the real window widths N-/N+ are turned
    into integers.
    """

    rho: float
    gamma_star: float
    lam: float
    delta: float
    phi: float
    theta: float
    psi_hat: float
    K_hat: float
    phi_hp: object = None
    window: str = "ceil"

    def __post_init__(self):
        if not self.rho > 0:
            raise NonPositiveInputs("rho must be positive")
        if self.window not in WINDOW_MODES:
            raise ValueError(f"window must be one of {WINDOW_MODES}")
        if self.phi_hp is None:
            object.__setattr__(self, "phi_hp", mpmath.mpf(self.phi))

    @classmethod
    def from_analysis(cls, koch: KochData, consts: ResonanceConstants, rho: float = 1.0,
                      window: str = "ceil") -> "HarmonicParams":
        return cls(
            rho=float(rho),
            gamma_star=float(consts.gamma_star_min),
            lam=float(koch.lam),
            delta=float(consts.delta),
            phi=float(koch.phi),
            theta=float(consts.theta),
            psi_hat=float(consts.psi_hat),
            K_hat=float(consts.K_hat),
            phi_hp=koch.phi,
            window=window,
        )

    def with_delta(self, delta: float) -> "HarmonicParams":
        return dataclasses.replace(self, delta=float(delta))

    def with_window(self, window: str) -> "HarmonicParams":
        return dataclasses.replace(self, window=window)

    # -- derived constants ----------------------------------------------------

    @cached_property
    def C0(self) -> float:
        return 1.5 * (math.pi * self.rho ** 2 * self.gamma_star) ** (1 / 3)

    @cached_property
    def D0(self) -> float:
        return (math.pi * self.gamma_star / self.rho) ** 2

    @cached_property
    def log3lam(self) -> float:
        return 3 * math.log(self.lam)

    def Lg(self, x):
        return np.log(x) / self.log3lam

    @cached_property
    def xi0(self) -> float:
        lam = self.lam
        return 2 * self.Lg(2 * lam / (math.sqrt(lam) + 1))

    @cached_property
    def J1_0(self) -> float:
        lam = self.lam
        s = (math.sqrt(lam) + 1) / (2 * lam)
        return (2 * s ** (1 / 3) + (1 / s) ** (2 / 3)) / 3

    @cached_property
    def J0_minus(self) -> float:
        return (1 - self.delta) ** (1 / 3)

    @cached_property
    def J1_plus(self) -> float:
        return self.J1_0 * (1 + self.delta) ** (1 / 3)

    @cached_property
    def N_minus(self) -> float:
        d, lam = self.delta, self.lam
        arg = max((1 + d) / (1 - d), 2 * math.sqrt(1 + d) * lam ** (1.5 * (1 - self.xi0)) + 1)
        return math.log(arg) / math.log(lam)

    @cached_property
    def N_plus(self) -> float:
        d, lam = self.delta, self.lam
        inner = (lam ** (1.5 * self.xi0) + 2 * math.sqrt(1 + d)) / (2 * math.sqrt(1 - d))
        arg = max((1 + d) / (1 - d), inner * inner)
        return math.log(arg) / math.log(lam)

    @cached_property
    def window_ints(self) -> tuple[int, int]:
        f = math.ceil if self.window == "ceil" else math.floor
        return int(f(self.N_minus)), int(f(self.N_plus))

    @cached_property
    def zeta0(self) -> float:
        return self.N_minus + self.xi0

    @cached_property
    def zeta_offset(self) -> float:
        """Lg(D0 / K_hat^3), the zeta value of eps = 1."""
        return float(self.Lg(self.D0 / self.K_hat ** 3))

    # -- oscillating factors ----------------------------------------------------

    def frac_nphi(self, n) -> np.ndarray:
        """{n phi} for integer n (array-like), reduced in extended precision."""
        n = np.asarray(n, dtype=np.int64)
        flat = n.ravel()
        uniq, inv = np.unique(flat, return_inverse=True)
        with mp.workdps(40):
            vals = np.array([float(mpmath.frac(int(m) * self.phi_hp)) for m in uniq])
        return vals[inv].reshape(n.shape)

    def beta(self, y, psi=None):
        """1-periodic interpolant 1 + delta cos(2 pi y + 2 psi - theta)."""
        psi = self.psi_hat if psi is None else psi
        return 1 + self.delta * np.cos(2 * np.pi * np.asarray(y) + 2 * psi - self.theta)

    def bbar(self, n, psi=None):
        return self.beta(self.frac_nphi(n), psi)


# -- single-harmonic quantities ---------------------------------------------------------


def melnikov_coeff(k: Sequence[int], divisor: float, eps: float, params: HarmonicParams):
    """(alpha_k, beta_k, L_k) for the harmonic k with small divisor <k, omega>.

    alpha_k uses the approximation that drops the exponentially small part of
    the sinh; L_k is the unapproximated coefficient.
    """
    if not eps > 0:
        raise NonPositiveEps("eps must be positive")
    norm = math.sqrt(sum(x * x for x in k))
    n2 = norm * norm
    gamma = abs(divisor) * n2
    se = math.sqrt(eps)
    beta = params.rho * norm + math.pi * gamma / (2 * n2 * se)
    alpha = 4 * math.pi * gamma / (n2 * se)
    x = abs(divisor) / se
    a = math.pi * x / 2
    # 2 pi x e^{-rho|k|} / sinh(a), written to avoid overflow for large a
    L = 4 * math.pi * x * math.exp(-params.rho * norm - a) / -math.expm1(-2 * a)
    return alpha, beta, L


def eps_min(norm_sq: float, gamma_norm: float, params: HarmonicParams) -> float:
    """eps_k = D0 gamma~_k^2 / |k|^6."""
    if not gamma_norm > 0:
        raise NonPositiveInputs("normalised numerator must be positive")
    return params.D0 * gamma_norm ** 2 / norm_sq ** 3


def g_of_eps(norm_sq: float, gamma_norm: float, eps, params: HarmonicParams):
    """g_k(eps), with beta_k = C0 g_k / eps^{1/6}; minimum gamma~_k^{1/3} at eps_k."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise NonPositiveEps("eps must be positive")
    ek = eps_min(norm_sq, gamma_norm, params)
    return gamma_norm ** (1 / 3) / 3 * (2 * (eps / ek) ** (1 / 6) + (ek / eps) ** (1 / 3))


def zeta_of_eps(eps, params: HarmonicParams):
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise NonPositiveEps("eps must be positive")
    return params.zeta_offset - params.Lg(eps)


def eps_of_zeta(zeta, params: HarmonicParams):
    return params.D0 / (params.K_hat ** 3 * params.lam ** (3 * np.asarray(zeta, dtype=float)))


def cc(zeta, Z, Y, lam: float):
    """Y^{1/3} (2 lam^{-(zeta-Z)/2} + lam^{zeta-Z}) / 3."""
    t = np.asarray(zeta, dtype=float) - Z
    return np.cbrt(Y) * (2 * lam ** (-t / 2) + lam ** t) / 3


def intersect(Z1: float, Y1: float, Z2: float, Y2: float, lam: float) -> float | None:
    """Unique crossing of cc(.; Z1, Y1) and cc(.; Z2, Y2), or None."""
    Z = Z2 - Z1
    W = (Y2 / Y1) ** (1 / 3)
    if Z == 0 and W == 1:
        raise CoincidentDescriptors("identical descriptors")
    lz = lam ** Z
    lo, hi = min(W, W ** -2), max(W, W ** -2)
    if not (lz < lo or lz > hi):
        return None
    num = 2 * lz * (W * lam ** (Z / 2) - 1)
    den = lz - W
    if abs(den) > 1e-14 * max(1.0, abs(lz)):
        ratio = num / den
        if ratio > 0:
            return Z1 + 2 * math.log(ratio) / (3 * math.log(lam))
    return _bisect_crossing(Z1, Y1, Z2, Y2, lam)


def _bisect_crossing(Z1, Y1, Z2, Y2, lam):
    def diff(z):
        return float(cc(z, Z1, Y1, lam) - cc(z, Z2, Y2, lam))

    a, b = min(Z1, Z2) - 50.0, max(Z1, Z2) + 50.0
    fa, fb = diff(a), diff(b)
    if fa == 0:
        return a
    if fa * fb > 0:
        return None
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = diff(m)
        if fm == 0 or b - a < 1e-15 * max(1.0, abs(m)):
            return m
        if fa * fm < 0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def dominance_window(params: HarmonicParams) -> tuple[float, float]:
    return params.N_minus, params.N_plus


# -- descriptor families --------------------------------------------------------------


@dataclass(frozen=True)
class SequenceFamily:
    """Descriptors of one resonant sequence: f*_{s(q,n)} = cc(.; n + shift + Lg b_n, g~ b_n)."""

    q: tuple[int, int]
    gamma_norm: float
    shift: float
    psi: float
    k0: tuple[int, int, int]

    def descriptors(self, n, params: HarmonicParams):
        n = np.asarray(n)
        b = params.bbar(n, self.psi)
        return n + self.shift + params.Lg(b), self.gamma_norm * b


def primary_family(params: HarmonicParams, k0=(0, 0, 1), q=(0, 1)) -> SequenceFamily:
    return SequenceFamily(tuple(q), 1.0, 0.0, params.psi_hat, tuple(k0))


def family_of(record: PrimitiveRecord, params: HarmonicParams) -> SequenceFamily:
    g = float(record.gamma_star) / params.gamma_star
    shift = 3 * float(params.Lg(float(record.K) / params.K_hat)) - 2 * float(params.Lg(g))
    return SequenceFamily(record.q, g, shift, float(record.psi), record.k0)


def families_for(records: Sequence[PrimitiveRecord], params: HarmonicParams, gamma_cut: float,
                 bound: float | None = None) -> list[SequenceFamily]:
    """Essential sequences that can reach below ``bound`` (default J1+).

    Raises InsufficientPrimitiveCut if the enumeration cut is too small to
    guarantee that every such sequence is present.
    """
    bound = params.J1_plus if bound is None else bound
    # a sequence can reach below bound only if gamma^-_q <= gamma* bound^3,
    # and the records are enumerated by gamma^-_q <= gamma_cut
    need = params.gamma_star * bound ** 3
    if gamma_cut < need * (1 - 1e-12):
        raise InsufficientPrimitiveCut(
            f"primitive cut {gamma_cut:.6g} below the required {need:.6g}"
        )
    out = []
    for r in records:
        if not r.essential:
            continue
        if float(r.gamma_minus) <= params.gamma_star * bound ** 3:
            out.append(family_of(r, params))
    return out


def _window_indices(zeta: np.ndarray, shift: float, params: HarmonicParams, extra: int = 0):
    wm, wp = params.window_ints
    n0 = np.ceil(zeta - shift - params.xi0).astype(np.int64)
    offs = np.arange(-wm - extra, wp + extra + 1)
    return n0[:, None] + offs[None, :]


def _family_values(zeta: np.ndarray, fam: SequenceFamily, params: HarmonicParams, extra: int = 0):
    ns = _window_indices(zeta, fam.shift, params, extra)
    Z, Y = fam.descriptors(ns, params)
    vals = cc(zeta[:, None], Z, Y, params.lam)
    vals = np.where(ns >= 0, vals, np.inf)
    return ns, vals


def f1_bar(zeta, params: HarmonicParams):
    """Lower envelope of the primary descriptors; returns (values, minimising n)."""
    z = np.atleast_1d(np.asarray(zeta, dtype=float))
    ns, vals = _family_values(z, primary_family(params), params)
    j = np.argmin(vals, axis=1)
    rows = np.arange(len(z))
    return vals[rows, j], ns[rows, j]


def f1(zeta, params: HarmonicParams, families: Sequence[SequenceFamily]):
    """Lower envelope over all admitted sequences; returns (values, q index, n)."""
    z = np.atleast_1d(np.asarray(zeta, dtype=float))
    best = np.full(len(z), np.inf)
    fam_idx = np.zeros(len(z), dtype=np.int64)
    best_n = np.zeros(len(z), dtype=np.int64)
    rows = np.arange(len(z))
    for i, fam in enumerate(families):
        ns, vals = _family_values(z, fam, params)
        j = np.argmin(vals, axis=1)
        v = vals[rows, j]
        better = v < best
        best = np.where(better, v, best)
        fam_idx = np.where(better, i, fam_idx)
        best_n = np.where(better, ns[rows, j], best_n)
    return best, fam_idx, best_n


def two_lowest(zeta, params: HarmonicParams, families: Sequence[SequenceFamily]):
    """(h1, h2, label1, label2) with labels (family index, n)."""
    z = np.atleast_1d(np.asarray(zeta, dtype=float))
    all_vals, all_fam, all_n = [], [], []
    for i, fam in enumerate(families):
        # one extra index on each side so the runner-up is never cut off
        ns, vals = _family_values(z, fam, params, extra=1)
        all_vals.append(vals)
        all_n.append(ns)
        all_fam.append(np.full(ns.shape, i))
    V = np.concatenate(all_vals, axis=1)
    N = np.concatenate(all_n, axis=1)
    F = np.concatenate(all_fam, axis=1)
    order = np.argsort(V, axis=1, kind="stable")[:, :2]
    rows = np.arange(len(z))[:, None]
    v2 = V[rows, order]
    return v2[:, 0], v2[:, 1], (F[rows, order][:, 0], N[rows, order][:, 0]), (F[rows, order][:, 1], N[rows, order][:, 1])


# -- profiles -------------------------------------------------------------------------


@dataclass(frozen=True)
class Corner:
    zeta: float
    left: tuple[int, int, int]
    right: tuple[int, int, int]
    value: float


@dataclass(frozen=True)
class SplittingProfile:
    zeta: np.ndarray
    eps: np.ndarray
    F1: np.ndarray
    F1_bar: np.ndarray
    F2: np.ndarray
    S1: np.ndarray  # rows (q1, q2, n)
    is_corner: np.ndarray
    corners: tuple[Corner, ...]
    valid: np.ndarray
    strong_sep_holds: bool
    window: str


def _label(families, fi, n) -> tuple[int, int, int]:
    q = families[int(fi)].q
    return (int(q[0]), int(q[1]), int(n))


def h_profiles(zeta_grid, params: HarmonicParams, families: Sequence[SequenceFamily],
               strong_sep: bool | None = None) -> SplittingProfile:
    """Sample h1 = F1, h2 and F1_bar on a zeta grid and insert the corners of F1.

    Corners are located with the closed-form crossing of the two descriptors
    that are dominant on either side of a label change.
    """
    z = np.sort(np.asarray(zeta_grid, dtype=float))
    h1, h2, lab1, _ = two_lowest(z, params, families)
    fb, _ = f1_bar(z, params)
    corners = []
    change = np.nonzero((lab1[0][1:] != lab1[0][:-1]) | (lab1[1][1:] != lab1[1][:-1]))[0]
    for i in change:
        a = (int(lab1[0][i]), int(lab1[1][i]))
        b = (int(lab1[0][i + 1]), int(lab1[1][i + 1]))
        Za, Ya = families[a[0]].descriptors(a[1], params)
        Zb, Yb = families[b[0]].descriptors(b[1], params)
        zs = intersect(float(Za), float(Ya), float(Zb), float(Yb), params.lam)
        if zs is None or not (z[i] <= zs <= z[i + 1]):
            zs = _bisect_between(z[i], z[i + 1], (Za, Ya), (Zb, Yb), params.lam)
        val = float(cc(zs, Za, Ya, params.lam))
        corners.append(Corner(zs, _label(families, *a), _label(families, *b), val))
    if corners:
        cz = np.array([c.zeta for c in corners])
        zz = np.concatenate([z, cz])
        flag = np.concatenate([np.zeros(len(z), bool), np.ones(len(cz), bool)])
        order = np.argsort(zz, kind="stable")
        zz, flag = zz[order], flag[order]
        h1, h2, lab1, _ = two_lowest(zz, params, families)
        fb, _ = f1_bar(zz, params)
        # at a corner the two crossing descriptors tie; report the left label
        corner_at = {c.zeta: c for c in corners}
        for j in np.nonzero(flag)[0]:
            c = corner_at[zz[j]]
            h1[j] = h2[j] = c.value
        z = zz
    else:
        flag = np.zeros(len(z), bool)
    S1 = np.array([_label(families, f, n) for f, n in zip(lab1[0], lab1[1])], dtype=np.int64).reshape(-1, 3)
    if flag.any():
        for j in np.nonzero(flag)[0]:
            S1[j] = corner_at[z[j]].left
    if strong_sep is None:
        strong_sep = bool(np.all(np.abs(h1 - fb) <= 1e-12))
    return SplittingProfile(
        zeta=z, eps=eps_of_zeta(z, params), F1=h1, F1_bar=fb, F2=h2, S1=S1,
        is_corner=flag, corners=tuple(corners), valid=z >= params.zeta0,
        strong_sep_holds=strong_sep, window=params.window,
    )


def _bisect_between(a, b, d1, d2, lam):
    def diff(x):
        return float(cc(x, d1[0], d1[1], lam) - cc(x, d2[0], d2[1], lam))

    fa = diff(a)
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = diff(m)
        if fa * fm <= 0:
            b = m
        else:
            a, fa = m, fm
        if b - a < 1e-15:
            break
    return 0.5 * (a + b)


def profile_on_eps(eps_values, params: HarmonicParams, families) -> SplittingProfile:
    return h_profiles(zeta_of_eps(eps_values, params), params, families)


# -- dominant harmonic vectors ----------------------------------------------------------


def dominant_vector(koch: KochData, family: SequenceFamily, n: int) -> tuple[int, int, int]:
    from . import linalg3

    k = family.k0
    for _ in range(int(n)):
        k = linalg3.matvec(koch.U, k)
    return k


def s1_norm_bounds(params: HarmonicParams) -> tuple[float, float]:
    """Range of |S1(eps)| eps^{1/6} implied by the dominance window.

    Uses |s0(n)|^2 ~ K_hat b lambda^n and n - zeta in [-xi0 - N-, 1 - xi0 + N+].
    """
    lam, d = params.lam, params.delta
    scale = params.D0 ** (1 / 6)
    lo = math.sqrt(1 - d) * scale * lam ** ((-params.xi0 - params.N_minus) / 2)
    hi = math.sqrt(1 + d) * scale * lam ** ((1 - params.xi0 + params.N_plus) / 2)
    return lo, hi


# -- final estimate -------------------------------------------------------------------


@dataclass(frozen=True)
class SplittingEstimate:
    eps: float
    mu: float
    zeta: float
    h1: float
    h2: float
    estimate: float
    log_estimate: float
    eta21: float
    near_corner: bool
    r: float
    r_condition_met: bool
    sharp_bound_mode: bool


def max_splitting_estimate(eps: float, mu: float, params: HarmonicParams,
                           families: Sequence[SequenceFamily], h1_override: float | None = None,
                           near_corner_threshold: float = 0.1) -> SplittingEstimate:
    """mu eps^{-1/3} exp(-C0 h1 / eps^{1/6}) with the dominance gap eta21."""
    if not (eps > 0 and mu > 0):
        raise NonPositiveInputs("eps and mu must be positive")
    z = float(zeta_of_eps(eps, params))
    h1, h2, _, _ = two_lowest(np.array([z]), params, families)
    h1, h2 = float(h1[0]), float(h2[0])
    use = h1 if h1_override is None else float(h1_override)
    e6 = eps ** (1 / 6)
    log_est = math.log(mu) - math.log(eps) / 3 - params.C0 * use / e6
    eta = math.exp(-params.C0 * (h2 - h1) / e6)
    r = math.log(mu) / math.log(eps) if eps != 1 else float("nan")
    return SplittingEstimate(
        eps=eps, mu=mu, zeta=z, h1=h1, h2=h2, estimate=math.exp(log_est), log_estimate=log_est,
        eta21=eta, near_corner=eta > near_corner_threshold, r=r, r_condition_met=bool(r > 3),
        sharp_bound_mode=h1_override is not None,
    )
