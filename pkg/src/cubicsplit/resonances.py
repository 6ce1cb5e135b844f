"""Quasi-resonances, resonant sequences and their asymptotic constants.

Integer vectors k with |<k, omega>| < 1/2 are organised into sequences
s(q, n) = U^n k0(q) started at primitive vectors k0(q).  Small divisors are
kept as exact field elements and only converted to reals for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Sequence

import mpmath
from mpmath import mp

from . import linalg3
from .errors import (
    DegenerateProjection,
    DeltaOutOfRange,
    EmptyPrimitiveSet,
    HalfIntegerTie,
)
from .field import CubicField, FieldElement
from .koch import KochData


# -- basic quasi-resonance data ---------------------------------------------------


@dataclass(frozen=True)
class QuasiResonance:
    k: tuple[int, int, int]
    divisor_exact: FieldElement
    divisor: object
    gamma_k: object
    norm_sq: int


def in_half_space(k: Sequence[int]) -> bool:
    """Membership in the set of representatives of k ~ -k (k2 > 0 first)."""
    k1, k2, k3 = k
    return k2 >= 1 or (k2 == 0 and k3 >= 1) or (k2 == 0 and k3 == 0 and k1 >= 0)


def in_half_plane(q: Sequence[int]) -> bool:
    q1, q2 = q
    return q1 >= 1 or (q1 == 0 and q2 >= 1)


def exact_floor(x: FieldElement) -> int:
    """floor of the real embedding, certified by exact comparisons."""
    f = int(mpmath.floor(x.to_real()))
    while x < f:
        f -= 1
    while x >= f + 1:
        f += 1
    return f


def exact_rint(x: FieldElement) -> int:
    f = exact_floor(x)
    frac = x - f
    c = (2 * frac - 1).sign()
    if c == 0:
        raise HalfIntegerTie(f"{x} is a half-integer")
    return f if c < 0 else f + 1


def quasi_resonance(field: CubicField, k: Sequence[int]) -> QuasiResonance:
    k = tuple(int(x) for x in k)
    d = field.dot(k)
    n2 = sum(x * x for x in k)
    with mp.workdps(field.dps):
        dr = d.to_real()
        return QuasiResonance(k, d, dr, abs(dr) * n2, n2)  # type: ignore[arg-type]


def k0_of(field: CubicField, q: Sequence[int]) -> QuasiResonance:
    """k0(q) = (-p, q1, q2) with p the nearest integer to q1 Omega + q2 Omega~."""
    q1, q2 = (int(x) for x in q)
    if q1 == 0 and q2 == 0:
        raise ValueError("q must be nonzero")
    x = field.dot((0, q1, q2))
    p = exact_rint(x)
    return quasi_resonance(field, (-p, q1, q2))


def is_primitive(field: CubicField, lam: FieldElement, k: Sequence[int]) -> bool:
    """1/(2 lambda) < |<k, omega>| < 1/2, decided exactly."""
    d = abs(field.dot(k))
    if d.is_zero():
        return False
    return (2 * d - 1).sign() < 0 and (2 * lam * d - 1).sign() > 0


# -- oscillation constants ------------------------------------------------------------


@dataclass(frozen=True)
class OscillationConstants:
    """Z1, Z2, theta and delta = Z2/Z1, together with their exact counterparts.

    ``c`` and ``d`` are the closed-form coefficients with
    |u2|^2 - |u3|^2 = c . (1, W, W^2) and <u2, u3> = (d . (1, W, W^2)) sigma3.
    ``cross_check`` is the largest absolute gap between the numeric route
    and the two exact routes.
    """

    Z1: object
    Z2: object
    theta: object
    delta: object
    Z1_exact: FieldElement
    Z2_sq_exact: FieldElement
    delta_sq_exact: FieldElement
    c: tuple[Fraction, Fraction, Fraction]
    d: tuple[Fraction, Fraction, Fraction]
    cross_check: float


def closed_form_cd(field: CubicField):
    r0, r1, r2, a0, a1, a2 = field.r0, field.r1, field.r2, field.a0, field.a1, field.a2
    s = (a0 * a0 + a1 * a1 + 1) / (a2 * a2)
    half = Fraction(1, 2)
    c0 = (r0 * r0 - (a0 / a2 + half) * r0 * r2 - 2 * a1 / a2 * r0 + r1 * r1
          - a1 / a2 * r1 * r2 + s * (r1 + r2 * r2 / 2))
    c1 = (a0 / a2 - half) * r0 + (r2 / 2 + a1 / a2) * r1
    c2 = -r1 / 2 - s / 2
    d0 = -(c1 + r2 * c2)
    return (c0, c1, c2), (d0, c2, Fraction(0))


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


@lru_cache(maxsize=32)
def oscillation_constants(koch: KochData) -> OscillationConstants:
    field = koch.field
    u1 = koch.u1_exact
    # sigma(A) = |u2|^2 - |u3|^2 + 2i<u2,u3> for A = sum u1_j^2
    A = sum((x * x for x in u1), field.zero)
    Z2_sq = A.norm() / (4 * A)
    Z1 = sum((Fraction(x.norm()) / x for x in u1 if not x.is_zero()), field.zero) / 2
    delta_sq = Z2_sq / (Z1 * Z1)
    c, d = closed_form_cd(field)
    with mp.workdps(field.dps):
        n2 = _dot(koch.u2, koch.u2)
        n3 = _dot(koch.u3, koch.u3)
        m23 = _dot(koch.u2, koch.u3)
        z1 = (n2 + n3) / 2
        zc = (n2 - n3) / 2
        z2 = mpmath.sqrt(zc * zc + m23 * m23)
        theta = mpmath.atan2(m23, zc)
        delta = z2 / z1
        om = field.omega_real
        cd_gap = max(
            abs(n2 - n3 - (c[0] + c[1] * om + c[2] * om * om)),
            abs(m23 - (d[0] + d[1] * om + d[2] * om * om) * field.sigma3),
        )
        exact_gap = max(
            abs(z1 - Z1.to_real()),
            abs(z2 * z2 - Z2_sq.to_real()),
            abs(delta * delta - delta_sq.to_real()),
        )
        # second exact identity: |u2|^2 - |u3|^2 = (Tr A - A)/2
        trace_gap = abs(n2 - n3 - ((A.trace() - A) / 2).to_real())
    if not (0 < delta < 1):
        raise DeltaOutOfRange(f"delta = {delta} outside (0, 1)")
    return OscillationConstants(
        Z1=z1, Z2=z2, theta=theta, delta=delta,
        Z1_exact=Z1, Z2_sq_exact=Z2_sq, delta_sq_exact=delta_sq,
        c=c, d=d, cross_check=float(max(cd_gap, exact_gap, trace_gap)),
    )


# -- per-sequence invariants ----------------------------------------------------------


@dataclass(frozen=True)
class SequenceInvariants:
    y: object
    z: object
    E: object
    psi: object
    K: object
    gamma_star: object
    gamma_star_exact: FieldElement


def gamma_star_exact(koch: KochData, r: FieldElement) -> FieldElement:
    """Mean Diophantine constant as a field element.

    Decomposing k0 along the eigenvectors of U gives
    K_q = 4 |sigma(r/w)|^2 Z1 with w = <u1, omega>, and
    |sigma(x)|^2 = N(x)/x turns this into 4 sign(r) N(r) w Z1 / N(w).
    """
    field = koch.field
    w = sum((a * b for a, b in zip(koch.u1_exact, field.omega_vector)), field.zero)
    Z1 = oscillation_constants(koch).Z1_exact
    sgn = r.sign()
    return sgn * 4 * r.norm() * w * Z1 / w.norm()


def sequence_invariants(koch: KochData, k0: Sequence[int], r: FieldElement) -> SequenceInvariants:
    osc = oscillation_constants(koch)
    with mp.workdps(koch.field.dps):
        y = _dot(k0, koch.v2)
        z = _dot(k0, koch.v3)
        a = _dot(koch.v2, koch.u2)
        b = _dot(koch.v2, koch.u3)
        den = a * a + b * b
        ec = (a * y + b * z) / den
        es = (b * y - a * z) / den
        E = mpmath.sqrt(ec * ec + es * es)
        if E == 0:
            raise DegenerateProjection(f"k0 = {tuple(k0)} has no component on the contracting plane")
        psi = mpmath.atan2(es, ec)
        K = E * E * osc.Z1
        gs = abs(r.to_real()) * K
    return SequenceInvariants(y, z, E, psi, K, gs, gamma_star_exact(koch, r))


def b_factor(delta, phi, psi, theta, n) -> object:
    """Oscillating factor 1 + delta cos(2 pi n phi + 2 psi - theta)."""
    return 1 + delta * mpmath.cos(2 * mpmath.pi * n * phi + 2 * psi - theta)


# -- primitive records ----------------------------------------------------------------


@dataclass(frozen=True)
class PrimitiveRecord:
    q: tuple[int, int]
    p: int
    k0: tuple[int, int, int]
    r_exact: FieldElement
    r: object
    essential: bool
    y: object
    z: object
    E: object
    psi: object
    K: object
    gamma_star: object
    gamma_minus: object
    gamma_plus: object
    gamma_star_exact: FieldElement
    gamma_star_norm: object = None

    @property
    def norm_q(self) -> float:
        return math.hypot(*self.q)


def primitive_record(koch: KochData, q: Sequence[int]) -> PrimitiveRecord:
    qr = k0_of(koch.field, q)
    osc = oscillation_constants(koch)
    inv = sequence_invariants(koch, qr.k, qr.divisor_exact)
    with mp.workdps(koch.field.dps):
        gm = inv.gamma_star * (1 - osc.delta)
        gp = inv.gamma_star * (1 + osc.delta)
    return PrimitiveRecord(
        q=(int(q[0]), int(q[1])), p=-qr.k[0], k0=qr.k, r_exact=qr.divisor_exact, r=qr.divisor,
        essential=gcd(*qr.k) == 1, y=inv.y, z=inv.z, E=inv.E, psi=inv.psi, K=inv.K,
        gamma_star=inv.gamma_star, gamma_minus=gm, gamma_plus=gp,
        gamma_star_exact=inv.gamma_star_exact,
    )


def q0_radius(koch: KochData):
    """Q0 = |u1| / (2 |<u1, omega>|)."""
    with mp.workdps(koch.field.dps):
        return mpmath.sqrt(_dot(koch.u1, koch.u1)) / (2 * abs(_dot(koch.u1, koch.omega)))


def lower_bound(koch: KochData, norm_q) -> object:
    """Lower bound for gamma^-_q valid when |q| >= Q0."""
    osc = oscillation_constants(koch)
    Q0 = q0_radius(koch)
    with mp.workdps(koch.field.dps):
        return (1 - osc.delta) * (norm_q - Q0) ** 2 / (2 * koch.lam * (1 + osc.delta))


def completeness_radius(koch: KochData, gamma_cut, margin: int = 2) -> int:
    osc = oscillation_constants(koch)
    Q0 = q0_radius(koch)
    with mp.workdps(koch.field.dps):
        reach = Q0 + mpmath.sqrt(mpmath.mpf(gamma_cut) * 2 * koch.lam * (1 + osc.delta) / (1 - osc.delta))
    return int(mpmath.ceil(reach)) + margin


def half_plane_points(radius: int) -> Iterable[tuple[int, int]]:
    r2 = radius * radius
    for q1 in range(0, radius + 1):
        for q2 in range(-radius, radius + 1):
            if q1 * q1 + q2 * q2 <= r2 and in_half_plane((q1, q2)):
                yield (q1, q2)


def enumerate_primitives(koch: KochData, gamma_cut, margin: int = 2) -> list[PrimitiveRecord]:
    """All q in the half-plane with k0(q) primitive and gamma^-_q <= gamma_cut.

    Sorted by increasing gamma*_q; gamma_star_norm is filled relative to the
    smallest gamma*_q found (which is the global minimum whenever the list
    is non-empty).
    """
    if not gamma_cut > 0:
        raise ValueError("gamma_cut must be positive")
    field = koch.field
    Qmax = completeness_radius(koch, gamma_cut, margin)
    out = []
    for q in half_plane_points(Qmax):
        qr = k0_of(field, q)
        if not is_primitive(field, koch.lambda_exact, qr.k):
            continue
        rec = primitive_record(koch, q)
        if rec.gamma_minus <= gamma_cut:
            out.append(rec)
    out.sort(key=lambda r: (r.gamma_star, r.q))
    if out:
        g0 = out[0].gamma_star
        with mp.workdps(field.dps):
            out = [dataclass_replace(r, gamma_star_norm=r.gamma_star / g0) for r in out]
    return out


def dataclass_replace(obj, **changes):
    import dataclasses

    return dataclasses.replace(obj, **changes)


# -- sequences ------------------------------------------------------------------------


@dataclass(frozen=True)
class SequenceSample:
    n: int
    k: tuple[int, int, int]
    divisor_exact: FieldElement
    gamma: object
    b_model: object
    norm_sq: int


def sequence(koch: KochData, record: PrimitiveRecord, n_max: int) -> list[SequenceSample]:
    """s(q, n) = U^n k0(q) for n = 0..n_max, with numerators from exact divisors."""
    field = koch.field
    osc = oscillation_constants(koch)
    k = record.k0
    lam_inv = 1 / koch.lambda_exact
    div = record.r_exact
    out = []
    with mp.workdps(field.dps):
        for n in range(n_max + 1):
            n2 = sum(x * x for x in k)
            g = abs(div.to_real()) * n2
            b = b_factor(osc.delta, koch.phi, record.psi, osc.theta, n)
            out.append(SequenceSample(n, k, div, g, b, n2))
            k = linalg3.matvec(koch.U, k)
            div = div * lam_inv
    return out


# -- classification -------------------------------------------------------------------


@dataclass(frozen=True)
class ResonanceConstants:
    Z1: object
    Z2: object
    theta: object
    delta: object
    Q0: object
    q_hat: tuple[int, int]
    q_hathat: tuple[int, int]
    gamma_star_min: object
    gamma_asymptotic: object
    gamma_star_norm_hathat: object
    psi_hat: object
    K_hat: object
    J0_plus: object
    B0_minus: object
    J1_plus: object
    weak_sep: bool
    strong_sep: bool
    primary_tie: bool
    records: tuple[PrimitiveRecord, ...] = dc_field(repr=False, compare=False)

    @property
    def primary(self) -> PrimitiveRecord:
        return self.records[0]


def j1_unperturbed(lam) -> object:
    s = (mpmath.sqrt(lam) + 1) / (2 * lam)
    return (2 * mpmath.cbrt(s) + mpmath.cbrt(1 / s) ** 2) / 3


def classify(koch: KochData, gamma_cut=None, records: Sequence[PrimitiveRecord] | None = None) -> ResonanceConstants:
    """Primary and main secondary sequences with the separation constants.

    Without an explicit cut the primitive set is grown until it holds at
    least two essential records.
    """
    osc = oscillation_constants(koch)
    if records is None:
        cut = gamma_cut if gamma_cut is not None else 1.0
        while True:
            records = enumerate_primitives(koch, cut)
            if len(records) >= 2 or gamma_cut is not None:
                break
            cut *= 2
    records = tuple(records)
    if not records:
        raise EmptyPrimitiveSet("no primitive vectors below the cut")
    first = records[0]
    tie = len(records) > 1 and records[1].gamma_star_exact == first.gamma_star_exact
    rest = records[1:]
    if not rest:
        raise EmptyPrimitiveSet("the cut admits only the primary sequence; raise gamma_cut")
    second = rest[0]
    with mp.workdps(koch.field.dps):
        g = first.gamma_star
        gnorm2 = second.gamma_star / g
        J0p = mpmath.cbrt(1 + osc.delta)
        B0m = mpmath.cbrt(gnorm2 * (1 - osc.delta))
        J1p = j1_unperturbed(koch.lam) * J0p
        return ResonanceConstants(
            Z1=osc.Z1, Z2=osc.Z2, theta=osc.theta, delta=osc.delta, Q0=q0_radius(koch),
            q_hat=first.q, q_hathat=second.q, gamma_star_min=g,
            gamma_asymptotic=g * (1 - osc.delta), gamma_star_norm_hathat=gnorm2,
            psi_hat=first.psi, K_hat=first.K,
            J0_plus=J0p, B0_minus=B0m, J1_plus=J1p,
            weak_sep=bool(B0m > J0p), strong_sep=bool(B0m >= J1p), primary_tie=tie,
            records=records,
        )


# -- brute-force scan -----------------------------------------------------------------


@dataclass(frozen=True)
class ScanPoint:
    k: tuple[int, int, int]
    divisor: float
    gamma: float
    q: tuple[int, int]
    n: int
    sign: int


@dataclass(frozen=True)
class ScanReport:
    k_max: int
    points: tuple[ScanPoint, ...]
    min_gamma: float
    argmin_k: tuple[int, int, int]
    sequences: dict
    exact_fallbacks: int
    nonprimitive_q: tuple = ()

    def scatter_rows(self, q_hat: tuple[int, int]):
        ids = {q: i for i, q in enumerate(sorted(self.sequences))}
        for p in self.points:
            yield (
                0.5 * math.log(sum(x * x for x in p.k)),
                -math.log(abs(p.divisor)),
                ids[p.q],
                p.q == q_hat,
            )


_GUARD = 1e-9


def _classify_backward(field: CubicField, koch: KochData, k, d: float, lam: float, TT):
    """Walk back with U^-1 = T^T until the divisor enters (1/(2 lam), 1/2)."""
    n = 0
    fallbacks = 0
    lo = 1 / (2 * lam)
    om = [float(x) for x in koch.omega]
    while True:
        ad = abs(d)
        if lo + _GUARD < ad < 0.5 - _GUARD:
            break
        if abs(ad - lo) <= _GUARD or abs(ad - 0.5) <= _GUARD:
            fallbacks += 1
            if is_primitive(field, koch.lambda_exact, k):
                break
        k = linalg3.matvec(TT, k)
        d = sum(a * b for a, b in zip(k, om))
        n += 1
        if n > 10_000:  # pragma: no cover - divisor grows geometrically
            raise RuntimeError("backward classification did not terminate")
    return k, n, fallbacks


def brute_scan(koch: KochData, k_max: int) -> ScanReport:
    """Every quasi-resonance k in the half-space with |k| <= k_max, classified by (q, n)."""
    field = koch.field
    lam = float(koch.lam)
    TT = linalg3.transpose(koch.T)
    om2 = float(field.omega_real)
    om3 = float(field.omega_tilde.to_real())
    K2 = k_max * k_max
    points = []
    fallbacks = 0
    sequences: dict = {}
    nonprimitive = []
    for k2 in range(0, k_max + 1):
        for k3 in range(-k_max, k_max + 1):
            if k2 == 0 and k3 <= 0:
                continue
            rest = K2 - k2 * k2 - k3 * k3
            if rest < 0:
                continue
            x = k2 * om2 + k3 * om3
            p = round(x)
            if abs(abs(x - p) - 0.5) < _GUARD * max(1.0, abs(x)):
                fallbacks += 1
                p = exact_rint(field.dot((0, k2, k3)))
            k1 = -p
            if k1 * k1 > rest:
                continue
            k = (k1, k2, k3)
            # |x| <= ~2 k_max so the double divisor keeps ~8 significant digits
            # even at the smallest divisors reachable for k_max in the thousands
            d = x - p
            kp, n, fb = _classify_backward(field, koch, k, d, lam, TT)
            fallbacks += fb
            q = (kp[1], kp[2])
            sign = 1
            if not in_half_plane(q):
                q = (-q[0], -q[1])
                sign = -1
            gamma = abs(d) * (k1 * k1 + k2 * k2 + k3 * k3)
            points.append(ScanPoint(k, d, gamma, q, n, sign))
            sequences.setdefault(q, 0)
            sequences[q] += 1
    for q in sequences:
        k0 = k0_of(field, q).k
        if not is_primitive(field, koch.lambda_exact, k0):
            nonprimitive.append(q)
    best = min(points, key=lambda p: p.gamma)
    return ScanReport(k_max, tuple(points), best.gamma, best.k, sequences, fallbacks, tuple(nonprimitive))


def verify_scan(koch: KochData, report: ScanReport) -> list[ScanPoint]:
    """Points whose k is not reproduced as sign * U^n k0(q); empty when coverage holds.

    Also checks exactly that every q reached is in the primitive half-plane set.
    """
    field = koch.field
    orbits: dict = {}
    bad = []
    for p in report.points:
        orbit = orbits.get(p.q)
        if orbit is None:
            k0 = k0_of(field, p.q).k
            ok = in_half_plane(p.q) and is_primitive(field, koch.lambda_exact, k0)
            orbit = orbits[p.q] = [k0] if ok else None
        if orbit is None:
            bad.append(p)
            continue
        while len(orbit) <= p.n:
            orbit.append(linalg3.matvec(koch.U, orbit[-1]))
        if tuple(p.sign * x for x in orbit[p.n]) != p.k:
            bad.append(p)
    return bad
