"""Principal Koch matrix of a cubic frequency vector and its spectral data.

A Koch matrix is a matrix T in SL(3, Z) with omega as eigenvector for a real
eigenvalue lambda > 1.  Any rational matrix having omega as eigenvector is
fixed by its first row, so the principal one (minimal lambda) is found by
scanning integer first rows in shells of increasing Euclidean norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache
from math import isqrt
from typing import Iterator, Sequence

import mpmath
import numpy as np
from mpmath import mp

from . import linalg3
from .errors import NonPositiveGamma, SearchBudgetExceeded
from .field import CubicField, FieldElement

DEFAULT_NORM_CAP = 64


@lru_cache(maxsize=64)
def _basis_matrices(field_key) -> tuple[linalg3.Matrix, linalg3.Matrix]:
    """A R A^-1 and A (a0 I + a1 R + a2 R^2) A^-1, the coefficients of T12 and T13."""
    r0, r1, r2, a0, a1, a2 = field_key
    R = ((0, 1, 0), (0, 0, 1), (r0, r1, r2))
    A = ((1, 0, 0), (0, 1, 0), (a0, a1, a2))
    Ainv = linalg3.inverse(A)
    R2 = linalg3.matmul(R, R)
    P = linalg3.matmul(linalg3.matmul(A, R), Ainv)
    inner = linalg3.add(linalg3.scale(a0, linalg3.identity()), linalg3.scale(a1, R), linalg3.scale(a2, R2))
    Q = linalg3.matmul(linalg3.matmul(A, inner), Ainv)
    return P, Q


def _field_key(field: CubicField):
    return (field.r0, field.r1, field.r2, field.a0, field.a1, field.a2)


def matrix_from_first_row(field: CubicField, first_row: Sequence) -> linalg3.Matrix:
    """The unique rational matrix with first row ``first_row`` and eigenvector omega.

    Entries are ints where exact and Fractions otherwise.
    """
    t11, t12, t13 = (Fraction(x) for x in first_row)
    P, Q = _basis_matrices(_field_key(field))
    M = linalg3.add(linalg3.scale(t11, linalg3.identity()), linalg3.scale(t12, P), linalg3.scale(t13, Q))
    return tuple(tuple(linalg3._reduce(Fraction(x)) for x in row) for row in M)  # type: ignore[return-value]


def operator_norm(m: linalg3.Matrix) -> float:
    """Spectral norm (largest singular value)."""
    return float(np.linalg.norm(np.array([[float(x) for x in row] for row in m]), 2))


def shell_vectors(norm_sq: int) -> Iterator[tuple[int, int, int]]:
    """All integer 3-vectors with the given squared norm, in lexicographic order."""
    m = isqrt(norm_sq)
    for x in range(-m, m + 1):
        rx = norm_sq - x * x
        my = isqrt(rx)
        for y in range(-my, my + 1):
            rz = rx - y * y
            z = isqrt(rz)
            if z * z != rz:
                continue
            if z == 0:
                yield (x, y, 0)
            else:
                yield (x, y, -z)
                yield (x, y, z)


@dataclass(frozen=True)
class KochCandidate:
    first_row: tuple[int, int, int]
    matrix: linalg3.Matrix
    lam: float
    norm: float
    source: str


def _koch_candidate(field: CubicField, first_row, source: str) -> KochCandidate | None:
    M = linalg3.to_int(matrix_from_first_row(field, first_row))
    if M is None or linalg3.det(M) != 1:
        return None
    lam = field.dot(first_row)
    if not lam > 1:
        return None
    return KochCandidate(tuple(int(x) for x in first_row), M, float(lam), operator_norm(M), source)


def shortcut_candidate(field: CubicField) -> KochCandidate | None:
    """r0 A R^{+-1} A^-1 when all coefficients are integers and |r0| = |a2| = 1."""
    coeffs = _field_key(field)
    if any(c.denominator != 1 for c in coeffs) or abs(field.r0) != 1 or abs(field.a2) != 1:
        return None
    P, _ = _basis_matrices(coeffs)
    if abs(field.omega_real) > 1:
        M = linalg3.scale(field.r0, P)
    else:
        M = linalg3.scale(field.r0, linalg3.inverse(P))
    M = linalg3.to_int(M)
    if M is None:  # pragma: no cover - unimodular by construction
        return None
    return _koch_candidate(field, M[0], "shortcut")


@dataclass(frozen=True)
class KochSearch:
    best: KochCandidate
    candidates: tuple[KochCandidate, ...]
    scanned_up_to_norm_sq: int


def search_koch(field: CubicField, norm_cap: float = DEFAULT_NORM_CAP) -> KochSearch:
    """Shell scan for Koch matrices; returns the one with minimal eigenvalue.

    After the first hit the scan continues while the first-row norm does not
    exceed the operator norm of the best matrix found so far.
    """
    found: list[KochCandidate] = []
    sc = shortcut_candidate(field)
    if sc is not None:
        found.append(sc)

    def best() -> KochCandidate | None:
        return min(found, key=lambda c: c.lam) if found else None

    cap_sq = int(norm_cap * norm_cap)
    n2 = 0
    while True:
        n2 += 1
        b = best()
        limit_sq = b.norm ** 2 * (1 + 1e-12) if b is not None else cap_sq
        if n2 > limit_sq:
            break
        if n2 > cap_sq:
            if b is None:
                raise SearchBudgetExceeded(
                    f"no Koch matrix with first-row norm <= {norm_cap}; "
                    f"field r=({field.r0},{field.r1},{field.r2}) a=({field.a0},{field.a1},{field.a2})"
                )
            break
        for row in shell_vectors(n2):
            if any(c.first_row == row for c in found):
                continue
            cand = _koch_candidate(field, row, "scan")
            if cand is not None:
                found.append(cand)
    b = best()
    if b is None:  # pragma: no cover - guarded by the cap check above
        raise SearchBudgetExceeded("no Koch matrix found")
    # exact comparison to settle near-ties left by the float key
    for c in found:
        if c is not b and field.dot(c.first_row) < field.dot(b.first_row):
            b = c
    return KochSearch(b, tuple(found), n2 - 1)


@dataclass(frozen=True)
class KochData:
    """Principal Koch matrix with its eigen-decomposition.

    ``field`` carries the sign of sigma3 that makes 0 < phi < 1.  ``u1_exact``
    holds u1 in field coordinates; the real vectors are mpmath values at the
    field's working precision.
    """

    field: CubicField
    T: linalg3.Matrix
    U: linalg3.Matrix
    lambda_exact: FieldElement
    lam: object
    mu2: object
    mu3: object
    phi: object
    omega: tuple
    v2: tuple
    v3: tuple
    u1_exact: tuple
    u1: tuple
    u2: tuple
    u3: tuple
    kappa: object
    norm_T: float
    lambda0: object = None
    search: KochSearch | None = dc_field(default=None, compare=False, repr=False)

    @property
    def first_row(self) -> tuple[int, int, int]:
        return tuple(self.T[0])  # type: ignore[return-value]

    @property
    def lam_float(self) -> float:
        return float(self.lam)

    @property
    def phi_float(self) -> float:
        return float(self.phi)


def u1_exact(field: CubicField) -> tuple[FieldElement, FieldElement, FieldElement]:
    """Eigenvector of U for 1/lambda: (A^-1)^T (r0, -r2 Omega + Omega^2, Omega)."""
    om = field.omega
    u0 = (field.element(field.r0), om * om - field.r2 * om, om)
    B = linalg3.transpose(linalg3.inverse(field.change_matrix))
    return tuple(sum((Fraction(B[i][j]) * u0[j] for j in range(3)), field.zero) for i in range(3))  # type: ignore[return-value]


def spectral_data(field: CubicField, T: linalg3.Matrix, norm_T: float | None = None,
                  search: KochSearch | None = None) -> KochData:
    """Eigen-data of a Koch matrix, choosing sign_s so that mu3 > 0."""
    lam_exact = field.dot(T[0])
    lam2 = lam_exact.to_complex()
    if lam2.imag < 0:
        field = field.with_sign(-field.sign_s)
        lam_exact = field.dot(T[0])
        lam2 = lam_exact.to_complex()
    dps = field.dps
    with mp.workdps(dps):
        lam = lam_exact.to_real()
        phi = mpmath.arg(lam2) / mpmath.pi
        omega = tuple(x.to_real() for x in field.omega_vector)
        sig = [x.to_complex() for x in field.omega_vector]
        v2 = tuple(z.real for z in sig)
        v3 = tuple(z.imag for z in sig)
        u1e = u1_exact(field)
        u1 = tuple(x.to_real() for x in u1e)
        su = [x.to_complex() for x in u1e]
        u2 = tuple(z.real for z in su)
        u3 = tuple(z.imag for z in su)
        C = mpmath.matrix([[omega[i], v2[i], v3[i]] for i in range(3)])
        sv = mpmath.svd_r(C, compute_uv=False)
        kappa = max(sv) / min(sv)
    U = linalg3.to_int(linalg3.transpose(linalg3.inverse(T)))
    if norm_T is None:
        norm_T = operator_norm(T)
    return KochData(
        field=field,
        T=T,
        U=U,  # type: ignore[arg-type]
        lambda_exact=lam_exact,
        lam=lam,
        mu2=lam2.real,
        mu3=lam2.imag,
        phi=phi,
        omega=omega,
        v2=v2,
        v3=v3,
        u1_exact=u1e,
        u1=u1,
        u2=u2,
        u3=u3,
        kappa=kappa,
        norm_T=norm_T,
        search=search,
    )


def principal_koch(field: CubicField, norm_cap: float = DEFAULT_NORM_CAP) -> KochData:
    s = search_koch(field, norm_cap)
    return spectral_data(field, s.best.matrix, s.best.norm, s)


def lambda_floor(gamma_lower, kappa) -> float:
    """Real root of x^3 - x^2 - gamma/(4 kappa^2) (always > 1)."""
    gamma_lower = float(gamma_lower)
    kappa = float(kappa)
    if not gamma_lower > 0:
        raise NonPositiveGamma(f"gamma must be positive, got {gamma_lower}")
    c = gamma_lower / (4 * kappa * kappa)
    return cubic_floor_root(c)


def cubic_floor_root(c: float) -> float:
    # f is convex on x > 1/3 and positive at 1 + c, so Newton decreases monotonically
    x = 1.0 + c
    for _ in range(200):
        f = x * x * (x - 1) - c
        df = x * (3 * x - 2)
        step = f / df
        x -= step
        if abs(step) <= 1e-16 * x:
            break
    return x


@dataclass(frozen=True)
class ContinuedFraction:
    partial_quotients: tuple[int, ...]
    convergents: tuple[Fraction, ...]


def phi_rationality_report(phi, max_denominator: int = 10_000, dps: int | None = None) -> ContinuedFraction:
    """Continued fraction of phi, stopping before a convergent's denominator exceeds the bound."""
    dps = dps or mp.dps
    with mp.workdps(dps):
        x = mpmath.mpf(phi)
        eps = mpmath.mpf(10) ** (-(dps - 5))
        quotients: list[int] = []
        convergents: list[Fraction] = []
        h_prev, h = 0, 1
        k_prev, k = 1, 0
        for _ in range(200):
            a = int(mpmath.floor(x))
            h_prev, h = h, a * h + h_prev
            k_prev, k = k, a * k + k_prev
            if k > max_denominator:
                break
            quotients.append(a)
            convergents.append(Fraction(h, k))
            frac = x - a
            if frac < eps:
                break
            x = 1 / frac
    return ContinuedFraction(tuple(quotients), tuple(convergents))
