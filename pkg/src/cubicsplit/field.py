"""Exact arithmetic in a complex cubic field Q(Omega).

Omega is the real root of x^3 = r0 + r1 x + r2 x^2 and the frequency vector
is (1, Omega, Omega~) with Omega~ = a0 + a1 Omega + a2 Omega^2.  Elements are
stored as rational coordinates in the basis 1, Omega, Omega^2; real and
complex embeddings are evaluated with mpmath at a configurable precision.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import gcd
from numbers import Rational
from typing import Iterable

import mpmath
from mpmath import mp

from . import linalg3
from .errors import (
    FieldMismatch,
    InternalFault,
    NonNegativeDiscriminant,
    RationalRootFound,
    ZeroA2,
    ZeroElement,
)

GUARD_DIGITS = 10
_MAX_SIGN_DPS = 4000


def parse_rational(value) -> Fraction:
    """Coerce ints, Fractions and strings like ``"-3/4"`` to a Fraction.

    Floats are rejected: a float coefficient almost never means what the
    caller intended for an exact field definition.
    """
    if isinstance(value, bool):
        raise TypeError("bool is not a rational coefficient")
    if isinstance(value, (int, Fraction, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def _divisors(n: int) -> list[int]:
    n = abs(n)
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def rational_roots(r0: Fraction, r1: Fraction, r2: Fraction) -> list[Fraction]:
    """Rational roots of x^3 - r2 x^2 - r1 x - r0 (rational root theorem)."""
    coeffs = [Fraction(1), -r2, -r1, -r0]
    lcm = 1
    for c in coeffs:
        lcm = lcm * c.denominator // gcd(lcm, c.denominator)
    a3, a2, a1, a0 = (int(c * lcm) for c in coeffs)

    def value(x: Fraction) -> Fraction:
        return ((a3 * x + a2) * x + a1) * x + a0

    if a0 == 0:
        return [Fraction(0)]
    roots = []
    for p in _divisors(a0):
        for q in _divisors(a3):
            for cand in (Fraction(p, q), Fraction(-p, q)):
                if cand not in roots and value(cand) == 0:
                    roots.append(cand)
    return roots


def _to_mpf(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


def _real_cbrt(x):
    return mpmath.sign(x) * mpmath.cbrt(abs(x))


@lru_cache(maxsize=256)
def _real_root(r0: Fraction, r1: Fraction, r2: Fraction, dps: int):
    """Unique real root of x^3 - r2 x^2 - r1 x - r0 for a negative discriminant.

    Seeded with Cardano's formula and polished by Newton at twice the target
    precision, since the closed form loses digits near a vanishing
    discriminant.
    """
    work = 2 * dps + GUARD_DIGITS
    with mp.workdps(work):
        R0, R1, R2 = _to_mpf(r0), _to_mpf(r1), _to_mpf(r2)
        # x = t + r2/3 gives t^3 + p t + q
        p = -R1 - R2 ** 2 / 3
        q = -R0 - R1 * R2 / 3 - 2 * R2 ** 3 / 27
        disc = q ** 2 / 4 + p ** 3 / 27
        s = mpmath.sqrt(disc)
        x = _real_cbrt(-q / 2 + s) + _real_cbrt(-q / 2 - s) + R2 / 3
        tol = mpmath.mpf(10) ** (-work + 2)
        for _ in range(200):
            f = ((x - R2) * x - R1) * x - R0
            df = (3 * x - 2 * R2) * x - R1
            step = f / df
            x -= step
            if abs(step) <= tol * max(1, abs(x)):
                break
        else:  # pragma: no cover - Newton always converges from the Cardano seed
            raise InternalFault("Newton iteration for the real root did not converge")
    with mp.workdps(dps):
        return +x


@dataclass(frozen=True)
class CubicField:
    """The field Q(Omega) together with the frequency vector (1, Omega, Omega~).

    ``sign_s`` selects the sign of the imaginary part sigma3 of the complex
    conjugate Omega_2 = sigma2 + i sigma3.  It is fixed later by the Koch
    analysis (see :func:`cubicsplit.koch.principal_koch`).
    """

    r0: Fraction
    r1: Fraction
    r2: Fraction
    a0: Fraction = Fraction(0)
    a1: Fraction = Fraction(0)
    a2: Fraction = Fraction(1)
    sign_s: int = 1
    precision_digits: int = 30

    def __post_init__(self):
        for name in ("r0", "r1", "r2", "a0", "a1", "a2"):
            object.__setattr__(self, name, parse_rational(getattr(self, name)))
        if self.sign_s not in (1, -1):
            raise ValueError("sign_s must be +1 or -1")
        if self.precision_digits < 17:
            raise ValueError("precision_digits must be at least 17")
        if self.a2 == 0:
            raise ZeroA2("a2 must be nonzero so that Omega~ is cubic irrational")
        roots = rational_roots(self.r0, self.r1, self.r2)
        if roots:
            raise RationalRootFound(
                f"x^3 - ({self.r2})x^2 - ({self.r1})x - ({self.r0}) has rational root {roots[0]}"
            )
        if self.discriminant >= 0:
            raise NonNegativeDiscriminant(
                f"discriminant {self.discriminant} >= 0: only complex cubic fields are supported"
            )

    # -- basic data ---------------------------------------------------------

    @property
    def dps(self) -> int:
        """Working decimal digits (requested precision plus guard digits)."""
        return self.precision_digits + GUARD_DIGITS

    @property
    def ring_key(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.r0, self.r1, self.r2)

    @cached_property
    def discriminant(self) -> Fraction:
        r0, r1, r2 = self.r0, self.r1, self.r2
        return 4 * r1 ** 3 + r1 ** 2 * r2 ** 2 - 27 * r0 ** 2 - 18 * r0 * r1 * r2 - 4 * r0 * r2 ** 3

    def with_sign(self, sign_s: int) -> "CubicField":
        return dataclasses.replace(self, sign_s=sign_s)

    def with_precision(self, digits: int) -> "CubicField":
        return dataclasses.replace(self, precision_digits=digits)

    # -- embeddings of the generator ----------------------------------------

    def omega_at(self, dps: int):
        return _real_root(self.r0, self.r1, self.r2, dps)

    @cached_property
    def omega_real(self):
        return self.omega_at(self.dps)

    def sigma_at(self, dps: int):
        """(sigma2, sigma3) at ``dps`` digits, with the field's sign for sigma3."""
        om = self.omega_at(dps)
        with mp.workdps(dps):
            r1, r2 = _to_mpf(self.r1), _to_mpf(self.r2)
            s2 = (r2 - om) / 2
            s3 = self.sign_s * mpmath.sqrt(-(4 * r1 + r2 ** 2) - 2 * r2 * om + 3 * om ** 2) / 2
        return s2, s3

    @cached_property
    def sigma2(self):
        return self.sigma_at(self.dps)[0]

    @cached_property
    def sigma3(self):
        return self.sigma_at(self.dps)[1]

    # -- element constructors ----------------------------------------------

    def element(self, c0=0, c1=0, c2=0) -> "FieldElement":
        return FieldElement(self, (Fraction(c0), Fraction(c1), Fraction(c2)))

    def coerce(self, x) -> "FieldElement":
        if isinstance(x, FieldElement):
            if x.field.ring_key != self.ring_key:
                raise FieldMismatch("elements belong to different fields")
            return x
        return self.element(parse_rational(x))

    @cached_property
    def zero(self) -> "FieldElement":
        return self.element(0)

    @cached_property
    def one(self) -> "FieldElement":
        return self.element(1)

    @cached_property
    def omega(self) -> "FieldElement":
        return self.element(0, 1, 0)

    @cached_property
    def omega_tilde(self) -> "FieldElement":
        return self.element(self.a0, self.a1, self.a2)

    @cached_property
    def omega_vector(self) -> tuple["FieldElement", "FieldElement", "FieldElement"]:
        return (self.one, self.omega, self.omega_tilde)

    def dot(self, k: Iterable[int]) -> "FieldElement":
        """<k, omega> as an exact field element."""
        k1, k2, k3 = k
        return FieldElement(
            self,
            (
                Fraction(k1) + k3 * self.a0,
                Fraction(k2) + k3 * self.a1,
                k3 * self.a2,
            ),
        )

    def minimal_polynomial(self, x: "FieldElement") -> "FieldElement":
        """Evaluate x^3 - r2 x^2 - r1 x - r0 at a field element."""
        return x * x * x - self.r2 * (x * x) - self.r1 * x - self.r0

    # -- matrices used by the Koch construction ------------------------------

    @cached_property
    def companion(self) -> linalg3.Matrix:
        """Matrix R with eigenvector (1, Omega, Omega^2) and eigenvalue Omega."""
        return ((0, 1, 0), (0, 0, 1), (self.r0, self.r1, self.r2))

    @cached_property
    def change_matrix(self) -> linalg3.Matrix:
        """Matrix A with omega = A (1, Omega, Omega^2)."""
        return ((1, 0, 0), (0, 1, 0), (self.a0, self.a1, self.a2))


@dataclass(frozen=True, eq=False)
class FieldElement:
    """c0 + c1 Omega + c2 Omega^2 with rational coordinates."""

    field: CubicField
    coords: tuple[Fraction, Fraction, Fraction]

    # -- helpers -------------------------------------------------------------

    def _other(self, other) -> "FieldElement | None":
        if isinstance(other, FieldElement):
            if other.field.ring_key != self.field.ring_key:
                raise FieldMismatch("elements belong to different fields")
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.field.element(other)
        return None

    def _new(self, coords) -> "FieldElement":
        return FieldElement(self.field, tuple(coords))  # type: ignore[arg-type]

    @property
    def c0(self) -> Fraction:
        return self.coords[0]

    @property
    def c1(self) -> Fraction:
        return self.coords[1]

    @property
    def c2(self) -> Fraction:
        return self.coords[2]

    def is_zero(self) -> bool:
        return not any(self.coords)

    def is_rational(self) -> bool:
        return self.coords[1] == 0 and self.coords[2] == 0

    # -- ring operations -----------------------------------------------------

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self._new(a + b for a, b in zip(self.coords, o.coords))

    __radd__ = __add__

    def __neg__(self):
        return self._new(-a for a in self.coords)

    def __sub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self._new(a - b for a, b in zip(self.coords, o.coords))

    def __rsub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        a, b = self.coords, o.coords
        if o.is_rational():
            return self._new(x * b[0] for x in a)
        p0 = a[0] * b[0]
        p1 = a[0] * b[1] + a[1] * b[0]
        p2 = a[0] * b[2] + a[1] * b[1] + a[2] * b[0]
        p3 = a[1] * b[2] + a[2] * b[1]
        p4 = a[2] * b[2]
        r0, r1, r2 = self.field.ring_key
        # Omega^3 = r0 + r1 Omega + r2 Omega^2 and Omega^4 = Omega * Omega^3
        return self._new(
            (
                p0 + p3 * r0 + p4 * r2 * r0,
                p1 + p3 * r1 + p4 * (r0 + r2 * r1),
                p2 + p3 * r2 + p4 * (r1 + r2 * r2),
            )
        )

    __rmul__ = __mul__

    def multiplication_matrix(self) -> linalg3.Matrix:
        """Columns are the coordinates of x, x Omega and x Omega^2."""
        om = self.field.omega
        cols = [self, self * om, self * om * om]
        return tuple(tuple(cols[j].coords[i] for j in range(3)) for i in range(3))  # type: ignore[return-value]

    def norm(self) -> Fraction:
        """Field norm N(x) = x sigma(x) sigma_bar(x)."""
        return Fraction(linalg3.det(self.multiplication_matrix()))

    def trace(self) -> Fraction:
        m = self.multiplication_matrix()
        return Fraction(m[0][0] + m[1][1] + m[2][2])

    def inverse(self) -> "FieldElement":
        """Exact inverse, solving the 3x3 rational system x y = 1."""
        if self.is_zero():
            raise ZeroElement("zero has no inverse")
        m = self.multiplication_matrix()
        d = linalg3.det(m)
        adj = linalg3.adjugate(m)
        # y = M^{-1} e_0 is the first column of the adjugate over det
        return self._new(Fraction(adj[i][0]) / d for i in range(3))

    def __truediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        if o.is_rational():
            if o.coords[0] == 0:
                raise ZeroElement("division by zero")
            return self._new(x / o.coords[0] for x in self.coords)
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result, base = self.field.one, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- comparisons (exact, via certified sign) ------------------------------

    def __eq__(self, other):
        try:
            o = self._other(other)
        except FieldMismatch:
            return False
        if o is None:
            return NotImplemented
        return self.coords == o.coords

    def __hash__(self):
        return hash((self.field.ring_key, self.coords))

    def sign(self) -> int:
        """Exact sign of the real embedding.

        A nonzero element of the field never embeds to 0, so the value is
        re-evaluated at increasing precision until it clears the rounding
        bound.
        """
        if self.is_zero():
            return 0
        if self.is_rational():
            return 1 if self.coords[0] > 0 else -1
        dps = self.field.dps
        while dps <= _MAX_SIGN_DPS:
            om = self.field.omega_at(dps)
            with mp.workdps(dps):
                c = [_to_mpf(x) for x in self.coords]
                value = c[0] + c[1] * om + c[2] * om * om
                scale = abs(c[0]) + abs(c[1]) * abs(om) + abs(c[2]) * om * om
                bound = scale * mpmath.mpf(10) ** (-dps + 5)
                if abs(value) > bound:
                    return 1 if value > 0 else -1
            dps *= 2
        raise InternalFault("could not certify the sign of a nonzero field element")

    def _cmp(self, other) -> int:
        o = self._other(other)
        if o is None:
            raise TypeError(f"cannot compare FieldElement with {type(other).__name__}")
        return (self - o).sign()

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # -- embeddings -----------------------------------------------------------

    def to_real(self, dps: int | None = None):
        """Real embedding c0 + c1 Omega + c2 Omega^2 as an mpf."""
        dps = dps or self.field.dps
        om = self.field.omega_at(dps)
        with mp.workdps(dps):
            c0, c1, c2 = (_to_mpf(x) for x in self.coords)
            return c0 + (c1 + c2 * om) * om

    def to_complex(self, dps: int | None = None):
        """Complex embedding sigma(x), evaluated at Omega_2 = sigma2 + i sigma3."""
        dps = dps or self.field.dps
        s2, s3 = self.field.sigma_at(dps)
        with mp.workdps(dps):
            z = mpmath.mpc(s2, s3)
            c0, c1, c2 = (_to_mpf(x) for x in self.coords)
            return c0 + (c1 + c2 * z) * z

    def __float__(self):
        return float(self.to_real())

    def __repr__(self):
        c0, c1, c2 = self.coords
        return f"FieldElement({c0} + ({c1})*W + ({c2})*W^2)"

    def __str__(self):
        return format_coords(self.coords)


def format_coords(coords) -> str:
    terms = []
    for c, basis in zip(coords, ("", "W", "W^2")):
        if c == 0:
            continue
        if basis and c == 1:
            body = basis
        elif basis and c == -1:
            body = "-" + basis
        else:
            body = f"{c}{'*' + basis if basis else ''}"
        terms.append(body)
    if not terms:
        return "0"
    out = terms[0]
    for t in terms[1:]:
        out += " - " + t[1:] if t.startswith("-") else " + " + t
    return out


# -- functional surface ---------------------------------------------------------


def field_new(r0, r1, r2, a0=0, a1=0, a2=1, *, precision_digits: int = 30, sign_s: int = 1) -> CubicField:
    return CubicField(r0, r1, r2, a0, a1, a2, sign_s=sign_s, precision_digits=precision_digits)


def elem_mul(x: FieldElement, y: FieldElement) -> FieldElement:
    return x * y


def elem_inv(x: FieldElement) -> FieldElement:
    return x.inverse()


def embed_real(x: FieldElement):
    return x.to_real()


def embed_complex(x: FieldElement):
    return x.to_complex()


def golden_field(precision_digits: int = 30) -> CubicField:
    """Omega^3 = 1 - Omega with omega = (1, Omega, Omega^2)."""
    return CubicField(1, -1, 0, 0, 0, 1, precision_digits=precision_digits)
