"""Small exact 3x3 matrix helpers over ints and Fractions."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Matrix = tuple[tuple, tuple, tuple]


def as_matrix(rows: Sequence[Sequence]) -> Matrix:
    return tuple(tuple(row) for row in rows)  # type: ignore[return-value]


def identity() -> Matrix:
    return ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def transpose(a: Matrix) -> Matrix:
    return tuple(tuple(a[j][i] for j in range(3)) for i in range(3))  # type: ignore[return-value]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3))
        for i in range(3)
    )  # type: ignore[return-value]


def matvec(a: Matrix, v: Sequence) -> tuple:
    return tuple(sum(a[i][k] * v[k] for k in range(3)) for i in range(3))


def scale(c, a: Matrix) -> Matrix:
    return tuple(tuple(c * x for x in row) for row in a)  # type: ignore[return-value]


def add(*mats: Matrix) -> Matrix:
    return tuple(
        tuple(sum(m[i][j] for m in mats) for j in range(3)) for i in range(3)
    )  # type: ignore[return-value]


def det(a: Matrix):
    return (
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    )


def adjugate(a: Matrix) -> Matrix:
    def cof(i: int, j: int):
        rows = [r for r in range(3) if r != i]
        cols = [c for c in range(3) if c != j]
        m = a[rows[0]][cols[0]] * a[rows[1]][cols[1]] - a[rows[0]][cols[1]] * a[rows[1]][cols[0]]
        return m if (i + j) % 2 == 0 else -m

    # adj = transpose of the cofactor matrix
    return tuple(tuple(cof(j, i) for j in range(3)) for i in range(3))  # type: ignore[return-value]


def inverse(a: Matrix) -> Matrix:
    """Exact inverse; entries become Fractions unless the division is exact."""
    d = det(a)
    if d == 0:
        raise ZeroDivisionError("singular matrix")
    adj = adjugate(a)
    return tuple(tuple(_reduce(Fraction(x) / d) for x in row) for row in adj)  # type: ignore[return-value]


def _reduce(x: Fraction):
    return int(x) if x.denominator == 1 else x


def to_int(a: Matrix) -> Matrix | None:
    """Return the matrix with int entries, or None if some entry is not integral."""
    out = []
    for row in a:
        new_row = []
        for x in row:
            x = Fraction(x)
            if x.denominator != 1:
                return None
            new_row.append(int(x))
        out.append(tuple(new_row))
    return tuple(out)  # type: ignore[return-value]
