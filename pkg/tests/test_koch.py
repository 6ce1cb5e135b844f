from fractions import Fraction

import mpmath
import numpy as np
import pytest
from mpmath import mp

from cubicsplit import linalg3
from cubicsplit.errors import NonPositiveGamma, SearchBudgetExceeded
from cubicsplit.field import CubicField
from cubicsplit.koch import (
    cubic_floor_root,
    lambda_floor,
    matrix_from_first_row,
    phi_rationality_report,
    principal_koch,
    search_koch,
    shell_vectors,
    shortcut_candidate,
)


def test_golden_principal_matrix(koch):
    assert koch.T == ((1, 0, 1), (1, 0, 0), (0, 1, 0))
    assert float(koch.lam) == pytest.approx(1.465571, abs=1e-6)
    assert koch.lambda_exact == koch.field.element(1, 0, 1)
    assert float(koch.phi) == pytest.approx(0.590935, abs=1e-6)


def test_golden_eigenvalues_match_numpy(koch):
    ev = np.linalg.eigvals(np.array(koch.T, dtype=float))
    real = ev[np.argmin(np.abs(ev.imag))].real
    cplx = ev[np.argmax(ev.imag)]
    assert float(koch.lam) == pytest.approx(real, abs=1e-13)
    assert float(koch.mu2) == pytest.approx(cplx.real, abs=1e-13)
    assert float(koch.mu3) == pytest.approx(cplx.imag, abs=1e-13)
    assert float(koch.phi) == pytest.approx(np.angle(cplx) / np.pi, abs=1e-13)


def test_u_is_inverse_transpose(koch):
    assert linalg3.matmul(linalg3.transpose(koch.U), koch.T) == linalg3.identity()
    assert linalg3.det(koch.T) == 1


def test_eigenvector_exact(koch):
    f = koch.field
    om = f.omega_vector
    Tw = [sum((f.element(koch.T[i][j]) * om[j] for j in range(3)), f.zero) for i in range(3)]
    assert Tw == [koch.lambda_exact * x for x in om]


def test_complex_pair_modulus(koch):
    # det T = 1 forces |lambda_2|^2 = 1 / lambda
    assert koch.lambda_exact.norm() == 1
    with mp.workdps(koch.field.dps):
        assert abs(koch.mu2 ** 2 + koch.mu3 ** 2 - 1 / koch.lam) < mpmath.mpf(10) ** -25


def test_u1_is_contracting_eigenvector(koch):
    with mp.workdps(koch.field.dps):
        Uu = [sum(koch.U[i][j] * koch.u1[j] for j in range(3)) for i in range(3)]
        for a, b in zip(Uu, koch.u1):
            assert abs(a - b / koch.lam) < mpmath.mpf(10) ** -25


def test_kappa_is_condition_number(koch):
    M = np.array([[float(koch.omega[i]), float(koch.v2[i]), float(koch.v3[i])] for i in range(3)])
    assert float(koch.kappa) == pytest.approx(np.linalg.cond(M), rel=1e-12)


def test_shortcut_agrees_with_scan(golden):
    sc = shortcut_candidate(golden)
    assert sc is not None
    assert sc.matrix == ((1, 0, 1), (1, 0, 0), (0, 1, 0))
    s = search_koch(golden)
    assert s.best.matrix == sc.matrix


def test_matrix_from_first_row_has_eigenvector(golden):
    M = matrix_from_first_row(golden, (2, -1, 3))
    om = golden.omega_vector
    lam = golden.dot((2, -1, 3))
    for i in range(3):
        row = sum((golden.element(Fraction(M[i][j])) * om[j] for j in range(3)), golden.zero)
        assert row == lam * om[i]


@pytest.mark.parametrize("n2, count", [(1, 6), (2, 12), (3, 8), (4, 6), (5, 24)])
def test_shell_sizes(n2, count):
    vs = list(shell_vectors(n2))
    assert len(vs) == count
    assert vs == sorted(vs)
    assert all(sum(x * x for x in v) == n2 for v in vs)


def test_cube_root_two():
    f = CubicField(2, 0, 0)
    k = principal_koch(f)
    # fundamental unit 1 + 2^{1/3} + 2^{2/3} has norm 1 and is > 1
    assert k.lambda_exact == f.element(1, 1, 1)
    assert linalg3.det(k.T) == 1


def test_budget_exceeded():
    with pytest.raises(SearchBudgetExceeded):
        search_koch(CubicField(2, 0, 0), norm_cap=1)


def test_lambda_floor_root():
    c = 0.3
    x = cubic_floor_root(c)
    assert x ** 3 - x ** 2 == pytest.approx(c, abs=1e-14)
    assert x > 1
    assert lambda_floor(4.0, 1.0) == pytest.approx(cubic_floor_root(1.0), abs=1e-15)
    with pytest.raises(NonPositiveGamma):
        lambda_floor(0.0, 1.0)


def test_golden_lambda_respects_floor(koch, consts):
    assert float(koch.lam) >= lambda_floor(consts.gamma_asymptotic, koch.kappa)


def test_phi_convergents(koch):
    cf = phi_rationality_report(koch.phi, max_denominator=100, dps=koch.field.dps)
    assert Fraction(13, 22) in cf.convergents
    assert all(c.denominator <= 100 for c in cf.convergents)
