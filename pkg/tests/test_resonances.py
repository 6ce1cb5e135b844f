import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from mpmath import mp

from cubicsplit import linalg3
from cubicsplit.errors import DegenerateProjection, EmptyPrimitiveSet, HalfIntegerTie
from cubicsplit.resonances import (
    brute_scan,
    classify,
    enumerate_primitives,
    exact_rint,
    in_half_plane,
    in_half_space,
    is_primitive,
    k0_of,
    lower_bound,
    oscillation_constants,
    quasi_resonance,
    sequence,
    sequence_invariants,
    verify_scan,
)


def test_quasi_resonance_golden(golden):
    qr = quasi_resonance(golden, (0, 0, 1))
    assert qr.divisor_exact == golden.omega ** 2
    assert float(qr.gamma_k) == pytest.approx(float(golden.omega_real) ** 2, abs=1e-15)


def test_k0_of_primary(golden):
    assert k0_of(golden, (0, 1)).k == (0, 0, 1)
    assert k0_of(golden, (2, 0)).k == (-1, 2, 0)


def test_half_space_conventions():
    assert in_half_space((0, 0, 1)) and not in_half_space((0, 0, -1))
    assert in_half_space((0, 1, -5)) and not in_half_space((3, -1, 5))
    assert in_half_space((5, 0, 0)) and not in_half_space((-5, 0, 0))
    assert in_half_plane((1, -3)) and not in_half_plane((0, -1))


def test_exact_rint_refuses_half_integers(golden):
    with pytest.raises(HalfIntegerTie):
        exact_rint(golden.element(Fraction(5, 2)))
    assert exact_rint(golden.omega) == 1


def test_primitive_window(koch):
    f = koch.field
    assert is_primitive(f, koch.lambda_exact, (0, 0, 1))
    # U (0,0,1) has divisor Omega^2 / lambda, below 1/(2 lambda)
    assert not is_primitive(f, koch.lambda_exact, linalg3.matvec(koch.U, (0, 0, 1)))


def test_oscillation_constants_golden(koch):
    osc = oscillation_constants(koch)
    f = koch.field
    assert float(osc.delta) == pytest.approx(0.289453, abs=1e-6)
    assert float(osc.theta) == pytest.approx(-1.054837, abs=1e-5)
    assert osc.delta_sq_exact == f.element(-1, 5, -5)
    assert osc.cross_check < 1e-20


def test_primary_and_secondary(consts):
    assert consts.q_hat == (0, 1)
    assert consts.q_hathat == (2, 0)
    assert not consts.primary_tie
    assert float(consts.psi_hat) == pytest.approx(-2.007416, abs=1e-5)
    assert float(consts.B0_minus) == pytest.approx(1.286979, abs=1e-5)
    assert float(consts.J0_plus) == pytest.approx(1.088433, abs=1e-5)
    assert consts.weak_sep and consts.strong_sep


def test_gamma_star_exact_form(consts, golden):
    assert consts.primary.gamma_star_exact == golden.element(10, 2, 8) / 31


def test_gamma_star_routes_agree(koch):
    # |r| K numerically vs the exact field expression
    for r in enumerate_primitives(koch, 3.5):
        with mp.workdps(koch.field.dps):
            assert abs(r.gamma_star - r.gamma_star_exact.to_real()) < mpmath.mpf(10) ** -22


def test_table_values(analysis):
    from cubicsplit.pipeline import table_records

    rows = {r.k0: r for r in table_records(analysis.koch)}
    expected = {
        (0, 0, 1): (0.345858, 0.486749, 0.627640, 1),
        (-1, 2, 0): (1.037575, 1.460248, 1.882920, 3),
        (-2, 1, 2): (3.112725, 4.380743, 5.648761, 9),
        (0, 2, -2): (2.766867, 3.893994, 5.021121, 8),
    }
    assert set(rows) == set(expected)
    for k0, vals in expected.items():
        r = rows[k0]
        got = (r.gamma_minus, r.gamma_star, r.gamma_plus, r.gamma_star_norm)
        for g, e in zip(got, vals):
            assert float(g) == pytest.approx(e, abs=1e-5)
    assert not rows[(0, 2, -2)].essential


def test_lower_bound_at_three(koch):
    assert float(lower_bound(koch, 3)) == pytest.approx(1.274218, abs=1e-5)


def test_no_far_primitive_below_bound(koch):
    far = [r for r in enumerate_primitives(koch, 1.3) if r.norm_q >= 3]
    assert all(float(r.gamma_minus) >= 1.274218 for r in far)


def test_sequence_is_u_orbit(koch, consts):
    samples = sequence(koch, consts.primary, 6)
    assert [s.k for s in samples[:4]] == [(0, 0, 1), (1, -1, 0), (0, 1, -1), (-1, 1, 1)]
    Tt = np.array(koch.T, dtype=float).T
    for a, b in zip(samples, samples[1:]):
        # T^T undoes one step of U
        assert tuple(int(round(x)) for x in Tt @ np.array(b.k, dtype=float)) == a.k
        assert b.divisor_exact == a.divisor_exact / koch.lambda_exact


def test_sequence_matches_oscillation_model(koch, consts):
    samples = sequence(koch, consts.primary, 30)
    g = float(consts.gamma_star_min)
    tail = [abs(float(s.gamma) / (g * float(s.b_model)) - 1) for s in samples[20:]]
    assert max(tail) < 1e-4


def test_asymptotic_minimum(koch, consts):
    samples = sequence(koch, consts.primary, 40)
    m = min(float(s.gamma) for s in samples[20:])
    assert m == pytest.approx(0.345858, abs=1e-3)


def test_zero_vector_projection_raises(koch, golden):
    with pytest.raises(DegenerateProjection):
        sequence_invariants(koch, (0, 0, 0), golden.one)


def test_classify_needs_two_records(koch):
    recs = enumerate_primitives(koch, 0.5)
    assert len(recs) == 1
    with pytest.raises(EmptyPrimitiveSet):
        classify(koch, records=recs)


def exhaustive_quasi_resonances(koch, k_max):
    om = np.array([float(x) for x in koch.omega])
    out = set()
    for k in itertools.product(range(-k_max, k_max + 1), repeat=3):
        if not any(k) or sum(x * x for x in k) > k_max * k_max or not in_half_space(k):
            continue
        if abs(float(np.dot(k, om))) < 0.5:
            out.add(k)
    return out


def test_scan_matches_exhaustive_enumeration(koch):
    scan = brute_scan(koch, 14)
    assert {p.k for p in scan.points} == exhaustive_quasi_resonances(koch, 14)
    assert verify_scan(koch, scan) == []
    assert not scan.nonprimitive_q


def test_scan_minimum_is_primary(koch, consts):
    scan = brute_scan(koch, 60)
    best = min(scan.points, key=lambda p: p.gamma)
    assert best.q == consts.q_hat
    assert best.k == (-1, 0, 2)
    om = float(koch.field.omega_real)
    assert best.gamma == pytest.approx(abs(2 * om * om - 1) * 5, rel=1e-12)


def test_scatter_rows(koch, consts):
    scan = brute_scan(koch, 10)
    rows = list(scan.scatter_rows(consts.q_hat))
    assert len(rows) == len(scan.points)
    for (ln_norm, neg_ln_d, _, _), p in zip(rows, scan.points):
        assert ln_norm == pytest.approx(0.5 * math.log(sum(x * x for x in p.k)))
        assert neg_ln_d == pytest.approx(-math.log(abs(p.divisor)))
