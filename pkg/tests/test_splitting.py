import math
import random

import numpy as np
import pytest
from scipy.optimize import brentq

from cubicsplit.errors import (
    CoincidentDescriptors,
    InsufficientPrimitiveCut,
    NonPositiveEps,
    NonPositiveInputs,
)
from cubicsplit.resonances import enumerate_primitives, quasi_resonance
from cubicsplit.splitting import (
    cc,
    eps_min,
    eps_of_zeta,
    f1,
    f1_bar,
    families_for,
    family_of,
    g_of_eps,
    h_profiles,
    intersect,
    max_splitting_estimate,
    melnikov_coeff,
    primary_family,
    two_lowest,
    zeta_of_eps,
)

LAM = 1.4655712318767680


def test_cc_minimum_and_asymmetry():
    assert float(cc(0.0, 0.0, 1.0, LAM)) == pytest.approx(1.0, abs=1e-15)
    assert float(cc(2.5, 2.5, 8.0, LAM)) == pytest.approx(2.0, abs=1e-14)
    assert float(cc(0.7, 0.0, 1.0, LAM)) != pytest.approx(float(cc(-0.7, 0.0, 1.0, LAM)), abs=1e-6)


def test_cc_convex():
    z = np.linspace(-5, 5, 2001)
    v = cc(z, 0.3, 1.7, LAM)
    assert np.all(np.diff(v, 2) > 0)


def test_golden_envelope_constants(params):
    assert params.xi0 == pytest.approx(0.492049, abs=1e-5)
    assert params.J1_0 == pytest.approx(1.009141, abs=1e-5)
    assert params.J0_minus == pytest.approx(0.892341, abs=1e-5)
    assert params.J1_plus == pytest.approx(1.098383, abs=1e-5)
    assert params.N_minus == pytest.approx(3.65, abs=0.01)
    assert params.N_plus == pytest.approx(3.97, abs=0.01)
    assert params.window_ints == (4, 4)
    assert params.with_window("floor").window_ints == (3, 3)


def test_j1_unperturbed_is_cc_at_xi0(params):
    assert float(cc(params.xi0, 0.0, 1.0, params.lam)) == pytest.approx(params.J1_0, abs=1e-14)
    assert float(cc(params.xi0, 1.0, 1.0, params.lam)) == pytest.approx(params.J1_0, abs=1e-14)


def test_intersect_unit_shift_gives_xi0(params):
    assert intersect(0.0, 1.0, 1.0, 1.0, params.lam) == pytest.approx(params.xi0, abs=1e-14)
    assert intersect(2.0, 1.0, 3.0, 1.0, params.lam) == pytest.approx(2 + params.xi0, abs=1e-13)


def test_intersect_none_between_w_and_w_minus_two():
    # W = 1.2: W^-2 < lambda^Z < W has no crossing
    W = 1.2
    Z = math.log(1.0) / math.log(LAM)
    assert intersect(0.0, 1.0, Z, W ** 3, LAM) is None


def test_intersect_coincident_raises():
    with pytest.raises(CoincidentDescriptors):
        intersect(1.0, 2.0, 1.0, 2.0, LAM)


def test_intersect_matches_root_finder():
    rng = random.Random(4)
    checked = 0
    while checked < 200:
        Z1, Z2 = rng.uniform(-3, 3), rng.uniform(-3, 3)
        Y1, Y2 = rng.uniform(0.3, 3), rng.uniform(0.3, 3)
        z = intersect(Z1, Y1, Z2, Y2, LAM)
        if z is None:
            continue
        f = lambda x: float(cc(x, Z1, Y1, LAM) - cc(x, Z2, Y2, LAM))
        lo, hi = z - 1, z + 1
        if f(lo) * f(hi) > 0:
            continue
        assert z == pytest.approx(brentq(f, lo, hi, xtol=1e-14), abs=1e-10)
        checked += 1


def test_g_ratio_at_64_eps_k(params):
    ek = eps_min(4.0, 1.0, params)
    ratio = g_of_eps(4.0, 1.0, 64 * ek, params) / g_of_eps(4.0, 1.0, ek, params)
    assert float(ratio) == pytest.approx((2 * 2 + 1 / 4) / 3, rel=1e-14)


def test_g_minimum_at_eps_k(params):
    ek = eps_min(9.0, 2.0, params)
    eps = ek * np.exp(np.linspace(-3, 3, 6001))
    g = g_of_eps(9.0, 2.0, eps, params)
    assert eps[np.argmin(g)] == pytest.approx(ek, rel=2e-3)
    assert float(g_of_eps(9.0, 2.0, ek, params)) == pytest.approx(2 ** (1 / 3), rel=1e-14)
    with pytest.raises(NonPositiveEps):
        g_of_eps(9.0, 2.0, 0.0, params)


def test_beta_decomposition(golden, params):
    rng = random.Random(7)
    for _ in range(300):
        k = tuple(rng.randint(-40, 40) for _ in range(3))
        if not any(k):
            continue
        qr = quasi_resonance(golden, k)
        d = float(qr.divisor)
        if d == 0:
            continue
        eps = 10 ** rng.uniform(-12, -1)
        _, beta, _ = melnikov_coeff(k, d, eps, params)
        n2 = sum(x * x for x in k)
        g = g_of_eps(n2, abs(d) * n2 / params.gamma_star, eps, params)
        assert beta == pytest.approx(params.C0 * float(g) / eps ** (1 / 6), rel=1e-12)


def test_exact_vs_approximate_coefficient(params):
    d = 0.3
    for eps in (1e-2, 5e-3, 2e-3, 1e-4):
        alpha, beta, L = melnikov_coeff((0, 0, 1), d, eps, params)
        x = d / math.sqrt(eps)
        # sinh(a) = e^a (1 - e^{-2a}) / 2 with a = pi x / 2, so the relative gap is e^{-pi x}
        gap = abs(L - alpha * math.exp(-beta)) / L
        assert gap <= 2 * math.exp(-math.pi * x) + 1e-14
        assert gap == pytest.approx(math.exp(-math.pi * x), rel=1e-6, abs=1e-14)


def test_coefficient_underflows_without_overflow(params):
    _, _, L = melnikov_coeff((3, -1, 2), 0.4, 1e-12, params)
    assert L == 0.0


def test_zeta_round_trip(params):
    eps = np.logspace(-14, -1, 50)
    assert np.allclose(eps_of_zeta(zeta_of_eps(eps, params), params), eps, rtol=1e-12)
    assert float(zeta_of_eps(params.D0 / params.K_hat ** 3, params)) == pytest.approx(0.0, abs=1e-14)
    z1 = zeta_of_eps(1e-6, params)
    z2 = zeta_of_eps(1e-6 / params.lam ** 3, params)
    assert float(z2 - z1) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(NonPositiveEps):
        zeta_of_eps(-1.0, params)


def test_f1bar_descriptor_location(params):
    fam = primary_family(params)
    for n in (5, 11, 30):
        Z, Y = fam.descriptors(n, params)
        b = float(params.bbar(n))
        assert float(Z) == pytest.approx(n + math.log(b) / (3 * math.log(params.lam)), abs=1e-12)
        # minimum value is b^{1/3}, at eps = eps_of_zeta(Z)
        z_back = float(zeta_of_eps(eps_of_zeta(Z, params), params))
        assert z_back == pytest.approx(float(Z), abs=1e-10)
        assert float(cc(Z, Z, Y, params.lam)) == pytest.approx(b ** (1 / 3), rel=1e-14)


def test_lambda_z_identity(params):
    fam = primary_family(params)
    for n, m in ((3, 4), (7, 10), (20, 17)):
        Zn, Yn = fam.descriptors(n, params)
        Zm, Ym = fam.descriptors(m, params)
        W = (Ym / Yn) ** (1 / 3)
        assert params.lam ** (Zm - Zn) == pytest.approx(W * params.lam ** (m - n), rel=1e-12)


def test_f1bar_range_golden(params):
    z = np.linspace(params.zeta0, params.zeta0 + 60, 20_000)
    v, _ = f1_bar(z, params)
    assert v.min() >= params.J0_minus - 1e-9
    assert v.max() <= 1.010619 + 5e-5


def test_f1bar_delta_zero_is_periodic(params):
    p0 = params.with_delta(0.0)
    z = np.linspace(p0.zeta0, p0.zeta0 + 10, 10_001)
    v, _ = f1_bar(z, p0)
    v1, _ = f1_bar(z + 1, p0)
    assert np.abs(v - v1).max() < 1e-12
    assert v.min() == pytest.approx(1.0, abs=1e-6)
    assert v.max() <= params.J1_0 + 1e-12
    # the maxima sit at the crossings n + xi0
    peaks, _ = f1_bar(np.arange(6, 12) + p0.xi0, p0)
    assert np.allclose(peaks, params.J1_0, atol=1e-12)


def test_floor_and_ceil_windows_agree(params):
    z = np.linspace(params.zeta0, params.zeta0 + 40, 20_000)
    a, _ = f1_bar(z, params)
    b, _ = f1_bar(z, params.with_window("floor"))
    assert np.array_equal(a, b)


def test_adjacent_descriptors_agree_at_corner(params, analysis):
    prof = h_profiles(np.linspace(params.zeta0, params.zeta0 + 22, 22_001), params, analysis.families)
    fam = analysis.families[0]
    assert prof.corners
    for c in prof.corners:
        Zl, Yl = fam.descriptors(c.left[2], params)
        Zr, Yr = fam.descriptors(c.right[2], params)
        assert float(cc(c.zeta, Zl, Yl, params.lam)) == pytest.approx(
            float(cc(c.zeta, Zr, Yr, params.lam)), abs=1e-10)


def test_profile_invariants(params, analysis):
    prof = h_profiles(np.arange(0.0, params.zeta0 + 30, 1e-3), params, analysis.families)
    assert np.all(prof.F1 <= prof.F2 + 1e-15)
    assert np.all(np.diff(prof.zeta) >= 0)
    assert prof.strong_sep_holds
    assert np.allclose(prof.F1, prof.F1_bar, rtol=0, atol=1e-12)
    assert np.array_equal(prof.valid, prof.zeta >= params.zeta0)
    gaps = prof.F2[prof.is_corner] - prof.F1[prof.is_corner]
    assert np.all(np.abs(gaps) <= 1e-8)


def test_secondary_sequences_never_dominate_golden(koch, params):
    recs = enumerate_primitives(koch, 6.0)
    fams = families_for(recs, params, 6.0, bound=2.0)
    assert len(fams) > 1
    z = np.linspace(params.zeta0, params.zeta0 + 30, 5000)
    v, idx, _ = f1(z, params, fams)
    vb, _ = f1_bar(z, params)
    assert np.all(idx == 0)
    assert np.array_equal(v, vb)


def test_descriptors_never_coincide(koch, params):
    recs = enumerate_primitives(koch, 6.0)
    fams = families_for(recs, params, 6.0, bound=2.0)
    rng = random.Random(11)
    seen = 0
    while seen < 500:
        a = (rng.randrange(len(fams)), rng.randrange(0, 40))
        b = (rng.randrange(len(fams)), rng.randrange(0, 40))
        if a == b:
            continue
        Za, Ya = fams[a[0]].descriptors(a[1], params)
        Zb, Yb = fams[b[0]].descriptors(b[1], params)
        assert (float(Za), float(Ya)) != (float(Zb), float(Yb))
        seen += 1


def test_insufficient_cut_raises(koch, params):
    recs = enumerate_primitives(koch, 0.5)
    with pytest.raises(InsufficientPrimitiveCut):
        families_for(recs, params, 0.5)


def test_estimate_formula(params, analysis):
    e = max_splitting_estimate(1e-6, 1e-20, params, analysis.families)
    direct = 1e-20 / 1e-2 * math.exp(-params.C0 * e.h1 / 0.1)
    assert e.estimate == pytest.approx(direct, rel=1e-12)
    assert e.r == pytest.approx(20 / 6)
    assert e.r_condition_met


def test_estimate_halving_identity(params, analysis):
    eps, mu = 3e-7, 1e-25
    a = max_splitting_estimate(eps, mu, params, analysis.families)
    b = max_splitting_estimate(eps / 2, mu, params, analysis.families)
    expected = params.C0 * (a.h1 / eps ** (1 / 6) - b.h1 / (eps / 2) ** (1 / 6)) + math.log(2) / 3
    assert b.log_estimate - a.log_estimate == pytest.approx(expected, abs=1e-10)


def test_estimate_at_corner_flags(params, analysis):
    prof = h_profiles(np.linspace(10, 14, 4001), params, analysis.families)
    c = prof.corners[0]
    e = max_splitting_estimate(float(eps_of_zeta(c.zeta, params)), 1e-20, params, analysis.families)
    assert e.eta21 == pytest.approx(1.0, abs=1e-6)
    assert e.near_corner


def test_sharp_mode_uses_override(params, analysis):
    e = max_splitting_estimate(1e-6, 1e-20, params, analysis.families, h1_override=1.010619)
    assert e.sharp_bound_mode
    direct = 1e-20 / 1e-2 * math.exp(-params.C0 * 1.010619 / 0.1)
    assert e.estimate == pytest.approx(direct, rel=1e-12)


def test_estimate_rejects_bad_inputs(params, analysis):
    with pytest.raises(NonPositiveInputs):
        max_splitting_estimate(1e-6, 0.0, params, analysis.families)


def test_two_lowest_ordering(params, analysis):
    z = np.linspace(5, 30, 3000)
    h1, h2, l1, l2 = two_lowest(z, params, analysis.families)
    assert np.all(h1 <= h2)
    assert not np.any((l1[0] == l2[0]) & (l1[1] == l2[1]))


def test_family_of_primary_has_zero_shift(consts, params):
    fam = family_of(consts.primary, params)
    assert fam.shift == pytest.approx(0.0, abs=1e-14)
    assert fam.gamma_norm == pytest.approx(1.0, abs=1e-15)
