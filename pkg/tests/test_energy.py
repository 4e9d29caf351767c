"""Energy sums, the exact I/S decomposition, and reference curves."""

import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from kostlan import energy as en
from kostlan import polymodel as pm
from kostlan import roots as rt
from kostlan import sphere as sp
from kostlan.polymodel import ComplexGaussianStream

LOG2 = math.log(2.0)


def test_energy_trivial_configurations():
    single = sp.SphericalConfiguration.from_cartesian([[0.0, 0.0, 1.0]])
    assert en.pairwise_energy(single) == 0.0
    anti = sp.SphericalConfiguration.from_cartesian([[0, 0, 1], [0, 0, -1]])
    assert en.pairwise_energy(anti) == pytest.approx(-2 * LOG2, rel=1e-14)
    ang = 2 * np.pi * np.arange(3) / 3
    tri = sp.SphericalConfiguration.from_cartesian(
        np.stack([np.cos(ang), np.sin(ang), np.zeros(3)], 1)
    )
    assert en.pairwise_energy(tri) == pytest.approx(-3 * math.log(3.0), rel=1e-14)


def test_energy_coincident_points_named():
    cfg = sp.SphericalConfiguration.from_planar([0.5, 0.5 + 1e-16, 2.0])
    with pytest.raises(en.CoincidentPointsError) as err:
        en.pairwise_energy(cfg)
    assert err.value.indices == (0, 1)


def test_energy_matches_longdouble_oracle():
    # compensated O(n^2) sum against an extended-precision reduction
    p = pm.sample_elliptic(400, ComplexGaussianStream(101, 0))
    rs = rt.find_roots(p)
    xyz = sp.project_many(rs.roots)
    e_fast = en.pairwise_energy_planar(rs.roots)
    diff = xyz[:, None, :] - xyz[None, :, :]
    d2 = np.sum(diff.astype(np.longdouble) ** 2, axis=2)
    iu = np.triu_indices(len(xyz), k=1)
    e_ref = float(-np.sum(np.log(d2[iu])))
    assert e_fast == pytest.approx(e_ref, rel=1e-12)


def test_expected_energy_closed_form():
    assert en.expected_energy(1) == 0.0
    assert en.expected_energy(2) == pytest.approx(1 - 3 * LOG2, rel=1e-14)
    with pytest.raises(ValueError):
        en.expected_energy(0)


def test_uniform_points_mean_energy():
    # independent-points oracle: each log-distance is uncorrelated across
    # pairs with Var(log d) = 1/4, so Var(E_n) = n(n-1)/2 exactly
    n, m = 30, 400
    vals = np.empty(m)
    for i in range(m):
        zs = sp.sample_mu(ComplexGaussianStream(103, i), size=n)
        vals[i] = en.pairwise_energy_planar(np.asarray(zs))
    se = math.sqrt(n * (n - 1) / 2.0 / m)
    target = en.reference_curves(n)["uniform_mean"]
    assert abs(vals.mean() - target) <= 4 * se


def test_energy_invariant_under_isometry(rng):
    for trial in range(5):
        n = int(rng.integers(10, 60))
        zs = sp.sample_mu(ComplexGaussianStream(107, trial), size=n)
        cfg = sp.SphericalConfiguration.from_planar(zs)
        tau = sp.random_isometry(ComplexGaussianStream(109, trial))
        e0 = en.pairwise_energy(cfg)
        e1 = en.pairwise_energy(cfg.transform(tau))
        assert abs(e0 - e1) <= 1e-9 * n * n


def test_i_n_hand_case():
    # f = z (unit linear coefficient, root at 0): I_1 = 1*(0 + 0 - 1/2)
    p = pm.polynomial_from_weighted([0.0, 1.0])
    rs = rt.RootSet(
        roots=np.array([0.0 + 0.0j]),
        residuals=np.array([0.0]),
        condition_flags=np.array([0], dtype=np.int8),
        sweeps=0,
    )
    assert en.i_n_from_roots(p, rs) == pytest.approx(-0.5, rel=1e-14)
    # S_1 = log|Dfhat(0)| = log 1 = 0
    assert en.s_n_from_roots(p, rs) == pytest.approx(0.0, abs=1e-14)


def test_i_n_against_quadrature_oracle():
    # independent 2D quadrature of n * int log|fhat| dmu at n=20 agrees to
    # 1e-4 relative (log singularities at the 20 roots make the adaptive
    # quadrature warn; the tolerance is still met)
    n = 20
    p = pm.sample_elliptic(n, ComplexGaussianStream(77, 3))
    rs = rt.find_roots(p)
    exact = en.i_n_from_roots(p, rs)

    def integrand(u, th):
        r = math.sqrt(u / (1.0 - u))
        v = abs(pm.eval_normalized(p, r * np.exp(1j * th)))
        return math.log(v) if v > 0 else -745.0

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.dblquad(integrand, 0, 2 * np.pi, 0, 1, epsabs=2e-5, epsrel=1e-6)
    quad_i = n * val / (2 * np.pi)
    assert abs(quad_i - exact) <= 1e-4 * abs(exact)


def test_s_n_invariant_under_polynomial_isometry():
    # S_n of the tau-transformed polynomial equals S_n of the original
    # pathwise (the |Dfhat| values at corresponding roots coincide)
    from test_roots import _transformed_polynomial

    n = 8
    p = pm.sample_elliptic(n, ComplexGaussianStream(113, 0))
    tau = sp.random_isometry(ComplexGaussianStream(113, 1))
    q = pm.polynomial_from_weighted(_transformed_polynomial(p, tau))
    s_p = en.s_n_from_roots(p, rt.find_roots(p))
    s_q = en.s_n_from_roots(q, rt.find_roots(q))
    assert abs(s_p - s_q) <= 1e-8 * max(1.0, abs(s_p))


def test_decomposition_hand_constructed():
    # z^2 - 1: roots +-1, all terms computable by hand
    p = pm.polynomial_from_weighted([-1.0, 0.0, 1.0])
    rs = rt.find_roots(p)
    bd = en.decomposition_check(p, rs)
    assert abs(bd.identity_residual) <= 1e-10
    # E_2 for roots +-1 projected: antipodal pair on the equator
    assert bd.e_n == pytest.approx(-2 * LOG2, abs=1e-12)


def test_decomposition_identity_random():
    for n in (10, 100):
        for i in range(10):
            p = pm.sample_elliptic(n, ComplexGaussianStream(127, 100 * n + i))
            bd = en.decomposition_check(p, rt.find_roots(p))
            assert abs(bd.identity_residual) <= 1e-7 * n * n


def test_decomposition_residual_stable_under_isometry():
    from test_roots import _transformed_polynomial

    n = 10
    p = pm.sample_elliptic(n, ComplexGaussianStream(131, 0))
    tau = sp.random_isometry(ComplexGaussianStream(131, 1))
    q = pm.polynomial_from_weighted(_transformed_polynomial(p, tau))
    r0 = en.decomposition_check(p, rt.find_roots(p)).identity_residual
    r1 = en.decomposition_check(q, rt.find_roots(q)).identity_residual
    assert abs(r0) <= 1e-10 and abs(r1) <= 1e-10


def test_decomposition_identity_arbitrary_coefficients():
    # the identity is algebraic in (polynomial, its roots): it must hold
    # for explicit non-Gaussian coefficients too, not just ensemble draws
    from hypothesis import given, settings
    from hypothesis import strategies as hst

    bounded = hst.complex_numbers(
        min_magnitude=0.1, max_magnitude=10.0, allow_nan=False, allow_infinity=False
    )

    @given(hst.lists(bounded, min_size=3, max_size=12))
    @settings(max_examples=40, deadline=None)
    def check(weighted):
        p = pm.polynomial_from_weighted(weighted)
        n = p.degree
        rs = rt.find_roots(p)
        bd = en.decomposition_check(p, rs)
        assert abs(bd.identity_residual) <= 1e-7 * n * n

    check()


def test_split_means_small_sample():
    # E[I_n]/n -> -gamma/2 and E[S_n]/n -> (1-gamma)/2 within 5 SE
    n, m = 50, 600
    g = np.euler_gamma
    ivals = np.empty(m)
    svals = np.empty(m)
    for i in range(m):
        p = pm.sample_elliptic(n, ComplexGaussianStream(137, i))
        rs = rt.find_roots(p)
        ivals[i] = en.i_n_from_roots(p, rs) / n
        svals[i] = en.s_n_from_roots(p, rs) / n
    for vals, target in ((ivals, -g / 2), (svals, (1 - g) / 2)):
        se = vals.std(ddof=1) / math.sqrt(m)
        assert abs(vals.mean() - target) <= 5 * se


def test_reference_curves_shape():
    ref = en.reference_curves(2)
    assert ref["min_lower"] < ref["min_upper"]
    assert en.C_MIN_LOWER == -0.0569 and en.C_MIN_UPPER == -0.0556
    for n in (2, 10, 100, 1000):
        ref = en.reference_curves(n)
        # elliptic mean sits above the minimum band
        assert ref["elliptic_mean"] >= ref["min_lower"]
        # uniform mean exceeds elliptic mean by exactly (n log n)/2
        gap = ref["uniform_mean"] - ref["elliptic_mean"]
        assert gap > 0
        assert gap == pytest.approx(0.5 * n * math.log(n), rel=1e-12)
