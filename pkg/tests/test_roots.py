"""Root finding: correctness, residuals, Vieta checks, isometry covariance."""

import math

import numpy as np
import pytest

from kostlan import polymodel as pm
from kostlan import roots as rt
from kostlan import sphere as sp
from kostlan.polymodel import ComplexGaussianStream


def test_linear_polynomial():
    p = pm.polynomial_from_weighted([2.0 + 1.0j, 4.0])
    rs = rt.find_roots(p)
    assert rs.roots[0] == pytest.approx(-(2.0 + 1.0j) / 4.0, rel=1e-14)


def test_quadratic_explicit_roots():
    p = pm.polynomial_from_weighted([-1.0, 0.0, 1.0])  # z^2 - 1
    rs = rt.find_roots(p)
    assert np.allclose(rs.roots, [-1.0, 1.0], atol=1e-12)
    diag = rt.validate_roots(p, rs)
    assert diag.passed
    assert diag.vieta_sum_error <= 1e-12
    assert diag.vieta_logprod_error <= 1e-12


def test_random_degree_200_residuals():
    p = pm.sample_elliptic(200, ComplexGaussianStream(61, 0))
    rs = rt.find_roots(p)
    assert len(rs) == 200
    assert rs.max_residual <= 1e-10


@pytest.mark.parametrize("n,count", [(10, 300), (100, 60), (1000, 12)])
def test_root_count_equals_degree(n, count):
    for i in range(count):
        p = pm.sample_elliptic(n, ComplexGaussianStream(67, 10_000 * n + i))
        rs = rt.find_roots(p)
        assert len(rs) == n
        assert np.all(np.isfinite(rs.roots))


def test_roots_sorted_deterministically():
    p = pm.sample_elliptic(50, ComplexGaussianStream(71, 1))
    a = rt.find_roots(p).roots
    b = rt.find_roots(p).roots
    assert np.array_equal(a, b)
    order = np.lexsort((a.imag, a.real))
    assert np.array_equal(order, np.arange(len(a)))


def test_refine_root_cases():
    p = pm.polynomial_from_weighted([-1.0, 0.0, 1.0])
    # exact root returned unchanged (first step already below tolerance)
    assert rt.refine_root(p, 1.0) == pytest.approx(1.0, abs=1e-15)
    # basin convergence from 0.9
    assert rt.refine_root(p, 0.9) == pytest.approx(1.0, abs=1e-14)


def test_refine_improves_perturbed_root():
    p = pm.sample_elliptic(100, ComplexGaussianStream(73, 0))
    rs = rt.find_roots(p)
    z0 = rs.roots[17] + 1e-6
    before = abs(pm.eval_normalized(p, z0))
    after = abs(pm.eval_normalized(p, rt.refine_root(p, z0)))
    assert after <= before / 1e3


def test_refine_divergence_reported():
    p = pm.polynomial_from_weighted([-1.0, 0.0, 1.0])
    with pytest.raises(rt.RootFindingError):
        rt.refine_root(p, 0.0)  # f'(0) = 0: degenerate start


def test_vieta_random_degree_100():
    p = pm.sample_elliptic(100, ComplexGaussianStream(79, 4))
    rs = rt.find_roots(p)
    diag = rt.validate_roots(p, rs)
    assert diag.passed
    assert diag.vieta_sum_error <= 1e-8 * diag.vieta_sum_scale
    assert diag.vieta_logprod_error <= 1e-8 * 100


def test_cap_counts_match_uniform_measure():
    # fraction of projected roots in a spherical cap ~ mu(cap) within
    # 5 binomial SE over 500 samples (rotation invariance of the zero law)
    n, m = 50, 500
    center = sp.project(0.6 + 0.2j).xyz
    radius = 0.8  # chordal; mu(cap) = r^2/4
    mu_cap = radius**2 / 4.0
    hits = 0
    for i in range(m):
        p = pm.sample_elliptic(n, ComplexGaussianStream(83, i))
        rs = rt.find_roots(p)
        xyz = sp.project_many(rs.roots)
        hits += int(np.sum(np.linalg.norm(xyz - center, axis=1) < radius))
    total = n * m
    se = math.sqrt(total * mu_cap * (1 - mu_cap))
    assert abs(hits - total * mu_cap) <= 5 * se


def _transformed_polynomial(p: pm.EllipticPolynomial, tau: sp.Isometry):
    """Coefficients of sum_j a_j sqrt(binom) (alpha z + beta)^j
    (conj(alpha) - conj(beta) z)^(n-j): the polynomial whose zeros are
    tau^{-1} of the zeros of p."""
    n = p.degree
    a, b = complex(tau.alpha), complex(tau.beta)
    out = np.zeros(n + 1, dtype=complex)
    for j in range(n + 1):
        t1 = np.zeros(j + 1, dtype=complex)
        for k in range(j + 1):
            t1[k] = math.comb(j, k) * (a**k) * (b ** (j - k))
        t2 = np.zeros(n - j + 1, dtype=complex)
        for k in range(n - j + 1):
            t2[k] = math.comb(n - j, k) * ((-np.conj(b)) ** k) * (np.conj(a) ** (n - j - k))
        out[: n + 1] += p.weighted_coeffs[j] * np.convolve(t1, t2)
    return out


def test_roots_transform_as_inverse_isometry():
    n = 8
    p = pm.sample_elliptic(n, ComplexGaussianStream(89, 0))
    tau = sp.random_isometry(ComplexGaussianStream(89, 1))
    q = pm.polynomial_from_weighted(_transformed_polynomial(p, tau))
    roots_p = rt.find_roots(p).roots
    roots_q = rt.find_roots(q).roots
    expected = np.array([sp.apply_isometry(tau.inverse(), z) for z in roots_p])
    # match as multisets
    for z in expected:
        assert np.min(np.abs(roots_q - z)) <= 1e-8 * max(1.0, abs(z))


def test_zero_leading_coefficient_rejected():
    p = pm.polynomial_from_weighted([1.0, 1.0, 0.0])
    with pytest.raises(rt.RootFindingError):
        rt.find_roots(p)


def test_nonconvergence_reports_seed():
    # a polynomial the iteration cannot solve at all (all-zero except the
    # leading term is fine, so force NaN coefficients instead)
    p = pm.sample_elliptic(5, ComplexGaussianStream(97, 7))
    bad = pm.EllipticPolynomial(
        degree=5,
        raw_coeffs=p.raw_coeffs.copy(),
        weighted_coeffs=np.full(6, np.nan + 0j),
        log_binom=p.log_binom.copy(),
        seed_info=(97, 7),
    )
    with pytest.raises(rt.RootFindingError, match="97"):
        rt.find_roots(bad)
