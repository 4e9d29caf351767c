"""Sampling and normalized evaluation of the random elliptic polynomial."""

import math

import mpmath
import numpy as np
import pytest
from scipy import integrate, stats as sps

from kostlan import polymodel as pm
from kostlan import sphere as sp
from kostlan.polymodel import ComplexGaussianStream


def test_stream_reproducible_and_independent():
    a = ComplexGaussianStream(7, 3).generator().standard_normal(8)
    b = ComplexGaussianStream(7, 3).generator().standard_normal(8)
    c = ComplexGaussianStream(7, 4).generator().standard_normal(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_degree_zero_constant(stream):
    p = pm.sample_elliptic(0, stream)
    assert p.degree == 0
    assert p.weighted_coeffs[0] == p.raw_coeffs[0]
    assert pm.eval_normalized(p, 1.7 + 0.3j) == pytest.approx(p.raw_coeffs[0])


def test_degree_two_weights(stream):
    p = pm.sample_elliptic(2, stream)
    ratio = np.abs(p.weighted_coeffs / p.raw_coeffs)
    assert ratio == pytest.approx([1.0, math.sqrt(2.0), 1.0], rel=1e-14)


def test_weight_ratio_matches_binomial():
    # |w_j / a_j| = sqrt(binom(n, j)) to 1e-12 relative, including n where
    # the binomial itself would overflow a double
    for n in (5, 57, 400, 1500):
        p = pm.sample_elliptic(n, ComplexGaussianStream(1, n))
        ratio = np.abs(p.weighted_coeffs / p.raw_coeffs)
        assert np.all(np.abs(np.log(ratio) - p.log_binom) <= 1e-12 * (1.0 + p.log_binom))
    assert pm.sample_elliptic(4, ComplexGaussianStream(1, 0)).leading == pytest.approx(
        pm.sample_elliptic(4, ComplexGaussianStream(1, 0)).weighted_coeffs[-1]
    )


def test_coefficient_second_moment_monte_carlo():
    # E|w_j|^2 = binom(n, j) within 5 standard errors (|a_j|^2 ~ Exp(1))
    n, m = 5, 100_000
    sums = np.zeros(n + 1)
    sq = np.zeros(n + 1)
    for i in range(m):
        w = np.abs(pm.sample_elliptic(n, ComplexGaussianStream(11, i)).weighted_coeffs) ** 2
        sums += w
        sq += w * w
    mean = sums / m
    se = np.sqrt((sq / m - mean**2) / m)
    binom = np.exp(2.0 * pm.half_log_binom(n))
    assert np.all(np.abs(mean - binom) <= 5.0 * se)


def test_eval_matches_naive_monomial_mpmath():
    # oracle: extended-precision naive evaluation, 1e-9 relative for
    # n <= 50 and |z| <= 2
    mpmath.mp.dps = 50
    rng = np.random.default_rng(5)
    for n in (3, 17, 50):
        p = pm.sample_elliptic(n, ComplexGaussianStream(23, n))
        coeffs = [mpmath.mpc(c.real, c.imag) for c in p.weighted_coeffs]
        for _ in range(8):
            z = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            zz = mpmath.mpc(z.real, z.imag)
            naive = sum(c * zz**j for j, c in enumerate(coeffs))
            naive /= (1 + abs(zz) ** 2) ** (n / 2.0)
            got = pm.eval_normalized(p, z)
            ref = complex(naive.real, naive.imag)
            assert abs(got - ref) <= 1e-9 * max(abs(ref), 1e-9)


def test_eval_hand_cases():
    # f = 1 + z (n=1, weights are 1): fhat(1) = 2/sqrt(2) = sqrt(2)
    p = pm.polynomial_from_weighted([1.0, 1.0])
    assert pm.eval_normalized(p, 1.0) == pytest.approx(math.sqrt(2.0), rel=1e-14)
    # z = 0 isolates a_0
    p2 = pm.sample_elliptic(40, ComplexGaussianStream(2, 2))
    assert pm.eval_normalized(p2, 0.0) == pytest.approx(p2.raw_coeffs[0], rel=1e-14)
    # f = z: Dfhat(0) = f'(0)/sqrt(1) = 1
    p3 = pm.polynomial_from_weighted([0.0, 1.0])
    assert pm.eval_dnormalized(p3, 0.0) == pytest.approx(1.0, rel=1e-14)
    # zero linear coefficient: derivative vanishes identically
    p4 = pm.polynomial_from_weighted([1.0, 0.0])
    assert pm.eval_dnormalized(p4, 0.37 + 0.1j) == 0.0


def test_eval_unit_variance_and_derivative_variance():
    # Var fhat(z) = 1 and Var Dfhat(0) = 1, each within 5 SE
    n, m = 30, 20_000
    z = 0.8 - 0.4j
    vals = np.empty(m, complex)
    dvals = np.empty(m, complex)
    for i in range(m):
        p = pm.sample_elliptic(n, ComplexGaussianStream(31, i))
        vals[i] = pm.eval_normalized(p, z)
        dvals[i] = pm.eval_dnormalized(p, 0.0)
    for sample in (np.abs(vals) ** 2, np.abs(dvals) ** 2):
        mean = sample.mean()
        se = sample.std(ddof=1) / math.sqrt(m)
        assert abs(mean - 1.0) <= 5 * se


def test_eval_extreme_arguments_no_overflow():
    # n = 1e4 with |z| = 1e3 exercises the large-degree basis path
    p = pm.sample_elliptic(10_000, ComplexGaussianStream(3, 1))
    for z in (1e3 + 0j, 900.0 + 433.0j, 0.0j, 1.0 + 1.0j):
        v = pm.eval_normalized(p, z)
        dv = pm.eval_dnormalized(p, z)
        assert np.isfinite(v) and np.isfinite(dv)
    # and the Horner path at a still-large degree
    p2 = pm.sample_elliptic(1500, ComplexGaussianStream(3, 2))
    vals = pm.eval_normalized(p2, np.array([1e3 + 0j, 1e-3 + 0j, 0.5 + 0.5j]))
    assert np.all(np.isfinite(vals))


def test_big_degree_path_consistent_with_horner():
    # same polynomial evaluated by both strategies
    p = pm.sample_elliptic(220, ComplexGaussianStream(8, 8))
    zs = np.array([0.3 + 0.1j, 1.4 - 2.0j, 5.0 + 0.0j, 0.0 + 0.9j])
    f1, d1 = pm.eval_pair(p, zs)
    f2, d2 = pm._eval_pair_big_degree(p, zs)
    assert np.allclose(f1, f2, rtol=1e-9)
    assert np.allclose(d1, d2, rtol=1e-9)


def test_derivative_finite_difference_order():
    # central differences of fhat match the assembled derivative of fhat
    # (product rule) with observed order >= 1.9
    n = 25
    p = pm.sample_elliptic(n, ComplexGaussianStream(17, 5))
    z0 = 0.4 + 0.2j
    # d/dx fhat(z) along the real direction at z0:
    #   fhat' = Dfhat * sqrt(n) / (1+|z|^2) - n Re(z) fhat / (1+|z|^2)
    a2 = abs(z0) ** 2
    analytic = (
        pm.eval_dnormalized(p, z0) * math.sqrt(n) / (1 + a2)
        - n * z0.real * pm.eval_normalized(p, z0) / (1 + a2)
    )
    errs = []
    for h in (1e-3, 1e-4, 1e-5):
        fd = (pm.eval_normalized(p, z0 + h) - pm.eval_normalized(p, z0 - h)) / (2 * h)
        errs.append(abs(fd - analytic))
    order = np.polyfit(np.log([1e-3, 1e-4, 1e-5]), np.log(errs), 1)[0]
    assert order >= 1.9


def test_abs_value_law_invariant_under_isometry():
    # |fhat(z)| and |fhat(tau(z))| have the same law (two-sample KS)
    n, m = 30, 10_000
    z = 0.3 + 0.5j
    tau = sp.random_isometry(ComplexGaussianStream(41, 0))
    tz = sp.apply_isometry(tau, z)
    a = np.empty(m)
    b = np.empty(m)
    for i in range(m):
        p = pm.sample_elliptic(n, ComplexGaussianStream(43, i))
        a[i] = abs(pm.eval_normalized(p, z))
        p2 = pm.sample_elliptic(n, ComplexGaussianStream(44, i))
        b[i] = abs(pm.eval_normalized(p2, tz))
    assert sps.ks_2samp(a, b).pvalue > 0.01


def test_covariance_kernel_values():
    assert pm.covariance_kernel(0.0, 0.7 + 0.2j, 12) == pytest.approx(1.0)
    assert pm.covariance_kernel(1.0, 1.0, 2) == pytest.approx(4.0, rel=1e-12)
    # modulus stays 1e-12-relative against exact integer arithmetic
    assert abs(pm.covariance_kernel(2.0, 3.0, 10)) == pytest.approx(7.0**10, rel=1e-12)


def test_kernel_converges_to_planar_limit():
    # (1 + z conj(w)/n)^n -> e^{z conj(w)} uniformly on a compact set
    rng = np.random.default_rng(9)
    pts = rng.uniform(-1.5, 1.5, (20, 2)) @ np.array([[1], [1j]])
    errs = {}
    for n in (100, 1000):
        worst = 0.0
        for z in pts[:, 0]:
            for w in pts[:, 0]:
                kn = pm.covariance_kernel(z / math.sqrt(n), w / math.sqrt(n), n)
                limit = np.exp(z * np.conj(w))
                worst = max(worst, abs(kn - limit) / abs(limit))
        errs[n] = worst
    # first correction is |z conj(w)|^2 / (2n): expect the 1/n rate
    assert errs[1000] < errs[100] / 5.0
    assert errs[1000] < 2e-2


def test_gef_min_order_matches_direct_tail():
    m = pm.gef_min_order(3.0, 1e-12)
    # direct tail summation at m and m-1
    def tail(order):
        j = np.arange(order + 1, order + 400, dtype=float)
        from scipy.special import gammaln

        return float(np.sum(np.exp(j * np.log(9.0) - gammaln(j + 1))))

    assert tail(m) < 1e-12 <= tail(m - 1)


def test_gef_truncation_contract(stream):
    g = pm.sample_gef(10, radius=2.0, tail_tol=1e-10, stream=stream)
    assert g.order >= pm.gef_min_order(2.0, 1e-10)  # order was raised
    assert g.tail_bound < 1e-10
    with pytest.raises(ValueError):
        pm.gef_min_order(300.0, 1e-12)


def test_gef_empirical_covariance():
    # E[g(z) conj(g(w))] = e^{z conj(w)} within 5 SE on radius 2
    m = 20_000
    z, w = 0.9 + 0.3j, -0.4 + 1.1j
    prods = np.empty(m, complex)
    zero_vals = np.empty(m, complex)
    for i in range(m):
        g = pm.sample_gef(40, 2.0, 1e-9, ComplexGaussianStream(53, i))
        prods[i] = g(z) * np.conj(g(w))
        zero_vals[i] = g.coeffs[0]
    target = np.exp(z * np.conj(w))
    se = prods.std(ddof=1) / math.sqrt(m)
    assert abs(prods.mean() - target) <= 5 * se
    # g(0) is a standard complex Gaussian: |g(0)|^2 ~ Exp(1)
    assert sps.kstest(np.abs(zero_vals) ** 2, "expon").pvalue > 0.01


def test_leading_coefficient_resample_guard(stream):
    p = pm.sample_elliptic(6, stream)
    assert p.resamples == 0
    assert abs(p.leading) >= pm.LEADING_COEFF_FLOOR


def test_non_finite_evaluation_raises():
    p = pm.polynomial_from_weighted([np.inf, 1.0])
    with pytest.raises(FloatingPointError):
        pm.eval_normalized(p, 1.0)


def test_mu_expectation_of_log_kernel():
    # int log(1+|z|^2) dmu = 1 (the normalization the energy split relies on)
    val, _ = integrate.quad(lambda t: 2 * t * np.log1p(t * t) / (1 + t * t) ** 2, 0, np.inf)
    assert val == pytest.approx(1.0, abs=1e-8)
