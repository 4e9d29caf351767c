"""Stereographic geometry, metric, and sphere isometries."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst
from scipy import integrate, stats as sps

from kostlan import sphere as sp
from kostlan.polymodel import ComplexGaussianStream

finite_z = hst.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False)


def test_distance_fixed_values():
    assert sp.spherical_distance(0.3 + 1j, 0.3 + 1j) == 0.0
    assert sp.spherical_distance(0.0, sp.INF) == pytest.approx(2.0)
    assert sp.spherical_distance(1.0, -1.0) == pytest.approx(2.0)
    # d(z, inf) = 2/sqrt(1+|z|^2)
    for z in (0.0, 1.0, 3.0 - 4.0j):
        assert sp.spherical_distance(z, sp.INF) == pytest.approx(
            2.0 / math.sqrt(1.0 + abs(z) ** 2)
        )


def test_projection_convention():
    assert sp.project(0.0).cartesian == pytest.approx((0.0, 0.0, -1.0))
    assert sp.project(sp.INF).cartesian == (0.0, 0.0, 1.0)
    d = np.linalg.norm(sp.project(1.0).xyz - sp.project(-1.0).xyz)
    assert d == pytest.approx(2.0)


@given(finite_z, finite_z)
@settings(max_examples=200, deadline=None)
def test_metric_equals_chordal_distance(z, w):
    chord = float(np.linalg.norm(sp.project(z).xyz - sp.project(w).xyz))
    assert abs(chord - sp.spherical_distance(z, w)) <= 1e-12


@given(finite_z)
@settings(max_examples=200, deadline=None)
def test_projection_round_trip(z):
    back = sp.unproject(sp.project(z))
    assert abs(back - z) <= 1e-12 * max(1.0, abs(z))


@given(finite_z, finite_z, finite_z)
@settings(max_examples=100, deadline=None)
def test_metric_symmetry_and_triangle(z, w, y):
    dzw = sp.spherical_distance(z, w)
    assert dzw == sp.spherical_distance(w, z)
    assert dzw <= sp.spherical_distance(z, y) + sp.spherical_distance(y, w) + 1e-12
    assert 0.0 <= dzw <= 2.0 + 1e-15


def test_isometry_identity_and_inversion():
    ident = sp.Isometry(1.0, 0.0)
    assert sp.apply_isometry(ident, 0.3 + 0.7j) == 0.3 + 0.7j
    inv = sp.Isometry(0.0, 1.0)  # z -> -1/z
    assert sp.apply_isometry(inv, 1.0) == pytest.approx(-1.0)
    assert sp.is_infinity(sp.apply_isometry(inv, 0.0))


def test_isometry_norm_constraint():
    with pytest.raises(ValueError):
        sp.Isometry(1.0, 1.0)
    tau = sp.random_isometry(ComplexGaussianStream(5, 5))
    assert abs(abs(tau.alpha) ** 2 + abs(tau.beta) ** 2 - 1.0) <= 1e-12


def test_isometry_preserves_distance(rng):
    for _ in range(50):
        tau = sp.random_isometry(rng)
        z = complex(*rng.uniform(-3, 3, 2))
        w = complex(*rng.uniform(-3, 3, 2))
        d0 = sp.spherical_distance(z, w)
        d1 = sp.spherical_distance(sp.apply_isometry(tau, z), sp.apply_isometry(tau, w))
        assert abs(d0 - d1) <= 1e-10


def test_isometry_inverse_composition(rng):
    tau = sp.random_isometry(rng)
    inv = tau.inverse()
    for _ in range(1000):
        z = complex(*rng.uniform(-5, 5, 2))
        back = sp.apply_isometry(inv, sp.apply_isometry(tau, z))
        assert abs(back - z) <= 1e-10 * max(1.0, abs(z))


def test_random_isometry_pushforward_uniform(rng):
    # image of the south pole over many draws is uniform: chi-square over
    # the eight octants
    m = 100_000
    pts = np.empty((m, 3))
    for i in range(m):
        tau = sp.random_isometry(rng)
        pts[i] = sp.project(sp.apply_isometry(tau, 0.0)).cartesian
    octant = (pts[:, 0] > 0) * 4 + (pts[:, 1] > 0) * 2 + (pts[:, 2] > 0)
    counts = np.bincount(octant, minlength=8)
    assert sps.chisquare(counts).pvalue > 0.01


def test_mu_density_normalization_and_log_moment():
    total, _ = integrate.quad(lambda t: 2 * np.pi * t * sp.mu_density(t), 0, np.inf)
    assert total == pytest.approx(1.0, abs=1e-8)
    logm, _ = integrate.quad(
        lambda t: 2 * np.pi * t * np.log1p(t * t) * sp.mu_density(t), 0, np.inf
    )
    assert logm == pytest.approx(1.0, abs=1e-8)


def test_sample_mu_centered(stream):
    zs = sp.sample_mu(stream, size=1_000_000)
    xyz = sp.project_many(zs)
    mean = xyz.mean(axis=0)
    se = xyz.std(axis=0, ddof=1) / math.sqrt(len(zs))
    assert np.all(np.abs(mean) <= 5 * se)


def test_configuration_sources_and_readers(tmp_path):
    cfg = sp.SphericalConfiguration.from_planar([0.0, 1.0, 1j], "roots")
    assert len(cfg) == 3
    with pytest.raises(ValueError):
        sp.SphericalConfiguration.from_planar([0.0], "bogus")

    path = tmp_path / "points.json"
    path.write_text('{"points": [[0.5, 0.25], [0.0, 0.0, 1.0]]}')
    loaded = sp.read_point_file(path)
    assert loaded.points[0].planar == pytest.approx(0.5 + 0.25j)
    assert sp.is_infinity(loaded.points[1].planar)
    with pytest.raises(ValueError):
        bad = tmp_path / "bad.json"
        bad.write_text('{"points": [[1, 2, 3, 4]]}')
        sp.read_point_file(bad)


def test_cartesian_reader_normalizes():
    cfg = sp.SphericalConfiguration.from_cartesian([[0.0, 0.0, 2.0], [3.0, 0.0, 0.0]])
    assert np.allclose(np.linalg.norm(cfg.cartesian, axis=1), 1.0, atol=1e-12)
