import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acflab.grid import DomainMask, GridSpec, ScalarField, check_subsolution, discrete_gradient, interpolate
from acflab.oracles import (
    AltCaffarelli,
    AltCaffarelliProfile,
    AnnulusCapacitor,
    HalfPlaneLinear,
    HomogeneousCone2D,
    LinearField,
    ac_ode_residual,
    ac_profile_build,
    blowup_rescale,
    oracle_sample,
    polar_dirichlet_quadrature,
)


@pytest.fixture(scope="module")
def profile():
    return ac_profile_build()


def test_theta0(profile):
    assert profile.theta0_degrees == pytest.approx(33.534, abs=0.01)
    assert 0 < profile.theta0 < np.pi / 2
    assert abs(AltCaffarelliProfile.f(profile.theta0)) < 1e-10


def test_profile_at_equator(profile):
    assert AltCaffarelliProfile.f(np.pi / 2) == pytest.approx(2.0, abs=1e-15)
    assert abs(AltCaffarelliProfile.fprime(np.pi / 2)) < 1e-12


def test_hand_derivative_matches_finite_difference(profile):
    th = np.linspace(0.3, 2.8, 40)
    fd = (AltCaffarelliProfile.f(th + 1e-6) - AltCaffarelliProfile.f(th - 1e-6)) / 2e-6
    np.testing.assert_allclose(AltCaffarelliProfile.fprime(th), fd, atol=1e-7)


def test_ode_residual(profile):
    assert ac_ode_residual(profile, np.linspace(0.2, np.pi - 0.2, 200)) <= 1e-5
    assert ac_ode_residual(profile, [np.pi / 2]) <= 1e-8
    with pytest.warns(UserWarning):
        assert ac_ode_residual(profile, []) == 0.0


def test_half_plane_sample():
    g = GridSpec.cube(2, 1 / 8)
    f, grad = oracle_sample(HalfPlaneLinear(1.0, (1.0, 0.0)), g)
    x1 = g.coords()[0]
    np.testing.assert_array_equal(f.values, np.maximum(x1, 0))
    np.testing.assert_array_equal(grad[0], np.where(x1 > 0, 1.0, 0.0))
    assert np.all(grad[1] == 0)


def test_alt_caffarelli_free_boundary_and_equator(profile):
    ac = AltCaffarelli(profile)
    t0 = profile.theta0
    y = 0.7 * np.array([np.sin(t0) * np.cos(1.0), np.sin(t0) * np.sin(1.0), np.cos(t0)])
    assert ac.value(y[None])[0] == pytest.approx(0.0, abs=1e-12)
    assert ac.gradient_norm_at_angle(t0 + 1e-12) == pytest.approx(1.0, abs=1e-9)
    eq = ac.gradient_norm_at_angle(np.pi / 2)
    assert eq == pytest.approx(2 / profile.fprime_theta0, rel=1e-12)
    assert eq < 1
    inside = y * np.array([1, 1, 0.5])
    g = ac.gradient(inside[None])[0]
    fd = np.array([(ac.value((inside + e)[None]) - ac.value((inside - e)[None]))[0] / 2e-6
                   for e in 1e-6 * np.eye(3)])
    np.testing.assert_allclose(g, fd, atol=1e-6)


def test_alt_caffarelli_normal_points_into_support(profile):
    ac = AltCaffarelli(profile)
    for phi in (0.0, 2.0):
        y = ac.free_boundary_points(0.5, 1, lower=False)[0]
        n = ac.free_boundary_normal(float(np.arctan2(y[1], y[0])))
        assert ac.value((y + 1e-3 * n)[None])[0] > 0
        assert ac.value((y - 1e-3 * n)[None])[0] == 0


def test_alt_caffarelli_sector_bound(profile):
    ac = AltCaffarelli(profile)
    th = np.linspace(profile.theta0 + np.radians(10), np.pi - profile.theta0 - np.radians(10), 200)
    assert np.max(ac.gradient_norm_at_angle(th)) <= 0.95


def _ac_laplacian_floor(ac, h, r_min):
    g = GridSpec.cube(3, h)
    f, _ = oracle_sample(ac, g)
    x = g.coords()
    tube = DomainMask(g, (np.hypot(x[0], x[1]) < 3 * h) | (np.linalg.norm(x, axis=0) < r_min))
    return check_subsolution(f, 0.0, exclude=tube)


def _seven_point(fn, x0, h):
    total = -6 * fn(x0)
    for e in h * np.vstack([np.eye(3), -np.eye(3)]):
        total += fn(x0 + e)
    return total / h**2


def test_alt_caffarelli_is_subharmonic_away_from_axis(profile):
    ac = AltCaffarelli(profile)
    # u is harmonic in its support, so negative discrete Laplacians are
    # stencil truncation: O(h^2) at fixed points, largest next to the free
    # boundary where the angular derivatives of the profile peak
    value = lambda x: ac.value(x[None])[0]  # noqa: E731
    near_fb = np.radians(140.0)
    x0 = 0.25 * np.array([0.0, np.sin(near_fb), np.cos(near_fb)])
    lap = [_seven_point(value, x0, h) for h in (1 / 32, 1 / 64, 1 / 128)]
    assert lap[0] / lap[1] == pytest.approx(4.0, rel=0.05)
    assert lap[1] / lap[2] == pytest.approx(4.0, rel=0.05)
    bound = 2.0 * abs(lap[0]) * 32**2  # truncation constant, r >= 0.25
    for h in (1 / 32, 1 / 64):
        v = _ac_laplacian_floor(ac, h, 0.25)
        assert v.worst_value >= -bound * h**2
    scaled = []
    for h in (1 / 32, 1 / 64):
        v = _ac_laplacian_floor(ac, h, 3 * h)
        scaled.append(v.worst_value * np.sum(np.square(v.worst_point)) / h)
    # 1-homogeneity: the same lattice picture at every scale
    assert scaled[1] == pytest.approx(scaled[0], rel=1e-9)


def test_annulus_oracle_matches_closed_form():
    a = AnnulusCapacitor(0.25, 1.0, 2)
    r = np.array([0.25, 0.5, 1.0])
    pts = np.stack([r, 0 * r], axis=1)
    np.testing.assert_allclose(a.value(pts), np.log(r / 0.25) / np.log(4), atol=1e-15)
    np.testing.assert_allclose(a.gradient_norm(0.5), 1 / (0.5 * np.log(4)))
    a3 = AnnulusCapacitor(0.25, 1.0, 3)
    assert a3.value(np.array([[1.0, 0, 0]]))[0] == pytest.approx(1.0)


def test_homogeneous_cone_is_harmonic_in_sector():
    c = HomogeneousCone2D(1.5 * np.pi)
    g = GridSpec.cube(2, 1 / 64)
    f, grad = oracle_sample(c, g)
    assert c.exponent == pytest.approx(2 / 3)
    x = np.moveaxis(g.coords(), 0, -1)
    r = np.linalg.norm(x, axis=-1)
    on = f.values > 0
    np.testing.assert_allclose(np.linalg.norm(grad, axis=0)[on], (2 / 3) * r[on] ** (-1 / 3), rtol=1e-12)


def test_polar_quadrature_closed_form():
    c = HomogeneousCone2D(1.5 * np.pi)
    # |grad|^2 = alpha^2 r^(2 alpha - 2) on the sector: I(r) = opening * alpha * r^(2 alpha - 2) / 2
    alpha = 2 / 3
    for r in (0.2, 0.5):
        assert polar_dirichlet_quadrature(c, r) == pytest.approx(1.5 * np.pi * alpha * r ** (2 * alpha - 2) / 2, rel=1e-6)
    assert polar_dirichlet_quadrature(HalfPlaneLinear(1.0, (1.0, 0.0)), 0.3) == pytest.approx(np.pi / 2, rel=1e-8)


@pytest.mark.parametrize("oracle", [LinearField(1.0, (0.6, 0.8)), AnnulusCapacitor(0.25, 1.0, 2)])
def test_discrete_gradient_converges_to_analytic(oracle):
    def err(h):
        g = GridSpec.cube(2, h)
        f, grad = oracle_sample(oracle, g)
        x = np.linalg.norm(g.coords(), axis=0)
        away = (x > 0.4) & (x < 0.9)
        dg = discrete_gradient(f)
        return max(np.max(np.abs(dg[k] - grad[k])[away]) for k in range(2))

    e1, e2 = err(1 / 32), err(1 / 64)
    assert e2 < 1e-12 or e1 / e2 == pytest.approx(4.0, rel=0.15)


def test_blowup_of_linear_profile_is_itself():
    g = GridSpec.cube(2, 1 / 64)
    u = ScalarField.from_function(g, lambda x: 1.5 * np.maximum(x[0], 0))
    b = blowup_rescale(u, np.zeros(2), 0.1)
    np.testing.assert_allclose(b.values, 1.5 * np.maximum(b.grid.coords()[0], 0), atol=1e-12)


def test_blowup_shrinks_quadratic_term():
    g = GridSpec.cube(2, 1 / 256)
    u = ScalarField.from_function(g, lambda x: np.maximum(x[0], 0) + x[0] ** 2)
    b = blowup_rescale(u, np.zeros(2), 0.1)
    x1 = b.grid.coords()[0]
    # bilinear interpolation of x1^2 errs by at most h^2 / 4, divided by r
    np.testing.assert_allclose(b.values, np.maximum(x1, 0) + 0.1 * x1**2, atol=(1 / 256) ** 2 / 4 / 0.1 + 1e-12)


def test_blowup_warns_when_not_normalised():
    g = GridSpec.cube(2, 1 / 16)
    u = ScalarField(g, np.full(g.shape, 2.0))
    with pytest.warns(UserWarning):
        b = blowup_rescale(u, np.zeros(2), 0.25)
    np.testing.assert_allclose(b.values, 8.0)


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([0.25, 0.5]), st.sampled_from([0.25, 0.5]))
def test_blowup_composition(r, s):
    g = GridSpec.cube(2, 1 / 128)
    u = ScalarField.from_function(g, lambda x: np.maximum(x[0] + 0.3 * x[1], 0) + x[1] ** 2)
    n = 64
    inner = blowup_rescale(u, np.zeros(2), r, half_width=2.0, n_per_unit=n)
    twice = blowup_rescale(inner, np.zeros(2), s, half_width=1.0, n_per_unit=n)
    once = blowup_rescale(u, np.zeros(2), r * s, half_width=1.0, n_per_unit=n)
    # two grid spacings of the rescaled window
    assert np.max(np.abs(twice.values - once.values)) <= 2 / n
