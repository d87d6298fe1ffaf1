import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acflab.fixtures import AltCaffarelliFixture
from acflab.geometry import (
    DiniModulus,
    LevelBoundary,
    TouchingCone,
    cone_mask,
    extract_level_boundary,
    hausdorff_distance,
    verify_exterior_touch,
)
from acflab.grid import ContractError, GridSpec, ScalarField, base_point
from acflab.oracles import oracle_sample


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0])
def test_hoelder_dini_integral(alpha):
    m = DiniModulus.hoelder(alpha)
    assert m.dini_integral == pytest.approx(1 / alpha)
    assert m.quadrature_integral() == pytest.approx(1 / alpha, abs=1e-6)


def test_log_squared_is_dini_and_converges():
    m = DiniModulus.log_squared()
    assert m.dini_integral == 1.0
    vals = [m.quadrature_integral(10.0**-k) for k in (20, 40, 80, 160)]
    # closed form of the truncated integral: 1 - 1/(1 + log(1/lower))
    for k, v in zip((20, 40, 80, 160), vals):
        assert v == pytest.approx(1 - 1 / (1 + k * np.log(10)), abs=1e-8)
    assert abs(vals[-1] - m.quadrature_integral()) < 1e-2
    assert abs(m.quadrature_integral(1e-300) - m.quadrature_integral()) < 1e-2
    assert abs(m.quadrature_integral() - 1.0) < 1e-4


def test_tabulated_modulus():
    m = DiniModulus.tabulated([0, 0.5, 1], [0, 0.5, 0.5])
    assert m(0.25) == pytest.approx(0.25)
    assert m.dini_integral == pytest.approx(0.5 + 0.5 * np.log(2), rel=1e-6)
    with pytest.raises(ContractError):
        DiniModulus.tabulated([0, 1], [0.1, 0.2])
    with pytest.raises(ContractError):
        DiniModulus.tabulated([0, 1], [0.5, 0.2])


@pytest.mark.parametrize("m", [DiniModulus.zero(), DiniModulus.hoelder(0.5, 2.0), DiniModulus.log_squared()])
def test_modulus_invariants_and_round_trip(m):
    t = np.linspace(0, 1, 101)
    w = m(t)
    assert w[0] == 0
    assert np.all(np.diff(w) >= -1e-15)
    assert DiniModulus.from_dict(m.to_dict()) == m


def test_hoelder_rejects_bad_exponent():
    with pytest.raises(ContractError):
        DiniModulus.hoelder(1.5)


def test_cone_invariants():
    with pytest.raises(ContractError):
        TouchingCone((0, 0), (1, 1))
    with pytest.raises(ContractError):
        TouchingCone((0, 0), (1, 0), reach=0.0)
    c = TouchingCone((0.1, 0.2), (0.0, 1.0), DiniModulus.hoelder(1.0))
    assert c.contains(np.array([0.1, 0.2 + 1e-3]))
    assert TouchingCone.from_dict(c.to_dict()) == c


def test_cone_mask_examples():
    g = GridSpec.cube(2, 0.5, 1.5)
    x = np.moveaxis(g.coords(), 0, -1)
    half = cone_mask(TouchingCone((0, 0), (1, 0)), g)
    assert np.array_equal(half.inside, x[..., 0] > 0)
    mirror = cone_mask(TouchingCone((0, 0), (-1, 0)), g)
    assert np.array_equal(mirror.inside, x[..., 0] < 0)
    c45 = cone_mask(TouchingCone((0, 0), (1, 0), DiniModulus.hoelder(1.0)), g)
    assert c45.inside[g.nearest_index((1.0, 0.5))]
    assert not c45.inside[g.nearest_index((0.5, 1.0))]


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.sampled_from([0.25, 0.5, 1.0]), st.floats(-np.pi, np.pi))
def test_cone_mask_rotation_equivariance(k, alpha, angle):
    g = GridSpec.cube(2, 1 / 16)
    axis = (np.cos(angle), np.sin(angle))
    c = TouchingCone((0.0, 0.0), axis, DiniModulus.hoelder(alpha))
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    rk = np.linalg.matrix_power(rot, k)
    rc = TouchingCone((0.0, 0.0), tuple(rk @ np.asarray(axis)), DiniModulus.hoelder(alpha))
    m = cone_mask(c, g).inside
    # rotating the lattice by k quarter turns is np.rot90 on a centred square grid
    assert np.array_equal(np.rot90(m, k), cone_mask(rc, g).inside)


def test_level_boundary_of_linear_field_is_exact():
    g = GridSpec.cube(2, 1 / 8)
    lb = extract_level_boundary(ScalarField.from_function(g, lambda x: x[0] + 0.03), 0.0)
    assert len(lb) == g.shape[1]
    np.testing.assert_allclose(lb.points[:, 0], -0.03, atol=1e-14)
    assert lb.to_csv().startswith("x1,x2\n")


def test_level_boundary_circle():
    g = GridSpec.cube(2, 1 / 64)
    lb = extract_level_boundary(ScalarField.from_function(g, lambda x: np.hypot(x[0], x[1])), 0.5)
    assert np.max(np.abs(np.linalg.norm(lb.points, axis=1) - 0.5)) < g.spacing


def test_level_boundary_of_constant_is_empty():
    g = GridSpec.cube(2, 1 / 8)
    assert len(extract_level_boundary(ScalarField(g, np.ones(g.shape)), 0.0)) == 0


def _circle(g, r):
    return extract_level_boundary(ScalarField.from_function(g, lambda x: np.hypot(x[0], x[1])), r)


def test_hausdorff_examples():
    g = GridSpec.cube(2, 1 / 64)
    a = extract_level_boundary(ScalarField.from_function(g, lambda x: x[0]), 0.0)
    b = extract_level_boundary(ScalarField.from_function(g, lambda x: x[0]), 0.1)
    assert hausdorff_distance(a, a) == (0.0, 0.0)
    assert hausdorff_distance(a, b)[1] == pytest.approx(0.1, abs=1e-12)
    assert abs(hausdorff_distance(_circle(g, 0.5), _circle(g, 0.6))[1] - 0.1) < 2 * g.spacing
    with pytest.raises(ContractError):
        hausdorff_distance(a, LevelBoundary(0.0, np.zeros((0, 2))))


@settings(max_examples=15, deadline=None)
@given(st.lists(st.sampled_from([0.2, 0.3, 0.45, 0.5, 0.6, 0.75]), min_size=3, max_size=3))
def test_hausdorff_symmetric_and_triangle(radii):
    g = GridSpec.cube(2, 1 / 32)
    a, b, c = (_circle(g, r) for r in radii)
    assert hausdorff_distance(a, b)[1] == hausdorff_distance(b, a)[1]
    assert hausdorff_distance(a, c)[1] <= hausdorff_distance(a, b)[1] + hausdorff_distance(b, c)[1] + 2 * g.spacing


def test_touch_linear_field():
    g = GridSpec.cube(2, 1 / 32)
    f = ScalarField.from_function(g, lambda x: x[0])
    y = base_point(f, (0.0, 0.0))
    assert verify_exterior_touch(f, y, TouchingCone((0, 0), (-1, 0))).passed
    bad = verify_exterior_touch(f, y, TouchingCone((0, 0), (1, 0)))
    assert not bad.passed and bad.overlap_nodes > 0
    assert bad.to_dict()["reason"] == "cone enters the super-level set"
    with pytest.raises(ContractError):
        verify_exterior_touch(f, y, TouchingCone((0.5, 0), (-1, 0)))


def test_touch_requires_y_on_level_set():
    g = GridSpec.cube(2, 1 / 32)
    f = ScalarField.from_function(g, lambda x: x[0])
    y = base_point(f, (0.0, 0.0), level=0.5)
    v = verify_exterior_touch(f, y, TouchingCone((0, 0), (-1, 0), reach=0.1))
    assert not v.passed and v.reason == "y is not on the level boundary"


def test_touch_alt_caffarelli_free_boundary():
    fix = AltCaffarelliFixture(1 / 32)
    g = GridSpec.cube(3, 1 / 32)
    f, _ = oracle_sample(fix.oracle, g)
    t0 = fix.oracle.profile.theta0
    for phi in (0.3, 2.0):
        yc = 0.5 * np.array([np.sin(t0) * np.cos(phi), np.sin(t0) * np.sin(phi), np.cos(t0)])
        v = verify_exterior_touch(f, base_point(f, yc, 0.0), fix.cone_at(yc))
        assert v.passed, v
    assert not verify_exterior_touch(f, base_point(f, np.zeros(3), 0.0), fix.cone_at(np.zeros(3))).passed
