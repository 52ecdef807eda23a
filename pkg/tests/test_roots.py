import numpy as np
import pytest
from hypothesis import given, strategies as st

from dunkl_lab.errors import NegativeMultiplicity, NotClosed, NotGInvariant, NotNormalized, ZeroRoot
from dunkl_lab.roots import (RootSystem, axis_primitive, ball_volume, ball_volumes_product, build_root_system,
                             doubling_constant, orbit_distance, preset, reflect, weight_density)

S2 = np.sqrt(2.0)
A2 = [[S2, 0], [-S2, 0], [S2 / 2, np.sqrt(6) / 2], [-S2 / 2, -np.sqrt(6) / 2],
      [-S2 / 2, np.sqrt(6) / 2], [S2 / 2, -np.sqrt(6) / 2]]
coord = st.floats(-5, 5, allow_nan=False)


def test_reflection_is_an_involution():
    a = np.array([1.0, 1.0])
    x = np.array([0.3, -2.0])
    assert np.allclose(reflect(a, reflect(a, x)), x)
    assert np.allclose(reflect(a, a), -a)


def test_group_sizes():
    assert len(preset("z2", 1.0).group) == 2
    assert len(preset("z2^2", (1.0, 0.5)).group) == 4
    assert len(build_root_system(A2, 1.0).group) == 6


def test_homogeneous_dimension_counts_both_roots_of_a_pair():
    assert preset("z2", 1.0).homogeneous_dimension == 3.0
    assert preset("z2^2", (1.0, 0.5)).homogeneous_dimension == 5.0
    assert build_root_system(A2, 0.5).homogeneous_dimension == 5.0


@pytest.mark.parametrize("roots, k, err", [
    ([[0.0, 0.0]], 1.0, ZeroRoot),
    ([[1.0, 0.0], [-1.0, 0.0]], 1.0, NotNormalized),
    ([[S2, 0.0], [-S2, 0.0]], -1.0, NegativeMultiplicity),
    ([[S2, 0.0]], 1.0, NotClosed),
    ([[S2, 0.0], [-S2, 0.0]], [1.0, 0.5], NotGInvariant),
])
def test_invalid_root_systems(roots, k, err):
    with pytest.raises(err):
        build_root_system(roots, k)


def test_json_round_trip():
    rs = build_root_system(A2, 0.75)
    back = RootSystem.from_json(rs.to_json())
    assert np.allclose(back.roots, rs.roots) and np.allclose(back.multiplicity, rs.multiplicity)


@given(coord, coord)
def test_weight_is_g_invariant_and_homogeneous(x0, x1):
    rs = build_root_system(A2, 0.5)
    x = np.array([x0, x1])
    w = weight_density(rs, x)
    assert np.allclose(weight_density(rs, rs.orbit(x)), w, rtol=1e-10, atol=1e-12)
    gamma = rs.multiplicity.sum()
    assert np.isclose(weight_density(rs, 2 * x), 2 ** gamma * w, rtol=1e-10, atol=1e-12)


@given(coord, coord, coord, coord)
def test_orbit_distance_is_a_pseudometric(a, b, c, d):
    rs = preset("z2^2", 1.0)
    x, y = np.array([a, b]), np.array([c, d])
    assert np.isclose(orbit_distance(rs, x, y), orbit_distance(rs, y, x))
    assert orbit_distance(rs, x, y) <= np.linalg.norm(x - y) + 1e-12
    assert np.isclose(orbit_distance(rs, x, -x), 0.0)


def test_ball_volume_rank_one_closed_form():
    # rank one: w(B(c, r)) is a difference of primitives
    for k in (0.0, 0.5, 1.0, 2.5):
        rs = preset("z2", k)
        for c, r in ((0.0, 1.0), (2.0, 0.5), (-1.0, 3.0)):
            exact = axis_primitive(k, c + r) - axis_primitive(k, c - r)
            assert np.isclose(ball_volume(rs, np.array([c]), r), exact, rtol=1e-9)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 4), st.sampled_from([0.0, 0.5, 1.0, 1.3]))
def test_vectorized_ball_volumes_match_adaptive(c0, c1, r, k):
    rs = preset("z2^2", (k, 1.0))
    c = np.array([c0, c1])
    v = ball_volumes_product(rs, c[None], r)[0]
    assert np.isclose(v, ball_volume(rs, c, r), rtol=1e-8)


def test_doubling_constant_is_bounded():
    rs = preset("z2", 1.0)
    centers = np.array([[0.0], [1.0], [5.0], [20.0]])
    C = doubling_constant(rs, centers, np.geomspace(1e-2, 1e2, 9))
    # w(B(x, 2r)) <= 2^{N} w(B(x, r)) at the origin; elsewhere smaller
    assert 2.0 <= C <= 2.0 ** rs.homogeneous_dimension + 1e-9
