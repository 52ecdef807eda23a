import numpy as np
import pytest
from hypothesis import given, strategies as st

from dunkl_lab.errors import SubordinationUnderresolved
from dunkl_lab.heat import (bessel_closed_form, bessel_multiplier, bessel_potential, bessel_radial,
                            bessel_small_x_profile, gaussian_envelope, heat_apply, heat_bound_ratio, heat_kernel,
                            heat_kernel_rows, subordination_rule, upper_gamma)
from dunkl_lab.quadrature import build_grid
from dunkl_lab.roots import preset
from dunkl_lab.spectral import make_spectral_pair

from conftest import gaussian_packet

pt = st.floats(-4, 4)


def test_zero_multiplicity_heat_kernel_is_gaussian():
    rs = preset("z2", 0.0)
    x, y = np.array([0.3]), np.linspace(-3, 3, 21)[:, None]
    for t in (0.1, 1.0, 3.0):
        expect = np.exp(-(x - y[:, 0]) ** 2 / (4 * t)) / np.sqrt(4 * np.pi * t)
        assert np.allclose(heat_kernel(rs, t, x, y), expect, rtol=1e-12)


def test_heat_kernel_has_mass_one():
    for name, k in (("z2", 1.0), ("z2", 2.5), ("z2^2", (1.0, 0.5))):
        rs = preset(name, k)
        g = build_grid(rs, (-14.0, 14.0), 160 if rs.dimension == 1 else 96)
        xs = [[0.0] * rs.dimension, [1.5] * rs.dimension, [-2.0] + [0.5] * (rs.dimension - 1)]
        H = heat_kernel_rows(rs, 0.7, xs, g)
        assert np.allclose(H.mass(g), 1.0, atol=1e-9)


@given(pt, pt, pt, pt, st.floats(0.05, 5))
def test_heat_kernel_is_symmetric_positive_and_g_invariant(a, b, c, d, t):
    rs = preset("z2^2", (1.0, 0.5))
    x, y = np.array([a, b]), np.array([c, d])
    h = heat_kernel(rs, t, x, y)
    assert h > 0
    assert np.isclose(h, heat_kernel(rs, t, y, x), rtol=1e-12)
    assert np.isclose(h, heat_kernel(rs, t, -x, -y), rtol=1e-12)


def test_heat_semigroup_on_the_grid(sp1):
    f = sp1.space_function(gaussian_packet(sp1.space_grid, 0.7, 0.8, 0.9))
    a = heat_apply(sp1, 0.5, heat_apply(sp1, 0.3, f))
    b = heat_apply(sp1, 0.8, f)
    assert np.allclose(a.values, b.values, atol=1e-12)


def test_heat_apply_matches_integration_against_the_kernel(sp1):
    rs = sp1.root_system
    f = sp1.space_function(gaussian_packet(sp1.space_grid, 0.5, 0.9))
    t = 0.4
    u = heat_apply(sp1, t, f).values
    idx = [np.argmin(np.abs(sp1.space_grid.nodes[:, 0] - v)) for v in (-1.0, 0.0, 0.8, 2.0)]
    H = heat_kernel_rows(rs, t, sp1.space_grid.nodes[idx], sp1.space_grid)
    direct = H.values @ (f.values * sp1.space_grid.weights)
    assert np.allclose(direct, u[idx], atol=1e-10)


def test_heat_kernel_methods_agree():
    rs = preset("z2", 1.5)
    x, ys = np.array([1.2]), np.array([[-2.0], [0.0], [0.4], [3.0]])
    closed = heat_kernel(rs, 0.5, x, ys)
    radial = np.array([heat_kernel(rs, 0.5, x, y, method="radial") for y in ys])
    assert np.allclose(closed, radial, rtol=1e-8)
    with pytest.raises(ValueError):
        heat_kernel(rs, 0.5, x, ys, method="nope")
    with pytest.raises(ValueError):
        heat_kernel(rs, 0.0, x, ys)


def test_gaussian_bound_constant_grows_with_c():
    rs = preset("z2", 1.0)
    rng = np.random.default_rng(3)
    pairs = rng.uniform(-5, 5, size=(200, 2, 1))
    Cs = [heat_bound_ratio(rs, [0.1, 1.0, 4.0], pairs, c)["C"] for c in (0.05, 0.125, 0.2)]
    assert np.all(np.isfinite(Cs)) and Cs[0] <= Cs[1] <= Cs[2]
    assert np.all(gaussian_envelope(rs, pairs[:, 0], pairs[:, 1], 1.0) > 0)


def test_upper_gamma_recurrence_for_nonpositive_orders():
    from scipy import integrate
    for a in (-2.5, -1.0, -0.3, 0.0, 1.7):
        for x in (0.2, 1.0, 4.0):
            ref = integrate.quad(lambda s: s ** (a - 1) * np.exp(-s), x, np.inf)[0]
            assert np.isclose(upper_gamma(a, x), ref, rtol=1e-9)


@pytest.mark.parametrize("name, k, s", [("z2", 0.0, 2.0), ("z2", 1.0, 1.0), ("z2", 1.0, 3.0),
                                        ("z2", 1.0, 5.0), ("z2^2", (1.0, 0.5), 3.0)])
def test_subordinated_bessel_matches_closed_form(name, k, s):
    rs = preset(name, k)
    r = np.geomspace(1e-2, 20, 40)
    tn, tw = subordination_rule(800)
    assert np.allclose(bessel_radial(rs, s, r, tn, tw), bessel_closed_form(rs, s, r), rtol=1e-6)


def test_rank_one_classical_bessel_kernel():
    # N = 1, s = 2: J = e^{-|x|} / 2
    rs = preset("z2", 0.0)
    r = np.linspace(0.1, 5, 12)
    assert np.allclose(bessel_closed_form(rs, 2.0, r), np.exp(-r) / 2, rtol=1e-12)


def test_bessel_multiplier_is_the_symbol():
    sp = make_spectral_pair(preset("z2", 1.0), (-32.0, 32.0), 384, freq_box=(-10.0, 10.0))
    J = bessel_potential(sp, 3.0)
    m = bessel_multiplier(sp, J)
    expect = (1 + sp.freq_norm2) ** -1.5
    assert np.max(np.abs(m.values - expect)) < 1e-5


def test_bessel_potential_validation():
    sp = make_spectral_pair(preset("z2", 1.0), (-8.0, 8.0), 64)
    with pytest.raises(ValueError):
        bessel_potential(sp, 0.0)
    with pytest.raises(SubordinationUnderresolved):
        bessel_potential(sp, 3.0, n_nodes=16, tol=1e-12)


def test_bessel_small_x_comparison():
    rs = preset("z2", 1.0)    # N = 3
    r = np.geomspace(1e-4, 0.5, 30)
    for s in (1.0, 3.0, 5.0):
        ratio = bessel_closed_form(rs, s, r) / bessel_small_x_profile(rs, s, r)
        assert np.all(ratio > 0) and ratio.max() / ratio.min() < 20


def test_heat_kernel_at_the_origin():
    # h_t(0, 0) = c_k^{-1} (2t)^{-N/2}; rank one, k = 1, t = 1/2: c_k = 2^{5/2} Gamma(3/2)
    rs = preset("z2", 1.0)
    ck = 2 ** 2.5 * np.sqrt(np.pi) / 2
    assert np.isclose(heat_kernel(rs, 0.5, np.zeros(1), np.zeros(1)), 1 / ck, rtol=1e-13)
    assert abs(1 / ck - 0.19947) < 1e-5
