import numpy as np
import pytest
from hypothesis import given, strategies as st

from dunkl_lab.errors import GridMismatch
from dunkl_lab.heat import heat_kernel, heat_profile
from dunkl_lab.quadrature import GridFunction, build_grid
from dunkl_lab.roots import preset
from dunkl_lab.spectral import make_spectral_pair
from dunkl_lab.translation import (build_radial_rule, convolve, convolve_direct, radial_translate_oracle,
                                   rank1_translate, reflect_function, support_check, translate, translate_at)

from conftest import gaussian_packet


def _gauss(sp, center=0.0, width=1.0, freq=0.0):
    return sp.space_function(gaussian_packet(sp.space_grid, center, width, freq))


def test_translation_by_zero_is_identity(sp1, sp2):
    for sp, tol in ((sp1, 1e-10), (sp2, 1e-8)):
        f = _gauss(sp, 0.4, 0.9, 0.5)
        assert np.allclose(translate(sp, f, np.zeros(sp.root_system.dimension)).values, f.values, atol=tol)


def test_zero_multiplicity_is_an_ordinary_shift(sp0):
    f = _gauss(sp0, 0.0, 1.0)
    x = 1.3
    y = sp0.space_grid.nodes[:, 0]
    assert np.allclose(translate(sp0, f, [x]).values, np.exp(-(x + y) ** 2 / 2), atol=1e-10)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_translation_is_symmetric_in_x_and_y(sp1, x, y):
    f = _gauss(sp1, 0.5, 0.8, 0.7)
    a = translate_at(sp1, f, [x], np.array([[y]]))
    b = translate_at(sp1, f, [y], np.array([[x]]))
    assert np.allclose(a, b, atol=1e-10)


@given(st.floats(-4, 4))
def test_translation_contracts_l2(sp1, x):
    f = _gauss(sp1, -0.5, 0.9, 1.0)
    w = sp1.space_grid.weights
    tf = translate(sp1, f, [x], check=False)
    assert np.sum(np.abs(tf.values) ** 2 * w) <= np.sum(np.abs(f.values) ** 2 * w) * (1 + 1e-10)


def test_radial_formula_matches_the_transform(sp1, sp2):
    for sp, x in ((sp1, [1.5]), (sp2, [1.0, -0.7])):
        rs = sp.root_system
        t = 0.6
        spectral = heat_kernel(rs, t, np.array(x), None, method="spectral", sp=sp)
        rule = build_radial_rule(rs, x)
        radial = radial_translate_oracle(rule, lambda r: heat_profile(rs, t, r), sp.space_grid)
        closed = heat_kernel(rs, t, np.array(x)[None], sp.space_grid.nodes)
        scale = np.abs(closed).max()
        assert np.max(np.abs(spectral - closed)) < 1e-8 * scale
        assert np.max(np.abs(radial - closed)) < 1e-8 * scale


def test_radial_rule_is_a_probability_measure():
    rs = preset("z2^2", (1.0, 0.5))
    rule = build_radial_rule(rs, [0.8, -1.2])
    assert np.isclose(rule.masses.sum(), 1.0)
    assert np.all(rule.masses > 0)


@given(st.floats(-2.5, 2.5))
def test_convolution_commutes_and_matches_direct_quadrature(sp1, x):
    f = _gauss(sp1, 0.3, 0.8)
    g = _gauss(sp1, -0.4, 1.1, 0.6)
    fg = convolve(sp1, f, g)
    assert np.allclose(fg.values, convolve(sp1, g, f).values, atol=1e-10)
    i = np.argmin(np.abs(sp1.space_grid.nodes[:, 0] - x))
    direct = convolve_direct(sp1, f, g, sp1.space_grid.nodes[i])
    assert np.isclose(direct, fg.values[i], atol=1e-9)


def test_reflection_requires_a_symmetric_grid():
    rs = preset("z2", 1.0)
    g = build_grid(rs, (-2.0, 3.0), 16)
    with pytest.raises(GridMismatch):
        reflect_function(GridFunction(g, np.ones(16)))


def test_rank_one_translation_of_odd_and_even_functions():
    # compare the integral formula against the transform for a smooth packet
    sp = make_spectral_pair(preset("z2", 1.0), (-12.0, 12.0), 192)
    f = lambda y: np.exp(-(y - 0.5) ** 2 / 2 + 0.7j * y)
    F = sp.space_function(f(sp.space_grid.nodes[:, 0]))
    y = np.linspace(-3, 3, 13)
    for x in (-1.2, 0.0, 0.9):
        a = rank1_translate(1.0, f, x, y)
        b = translate_at(sp, F, [x], y[:, None])
        assert np.allclose(a, b, atol=1e-8)


def test_rank_one_translation_respects_support():
    # f supported in [1, 2]: tau_x f(-y) vanishes unless | |x| - |y| | <= 2 and |x| + |y| >= 1
    bump = lambda y: np.where(np.abs(np.abs(y) - 1.5) < 0.5, np.cos(np.pi * (np.abs(y) - 1.5)) ** 2, 0.0)
    vals = rank1_translate(0.5, bump, 3.0, -np.array([0.2, 0.5, 6.0]), support=(1.0, 2.0), breaks=(1.5,))
    assert np.allclose(vals, 0.0, atol=1e-14)


def test_support_check_for_a_compact_bump():
    sp = make_spectral_pair(preset("z2", 1.0), (-8.0, 8.0), 512, freq_box=(-64.0, 64.0))
    x = sp.space_grid.nodes[:, 0]
    f = sp.space_function(np.where(np.abs(x) < 1, np.cos(np.pi * x / 2) ** 4, 0.0))
    res = support_check(sp, f, 1.0, [2.0], tol=1e-4)
    assert res["outside_nodes"] > 0 and res["passed"]
