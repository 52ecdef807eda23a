import numpy as np
import pytest
from hypothesis import given, strategies as st

from dunkl_lab.errors import BoundaryMass, NoLimitKernel, UnknownKernel
from dunkl_lab.kernels import (DEFAULT_CUTOFF, NO_LIMIT, MultiplierTable, TruncationBand, annulus_integral,
                               apply_principal_value, apply_truncated, builtin_kernel, dyadic_band_split,
                               kernel_multiplier, l1_sharp_smooth_gap, limit_L, limit_multiplier, principal_value_convergence,
                               regularity_delta, regularity_row_integrals, smallest_even_above_half,
                               smooth_ball_integral, sphere_mass, truncate)
from dunkl_lab.roots import ball_volume, preset
from dunkl_lab.spectral import make_spectral_pair

from conftest import gaussian_packet

Z2 = preset("z2", 1.0)
Z2SQ = preset("z2^2", (1.0, 0.5))


def test_cutoff_profile_shape():
    u = np.linspace(0, 1.5, 3001)
    phi = DEFAULT_CUTOFF(u)
    assert np.all(phi[u <= 0.5] == 1.0) and np.all(phi[u >= 1.0] == 0.0)
    assert np.all(np.diff(phi) <= 1e-15)
    v = np.linspace(0, 1, 257)
    assert np.allclose(DEFAULT_CUTOFF.step(v), DEFAULT_CUTOFF.step_exact(v), atol=1e-14)


def test_smallest_even_integer_and_delta():
    assert smallest_even_above_half(Z2) == 2                    # N = 3
    assert smallest_even_above_half(preset("z2", 2.5)) == 4     # N = 6
    assert np.isclose(regularity_delta(Z2), 0.25)               # min(1, 2 - 3/2) / 2


def test_unknown_kernel():
    with pytest.raises(UnknownKernel):
        builtin_kernel("nope", Z2)


@pytest.mark.parametrize("rs", [Z2, Z2SQ])
@pytest.mark.parametrize("a, b", [(0.1, 1.0), (0.5, 7.0), (2.0, 3.0)])
def test_riesz_annulus_integrals_vanish(rs, a, b):
    assert abs(annulus_integral(builtin_kernel("riesz_1", rs), a, b)) <= 1e-12


def test_sphere_mass_matches_the_unit_ball():
    for rs in (Z2, Z2SQ, preset("z2", 0.0)):
        # w(B(0, 1)) = S_w / N
        assert np.isclose(sphere_mass(rs), rs.homogeneous_dimension * ball_volume(rs, np.zeros(rs.dimension), 1.0),
                          rtol=1e-8)


@given(st.floats(0.01, 5), st.floats(1.05, 50))
def test_oscillating_annulus_integral_radial_formula(a, ratio):
    K = builtin_kernel("oscillating", Z2)
    b = a * ratio
    Sw = sphere_mass(Z2)
    exact = Sw * (b ** 1j - a ** 1j) / 1j
    val = annulus_integral(K, a, b)
    assert abs(val - exact) < 1e-6
    assert abs(val) <= 2 * Sw + 1e-9
    assert abs(annulus_integral(K, b, a) + val) < 1e-12


def test_limit_L_values():
    assert abs(limit_L(builtin_kernel("riesz_1", Z2))) < 1e-10
    assert abs(limit_L(builtin_kernel("shifted_riesz", Z2)) - 0.7) < 1e-6
    assert abs(limit_L(builtin_kernel("shifted_riesz", Z2SQ)) - 0.7) < 1e-6
    assert limit_L(builtin_kernel("oscillating", Z2)) is NO_LIMIT
    # smooth truncation variant tends to the same limit
    K = builtin_kernel("shifted_riesz", Z2)
    assert abs(smooth_ball_integral(K, 1e-3) - 0.7) < 1e-6


@pytest.mark.parametrize("band", [TruncationBand(0.5, 3.0), TruncationBand(0.2, 0.9), TruncationBand(1.0)])
def test_smooth_truncation_support(band):
    K = builtin_kernel("riesz_1", Z2SQ)
    tk = truncate(K, None, band)
    rng = np.random.default_rng(1)
    x = rng.normal(size=(4000, 2)) * 2.0
    r = np.linalg.norm(x, axis=1)
    v = tk(x)
    assert np.all(v[r < band.a / 2] == 0)
    if np.isfinite(band.b):
        assert np.all(v[r > band.b] == 0)
    # |K^{a,b}(x)| <= |K(x)| <= |x|^{-N}
    assert np.all(np.abs(v) <= r ** -Z2SQ.homogeneous_dimension + 1e-12)


def test_truncation_band_validation():
    with pytest.raises(ValueError):
        TruncationBand(2.0, 1.0)
    with pytest.raises(ValueError):
        TruncationBand(1.0, 2.0, "fuzzy")


def test_dyadic_split_follows_the_power_of_two_rule():
    # n0 = ceil(log2 0.3) = -1, n1 = floor(log2 5) = 2
    bands = dyadic_band_split(0.3, 5.0)
    assert [(b.a, b.b) for b in bands] == [(0.3, 0.5), (0.5, 1.0), (1.0, 2.0), (2.0, 4.0), (4.0, 5.0)]
    assert {(b.n0, b.n1) for b in bands} == {(-1, 2)}
    single = dyadic_band_split(0.6, 1.9)
    assert len(single) == 1 and (single[0].a, single[0].b) == (0.6, 1.9)


@given(st.floats(0.01, 10), st.floats(1.01, 300))
def test_dyadic_split_telescopes(a, ratio):
    b = a * ratio
    K = builtin_kernel("riesz_1", Z2)
    x = np.geomspace(a / 4, b * 2, 400)[:, None]
    whole = truncate(K, None, TruncationBand(a, b))(x)
    parts = sum(truncate(K, None, band)(x) for band in dyadic_band_split(a, b))
    assert np.max(np.abs(parts - whole)) <= 1e-12 * max(1.0, np.abs(whole).max())


def test_sharp_smooth_gap_is_uniform():
    K = builtin_kernel("riesz_1", Z2)
    gaps = [l1_sharp_smooth_gap(K, a, b) for a, b in ((0.01, 0.1), (0.1, 10.0), (1.0, 100.0))]
    # odd kernel: the gap is the same annulus shape at every scale
    assert np.allclose(gaps, gaps[0], rtol=1e-6) and np.isfinite(gaps[0])


def test_zero_multiplicity_hilbert_multiplier():
    # 1/x truncated to a << 1/|xi| << b: F K(xi) -> -i sqrt(pi/2) sign(xi)
    sp = make_spectral_pair(preset("z2", 0.0), (-16.0, 16.0), 128, freq_box=(-4.0, 4.0))
    m = kernel_multiplier(sp, builtin_kernel("riesz_1", sp.root_system), TruncationBand(1e-4, 1e4))
    xi = sp.freq_grid.nodes[:, 0]
    mid = (np.abs(xi) > 0.05) & (np.abs(xi) < 4)
    assert np.allclose(m.values[mid], -1j * np.sqrt(np.pi / 2) * np.sign(xi[mid]), atol=1e-3)


def test_table_matches_direct_multipliers():
    sp = make_spectral_pair(Z2, (-12.0, 12.0), 96)
    K = builtin_kernel("shifted_riesz", Z2)
    xi = sp.freq_grid.nodes[:, 0]
    c = 2.0 ** np.arange(-4, 4.0)
    table = MultiplierTable(K, xi, c)
    for a, b in ((c[0], c[3]), (c[2], c[-1]), (c[1], np.inf)):
        direct = kernel_multiplier(sp, K, TruncationBand(a, b)).values
        assert np.allclose(table.band(a, b), direct, atol=1e-10)
    assert table.all_bands_sup() < 10


def test_grid_multiplier_matches_radial_in_rank_one():
    sp = make_spectral_pair(Z2, (-12.0, 12.0), 256, freq_box=(-16.0, 16.0))
    K = builtin_kernel("riesz_1", Z2)
    band = TruncationBand(0.5, 4.0)
    radial = kernel_multiplier(sp, K, band, method="radial").values
    grid = kernel_multiplier(sp, K, band, method="grid").values
    # the sampled kernel has features at a/2 = 0.25 against a grid spacing near 0.1
    assert np.max(np.abs(radial - grid)) < 1e-4
    with pytest.raises(BoundaryMass):
        kernel_multiplier(sp, K, TruncationBand(0.5, 20.0), method="grid")


def test_limit_multiplier_and_principal_value():
    sp = make_spectral_pair(Z2, (-12.0, 12.0), 128)
    K = builtin_kernel("riesz_1", Z2)
    m, gaps = limit_multiplier(sp, K)
    assert gaps[-1] < 1e-5
    f = sp.space_function(gaussian_packet(sp.space_grid, 0.3, 1.0).real)
    Kf = apply_principal_value(sp, K, f)
    assert np.allclose(apply_principal_value(sp, K, -f).values, -Kf.values, atol=1e-12)
    # ||K^a f - K f||_2 = O(a): each decade in a gains a decade
    err = principal_value_convergence(sp, builtin_kernel("shifted_riesz", Z2), f, [1e-2, 1e-3, 1e-4])
    assert np.allclose(err[:-1] / err[1:], 10.0, rtol=0.01) and err[-1] < 1e-3
    with pytest.raises(NoLimitKernel):
        limit_multiplier(sp, builtin_kernel("oscillating", Z2))
    with pytest.raises(NoLimitKernel):
        apply_principal_value(sp, builtin_kernel("oscillating", Z2), f)


def test_band_sum_applied_to_a_function():
    sp = make_spectral_pair(Z2, (-12.0, 12.0), 128)
    K = builtin_kernel("riesz_1", Z2)
    f = sp.space_function(gaussian_packet(sp.space_grid, -0.4, 0.9).real)
    whole = apply_truncated(sp, K, TruncationBand(0.3, 5.0), f).values
    parts = sum(apply_truncated(sp, K, band, f).values for band in dyadic_band_split(0.3, 5.0))
    assert np.max(np.abs(parts - whole)) <= 1e-8 * np.abs(whole).max()


def test_row_differences_vanish_for_equal_points():
    K = builtin_kernel("riesz_1", Z2)
    out = regularity_row_integrals(K, 0, regularity_delta(Z2), xs=[0.5], pairs=[(1.0, 1.0)], panels=8)
    assert out["C_holder_x"] == out["C_holder_y"] == out["C_holder_a"] == 0.0
    assert np.isfinite(out["C_size"]) and out["C_size"] > 0


def test_derivative_constants_are_finite_and_refinement_stable():
    K = builtin_kernel("riesz_1", Z2)
    base = K.derivative_constants
    from dunkl_lab.kernels import certify_derivatives
    fine = certify_derivatives(K, radii=np.geomspace(2.0 ** -6, 2.0 ** 6, 49))
    for m in base:
        assert np.isfinite(base[m]) and abs(fine[m] - base[m]) <= 0.05 * base[m]
