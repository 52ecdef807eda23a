import numpy as np
import pytest
from hypothesis import given, strategies as st

from dunkl_lab.errors import BoundaryMass, GridMismatch
from dunkl_lab.quadrature import GridFunction, build_grid
from dunkl_lab.roots import preset
from dunkl_lab.spectral import (dunkl_kernel_E, dunkl_operator_T, forward_transform, inverse_transform,
                                laplacian_multiplier, multiplier_apply, rank1_kernel_imag, rank1_kernel_real,
                                rank1_kernel_scaled, rank1_kernel_series)

from conftest import gaussian_packet

kappas = st.sampled_from([0.0, 0.25, 0.5, 1.0, 2.5])


# the alternating power series is a trustworthy reference only for moderate |z|
@given(kappas, st.floats(-8, 8))
def test_imaginary_kernel_matches_power_series(kappa, t):
    assert np.isclose(rank1_kernel_imag(kappa, t), rank1_kernel_series(kappa, 1j * t), rtol=1e-10, atol=1e-12)


@given(kappas, st.floats(-6, 40))
def test_real_kernel_matches_power_series(kappa, z):
    assert np.isclose(rank1_kernel_real(kappa, z), rank1_kernel_series(kappa, z), rtol=1e-10)
    assert np.isclose(rank1_kernel_scaled(kappa, z), np.exp(-abs(z)) * rank1_kernel_real(kappa, z), rtol=1e-10)


def test_zero_multiplicity_gives_exponentials():
    t = np.linspace(-20, 20, 101)
    assert np.allclose(rank1_kernel_imag(0.0, t), np.exp(1j * t), atol=1e-13)
    assert np.allclose(rank1_kernel_real(0.0, t), np.exp(t), rtol=1e-12)


def test_scaled_kernel_handles_large_arguments():
    z = np.array([1e3, 1e5, -1e5])
    v = rank1_kernel_scaled(1.0, z)
    assert np.all(np.isfinite(v)) and np.all((v > 0) & (v <= 1))


@given(st.lists(st.floats(-6, 6), min_size=4, max_size=4), st.floats(-3, 3))
def test_kernel_symmetries(v, lam):
    rs = preset("z2^2", (1.0, 0.5))
    x, y = np.array(v[:2]), np.array(v[2:])
    E = dunkl_kernel_E(rs, x, y, imaginary=True)
    assert np.isclose(E, dunkl_kernel_E(rs, y, x, imaginary=True))
    assert np.isclose(dunkl_kernel_E(rs, lam * x, y, imaginary=True), dunkl_kernel_E(rs, x, lam * y, imaginary=True))
    assert np.isclose(dunkl_kernel_E(rs, -x, y, imaginary=True), np.conj(E))
    assert np.isclose(dunkl_kernel_E(rs, x, np.zeros(2), imaginary=True), 1.0)
    assert abs(E) <= 1 + 1e-12


def test_gaussian_is_a_fixed_point_of_the_transform(sp1, sp2):
    for sp, tol in ((sp1, 1e-12), (sp2, 1e-9)):
        f = sp.space_function(np.exp(-np.sum(sp.space_grid.nodes ** 2, axis=1) / 2))
        F = forward_transform(sp, f)
        assert np.allclose(F.values, np.exp(-sp.freq_norm2 / 2), atol=tol)


@given(st.floats(-2, 2), st.floats(0.8, 1.2), st.floats(-1, 1))
def test_plancherel_and_inversion(sp1, center, width, freq):
    f = sp1.space_function(gaussian_packet(sp1.space_grid, center, width, freq))
    F = forward_transform(sp1, f)
    n_f = np.sum(np.abs(f.values) ** 2 * sp1.space_grid.weights)
    n_F = np.sum(np.abs(F.values) ** 2 * sp1.freq_grid.weights)
    assert np.isclose(n_F, n_f, rtol=1e-10)
    back = inverse_transform(sp1, F)
    assert np.allclose(back.values, f.values, atol=1e-10)


def test_laplacian_of_gaussian(sp1, sp2):
    # radial f: Delta_k f = f'' + (N - 1)/r f', so Delta_k e^{-r^2/2} = (r^2 - N) e^{-r^2/2}
    for sp, tol in ((sp1, 1e-10), (sp2, 1e-8)):
        r2 = np.sum(sp.space_grid.nodes ** 2, axis=1)
        f = sp.space_function(np.exp(-r2 / 2))
        Nh = sp.root_system.homogeneous_dimension
        assert np.allclose(laplacian_multiplier(sp, f).values, (r2 - Nh) * np.exp(-r2 / 2), atol=tol)


def test_operator_T_on_kernel_and_on_odd_functions():
    rs = preset("z2", 1.0)
    g = build_grid(rs, (-3.0, 3.0), 300)
    x = g.nodes[:, 0]
    # T x = 1 + 2 kappa for odd x (x - (-x))/x = 2
    Tx = dunkl_operator_T(rs, [1.0], GridFunction(g, x), order=6)
    assert np.allclose(Tx.values, 3.0, atol=1e-8)
    f = GridFunction(g, dunkl_kernel_E(rs, np.array([0.7]), g.nodes, imaginary=True))
    Tf = dunkl_operator_T(rs, [1.0], f, order=6)
    assert np.max(np.abs(Tf.values - 0.7j * f.values)) < 1e-6


def test_boundary_mass_and_grid_checks(sp1, sp0):
    f = sp1.space_function(np.ones(sp1.space_grid.size))
    with pytest.raises(BoundaryMass):
        forward_transform(sp1, f)
    forward_transform(sp1, f, check=False)
    with pytest.raises(GridMismatch):
        forward_transform(sp0, f)


def test_multiplier_one_is_identity(sp1):
    f = sp1.space_function(gaussian_packet(sp1.space_grid, 0.5))
    assert np.allclose(multiplier_apply(sp1, np.ones(sp1.freq_grid.size), f).values, f.values, atol=1e-11)
