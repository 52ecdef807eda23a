import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dunkl_lab.cz import (cz_decompose, exhaustive_cz_cubes, hl_maximal, lp_ratio, maximal_Kstar,
                          orbit_blowup, orbit_sum)
from dunkl_lab.errors import RootSaturated
from dunkl_lab.kernels import TruncationBand, builtin_kernel, kernel_multiplier
from dunkl_lab.quadrature import GridFunction, build_grid
from dunkl_lab.roots import preset
from dunkl_lab.spectral import make_spectral_pair

Z2 = preset("z2", 1.0)
G1 = build_grid(Z2, (-4.0, 4.0), 64)
G2 = build_grid(preset("z2^2", (1.0, 0.5)), (-4.0, 4.0), 24)


def _packets(grid, seed, count=3):
    rng = np.random.default_rng(seed)
    x = grid.nodes
    out = np.zeros(grid.size)
    for _ in range(count):
        c = rng.uniform(-3, 3, size=grid.dim)
        out += rng.uniform(0.5, 5) * np.exp(-np.sum((x - c) ** 2, axis=1) / (2 * rng.uniform(0.05, 0.5) ** 2))
    return GridFunction(grid, out)


def test_small_functions_select_no_cubes():
    f = GridFunction(G1, 0.5 * np.cos(G1.nodes[:, 0]))
    D = cz_decompose(G1, f, 1.0)
    assert D.cubes == [] and np.array_equal(D.good.values, f.values) and np.all(D.bad.values == 0)


def test_spike_selection_matches_exhaustive_scan():
    x = G1.nodes[:, 0]
    f = GridFunction(G1, np.where((x >= 0) & (x <= 0.125), 10.0, 0.0))
    D = cz_decompose(G1, f, 1.0, 1.0)
    mine = {(c.level, tuple(int(v) for v in c.index)) for c in D.cubes}
    assert mine and mine == exhaustive_cz_cubes(G1, f, 1.0, 1.0)


def test_saturated_root_and_bad_levels():
    f = GridFunction(G1, np.full(G1.size, 3.0))
    with pytest.raises(RootSaturated):
        cz_decompose(G1, f, 1.0)
    with pytest.raises(ValueError):
        cz_decompose(G1, f, 0.0)
    with pytest.raises(ValueError):
        cz_decompose(G1, f, 5.0, p=0.5)


@given(st.integers(0, 10 ** 6), st.sampled_from([1.0, 1.5, 2.0]), st.floats(1.2, 6.0), st.sampled_from([1, 2]))
def test_decomposition_invariants(seed, p, factor, dim):
    grid = G1 if dim == 1 else G2
    f = _packets(grid, seed)
    w = grid.weights
    norm_p = np.sum(np.abs(f.values) ** p * w)
    lam = factor * (norm_p / w.sum()) ** (1 / p)
    D = cz_decompose(grid, f, lam, p)
    # f = g + sum b_l
    assert np.allclose(D.good.values + D.bad.values, f.values, rtol=0, atol=1e-12 * np.abs(f.values).max())
    # |g| <= C1^{1/p} lam, with C1 the largest selected mean over lam^p
    assert np.abs(D.good.values).max() <= max(D.C1, 1.0) ** (1 / p) * lam * (1 + 1e-12)
    seen = np.zeros(grid.size, dtype=int)
    for cube, b in D.bad_parts:
        seen[cube.nodes] += 1
        assert abs(np.sum(b.values * w)) <= 1e-10 * np.sum(np.abs(f.values) * w)
        outside = np.ones(grid.size, dtype=bool)
        outside[cube.nodes] = False
        assert np.all(b.values[outside] == 0)
    assert seen.max(initial=0) <= 1      # selected cubes are disjoint
    # every selected cube has mean > lam^p, so w(Omega) <= |f|_p^p / lam^p
    assert w[D.omega].sum() <= norm_p / lam ** p * (1 + 1e-12)
    assert set(D.omega.tolist()) <= set(orbit_blowup(grid.root_system, D.cubes, grid).tolist())
    assert D.C2 >= 1.0


def test_decomposition_json_document():
    f = _packets(G2, 7)
    lam = 3 * np.sum(np.abs(f.values) * G2.weights) / G2.weights.sum()
    D = cz_decompose(G2, f, lam)
    doc = json.loads(D.to_json())
    assert doc["lambda"] == lam and len(doc["cubes"]) == len(D.cubes)
    assert doc["omega_star_measure"] >= doc["omega_measure"]


def test_maximal_function_dominates_and_fixes_constants():
    f = _packets(G1, 3)
    M = hl_maximal(G1, f)
    assert np.all(M.values >= np.abs(f.values) - 1e-15)
    one = hl_maximal(G1, GridFunction(G1, np.ones(G1.size)))
    assert np.allclose(one.values, 1.0)


def test_orbit_sum_on_even_and_odd_functions():
    x = G1.nodes[:, 0]
    assert np.allclose(orbit_sum(G1, GridFunction(G1, x ** 2)), 2 * x ** 2)
    assert np.allclose(orbit_sum(G1, GridFunction(G1, x)), 0.0)


def test_l2_ratio_is_bounded_by_the_multiplier():
    sp = make_spectral_pair(Z2, (-12.0, 12.0), 128)
    K = builtin_kernel("riesz_1", Z2)
    f = sp.space_function(np.exp(-(sp.space_grid.nodes[:, 0] - 0.5) ** 2))
    for band in (TruncationBand(0.1, 1.0), TruncationBand(0.5, 8.0)):
        m = kernel_multiplier(sp, K, band)
        assert lp_ratio(sp, m, f, 2.0) <= sp.ck * np.abs(m.values).max() * (1 + 1e-9)


def test_kstar_dominates_each_truncation():
    sp = make_spectral_pair(Z2, (-12.0, 12.0), 128)
    K = builtin_kernel("riesz_1", Z2)
    f = sp.space_function(np.exp(-(sp.space_grid.nodes[:, 0] + 0.3) ** 2))
    a_grid = 2.0 ** np.arange(-4, 4.001, 0.5)
    Ks, rows = maximal_Kstar(sp, K, f, a_grid, return_all=True)
    assert rows.shape == (a_grid.size, sp.space_grid.size)
    assert np.all(Ks.values >= np.abs(rows).max(axis=0) - 1e-15)
