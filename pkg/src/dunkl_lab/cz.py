"""Dyadic cubes, Calderon-Zygmund decomposition, maximal operators and
empirical weak/strong type constants on a weighted grid."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NoLimitKernel, RootSaturated, UnsupportedRootSystem
from .kernels import (
    MultiplierTable,
    SingularKernel,
    TruncationBand,
    apply_multiplier,
    kernel_multiplier,
    limit_multiplier,
)
from .quadrature import GridFunction, WeightedGrid
from .roots import RootSystem, axis_primitive
from .spectral import SpectralPair, forward_transform, inverse_transform


# ---------------------------------------------------------------------------
# dyadic cubes

@dataclass(frozen=True)
class DyadicCube:
    """Cube of generation ``level`` inside the root cube [lo, lo + side)^N."""

    level: int
    index: tuple
    root_lo: np.ndarray = field(repr=False, compare=False)
    root_side: float = field(repr=False, compare=False)
    measure: float = field(default=0.0, compare=False)
    nodes: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def side(self) -> float:
        return self.root_side / 2 ** self.level

    @property
    def lower(self) -> np.ndarray:
        return self.root_lo + np.asarray(self.index) * self.side

    @property
    def center(self) -> np.ndarray:
        return self.lower + 0.5 * self.side

    @property
    def diameter(self) -> float:
        return self.side * np.sqrt(len(self.index))

    @property
    def parent_index(self) -> tuple:
        return tuple(i // 2 for i in self.index)

    def children_indices(self):
        from itertools import product
        base = [2 * i for i in self.index]
        return [tuple(b + o for b, o in zip(base, off)) for off in product((0, 1), repeat=len(self.index))]

    def contains(self, pts, dilation: float = 1.0) -> np.ndarray:
        """Membership of points in the cube dilated about its center (Q* for 2)."""
        pts = np.atleast_2d(pts)
        half = 0.5 * self.side * dilation
        return np.all(np.abs(pts - self.center) <= half, axis=1)

    def exact_measure(self, rs: RootSystem) -> float:
        """w(Q) from the axis primitives (product systems)."""
        kappa = rs.require_product()
        lo, hi = self.lower, self.lower + self.side
        return float(np.prod([axis_primitive(k, b) - axis_primitive(k, a) for k, a, b in zip(kappa, lo, hi)]))

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "index": list(self.index),
            "center": self.center.tolist(),
            "side": self.side,
            "diameter": self.diameter,
            "measure": self.measure,
        }


def root_cube(grid: WeightedGrid):
    """Smallest cube [lo, lo + side)^N containing the box (the box itself when it is a cube)."""
    box = np.asarray(grid.box, dtype=float)
    side = float(np.max(box[:, 1] - box[:, 0]))
    # tiny outward pad keeps nodes on the far faces inside the half-open cube
    return box[:, 0].copy(), side * (1 + 1e-12)


def cube_indices(grid: WeightedGrid, level: int) -> np.ndarray:
    lo, side = root_cube(grid)
    h = side / 2 ** level
    idx = np.floor((grid.nodes - lo) / h).astype(np.int64)
    return np.clip(idx, 0, 2 ** level - 1)


def _make_cube(grid, level, index, members):
    lo, side = root_cube(grid)
    return DyadicCube(level, tuple(int(i) for i in index), lo, side,
                      float(grid.weights[members].sum()), members)


def cube_children(grid: WeightedGrid, cube: DyadicCube) -> list:
    """Nonempty children with their grid measures."""
    idx = cube_indices(grid, cube.level + 1)[cube.nodes]
    out = []
    for child in cube.children_indices():
        m = np.all(idx == np.asarray(child), axis=1)
        if m.any():
            out.append(_make_cube(grid, cube.level + 1, child, cube.nodes[m]))
    return out


def leaf_level(grid: WeightedGrid, max_level: int = 60) -> int:
    """First generation at which every cube holds at most one node."""
    for level in range(max_level + 1):
        idx = cube_indices(grid, level)
        _, counts = np.unique(idx, axis=0, return_counts=True)
        if counts.max() <= 1:
            return level
    raise RuntimeError("grid nodes could not be separated by dyadic cubes")


# ---------------------------------------------------------------------------
# Calderon-Zygmund decomposition

@dataclass
class CZDecomposition:
    lam: float
    p: float
    cubes: list
    good: GridFunction
    bad_parts: list
    omega: np.ndarray
    omega_star: np.ndarray
    C1: float
    C2: float
    means: list

    @property
    def bad(self) -> GridFunction:
        total = np.zeros_like(self.good.values)
        for _, b in self.bad_parts:
            total = total + b.values
        return GridFunction(self.good.grid, total)

    def to_document(self) -> dict:
        return {
            "lambda": self.lam,
            "p": self.p,
            "C1": self.C1,
            "C2": self.C2,
            "cubes": [dict(c.to_dict(), mean_over_lambda_p=m) for c, m in zip(self.cubes, self.means)],
            "omega_measure": float(self.good.grid.weights[self.omega].sum()),
            "omega_star_measure": float(self.good.grid.weights[self.omega_star].sum()),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=2, sort_keys=True)


def cz_decompose(grid: WeightedGrid, f: GridFunction, lam: float, p: float = 1.0,
                 rs: RootSystem | None = None) -> CZDecomposition:
    """Top-down selection of the maximal dyadic cubes with mean |f|^p > lam^p.

    Means use the grid weights. The scan descends until every remaining node is
    alone in its cube. g = f off the cubes and the cube average on each Q_l;
    b_l = (f - avg_Q f) 1_Q.
    """
    if lam <= 0 or p < 1:
        raise ValueError("need lambda > 0 and p >= 1")
    vals = np.asarray(f.values)
    w = grid.weights
    fp = np.abs(vals) ** p * w
    thr = lam ** p
    if fp.sum() / w.sum() > thr:
        raise RootSaturated("mean of |f|^p over the root cube exceeds lambda^p")
    active = np.arange(grid.size)
    selected, means = [], []
    level = 0
    while active.size:
        idx = cube_indices(grid, level)[active]
        keys, inv, counts = np.unique(idx, axis=0, return_inverse=True, return_counts=True)
        inv = inv.reshape(-1)
        wsum = np.bincount(inv, weights=w[active])
        fsum = np.bincount(inv, weights=fp[active])
        mean = np.divide(fsum, wsum, out=np.zeros_like(fsum), where=wsum > 0)
        hit = mean > thr
        for c in np.flatnonzero(hit):
            members = active[inv == c]
            selected.append(_make_cube(grid, level, keys[c], members))
            means.append(float(mean[c] / thr))
        keep = ~hit[inv] & (counts[inv] > 1)
        active = active[keep]
        level += 1
    good = vals.astype(complex if np.iscomplexobj(vals) else float).copy()
    bad_parts = []
    for cube in selected:
        m = cube.nodes
        avg = np.sum(vals[m] * w[m]) / np.sum(w[m])
        b = np.zeros_like(good)
        b[m] = vals[m] - avg
        good[m] = avg
        bad_parts.append((cube, GridFunction(grid, b)))
    omega = np.sort(np.concatenate([c.nodes for c in selected])) if selected else np.array([], dtype=int)
    C1 = max(means) if means else 0.0
    out = CZDecomposition(lam, p, selected, GridFunction(grid, good), bad_parts, omega,
                          omega, C1, 1.0, means)
    rs = grid.root_system if rs is None else rs
    out.omega_star = orbit_blowup(rs, selected, grid)
    wo = grid.weights[omega].sum()
    out.C2 = float(grid.weights[out.omega_star].sum() / wo) if wo > 0 else 1.0
    return out


def exhaustive_cz_cubes(grid: WeightedGrid, f: GridFunction, lam: float, p: float = 1.0) -> set:
    """Brute-force oracle: every dyadic cube down to the leaf level is scanned;
    a cube is kept when its mean exceeds lam^p and no ancestor's does."""
    L = leaf_level(grid)
    w = grid.weights
    fp = np.abs(np.asarray(f.values)) ** p * w
    thr = lam ** p
    over = {}
    for level in range(L + 1):
        idx = cube_indices(grid, level)
        n = 2 ** level
        flat = np.ravel_multi_index(idx.T, (n,) * grid.dim)
        wsum = np.bincount(flat, weights=w, minlength=n ** grid.dim)
        fsum = np.bincount(flat, weights=fp, minlength=n ** grid.dim)
        for c in range(n ** grid.dim):
            if wsum[c] > 0 and fsum[c] / wsum[c] > thr:
                over[(level, np.unravel_index(c, (n,) * grid.dim))] = True
    out = set()
    for level, index in over:
        index = tuple(int(i) for i in index)
        anc, ok = index, True
        for lv in range(level - 1, -1, -1):
            anc = tuple(i // 2 for i in anc)
            if (lv, anc) in over:
                ok = False
                break
        if ok:
            out.add((level, index))
    return out


def orbit_blowup(rs: RootSystem, cubes, grid: WeightedGrid) -> np.ndarray:
    """Node indices of O(U Q_l*), Q* the cube with the same center and twice the diameter."""
    if not cubes:
        return np.array([], dtype=int)
    images = rs.orbit(grid.nodes)            # (n, |G|, N)
    hit = np.zeros(grid.size, dtype=bool)
    for cube in cubes:
        half = cube.side          # half side of Q*
        inside = np.all(np.abs(images - cube.center) <= half, axis=2)
        hit |= inside.any(axis=1)
    return np.flatnonzero(hit)


# ---------------------------------------------------------------------------
# maximal functions

def dyadic_radii(grid: WeightedGrid) -> np.ndarray:
    """Radii 2^m from below the smallest node gap to the box diameter."""
    gaps = [np.min(np.diff(a)) for a in grid.axes] if grid.is_tensor else [grid.spacing()]
    box = np.asarray(grid.box)
    diam = float(np.linalg.norm(box[:, 1] - box[:, 0]))
    lo = int(np.floor(np.log2(0.5 * min(gaps))))
    hi = int(np.ceil(np.log2(diam)))
    return 2.0 ** np.arange(lo, hi + 1)


def hl_maximal(grid: WeightedGrid, f: GridFunction, radii=None, center_stride: int = 1,
               chunk: int = 2048) -> GridFunction:
    """sup over balls B(c, r) containing x, c a grid node, r dyadic, of the w-mean of |f|.

    Balls are closed; every node is the center of a ball holding only itself,
    so M f >= |f| on the grid.
    """
    radii = dyadic_radii(grid) if radii is None else np.asarray(radii, dtype=float)
    pts = grid.nodes
    a = np.abs(np.asarray(f.values)) * grid.weights
    w = grid.weights
    if center_stride > 1 and grid.is_tensor:
        sub = np.zeros(grid.shape, dtype=bool)
        sub[tuple(slice(None, None, center_stride) for _ in grid.shape)] = True
        centers = pts[sub.reshape(-1)]
    else:
        centers = pts
    best = np.abs(np.asarray(f.values)).astype(float).copy()
    for r in radii:
        for s in range(0, centers.shape[0], chunk):
            c = centers[s:s + chunk]
            inb = np.sum((c[:, None, :] - pts[None, :, :]) ** 2, axis=2) <= r * r * (1 + 1e-12)
            mean = (inb @ a) / (inb @ w)
            cand = np.where(inb, mean[:, None], 0.0).max(axis=0)
            best = np.maximum(best, cand)
    return GridFunction(grid, best)


def orbit_sum(grid: WeightedGrid, g: GridFunction, rs: RootSystem | None = None) -> np.ndarray:
    """x -> sum_{sigma in G} g(sigma x) on a G-symmetric tensor grid."""
    rs = grid.root_system if rs is None else rs
    images = rs.orbit(grid.nodes)
    total = np.zeros(grid.size)
    lookup = {tuple(np.round(p, 10)): i for i, p in enumerate(grid.nodes)}
    vals = np.asarray(g.values)
    for k in range(images.shape[1]):
        idx = np.array([lookup[tuple(np.round(p, 10))] for p in images[:, k, :]])
        total += vals[idx]
    return total


def truncation_table(sp: SpectralPair, K: SingularKernel, a_grid) -> MultiplierTable:
    if sp.root_system.dimension != 1:
        raise UnsupportedRootSystem("maximal truncations are implemented in rank one")
    return MultiplierTable(K, sp.freq_grid.nodes[:, 0], np.sort(np.asarray(a_grid, dtype=float)))


def default_a_grid():
    return 2.0 ** np.arange(-8, 8.001, 0.25)


def maximal_Kstar(sp: SpectralPair, K: SingularKernel, f: GridFunction, a_grid=None,
                  table: MultiplierTable | None = None, return_all: bool = False):
    """K* f = max over the a-grid of |K^{a} f|."""
    a_grid = default_a_grid() if a_grid is None else np.asarray(a_grid, dtype=float)
    table = truncation_table(sp, K, a_grid) if table is None else table
    F = forward_transform(sp, f)
    mults = table.truncation_sequence(a_grid)
    rows = np.array([inverse_transform(sp, F * sp.freq_function(m) * sp.ck, check=False).values for m in mults])
    out = GridFunction(sp.space_grid, np.max(np.abs(rows), axis=0))
    return (out, rows) if return_all else out


def cotlar_sides(sp: SpectralPair, K: SingularKernel, f: GridFunction, table: MultiplierTable,
                 limit: GridFunction, a_grid=None, center_stride: int = 1):
    """(K* f, sum_sigma M_HL(Kf)(sigma x) + |f|_inf) on the grid."""
    lhs = maximal_Kstar(sp, K, f, a_grid, table)
    Kf = apply_multiplier(sp, limit, f)
    M = hl_maximal(sp.space_grid, Kf, center_stride=center_stride)
    rhs = orbit_sum(sp.space_grid, M) + float(np.max(np.abs(f.values)))
    return lhs.values, rhs


def cotlar_check(sp: SpectralPair, K: SingularKernel, train, test, a_grid=None, inner: float = 0.5) -> dict:
    """Fit C in K*f <= C (sum_sigma M_HL(Kf)(sigma x) + |f|_inf) on ``train``,
    count violations on ``test``. Points are restricted to the inner part of the box."""
    if not K.has_limit_L:
        raise NoLimitKernel(f"{K.name} has no principal-value constant")
    a_grid = default_a_grid() if a_grid is None else np.asarray(a_grid, dtype=float)
    table = truncation_table(sp, K, a_grid)
    limit, _ = limit_multiplier(sp, K)
    mask = sp.space_grid.inner_mask(inner)

    def ratios(fam):
        out = []
        for f in fam:
            lhs, rhs = cotlar_sides(sp, K, f, table, limit, a_grid)
            r = np.where(rhs[mask] > 0, lhs[mask] / np.where(rhs[mask] > 0, rhs[mask], 1.0), 0.0)
            out.append(r)
        return np.concatenate(out) if out else np.zeros(0)

    rt = ratios(train)
    C = float(rt.max()) if rt.size else 0.0
    rh = ratios(test)
    excess = rh / C - 1.0 if C > 0 else np.zeros_like(rh)
    viol = excess > 0
    return {
        "C": C,
        "n_train": len(train),
        "n_test": len(test),
        "violation_fraction": float(viol.mean()) if rh.size else 0.0,
        "max_excess": float(excess.max(initial=0.0)),
        "passed": bool((viol.mean() if rh.size else 0.0) <= 0.01 and excess.max(initial=0.0) <= 0.05),
    }


# ---------------------------------------------------------------------------
# weak and strong type constants

def weak_type_estimator(sp: SpectralPair, K: SingularKernel, bands, family, lambdas=None,
                        multipliers=None, inner: float | None = None) -> dict:
    """Empirical weak (1,1) constants lam w({|K^{band} f| > lam}) / |f|_1.

    ``lambdas`` are relative to |K^{band} f|_inf (default a geometric grid on
    [1e-3, 1]). Returns the sup per band and overall.
    """
    grid = sp.space_grid
    w = grid.weights
    rel = np.geomspace(1e-3, 1.0, 25) if lambdas is None else np.asarray(lambdas, dtype=float)
    per_band = []
    for i, band in enumerate(bands):
        m = kernel_multiplier(sp, K, band) if multipliers is None else multipliers[i]
        best = 0.0
        for f in family:
            g = np.abs(apply_multiplier(sp, m, f).values)
            n1 = float(np.sum(np.abs(f.values) * w))
            top = g.max()
            for r in rel:
                lam = r * top
                best = max(best, lam * float(w[g > lam].sum()) / n1)
        per_band.append(best)
    per_band = np.array(per_band)
    return {
        "bands": [(b.a, b.b) for b in bands],
        "per_band": per_band.tolist(),
        "sup": float(per_band.max()),
        "spread": float(per_band.max() / per_band.min()) if per_band.min() > 0 else np.inf,
    }


def lp_ratio(sp: SpectralPair, m: GridFunction, f: GridFunction, p: float) -> float:
    g = apply_multiplier(sp, m, f)
    w = sp.space_grid.weights
    num = np.sum(np.abs(g.values) ** p * w) ** (1 / p)
    den = np.sum(np.abs(f.values) ** p * w) ** (1 / p)
    return float(num / den)


def strong_type_estimator(sp: SpectralPair, K: SingularKernel, bands, family, ps=(1.5, 2.0, 3.0, 4.0),
                          multipliers=None) -> dict:
    """sup over family and bands of |K^{band} f|_p / |f|_p, per p."""
    mults = [kernel_multiplier(sp, K, b) for b in bands] if multipliers is None else multipliers
    out = {}
    for p in ps:
        out[p] = max(lp_ratio(sp, m, f, p) for m in mults for f in family)
    return out
