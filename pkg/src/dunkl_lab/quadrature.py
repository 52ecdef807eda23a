"""Quadrature for integrals against dw and functions sampled on grids.

Product root systems get tensor rules whose one-dimensional factors absorb the
weight 2^k |x|^(2k) exactly: a Gauss-Jacobi rule on each side of the
reflection hyperplane (``rule="gauss"``), or a composite Gauss rule on panels
graded toward the hyperplane (``rule="graded"``).
"""
from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import special

from .errors import BoxDegenerate, GridMismatch, TailTooLarge
from .roots import RootSystem, axis_density, weight_density


# ---------------------------------------------------------------------------
# one-dimensional rules

def _jacobi_from_zero(n, kappa, length):
    """n-point rule for int_0^length g(x) 2^kappa x^(2 kappa) dx."""
    t, w = special.roots_jacobi(n, 0.0, 2.0 * kappa)
    x = (t + 1.0) * 0.5 * length
    w = w * (0.5 * length) ** (2.0 * kappa + 1.0) * 2.0 ** kappa
    return x, w


def _legendre_weighted(n, kappa, lo, hi):
    t, w = np.polynomial.legendre.leggauss(n)
    x = lo + (t + 1.0) * 0.5 * (hi - lo)
    return x, w * 0.5 * (hi - lo) * axis_density(kappa, x)


def gauss_axis(kappa: float, lo: float, hi: float, n: int):
    """Gauss rule on [lo, hi] for the weight 2^kappa |x|^(2 kappa).

    Splits at 0 when 0 is interior; the two halves get node counts in
    proportion to their lengths (equal counts on symmetric boxes).
    """
    if lo < 0.0 < hi:
        n_neg = int(round(n * (-lo) / (hi - lo)))
        n_neg = min(max(n_neg, 1), n - 1)
        xn, wn = _jacobi_from_zero(n_neg, kappa, -lo)
        xp, wp = _jacobi_from_zero(n - n_neg, kappa, hi)
        return np.concatenate([-xn[::-1], xp]), np.concatenate([wn[::-1], wp])
    if lo == 0.0:
        return _jacobi_from_zero(n, kappa, hi)
    if hi == 0.0:
        x, w = _jacobi_from_zero(n, kappa, -lo)
        return -x[::-1], w[::-1]
    return _legendre_weighted(n, kappa, lo, hi)


PANEL_POINTS = 4


def _graded_half(kappa, length, n, q):
    """Composite 4-point Gauss rule on [0, length] with breakpoints length (i/m)^q."""
    m = max(1, n // PANEL_POINTS)
    edges = length * (np.arange(m + 1) / m) ** q
    xs, ws = [], []
    for p in range(m):
        a, b = edges[p], edges[p + 1]
        if p == 0:
            x, w = _jacobi_from_zero(PANEL_POINTS, kappa, b)
        else:
            x, w = _legendre_weighted(PANEL_POINTS, kappa, a, b)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def graded_axis(kappa: float, lo: float, hi: float, n: int, q: float = 1.0):
    """Composite Gauss rule on [lo, hi] whose panels are graded toward 0.

    Panel breakpoints follow x = L s^q on each side of the hyperplane; the panel
    touching 0 uses a Gauss-Jacobi rule, so every panel is exact for
    polynomials of degree 7 times the weight.
    """
    if lo < 0.0 < hi:
        n_neg = min(max(int(round(n * (-lo) / (hi - lo))), PANEL_POINTS), n - PANEL_POINTS)
        xn, wn = _graded_half(kappa, -lo, n_neg, q)
        xp, wp = _graded_half(kappa, hi, n - n_neg, q)
        return np.concatenate([-xn[::-1], xp]), np.concatenate([wn[::-1], wp])
    if lo == 0.0 or hi == 0.0:
        x, w = _graded_half(kappa, hi - lo, n, q)
        return (x, w) if lo == 0.0 else (-x[::-1], w[::-1])
    m = max(1, n // PANEL_POINTS)
    edges = np.linspace(lo, hi, m + 1)
    parts = [_legendre_weighted(PANEL_POINTS, kappa, a, b) for a, b in zip(edges[:-1], edges[1:])]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


# ---------------------------------------------------------------------------
# grids and grid functions

@dataclass(frozen=True, eq=False)
class WeightedGrid:
    """Quadrature nodes and weights for integrals against dw.

    Tensor grids keep their one-dimensional factors in ``axes``/``axis_weights``
    and flatten nodes in C order; unstructured grids have ``axes = None``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    box: np.ndarray
    refinement_level: int
    root_system: RootSystem
    axes: tuple | None = None
    axis_weights: tuple | None = None
    rule: str = "gauss"
    grading: float = 1.0

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def shape(self) -> tuple:
        if self.axes is None:
            return (self.size,)
        return tuple(len(a) for a in self.axes)

    @property
    def is_tensor(self) -> bool:
        return self.axes is not None

    def spacing(self, axis: int | None = None) -> float:
        """Largest gap between consecutive nodes along an axis (max over axes if None)."""
        if self.axes is None:
            raise GridMismatch("spacing is defined for tensor grids only")
        axes = self.axes if axis is None else [self.axes[axis]]
        return max(float(np.max(np.diff(a))) for a in axes)

    @cached_property
    def mirror_index(self) -> list:
        """For each group element, the node permutation x -> sigma(x), or None."""
        keyed = {tuple(np.round(p, 9)): i for i, p in enumerate(self.nodes)}
        out = []
        for g in self.root_system.group:
            imgs = self.nodes @ g.T
            idx = [keyed.get(tuple(np.round(p, 9) + 0.0), -1) for p in imgs]
            out.append(None if min(idx) < 0 else np.array(idx))
        return out

    @property
    def is_g_symmetric(self) -> bool:
        return all(ix is not None for ix in self.mirror_index)

    def sample(self, func) -> "GridFunction":
        """Evaluate ``func`` on the (n, N) node array."""
        return GridFunction(self, np.asarray(func(self.nodes)))

    def zeros(self, dtype=float) -> "GridFunction":
        return GridFunction(self, np.zeros(self.size, dtype=dtype))

    def inner_mask(self, fraction: float = 0.5) -> np.ndarray:
        """Nodes lying in the box shrunk about its center by ``fraction``."""
        c = self.box.mean(axis=1)
        half = 0.5 * (self.box[:, 1] - self.box[:, 0]) * fraction
        return np.all(np.abs(self.nodes - c) <= half + 1e-12, axis=1)


@dataclass(eq=False)
class GridFunction:
    grid: WeightedGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values).reshape(-1)
        if self.values.size != self.grid.size:
            raise GridMismatch(f"{self.values.size} values for a grid of {self.grid.size} nodes")

    def tensor(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid is not self.grid:
                raise GridMismatch("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __abs__(self):
        return GridFunction(self.grid, np.abs(self.values))

    @property
    def real(self):
        return GridFunction(self.grid, self.values.real)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def _box_array(box, dim):
    b = np.asarray(box, dtype=float)
    if b.ndim == 1:
        b = np.tile(b, (dim, 1))
    if b.shape != (dim, 2):
        raise BoxDegenerate(f"box must have shape ({dim}, 2)")
    if np.any(b[:, 1] <= b[:, 0]):
        raise BoxDegenerate("box sides must have positive length")
    return b


def build_grid(rs: RootSystem, box, points_per_axis: int, grading: float | None = None,
               rule: str = "gauss", refinement_level: int = 0) -> WeightedGrid:
    """Tensor quadrature grid for dw on ``box``.

    ``box`` is (lo, hi) for every axis or an (N, 2) array. With ``rule="graded"``
    the nodes on each side of a hyperplane follow x = L s^grading (default
    grading 1 + 2 max k).
    """
    if points_per_axis < 8:
        raise ValueError("points_per_axis must be at least 8")
    b = _box_array(box, rs.dimension)
    kappa = rs.axis_multiplicities
    if kappa is None:
        # non-product weight: Legendre tensor rule times the density
        axes, aw = zip(*[np.polynomial.legendre.leggauss(points_per_axis) for _ in range(rs.dimension)])
        axes = tuple(lo + (t + 1) * 0.5 * (hi - lo) for t, (lo, hi) in zip(axes, b))
        aw = tuple(w * 0.5 * (hi - lo) for w, (lo, hi) in zip(aw, b))
        nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, rs.dimension)
        weights = _tensor_weights(aw) * weight_density(rs, nodes)
        return WeightedGrid(nodes, weights, b, refinement_level, rs, axes, aw, "legendre")
    if rule == "gauss":
        parts = [gauss_axis(k, lo, hi, points_per_axis) for k, (lo, hi) in zip(kappa, b)]
        q = 1.0
    elif rule == "graded":
        q = float(grading) if grading is not None else 1.0 + 2.0 * float(np.max(kappa))
        parts = [graded_axis(k, lo, hi, points_per_axis, q) for k, (lo, hi) in zip(kappa, b)]
    else:
        raise ValueError(f"unknown rule {rule!r}")
    axes = tuple(p[0] for p in parts)
    aw = tuple(p[1] for p in parts)
    nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, rs.dimension)
    grid = WeightedGrid(nodes, _tensor_weights(aw), b, refinement_level, rs, axes, aw, rule, q)
    if np.any(grid.weights <= 0):
        raise BoxDegenerate("quadrature produced nonpositive weights")
    return grid


def _tensor_weights(aw):
    w = aw[0]
    for a in aw[1:]:
        w = np.multiply.outer(w, a)
    return np.asarray(w).reshape(-1)


def refine(grid: WeightedGrid) -> WeightedGrid:
    """Same box and rule with twice the points per axis."""
    n = 2 * max(grid.shape)
    return build_grid(grid.root_system, grid.box, n, grid.grading if grid.rule == "graded" else None,
                      rule=grid.rule if grid.rule != "legendre" else "gauss",
                      refinement_level=grid.refinement_level + 1)


def integrate(f: GridFunction, grid: WeightedGrid | None = None):
    """Quadrature of f against dw."""
    if grid is not None and grid is not f.grid:
        raise GridMismatch("function is not sampled on the requested grid")
    return np.sum(f.values * f.grid.weights)


def lp_norm(f: GridFunction, p: float) -> float:
    if p == np.inf:
        return float(np.max(np.abs(f.values)))
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(np.sum(np.abs(f.values) ** p * f.grid.weights) ** (1.0 / p))


def ck_closed_form(rs: RootSystem) -> float:
    """Closed form of int e^(-|x|^2/2) dw for product systems."""
    kappa = rs.require_product()
    return float(np.prod(2.0 ** (2 * kappa + 0.5) * special.gamma(kappa + 0.5)))


def gaussian_tail_fraction(rs: RootSystem, box) -> float:
    """Fraction of the Gaussian mass e^(-|x|^2/2) dw lying outside ``box``."""
    kappa = rs.require_product()
    b = _box_array(box, rs.dimension)
    inside = 1.0
    for k, (lo, hi) in zip(kappa, b):
        # each half-line carries half of the axis mass
        def outside(edge):
            return 0.5 * special.gammaincc(k + 0.5, 0.5 * edge ** 2) if edge > 0 else 0.5
        frac = 1.0 - (outside(hi) if hi > 0 else 1 - outside(-hi)) - (outside(-lo) if lo < 0 else 1 - outside(lo))
        inside *= frac
    return 1.0 - inside


def normalization_constant(rs: RootSystem, box=(-16.0, 16.0), resolution: int = 256) -> float:
    """Quadrature value of c_k = int e^(-|x|^2/2) dw(x)."""
    if rs.is_product:
        tail = gaussian_tail_fraction(rs, box)
        if tail > 1e-10:
            raise TailTooLarge(f"Gaussian tail outside the box is {tail:.2e} of the total")
    grid = build_grid(rs, box, resolution)
    val = float(np.sum(np.exp(-0.5 * np.sum(grid.nodes ** 2, axis=1)) * grid.weights))
    if not rs.is_product:
        # boundary value bounds the neglected mass for non-product weights
        edge = np.min(np.abs(np.asarray(grid.box)))
        if np.exp(-0.5 * edge ** 2) > 1e-10:
            raise TailTooLarge("box too small for the Gaussian tail")
    return val


# ---------------------------------------------------------------------------
# I/O

def write_csv(f: GridFunction) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf)
    dim = f.grid.dim
    wr.writerow([f"x{j + 1}" for j in range(dim)] + ["weight", "re", "im"])
    vals = f.values.astype(complex)
    for p, w, v in zip(f.grid.nodes, f.grid.weights, vals):
        wr.writerow([repr(float(c)) for c in p] + [repr(float(w)), repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def _unstructured(nodes, weights, rs):
    lo, hi = nodes.min(axis=0), nodes.max(axis=0)
    hi = np.where(hi > lo, hi, lo + 1.0)
    return WeightedGrid(nodes, weights, np.stack([lo, hi], axis=1), 0, rs, None, None, "imported")


def read_csv(text: str, grid: WeightedGrid | None = None, rs: RootSystem | None = None) -> GridFunction:
    """Parse ``write_csv`` output, onto ``grid`` if given (nodes must match)."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    dim = len(header) - 3
    nodes, weights = body[:, :dim], body[:, dim]
    vals = body[:, dim + 1] + 1j * body[:, dim + 2]
    return _attach(nodes, weights, vals, grid, rs)


def _attach(nodes, weights, vals, grid, rs):
    if grid is not None:
        if grid.nodes.shape != nodes.shape or not np.allclose(grid.nodes, nodes, rtol=0, atol=1e-12):
            raise GridMismatch("imported nodes do not match the grid")
        return GridFunction(grid, vals)
    if rs is None:
        raise GridMismatch("need a grid or a root system to import")
    return GridFunction(_unstructured(nodes, weights, rs), vals)


_MAGIC = b"DKGF"


def write_binary(f: GridFunction) -> bytes:
    """Little-endian layout: magic, uint32 N, uint64 count, then per node
    N coordinates, weight, re, im as float64."""
    dim, n = f.grid.dim, f.grid.size
    vals = f.values.astype(complex)
    table = np.column_stack([f.grid.nodes, f.grid.weights, vals.real, vals.imag]).astype("<f8")
    return _MAGIC + struct.pack("<IQ", dim, n) + table.tobytes()


def read_binary(data: bytes, grid: WeightedGrid | None = None, rs: RootSystem | None = None) -> GridFunction:
    if data[:4] != _MAGIC:
        raise GridMismatch("not a grid-function blob")
    dim, n = struct.unpack("<IQ", data[4:16])
    table = np.frombuffer(data[16:], dtype="<f8").reshape(n, dim + 3)
    return _attach(table[:, :dim].copy(), table[:, dim].copy(), table[:, dim + 1] + 1j * table[:, dim + 2], grid, rs)
