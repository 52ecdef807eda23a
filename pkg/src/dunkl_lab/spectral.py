"""Dunkl kernel, Dunkl operators and the Dunkl transform on product root systems.

Rank one kernel (multiplicity kappa):

    E(x, y) = j_{kappa-1/2}(i x y) + x y / (2 kappa + 1) * j_{kappa+1/2}(i x y),

with j_nu(t) = Gamma(nu + 1) (2/t)^nu J_nu(t) the normalized Bessel function.
For real arguments the equivalent confluent hypergeometric form is used.
Product systems multiply the rank one factors coordinatewise.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from .errors import BoundaryMass, GridMismatch, GridNotGSymmetric, SeriesDivergence
from .quadrature import GridFunction, WeightedGrid, build_grid, ck_closed_form
from .roots import RootSystem

REAL_ARG_LIMIT = 700.0
SERIES_TOL = 1e-16
SERIES_MAX_TERMS = 2000


# ---------------------------------------------------------------------------
# rank one kernel

def normalized_bessel(nu: float, t):
    """j_nu(t) = Gamma(nu+1) (2/t)^nu J_nu(t), with j_nu(0) = 1."""
    t = np.abs(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    small = t < 1e-3
    ts2 = t[small] ** 2
    out[small] = 1.0 - ts2 / (4 * (nu + 1)) + ts2 ** 2 / (32 * (nu + 1) * (nu + 2)) \
        - ts2 ** 3 / (384 * (nu + 1) * (nu + 2) * (nu + 3))
    tb = t[~small]
    out[~small] = special.gamma(nu + 1) * (2.0 / tb) ** nu * special.jv(nu, tb)
    return out


def rank1_kernel_imag(kappa: float, t):
    """E(i t) := E(i xi, x) with t = xi x, for the rank one system."""
    t = np.asarray(t, dtype=float)
    return normalized_bessel(kappa - 0.5, t) + 1j * t / (2 * kappa + 1) * normalized_bessel(kappa + 0.5, t)


def rank1_kernel_real(kappa: float, z):
    """E(x, y) for real z = x y, |z| <= 700.

    Uses E(z) = e^{-z} M(kappa+1, 2kappa+1, 2z) for z >= 0 and
    E(z) = e^{z} M(kappa, 2kappa+1, -2z) for z < 0, so that the confluent
    hypergeometric function M is only evaluated at nonnegative arguments.
    """
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    if np.any(a > REAL_ARG_LIMIT):
        raise SeriesDivergence(f"|xy| = {a.max():.3g} exceeds {REAL_ARG_LIMIT}")
    pos = z >= 0
    m = np.where(pos, special.hyp1f1(kappa + 1, 2 * kappa + 1, 2 * a), special.hyp1f1(kappa, 2 * kappa + 1, 2 * a))
    out = np.exp(-a) * m
    if not np.all(np.isfinite(out)):
        raise SeriesDivergence("kernel evaluation overflowed")
    return out


def _scaled_kummer(a: float, b: float, u):
    """e^{-u} M(a, b, u) for u >= 0 without overflow."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = u < 600.0
    out[small] = np.exp(-u[small]) * special.hyp1f1(a, b, u[small])
    ub = u[~small]
    if ub.size:
        # large-argument expansion Gamma(b)/Gamma(a) u^(a-b) sum_s (b-a)_s (1-a)_s / s! u^-s
        term = np.ones_like(ub)
        total = term.copy()
        for n in range(1, 30):
            term = term * (b - a + n - 1) * (n - a) / (n * ub)
            total += term
            if np.all(np.abs(term) < 1e-17 * np.abs(total)):
                break
        out[~small] = special.gamma(b) * special.rgamma(a) * ub ** (a - b) * total
    return out


def rank1_kernel_scaled(kappa: float, z):
    """e^{-|z|} E(z) for real z of any size (always in (0, 1])."""
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = _scaled_kummer(kappa + 1, 2 * kappa + 1, 2 * a[pos])
    out[~pos] = _scaled_kummer(kappa, 2 * kappa + 1, 2 * a[~pos])
    return out


def rank1_kernel_series(kappa: float, z, tol: float = SERIES_TOL, max_terms: int = SERIES_MAX_TERMS):
    """Power series sum_n z^n / b_n, b_{2m} = 4^m m! (kappa+1/2)_m,
    b_{2m+1} = 2 4^m m! (kappa+1/2)_{m+1}. Accepts complex z."""
    z = np.asarray(z)
    term = np.ones_like(z, dtype=np.result_type(z, float))
    total = term.copy()
    for n in range(1, max_terms):
        # ratio b_{n-1} / b_n
        if n % 2:
            m = (n - 1) // 2
            denom = 2.0 * (kappa + 0.5 + m)
        else:
            m = n // 2
            denom = 2.0 * m
        term = term * z / denom
        total = total + term
        if np.all(np.abs(term) <= tol * np.maximum(np.abs(total), 1e-300)):
            return total
    raise SeriesDivergence("kernel series did not converge")


# ---------------------------------------------------------------------------
# product kernel

def dunkl_kernel_E(rs: RootSystem, x, z, imaginary: bool = False):
    """E(x, z), or E(i x, z) when ``imaginary`` (x then plays the frequency).

    Broadcasts over leading axes of x and z.
    """
    kappa = rs.require_product()
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    prod = x * z
    out = np.ones(prod.shape[:-1], dtype=complex if imaginary else float)
    for j, k in enumerate(kappa):
        t = prod[..., j]
        out = out * (rank1_kernel_imag(k, t) if imaginary else rank1_kernel_real(k, t))
    return out


# ---------------------------------------------------------------------------
# Dunkl operators

def fd_weights(z: float, x, m: int) -> np.ndarray:
    """Finite-difference weights for the m-th derivative at z on nodes x (Fornberg)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for s in range(mn, 0, -1):
                    c[i, s] = c1 * (s * c[i - 1, s - 1] - c5 * c[i - 1, s]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for s in range(mn, 0, -1):
                c[j, s] = (c4 * c[j, s] - s * c[j, s - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def derivative_matrix(nodes, order: int = 4) -> np.ndarray:
    """Dense first-derivative matrix on sorted 1-D nodes, stencil of order+1 nearest nodes."""
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.size
    width = order + 1
    D = np.zeros((n, n))
    for i in range(n):
        lo = min(max(i - width // 2, 0), n - width)
        idx = np.arange(lo, lo + width)
        D[i, idx] = fd_weights(nodes[i], nodes[idx], 1)
    return D


def _apply_axis(mat, arr, axis):
    return np.moveaxis(np.tensordot(mat, arr, axes=([1], [axis])), 0, axis)


def dunkl_operator_T(rs: RootSystem, direction, f: GridFunction, order: int = 4) -> GridFunction:
    """T_xi f = d_xi f + sum_j kappa_j xi_j (f(x) - f(sigma_j x)) / x_j on a tensor grid.

    Within one local grid spacing of a hyperplane the difference quotient is
    replaced by its limit 2 d_j f_odd, f_odd the part of f odd in x_j.
    """
    kappa = rs.require_product()
    grid = f.grid
    if not grid.is_tensor:
        raise GridNotGSymmetric("Dunkl operators need a tensor grid")
    xi = np.broadcast_to(np.asarray(direction, dtype=float), (rs.dimension,))
    ft = f.tensor()
    out = np.zeros(ft.shape, dtype=np.result_type(ft, float))
    for j, (axis, k) in enumerate(zip(grid.axes, kappa)):
        if xi[j] == 0.0:
            continue
        if not np.allclose(axis, -axis[::-1], rtol=0, atol=1e-12):
            raise GridNotGSymmetric(f"axis {j} is not symmetric about 0")
        D = derivative_matrix(axis, order)
        out = out + xi[j] * _apply_axis(D, ft, j)
        if k == 0.0:
            continue
        mirrored = np.flip(ft, axis=j)
        shape = [1] * ft.ndim
        shape[j] = -1
        xj = axis.reshape(shape)
        gap = np.gradient(axis).reshape(shape)
        near = np.abs(xj) < gap
        with np.errstate(divide="ignore", invalid="ignore"):
            quot = (ft - mirrored) / xj
        if np.any(near):
            odd_slope = _apply_axis(D, ft - mirrored, j)
            quot = np.where(near, odd_slope, quot)
        out = out + xi[j] * k * quot
    return GridFunction(grid, out.reshape(-1))


# ---------------------------------------------------------------------------
# transform

def _axis_matrix(kappa, freq, nodes, weights, sign):
    """c_kappa^{-1} E(sign i freq_p, node_q) weight_q."""
    c = 2.0 ** (2 * kappa + 0.5) * special.gamma(kappa + 0.5)
    return rank1_kernel_imag(kappa, sign * np.multiply.outer(freq, nodes)) * weights / c


@dataclass(frozen=True, eq=False)
class SpectralPair:
    space_grid: WeightedGrid
    freq_grid: WeightedGrid
    ck: float
    boundary_tol: float = 1e-10

    @property
    def root_system(self) -> RootSystem:
        return self.space_grid.root_system

    @cached_property
    def forward_matrices(self):
        kappa = self.root_system.require_product()
        return [_axis_matrix(k, xi, x, w, -1.0) for k, xi, x, w in
                zip(kappa, self.freq_grid.axes, self.space_grid.axes, self.space_grid.axis_weights)]

    @cached_property
    def inverse_matrices(self):
        kappa = self.root_system.require_product()
        return [_axis_matrix(k, x, xi, w, 1.0) for k, xi, x, w in
                zip(kappa, self.freq_grid.axes, self.space_grid.axes, self.freq_grid.axis_weights)]

    @cached_property
    def freq_norm2(self) -> np.ndarray:
        return np.sum(self.freq_grid.nodes ** 2, axis=1)

    def freq_function(self, values) -> GridFunction:
        return GridFunction(self.freq_grid, values)

    def space_function(self, values) -> GridFunction:
        return GridFunction(self.space_grid, values)


def make_spectral_pair(rs: RootSystem, box=(-16.0, 16.0), points_per_axis: int = 512,
                       freq_box=None, freq_points: int | None = None, rule: str = "gauss",
                       grading=None, boundary_tol: float = 1e-10) -> SpectralPair:
    """Space and frequency grids (frequency defaults to the space layout)."""
    space = build_grid(rs, box, points_per_axis, grading, rule)
    freq = build_grid(rs, box if freq_box is None else freq_box, freq_points or points_per_axis, grading, rule)
    return SpectralPair(space, freq, ck_closed_form(rs), boundary_tol)


def boundary_fraction(f: GridFunction) -> float:
    """max |f| on the outermost layer of a tensor grid relative to max |f|."""
    vals = np.abs(f.tensor())
    top = vals.max()
    if top == 0.0:
        return 0.0
    edge = 0.0
    for j in range(vals.ndim):
        edge = max(edge, np.take(vals, [0, -1], axis=j).max())
    return float(edge / top)


def _check_boundary(sp, f, check):
    if check and boundary_fraction(f) > sp.boundary_tol:
        raise BoundaryMass(f"function is not negligible at the box edge ({boundary_fraction(f):.2e})")


def _tensor_apply(mats, ft):
    out = ft
    for j, m in enumerate(mats):
        out = _apply_axis(m, out, j)
    return out


def forward_transform(sp: SpectralPair, f: GridFunction, check: bool = True) -> GridFunction:
    """Ff(xi) = c_k^{-1} int E(-i xi, x) f(x) dw(x) on the frequency grid."""
    if f.grid is not sp.space_grid:
        raise GridMismatch("function is not on the space grid")
    _check_boundary(sp, f, check)
    return GridFunction(sp.freq_grid, _tensor_apply(sp.forward_matrices, f.tensor()).reshape(-1))


def inverse_transform(sp: SpectralPair, g: GridFunction, check: bool = True) -> GridFunction:
    """F^{-1}g(x) = c_k^{-1} int E(i xi, x) g(xi) dw(xi) on the space grid."""
    if g.grid is not sp.freq_grid:
        raise GridMismatch("function is not on the frequency grid")
    _check_boundary(sp, g, check)
    return GridFunction(sp.space_grid, _tensor_apply(sp.inverse_matrices, g.tensor()).reshape(-1))


def inverse_at(sp: SpectralPair, g: GridFunction, points) -> np.ndarray:
    """F^{-1}g evaluated at arbitrary points (rows of an (m, N) array)."""
    kappa = sp.root_system.require_product()
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = g.tensor()[None, ...].astype(complex)
    out = np.broadcast_to(out, (pts.shape[0],) + out.shape[1:]).copy()
    for j, (k, xi, w) in enumerate(zip(kappa, sp.freq_grid.axes, sp.freq_grid.axis_weights)):
        rows = _axis_matrix(k, pts[:, j], xi, w, 1.0)
        # contract the leading remaining frequency axis with the per-point row
        out = np.einsum("pi,pi...->p...", rows, out)
    return out


def laplacian_multiplier(sp: SpectralPair, f: GridFunction, check: bool = True) -> GridFunction:
    """Delta f = F^{-1}(-|xi|^2 Ff)."""
    F = forward_transform(sp, f, check)
    return inverse_transform(sp, F * (-sp.freq_norm2), check=False)


def multiplier_apply(sp: SpectralPair, m, f: GridFunction, check: bool = True) -> GridFunction:
    """F^{-1}(m Ff) for a multiplier given as values on the frequency grid."""
    F = forward_transform(sp, f, check)
    mv = m.values if isinstance(m, GridFunction) else np.asarray(m)
    return inverse_transform(sp, F * mv, check=False)
