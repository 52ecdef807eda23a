"""Dunkl translations, the radial translation formula, and convolutions."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import GridMismatch
from .quadrature import GridFunction
from .roots import RootSystem, ball_volume, ball_volumes_product, orbit_distance
from .spectral import (
    SpectralPair,
    dunkl_kernel_E,
    forward_transform,
    inverse_at,
    inverse_transform,
)


def _phase(sp: SpectralPair, x):
    """E(i xi, x) on the frequency grid."""
    x = np.asarray(x, dtype=float).reshape(sp.root_system.dimension)
    return dunkl_kernel_E(sp.root_system, sp.freq_grid.nodes, x, imaginary=True)


def translate_spectrum(sp: SpectralPair, F: GridFunction, x, check: bool = True) -> GridFunction:
    """tau_x f on the space grid from Ff given on the frequency grid."""
    return inverse_transform(sp, F * _phase(sp, x), check=check)


def translate(sp: SpectralPair, f: GridFunction, x, reflected: bool = False,
              check: bool = True) -> GridFunction:
    """tau_x f(y) = c_k^{-1} int E(i xi, x) E(i xi, y) Ff(xi) dw(xi) at grid y.

    With ``reflected`` the returned function is y -> tau_x f(-y).
    """
    out = translate_spectrum(sp, forward_transform(sp, f, check), x, check=False)
    if reflected:
        out = reflect_function(out)
    return out


def reflect_function(f: GridFunction) -> GridFunction:
    """y -> f(-y) on a grid symmetric about the origin."""
    grid = f.grid
    if not grid.is_tensor or not all(np.allclose(a, -a[::-1], rtol=0, atol=1e-12) for a in grid.axes):
        raise GridMismatch("grid is not symmetric about the origin")
    return GridFunction(grid, np.flip(f.tensor()).reshape(-1))


# ---------------------------------------------------------------------------
# radial formula

@dataclass(frozen=True)
class RadialTranslationRule:
    """Discrete approximation of the probability measure mu_x in

        tau_x f(-y) = int f~(A(x, y, eta)) dmu_x(eta),
        A(x, y, eta) = sqrt(|x|^2 + |y|^2 - 2 <y, eta>),

    for radial f(x) = f~(|x|).
    """

    base_point: np.ndarray
    nodes: np.ndarray
    masses: np.ndarray

    def A(self, y) -> np.ndarray:
        """A(x, y, eta) for points y (m, N) against every node: shape (m, n_nodes)."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        sq = self.base_point @ self.base_point + np.sum(y * y, axis=1)[:, None] - 2.0 * y @ self.nodes.T
        return np.sqrt(np.maximum(sq, 0.0))


def _axis_measure(kappa: float, xj: float, n: int):
    """Nodes/masses of the rank one measure: eta = s x with density
    c (1+s)(1-s^2)^(kappa-1) on [-1, 1], c = Gamma(kappa+1/2) / (sqrt(pi) Gamma(kappa))."""
    if kappa == 0.0 or xj == 0.0:
        return np.array([xj]), np.array([1.0])
    s, w = special.roots_jacobi(n, kappa - 1.0, kappa)
    c = special.gamma(kappa + 0.5) / (np.sqrt(np.pi) * special.gamma(kappa))
    return s * xj, w * c


def build_radial_rule(rs: RootSystem, x, nodes_per_axis: int = 64) -> RadialTranslationRule:
    """Product of the rank one measures (the radial formula factorizes on product systems)."""
    kappa = rs.require_product()
    x = np.asarray(x, dtype=float).reshape(rs.dimension)
    parts = [_axis_measure(k, xj, nodes_per_axis) for k, xj in zip(kappa, x)]
    grids = np.meshgrid(*[p[0] for p in parts], indexing="ij")
    masses = np.meshgrid(*[p[1] for p in parts], indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=1)
    mass = np.prod(np.stack([m.reshape(-1) for m in masses], axis=1), axis=1)
    return RadialTranslationRule(x, nodes, mass)


def radial_translate_oracle(rule: RadialTranslationRule, radial_profile, points) -> np.ndarray:
    """tau_x f(-y) at the given points y, for f(x) = radial_profile(|x|).

    ``points`` is an (m, N) array or a grid (its nodes are used).
    """
    pts = points.nodes if hasattr(points, "nodes") else points
    return np.asarray(radial_profile(rule.A(pts))) @ rule.masses


# ---------------------------------------------------------------------------
# convolution and support

def convolve(sp: SpectralPair, f: GridFunction, g: GridFunction, check: bool = True) -> GridFunction:
    """f * g = c_k F^{-1}(Ff Fg)."""
    F = forward_transform(sp, f, check)
    G = forward_transform(sp, g, check)
    return inverse_transform(sp, F * G * sp.ck, check=False)


def convolve_direct(sp: SpectralPair, f: GridFunction, g: GridFunction, x) -> complex:
    """int f(y) tau_x g(-y) dw(y) at one point x (quadrature cross-check)."""
    tg = translate(sp, g, x, reflected=True)
    return np.sum(f.values * tg.values * sp.space_grid.weights)


def support_check(sp: SpectralPair, f: GridFunction, r: float, x, tol: float = 1e-6,
                  margin: float | None = None) -> dict:
    """Check that y -> tau_x f(-y) is negligible outside the orbit of B(x, r + margin).

    ``margin`` defaults to two grid spacings. Values are compared with tol |f|_inf.
    """
    x = np.asarray(x, dtype=float).reshape(sp.root_system.dimension)
    h = sp.space_grid.spacing() if margin is None else margin
    margin = 2.0 * h if margin is None else margin
    vals = translate(sp, f, x, reflected=True)
    dist = orbit_distance(sp.root_system, x, sp.space_grid.nodes)
    outside = dist > r + margin
    fmax = float(np.max(np.abs(f.values)))
    viol = float(np.max(np.abs(vals.values[outside]), initial=0.0)) / fmax if fmax > 0 else 0.0
    return {
        "base_point": x.tolist(),
        "radius": float(r),
        "margin": float(margin),
        "outside_nodes": int(outside.sum()),
        "max_violation": viol,
        "tol": tol,
        "passed": bool(viol <= tol),
    }


# ---------------------------------------------------------------------------
# ball volumes reused by kernel bounds

@lru_cache(maxsize=65536)
def _cached_ball(rs: RootSystem, center: tuple, r: float) -> float:
    return ball_volume(rs, np.array(center), r)


def ball_volumes(rs: RootSystem, centers, r: float) -> np.ndarray:
    """w(B(c, r)) for each row c, cached on rounded centers."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if rs.is_product and rs.dimension <= 2:
        return ball_volumes_product(rs, centers, float(r))
    return np.array([_cached_ball(rs, tuple(np.round(c, 12)), float(r)) for c in centers])


def volume_V(rs: RootSystem, x, y, t: float) -> np.ndarray:
    """V(x, y, t) = max(w(B(x, t)), w(B(y, t))); broadcasts y over rows."""
    vx = ball_volumes(rs, x, t)
    vy = ball_volumes(rs, y, t)
    return np.maximum(vx, vy)


def translate_at(sp: SpectralPair, f: GridFunction, x, points) -> np.ndarray:
    """tau_x f at arbitrary points."""
    F = forward_transform(sp, f)
    return inverse_at(sp, F * _phase(sp, x), points)


# ---------------------------------------------------------------------------
# rank one translation of general functions

_RANK1_RULES: dict = {}


def _jacobi_rule(n: int, alpha: float, beta: float):
    key = (n, round(alpha, 14), round(beta, 14))
    if key not in _RANK1_RULES:
        if alpha == 0.0 and beta == 0.0:
            _RANK1_RULES[key] = np.polynomial.legendre.leggauss(n)
        else:
            _RANK1_RULES[key] = special.roots_jacobi(n, alpha, beta)
    return _RANK1_RULES[key]


def rank1_translate(kappa: float, f, x: float, y, support=(0.0, np.inf), breaks=(),
                    ratio: float = 1.25, n: int = 16) -> np.ndarray:
    """tau_x f(y) in rank one for a general (not necessarily even) f.

        tau_x f(y) = c int_{-1}^{1} [f_e(A) + f_o(A) (x + y) / A] (1 - t)(1 - t^2)^(kappa-1) dt,
        A = sqrt(x^2 + y^2 - 2 x y t),  c = Gamma(kappa+1/2) / (sqrt(pi) Gamma(kappa)).

    ``f`` may return extra trailing axes (several functions sharing breakpoints);
    the result then has shape y.shape + those axes.

    The integral is taken in A over [|x|-|y||, |x|+|y|] intersected with
    ``support`` (|f| vanishes outside it), on one set of geometric panels shared
    by all y. Panels touching the ends of [Q, P] use Gauss-Jacobi rules that
    absorb the power singularities there.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x = float(x)
    if kappa == 0.0 or x == 0.0:
        return np.asarray(f(x + y))
    extra = np.shape(f(np.array([abs(x) + 1.0])))[1:]
    out = np.zeros(y.shape + extra, dtype=complex)
    nz = y != 0.0
    out[~nz] = f(np.array([x]))[0]
    yy = y[nz]
    ax, ay = abs(x), np.abs(yy)
    Q, P = np.abs(ax - ay), ax + ay
    s_lo, s_hi = float(support[0]), float(support[1])
    top = min(s_hi, float(P.max()))
    bottom = max(s_lo, float(Q.min()))
    if top <= bottom:
        return _maybe_real(out, f, x)
    start = bottom if bottom > 0 else top / 64
    pts = sorted({start, top, *[b for b in breaks if start < b < top]})
    edges = [np.geomspace(a, b, max(1, int(np.ceil(np.log(b / a) / np.log(ratio)))) + 1)[:-1]
             for a, b in zip(pts[:-1], pts[1:])]
    edges = np.concatenate(([[0.0]] if bottom == 0 else []) + edges + [[top]])
    # clip panels per y: shape (m, panels)
    lo_y = np.maximum(Q, s_lo)[:, None]
    hi_y = np.minimum(P, s_hi)[:, None]
    p0 = np.clip(edges[:-1][None, :], lo_y, hi_y)
    p1 = np.clip(edges[1:][None, :], lo_y, hi_y)
    live = p1 > p0
    _merge_end_slivers(p0, p1, live)
    xy = x * yy
    pos = (xy > 0)[:, None]
    # exponent of (A - Q); at Q = 0 the factor (A + Q) and the Jacobian A join it
    e_base = np.where(pos, kappa, kappa - 1.0)
    e_left = np.where((Q == 0)[:, None], 2.0 * e_base + 1.0, e_base)
    e_right = np.where(pos, kappa - 1.0, kappa)     # exponent of (P - A)
    at_q = live & np.isclose(p0, Q[:, None], rtol=0, atol=0) & (Q[:, None] >= s_lo)
    at_p = live & np.isclose(p1, P[:, None], rtol=0, atol=0) & (P[:, None] <= s_hi)
    beta = np.where(at_q, e_left, 0.0)
    alpha = np.where(at_p, e_right, 0.0)
    c = special.gamma(kappa + 0.5) / (np.sqrt(np.pi) * special.gamma(kappa))
    total = np.zeros(yy.shape + extra, dtype=complex)
    pad = (slice(None), slice(None)) + (None,) * len(extra)
    combos = {(a, b) for a, b in zip(alpha[live].tolist(), beta[live].tolist())}
    for a, b in combos:
        sel = live & (alpha == a) & (beta == b)
        iy, ip = np.nonzero(sel)
        s, w = _jacobi_rule(n, a, b)
        lo, hi = p0[iy, ip], p1[iy, ip]
        half = 0.5 * (hi - lo)
        A = lo[:, None] + (s + 1)[None, :] * half[:, None]
        wq = w[None, :] * half[:, None] ** (1.0 + a + b)
        Qi, Pi, xyi = Q[iy][:, None], P[iy][:, None], np.abs(xy[iy])[:, None]
        el, er = e_left[iy, 0][:, None], e_right[iy, 0][:, None]
        # smooth remainder after the Jacobi factors are divided out
        ql = np.where(Qi == 0, 0.0, el)
        dens = ((A + Qi) ** ql * (Pi + A) ** er / (2 * xyi) ** (2 * kappa - 1)
                * (A - Qi) ** (el - b) * (Pi - A) ** (er - a))
        fp, fm = f(A), f(-A)
        odd_factor = ((x + yy[iy])[:, None] / A)[pad]
        g = 0.5 * (fp + fm) + 0.5 * (fp - fm) * odd_factor
        jac = np.where(Qi == 0, 1.0, A) / xyi
        vals = np.sum((c * dens * jac * wq)[pad] * g, axis=1)
        np.add.at(total, iy, vals)
    out[nz] = total
    return _maybe_real(out, f, x)


def _maybe_real(out, f, x):
    probe = np.asarray(f(np.array([abs(x) + 1.0])))
    return out if np.iscomplexobj(probe) else out.real


def _merge_end_slivers(p0, p1, live):
    """Fold a clipped end panel shorter than half its neighbour into the neighbour,
    so no Gauss-Legendre panel sits right next to an endpoint singularity."""
    for left in (True, False):
        rows = np.flatnonzero(live.sum(axis=1) >= 2)
        if rows.size == 0:
            return
        lv = live[rows]
        if left:
            i_end = np.argmax(lv, axis=1)
            i_next = i_end + 1
        else:
            i_end = lv.shape[1] - 1 - np.argmax(lv[:, ::-1], axis=1)
            i_next = i_end - 1
        short = (p1[rows, i_end] - p0[rows, i_end]) < 0.5 * (p1[rows, i_next] - p0[rows, i_next])
        r, ie, inx = rows[short], i_end[short], i_next[short]
        if left:
            p1[r, ie] = p1[r, inx]
        else:
            p0[r, ie] = p0[r, inx]
        live[r, inx] = False
        p0[r, inx] = p1[r, inx]


