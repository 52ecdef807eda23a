"""Heat kernel, heat semigroup and Bessel potentials.

The heat kernel uses the mass-one normalization

    h_t(x) = c_k^{-1} (2t)^{-N/2} e^{-|x|^2 / 4t},   h_t(x, y) = tau_x h_t(-y),

so that int h_t(x, y) dw(y) = 1 and f * h_t = c_k F^{-1}(Ff Fh_t) = e^{t Delta} f.
The translated kernel has the closed form

    h_t(x, y) = c_k^{-1} (2t)^{-N/2} e^{-(|x|^2 + |y|^2) / 4t} E(x / sqrt(2t), y / sqrt(2t)),

evaluated per axis with the overflow-free scaled kernel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import SubordinationUnderresolved
from .quadrature import GridFunction, ck_closed_form
from .roots import RootSystem, orbit_distance
from .spectral import (
    SpectralPair,
    forward_transform,
    inverse_transform,
    rank1_kernel_scaled,
)
from .translation import build_radial_rule, radial_translate_oracle, translate, volume_V


def heat_profile(rs: RootSystem, t: float, r):
    """Radial profile of the mass-one heat kernel h_t at |x| = r."""
    r = np.asarray(r, dtype=float)
    return (2 * t) ** (-rs.homogeneous_dimension / 2) * np.exp(-r ** 2 / (4 * t)) / ck_closed_form(rs)


def heat_kernel(rs: RootSystem, t: float, x, y, method: str = "closed", sp: SpectralPair | None = None):
    """h_t(x, y); broadcasts over leading axes of x and y.

    method: "closed" (per-axis closed form), "radial" (radial translation
    formula), or "spectral" (tau_x h_t(-y) through the transform; needs ``sp``
    and returns values on the space grid, y ignored).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    kappa = rs.require_product()
    if method == "spectral":
        if sp is None:
            raise ValueError("spectral evaluation needs a SpectralPair")
        h = sp.space_function(heat_profile(rs, t, np.linalg.norm(sp.space_grid.nodes, axis=1)))
        return translate(sp, h, x, reflected=True).values.real
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if method == "radial":
        rule = build_radial_rule(rs, x.reshape(rs.dimension))
        pts = np.atleast_2d(y)
        return radial_translate_oracle(rule, lambda r: heat_profile(rs, t, r), pts).reshape(y.shape[:-1])
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    out = np.ones(np.broadcast_shapes(x.shape, y.shape)[:-1])
    for j, k in enumerate(kappa):
        xj, yj = x[..., j], y[..., j]
        z = xj * yj / (2 * t)
        c = 2.0 ** (2 * k + 0.5) * special.gamma(k + 0.5)
        # e^{-(x^2+y^2)/4t} E(z) = e^{-(|x|-|y|)^2/4t} e^{-|z|} E(z)
        gauss = np.exp(-(np.abs(xj) - np.abs(yj)) ** 2 / (4 * t))
        out = out * (2 * t) ** (-(k + 0.5)) * gauss * rank1_kernel_scaled(k, z) / c
    return out


@dataclass
class HeatKernelEval:
    """h_t(x, y) for x in a sample and y on a grid (mass-one normalization)."""

    t: float
    x: np.ndarray
    values: np.ndarray
    mass_one: bool = True

    def mass(self, grid) -> np.ndarray:
        return self.values @ grid.weights


def heat_kernel_rows(rs: RootSystem, t: float, xs, grid) -> HeatKernelEval:
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    vals = heat_kernel(rs, t, xs[:, None, :], grid.nodes[None, :, :])
    return HeatKernelEval(t, xs, vals)


def heat_apply(sp: SpectralPair, t: float, f: GridFunction, check: bool = True) -> GridFunction:
    """e^{t Delta} f = F^{-1}(e^{-t |xi|^2} Ff)."""
    F = forward_transform(sp, f, check)
    return inverse_transform(sp, F * np.exp(-t * sp.freq_norm2), check=False)


# ---------------------------------------------------------------------------
# Bessel potentials

def upper_gamma(a: float, x):
    """Upper incomplete gamma Gamma(a, x) for real a and x > 0 (a <= 0 allowed)."""
    x = np.asarray(x, dtype=float)
    if a > 0:
        return special.gammaincc(a, x) * special.gamma(a)
    m = int(np.floor(-a)) + 1
    b = a + m
    if np.isclose(a, round(a)):
        # integer a <= 0: start the recurrence from Gamma(0, x) = E1(x)
        val, cur, m = special.exp1(x), 0.0, m - 1
    else:
        val, cur = special.gammaincc(b, x) * special.gamma(b), b
    # Gamma(s, x) = (Gamma(s+1, x) - x^s e^{-x}) / s
    for _ in range(m):
        cur -= 1.0
        val = (val - x ** cur * np.exp(-x)) / cur
    return val


@dataclass
class BesselPotentialEval:
    """J^{s}(x) = Gamma(s/2)^{-1} int_0^inf e^{-t} h_t(x) t^{s/2} dt/t on the space grid."""

    s: float
    t_nodes: np.ndarray
    t_weights: np.ndarray
    values: GridFunction
    rs: RootSystem = field(repr=False)
    t_min: float = 1e-6

    def radial(self, r):
        return bessel_radial(self.rs, self.s, r, self.t_nodes, self.t_weights, self.t_min)

    def translated(self, x, y):
        """J^{s}(x, y) = tau_x J^{s}(-y) by subordination of the closed-form heat kernel.

        Heat times below the smallest node are dropped; their L^1 contribution
        is at most t_min^{s/2} 2/s / Gamma(s/2).
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        total = 0.0
        for t, w in zip(self.t_nodes, self.t_weights):
            total = total + w * np.exp(-t) * t ** (self.s / 2) * heat_kernel(self.rs, t, x, y)
        return total * special.rgamma(self.s / 2)


def subordination_rule(n: int = 400, t_min: float = 1e-6, t_max: float = 50.0):
    """Composite 16-point Gauss-Legendre rule in log t (about n nodes):
    nodes t_i and weights for int_{t_min}^{t_max} g(t) dt/t."""
    panels = max(1, int(round(n / 16)))
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(np.log(t_min), np.log(t_max), panels + 1)
    half = 0.5 * np.diff(edges)
    u = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half[:, None] * x
    return np.exp(u.reshape(-1)), (half[:, None] * w).reshape(-1)


def bessel_radial(rs: RootSystem, s: float, r, t_nodes, t_weights, t_min: float = 1e-6):
    """J^{s} at radius r; the rule covers [t_min, t_max] and the part below
    t_min is added in closed form."""
    r = np.asarray(r, dtype=float)
    Nh = rs.homogeneous_dimension
    nu = (s - Nh) / 2
    pref = 2.0 ** (-Nh / 2) / ck_closed_form(rs) * special.rgamma(s / 2)
    body = np.exp(-t_nodes[None, :] - r.reshape(-1, 1) ** 2 / (4 * t_nodes[None, :])) \
        * t_nodes[None, :] ** nu @ t_weights
    # int_0^{t0} t^{nu-1} (1 - t) e^{-r^2/4t} dt, using
    # int_0^{t0} t^{m-1} e^{-r^2/4t} dt = (r^2/4)^m Gamma(-m, r^2 / 4 t0)
    t0 = t_min
    rr = r.reshape(-1)
    head = np.empty_like(rr)
    pos = rr > 0
    q = rr[pos] ** 2 / 4
    u = q / t0
    head[pos] = q ** nu * upper_gamma(-nu, u) - q ** (nu + 1) * upper_gamma(-nu - 1, u)
    head[~pos] = t0 ** nu / nu - t0 ** (nu + 1) / (nu + 1) if nu > 0 else np.inf
    return (pref * (body + head)).reshape(r.shape)


def bessel_closed_form(rs: RootSystem, s: float, r):
    """J^{s}(r) = c_k^{-1} 2^{-N/2} Gamma(s/2)^{-1} 2 (r/2)^nu K_nu(r), nu = (s - N)/2."""
    r = np.asarray(r, dtype=float)
    Nh = rs.homogeneous_dimension
    nu = (s - Nh) / 2
    return 2.0 ** (-Nh / 2) / ck_closed_form(rs) * special.rgamma(s / 2) * 2 * (r / 2) ** nu * special.kv(nu, r)


def bessel_potential(sp: SpectralPair, s: float, n_nodes: int = 400, t_min: float = 1e-6,
                     t_max: float = 50.0, tol: float = 1e-4) -> BesselPotentialEval:
    """Bessel potential kernel on the space grid by subordination of heat kernels.

    Raises SubordinationUnderresolved if doubling the node count moves any
    value by more than ``tol`` (relative to max |J|).
    """
    if s <= 0:
        raise ValueError("s must be positive")
    rs = sp.root_system
    r = np.linalg.norm(sp.space_grid.nodes, axis=1)
    tn, tw = subordination_rule(n_nodes, t_min, t_max)
    vals = bessel_radial(rs, s, r, tn, tw, t_min)
    tn2, tw2 = subordination_rule(2 * n_nodes, t_min, t_max)
    vals2 = bessel_radial(rs, s, r, tn2, tw2, t_min)
    finite = np.isfinite(vals)
    scale = np.max(np.abs(vals[finite]))
    if np.max(np.abs(vals[finite] - vals2[finite])) > tol * scale:
        raise SubordinationUnderresolved("Bessel potential not resolved by the subordination rule")
    return BesselPotentialEval(s, tn, tw, sp.space_function(vals), rs, t_min)


def bessel_multiplier(sp: SpectralPair, J: BesselPotentialEval) -> GridFunction:
    """c_k F J^{s}: the multiplier of f -> f * J^{s}, equal to (1+|xi|^2)^{-s/2}."""
    return forward_transform(sp, J.values, check=False) * sp.ck


def bessel_small_x_profile(rs: RootSystem, s: float, r):
    """Comparison function for J^{s} near the origin: r^{s-N}, -ln r, or 1."""
    r = np.asarray(r, dtype=float)
    Nh = rs.homogeneous_dimension
    if np.isclose(s, Nh):
        return -np.log(r)
    if s < Nh:
        return r ** (s - Nh)
    return np.ones_like(r)


# ---------------------------------------------------------------------------
# Gaussian bounds

def gaussian_envelope(rs: RootSystem, x, y, t: float, c: float = 0.125):
    """(1 + |x-y|/t)^{-2} V(x, y, sqrt t)^{-1} e^{-c d(x,y)^2 / t}, rows of x and y paired."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    dist = np.linalg.norm(x - y, axis=1)
    d = np.array([orbit_distance(rs, a, b) for a, b in zip(x, y)])
    V = volume_V(rs, x, y, np.sqrt(t))
    return (1 + dist / t) ** -2 / V * np.exp(-c * d ** 2 / t)


def heat_bound_ratio(rs: RootSystem, t_grid, pairs, c: float = 0.125, lipschitz_pairs=None) -> dict:
    """Fitted constants C in the Gaussian upper bound and its Lipschitz variant.

    ``pairs`` is a (m, 2, N) array of (x, y). ``lipschitz_pairs`` is an
    optional (m, 3, N) array of (x, y, y') with |y - y'| <= sqrt t assumed;
    pairs violating that are skipped per t.
    """
    pairs = np.asarray(pairs, dtype=float)
    out = {"c": c, "per_t": {}}
    for t in t_grid:
        x, y = pairs[:, 0], pairs[:, 1]
        h = heat_kernel(rs, t, x, y)
        env = gaussian_envelope(rs, x, y, t, c)
        entry = {"C": float(np.max(h / env)), "min_h": float(np.min(h))}
        if lipschitz_pairs is not None:
            lp = np.asarray(lipschitz_pairs, dtype=float)
            x, y, y2 = lp[:, 0], lp[:, 1], lp[:, 2]
            step = np.linalg.norm(y - y2, axis=1)
            ok = step <= np.sqrt(t)
            if np.any(ok):
                diff = np.abs(heat_kernel(rs, t, x[ok], y[ok]) - heat_kernel(rs, t, x[ok], y2[ok]))
                env = gaussian_envelope(rs, x[ok], y[ok], t, c) * step[ok] / np.sqrt(t)
                with np.errstate(divide="ignore", invalid="ignore"):
                    ratio = np.where(step[ok] > 0, diff / env, 0.0)
                entry["C_lipschitz"] = float(np.max(ratio))
        out["per_t"][float(t)] = entry
    out["C"] = max(e["C"] for e in out["per_t"].values())
    if lipschitz_pairs is not None:
        out["C_lipschitz"] = max(e.get("C_lipschitz", 0.0) for e in out["per_t"].values())
    return out


def largest_admissible_c(rs: RootSystem, t_grid, pairs, threshold: float, cs=None) -> float:
    """Largest c on a grid for which the fitted Gaussian-bound constant stays below ``threshold``."""
    cs = np.linspace(0.025, 0.25, 10) if cs is None else cs
    best = 0.0
    for c in cs:
        if heat_bound_ratio(rs, t_grid, pairs, c)["C"] <= threshold:
            best = max(best, float(c))
    return best
