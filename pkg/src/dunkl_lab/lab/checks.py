"""Verification checks, grouped into suites.

Every check is a function of the scenario alone and returns a CheckResult;
randomness comes from ``families.rng_for(scenario.seed, name)``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .. import cz, heat, kernels, spectral, translation
from ..errors import NoLimitKernel
from ..quadrature import GridFunction, build_grid
from ..roots import axis_density, preset
from . import classical as cl
from . import families as fam
from .config import Scenario


@dataclass
class CheckResult:
    name: str
    suite: str
    anchor: str
    params: dict
    measured: dict
    fitted: dict
    tol: dict
    passed: bool
    error: str | None = None
    series: list = field(default_factory=list)
    seconds: float = 0.0

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "name": self.name,
            "suite": self.suite,
            "anchor": self.anchor,
            "params": self.params,
            "measured": self.measured,
            "fitted": self.fitted,
            "tol": self.tol,
            "passed": self.passed,
            "error": self.error,
            "series": self.series,
        }
        if timing:
            d["seconds"] = self.seconds
        return d


@dataclass(frozen=True)
class CheckSpec:
    name: str
    suite: str
    anchor: str
    fn: object
    quick: bool = False


REGISTRY: dict = {}


def check(name, anchor, quick=False):
    suite = name.split(".")[0]

    def deco(fn):
        REGISTRY[name] = CheckSpec(name, suite, anchor, fn, quick)
        return fn
    return deco


def selected_checks(sc: Scenario) -> list:
    return sorted((c for c in REGISTRY.values() if c.suite in sc.suites and (c.quick or not sc.quick)),
                  key=lambda c: c.name)


def run_check(spec: CheckSpec, sc: Scenario) -> CheckResult:
    t0 = time.perf_counter()
    try:
        params, measured, fitted, tol, passed, *rest = spec.fn(sc)
        res = CheckResult(spec.name, spec.suite, spec.anchor, _clean(params), _clean(measured),
                          _clean(fitted), _clean(tol), bool(passed), None, _clean(rest[0]) if rest else [])
    except Exception as exc:  # recorded per check, never aborts the run
        res = CheckResult(spec.name, spec.suite, spec.anchor, {}, {}, {}, {}, False,
                          f"{type(exc).__name__}: {exc}")
    res.seconds = time.perf_counter() - t0
    return res


def _clean(v):
    """Plain JSON types; floats rounded to 12 significant digits."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_clean(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not np.isfinite(v):
            return str(v)
        return float(f"{v:.12g}")
    if isinstance(v, complex):
        return [_clean(v.real), _clean(v.imag)]
    return v


# ---------------------------------------------------------------------------
# shared set-up

@lru_cache(maxsize=32)
def _pair(name, k, points, box, freq_box=None, rule="gauss"):
    rs = preset(name, k)
    fb = None if freq_box is None else (-freq_box, freq_box)
    return spectral.make_spectral_pair(rs, (-box, box), points, freq_box=fb, rule=rule)


def _k2(sc):
    return (float(sc.k), float(sc.k))


def _rel_l2(a, b, w):
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2 * w) / np.sum(np.abs(b) ** 2 * w)))


def _classical_pair(sc):
    return _pair("z2", 0.0, sc.points, sc.box)


def _n(sc, full, quick):
    return quick if sc.quick else full


# ---------------------------------------------------------------------------
# transform suite

def _classical_family(sc, tag):
    return fam.packet_family(sc.seed, tag, _n(sc, 20, 5))


@check("transform.classical_transform", "k=0 reduction: Dunkl transform is the Fourier transform", quick=True)
def _classical_transform(sc):
    sp = _classical_pair(sc)
    xi, wf = sp.freq_grid.nodes[:, 0], sp.freq_grid.weights
    errs = [_rel_l2(spectral.forward_transform(sp, f.sample(sp.space_grid)).values, cl.fourier(f, xi), wf)
            for f in _classical_family(sc, "classical.transform")]
    tol = sc.tol("transform.classical_transform", 1e-8)
    return {"functions": len(errs), "points": sc.points}, {"max_rel_l2": max(errs)}, {}, {"rel_l2": tol}, max(errs) <= tol


@check("transform.classical_translation", "k=0 reduction: Dunkl translation is f(x + y)", quick=True)
def _classical_translation(sc):
    sp = _classical_pair(sc)
    rng = fam.rng_for(sc.seed, "classical.translation.points")
    x, w = sp.space_grid.nodes[:, 0], sp.space_grid.weights
    errs = []
    for f in _classical_family(sc, "classical.translation"):
        s = float(rng.uniform(-3, 3))
        errs.append(_rel_l2(translation.translate(sp, f.sample(sp.space_grid), s).values,
                            cl.translate(f, s, x), w))
    tol = sc.tol("transform.classical_translation", 1e-8)
    return {"functions": len(errs)}, {"max_rel_l2": max(errs)}, {}, {"rel_l2": tol}, max(errs) <= tol


@check("transform.classical_convolution", "k=0 reduction: Dunkl convolution is ordinary convolution", quick=True)
def _classical_convolution(sc):
    sp = _classical_pair(sc)
    x, w = sp.space_grid.nodes[:, 0], sp.space_grid.weights
    F = _classical_family(sc, "classical.convolution.f")
    G = _classical_family(sc, "classical.convolution.g")
    errs = [_rel_l2(translation.convolve(sp, f.sample(sp.space_grid), g.sample(sp.space_grid)).values,
                    cl.convolve(f, g, x), w) for f, g in zip(F, G)]
    tol = sc.tol("transform.classical_convolution", 1e-8)
    return {"functions": len(errs)}, {"max_rel_l2": max(errs)}, {}, {"rel_l2": tol}, max(errs) <= tol


def _plancherel_cases(sc):
    ks = sorted({0.0, 0.5, 1.0, 2.5, float(sc.k)})
    return [("z2", k) for k in ks] + [("z2^2", (1.0, 1.0))] + ([("z2^2", _k2(sc))] if sc.k != 1.0 else [])


def _family_for(sc, name, tag, n):
    if name == "z2":
        return fam.packet_family(sc.seed, tag, n)
    return fam.packet_family(sc.seed, tag, n, dim=2, spread=1.0, max_freq=0.5, widths=(0.8, 1.2))


def _pair_for(sc, name, k):
    if name == "z2":
        return _pair("z2", k, sc.points, sc.box)
    return _pair("z2^2", k, sc.points_2d, sc.box_2d, sc.box_2d)


@check("transform.plancherel", "Plancherel: the transform is an isometry of L^2(dw)", quick=True)
def _plancherel(sc):
    out, worst = {}, 0.0
    for name, k in _plancherel_cases(sc):
        sp = _pair_for(sc, name, k)
        dev = 0.0
        for f in _family_for(sc, name, "plancherel", _n(sc, 10, 3)):
            fv = f.sample(sp.space_grid)
            F = spectral.forward_transform(sp, fv)
            r = np.sqrt(np.sum(np.abs(F.values) ** 2 * sp.freq_grid.weights)
                        / np.sum(np.abs(fv.values) ** 2 * sp.space_grid.weights))
            dev = max(dev, abs(r - 1))
        out[f"{name} k={k}"] = dev
        worst = max(worst, dev)
    tol = sc.tol("transform.plancherel", 1e-6)
    return {"cases": list(out)}, {"max_norm_ratio_deviation": worst, "per_case": out}, {}, {"ratio": tol}, worst <= tol


@check("transform.inversion", "inversion: F^{-1} F = id on band-limited functions", quick=True)
def _inversion(sc):
    out = {}
    for name, k in (("z2", float(sc.k)), ("z2^2", _k2(sc))):
        sp = _pair_for(sc, name, k)
        errs = []
        for f in _family_for(sc, name, "inversion", _n(sc, 10, 3)):
            fv = f.sample(sp.space_grid)
            back = spectral.inverse_transform(sp, spectral.forward_transform(sp, fv), check=False)
            errs.append(_rel_l2(back.values, fv.values, sp.space_grid.weights))
        out[name] = max(errs)
    tol = sc.tol("transform.inversion", 1e-6)
    return {"k": sc.k}, {"max_rel_l2": out}, {}, {"rel_l2": tol}, max(out.values()) <= tol


@check("transform.kernel_bound", "|E(i xi, x)| <= 1 for real xi, x", quick=True)
def _kernel_bound(sc):
    out = {}
    for name, k in (("z2", float(sc.k)), ("z2^2", _k2(sc))):
        rs = preset(name, k)
        rng = fam.rng_for(sc.seed, f"kernel_bound.{name}")
        x = rng.uniform(-20, 20, (10000, rs.dimension))
        xi = rng.uniform(-20, 20, (10000, rs.dimension))
        out[name] = float(np.abs(spectral.dunkl_kernel_E(rs, xi, x, imaginary=True)).max())
    tol = sc.tol("transform.kernel_bound", 1e-9)
    return {"pairs": 10000, "range": 20}, {"max_abs_E": out}, {}, {"excess": tol}, max(out.values()) <= 1 + tol


@check("transform.kernel_system_residual", "E(., i lam) solves T_j f = i lam_j f, f(0) = 1", quick=True)
def _kernel_residual(sc):
    out = {}
    cases = (("z2", float(sc.k), 400, ([0.5], [1.0], [-2.0])),
             ("z2^2", _k2(sc), 120, ([0.5, -1.0], [1.0, 0.7])))
    for name, k, n, lams in cases:
        rs = preset(name, k)
        g = build_grid(rs, (-3.0, 3.0), n)
        res = 0.0
        for lam in lams:
            lam = np.array(lam)
            f = GridFunction(g, spectral.dunkl_kernel_E(rs, lam, g.nodes, imaginary=True))
            at0 = spectral.dunkl_kernel_E(rs, lam, np.zeros(rs.dimension), imaginary=True)
            res = max(res, float(abs(at0 - 1)))
            for j in range(rs.dimension):
                e = np.zeros(rs.dimension)
                e[j] = 1.0
                T = spectral.dunkl_operator_T(rs, e, f, order=6)
                res = max(res, float(np.max(np.abs(T.values - 1j * lam[j] * f.values)) / max(1.0, np.abs(lam).max())))
        out[name] = res
    tol = sc.tol("transform.kernel_system_residual", 1e-5)
    return {"grid_box": 3.0, "fd_order": 6}, {"max_residual": out}, {}, {"residual": tol}, max(out.values()) <= tol


def _lipschitz_sup(rs, m):
    r = np.geomspace(1e-3, 8, m)
    if rs.dimension == 1:
        pts = np.concatenate([-r, r])[:, None]
    else:
        ang = np.arange(m // 4) * 2 * np.pi / (m // 4)
        pts = (r[:, None, None] * np.stack([np.cos(ang), np.sin(ang)], -1)[None]).reshape(-1, 2)
    i = np.arange(len(pts))
    X, Z = pts[np.repeat(i, len(pts))], pts[np.tile(i, len(pts))]
    v = np.abs(spectral.dunkl_kernel_E(rs, Z, X, imaginary=True) - 1)
    return float(np.max(v / (np.linalg.norm(X, axis=1) * np.linalg.norm(Z, axis=1))))


@check("transform.kernel_lipschitz_drift", "|E(i xi, x) - 1| <= C |x| |xi|", quick=True)
def _kernel_drift(sc):
    out, drift = {}, 0.0
    for name, k in (("z2", float(sc.k)), ("z2^2", _k2(sc))):
        rs = preset(name, k)
        c1, c2 = _lipschitz_sup(rs, 40), _lipschitz_sup(rs, 80)
        out[name] = {"coarse": c1, "refined": c2}
        drift = max(drift, abs(c2 / c1 - 1))
    tol = sc.tol("transform.kernel_lipschitz_drift", 0.10)
    return {"radii": [1e-3, 8]}, {"drift": drift}, out, {"drift": tol}, drift <= tol


def _support_family(grid, seed, R, n=10):
    rng = fam.rng_for(seed, "support")
    out = []
    for _ in range(n):
        v = np.zeros(grid.size)
        for _ in range(2):
            r = rng.uniform(0.7, 0.9) * R
            c = rng.normal(size=grid.dim)
            c *= rng.uniform(0, R - r) / np.linalg.norm(c)
            v += rng.normal() * fam.bump(grid.nodes, c, r)
        out.append(GridFunction(grid, v))
    return out


def _support(sc, name, k, n, fb):
    R = 3.0
    sp = _pair(name, k, n, 8.0, fb)
    rs = sp.root_system
    F = _support_family(sp.space_grid, sc.seed, R, _n(sc, 10, 3))
    xs = fam.rng_for(sc.seed, "support.base").uniform(-3, 3, (5, rs.dimension))
    worst = 0.0
    for f in F:
        for x in xs:
            worst = max(worst, translation.support_check(sp, f, R, x)["max_violation"])
    tol = sc.tol(f"transform.support_{'rank1' if name == 'z2' else 'z2sq'}", 1e-6)
    params = {"radius": R, "points": n, "box": 8.0, "freq_box": fb, "base_points": xs.tolist(), "functions": len(F)}
    return params, {"max_violation_rel_sup": worst}, {}, {"rel_sup": tol}, worst <= tol


@check("transform.support_rank1", "tau_x f(-y) vanishes off the orbit of B(x, r)", quick=True)
def _support_rank1(sc):
    return _support(sc, "z2", float(sc.k), 512, 64.0)


@check("transform.support_z2sq", "tau_x f(-y) vanishes off the orbit of B(x, r)")
def _support_z2sq(sc):
    return _support(sc, "z2^2", _k2(sc), 384, 48.0)


# ---------------------------------------------------------------------------
# heat suite

@check("heat.classical_heat", "k=0 reduction: heat semigroup is Gaussian convolution", quick=True)
def _classical_heat(sc):
    sp = _classical_pair(sc)
    x, w = sp.space_grid.nodes[:, 0], sp.space_grid.weights
    rng = fam.rng_for(sc.seed, "classical.heat.t")
    errs = []
    for f in _classical_family(sc, "classical.heat"):
        t = float(rng.choice([0.1, 0.5, 1.0, 2.0]))
        errs.append(_rel_l2(heat.heat_apply(sp, t, f.sample(sp.space_grid)).values, cl.heat(f, t, x), w))
    tol = sc.tol("heat.classical_heat", 1e-6)
    return {"functions": len(errs)}, {"max_rel_l2": max(errs)}, {}, {"rel_l2": tol}, max(errs) <= tol


def _heat_cases(sc):
    return (("z2", float(sc.k), sc.points), ("z2^2", _k2(sc), sc.points_2d))


def _heat_grid(name, k, n, t):
    L = 4.0 + 12.0 * np.sqrt(t)
    return build_grid(preset(name, k), (-L, L), n)


@check("heat.mass", "int h_t(x, y) dw(y) = 1", quick=True)
def _heat_mass(sc):
    out = {}
    for name, k, n in _heat_cases(sc):
        rs = preset(name, k)
        xs = fam.rng_for(sc.seed, "heat.points").uniform(-3, 3, (5, rs.dimension))
        for t in (0.1, 1.0, 10.0):
            g = _heat_grid(name, k, n, t)
            out[f"{name} t={t}"] = float(np.abs(heat.heat_kernel_rows(rs, t, xs, g).mass(g) - 1).max())
    worst = max(out.values())
    tol = sc.tol("heat.mass", 1e-5)
    return {"t": [0.1, 1.0, 10.0]}, {"max_mass_error": worst, "per_case": out}, {}, {"mass": tol}, worst <= tol


@check("heat.symmetry_positivity", "h_t(x, y) = h_t(y, x) > 0", quick=True)
def _heat_sym(sc):
    sym, neg = 0.0, 0.0
    for name, k, _ in _heat_cases(sc):
        rs = preset(name, k)
        rng = fam.rng_for(sc.seed, f"heat.sym.{name}")
        x = rng.uniform(-5, 5, (2000, rs.dimension))
        y = rng.uniform(-5, 5, (2000, rs.dimension))
        for t in (0.1, 1.0, 10.0):
            a = heat.heat_kernel(rs, t, x, y)
            b = heat.heat_kernel(rs, t, y, x)
            top = np.abs(a).max()
            sym = max(sym, float(np.abs(a - b).max() / top))
            neg = max(neg, float(max(0.0, -a.min()) / top))
    tol = sc.tol("heat.symmetry_positivity", 1e-8)
    return {"pairs": 2000}, {"asymmetry": sym, "negativity": neg}, {}, {"rel": tol}, sym <= tol and neg <= tol


@check("heat.semigroup", "h_t * h_s = h_{t+s}", quick=True)
def _heat_semigroup(sc):
    worst = 0.0
    for name, k, n in _heat_cases(sc):
        rs = preset(name, k)
        rng = fam.rng_for(sc.seed, f"heat.semigroup.{name}")
        xs = rng.uniform(-3, 3, (5, rs.dimension))
        ys = rng.uniform(-3, 3, (5, rs.dimension))
        for t, s in ((0.5, 0.5), (1.0, 2.0), (0.3, 3.0)):
            g = _heat_grid(name, k, n, t + s)
            A = heat.heat_kernel(rs, t, xs[:, None, :], g.nodes[None])
            B = heat.heat_kernel(rs, s, g.nodes[None], ys[:, None, :])
            comp = np.einsum("in,in,n->i", A, B, g.weights)
            worst = max(worst, float(np.abs(comp / heat.heat_kernel(rs, t + s, xs, ys) - 1).max()))
    tol = sc.tol("heat.semigroup", 1e-7)
    return {"pairs_ts": [[0.5, 0.5], [1, 2], [0.3, 3]]}, {"max_rel_error": worst}, {}, {"rel": tol}, worst <= tol


def gaussian_bound_sample(rs, t, m):
    """(x, y) pairs around the origin on a polar lattice scaled by sqrt(t); nested in m."""
    d = rs.dimension
    st = np.sqrt(t)
    rho = np.geomspace(0.05, 12, 2 * m + 1)
    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        a = np.arange(4 * m) * np.pi / (2 * m)
        dirs = np.stack([np.cos(a), np.sin(a)], 1)
    U = (rho[:, None, None] * dirs[None]).reshape(-1, d) * st
    coarse_dirs = dirs[::max(1, len(dirs) // 4)]
    X0 = np.concatenate([np.zeros((1, d)), (st * np.array([0.5, 1.0, 2.0])[:, None, None] * coarse_dirs[None]).reshape(-1, d)])
    X = np.repeat(X0, len(U), 0)
    Y = (X0[:, None, :] + U[None]).reshape(-1, d)
    return np.stack([X, Y], 1)


@check("heat.gaussian_bound", "Gaussian upper bound for h_t with c = 1/8")
def _gaussian_bound(sc):
    ts = (0.05, 0.2, 1.0, 5.0, 20.0)
    fitted, drift, series = {}, 0.0, []
    for name, k, _ in _heat_cases(sc):
        rs = preset(name, k)
        Cs = {}
        for m in (8, 16):
            per_t = [heat.heat_bound_ratio(rs, [t], gaussian_bound_sample(rs, t, m))["C"] for t in ts]
            Cs[m] = max(per_t)
            if m == 16:
                series.append({"name": f"C(t) {name}", "x": list(np.log10(ts)), "y": per_t})
        fitted[name] = {"coarse": Cs[8], "refined": Cs[16]}
        drift = max(drift, abs(Cs[16] / Cs[8] - 1))
    tol = sc.tol("heat.gaussian_bound", 0.25)
    ok = drift <= tol and all(np.isfinite(v["refined"]) for v in fitted.values())
    return {"c": 0.125, "t": list(ts)}, {"refinement_drift": drift}, fitted, {"drift": tol}, ok, series


# ---------------------------------------------------------------------------
# bessel suite

@check("bessel.classical_bessel", "k=0 reduction: Bessel potential is (1 - d^2)^{-s/2}", quick=True)
def _classical_bessel(sc):
    sp = _classical_pair(sc)
    x, w = sp.space_grid.nodes[:, 0], sp.space_grid.weights
    out = {}
    F = _classical_family(sc, "classical.bessel")
    for s in (2.0, 3.0):
        J = heat.bessel_potential(sp, s)
        out[s] = max(_rel_l2(translation.convolve(sp, f.sample(sp.space_grid), J.values, check=False).values,
                             cl.bessel_apply(f, s, x), w) for f in F)
    tol = sc.tol("bessel.classical_bessel", 1e-6)
    return {"s": [2.0, 3.0], "functions": len(F)}, {"max_rel_l2": out}, {}, {"rel_l2": tol}, max(out.values()) <= tol


@check("bessel.multiplier", "c_k F J^s = (1 + |xi|^2)^{-s/2}", quick=True)
def _bessel_multiplier(sc):
    out = {}
    cases = (("z2", float(sc.k), sc.points, 32.0, 10.0, (2.0, 3.0, 5.0)),
             ("z2^2", _k2(sc), sc.points_2d, 22.0, 4.0, (3.0, 5.0)))
    for name, k, n, box, fb, ss in cases:
        sp = _pair(name, k, n, box, fb)
        for s in ss:
            m = heat.bessel_multiplier(sp, heat.bessel_potential(sp, s))
            out[f"{name} s={s}"] = float(np.abs(m.values - (1 + sp.freq_norm2) ** (-s / 2)).max())
    worst = max(out.values())
    tol = sc.tol("bessel.multiplier", 1e-4)
    return {"cases": list(out)}, {"max_abs_error": worst, "per_case": out}, {}, {"abs": tol}, worst <= tol


@check("bessel.small_x", "J^s near 0: |x|^{s-N}, log(1/|x|), or bounded", quick=True)
def _bessel_small_x(sc):
    tn, tw = heat.subordination_rule(400)
    fitted, drift = {}, 0.0
    for name, k in (("z2", float(sc.k)), ("z2^2", _k2(sc))):
        rs = preset(name, k)
        Nh = rs.homogeneous_dimension
        for s in sorted({1.0, Nh / 2, Nh, Nh + 1, Nh + 2}):
            Cs = []
            for lo in (1e-3, 1e-4):
                r = np.geomspace(lo, 0.5, 40)
                Cs.append(float(np.max(heat.bessel_radial(rs, s, r, tn, tw) / heat.bessel_small_x_profile(rs, s, r))))
            regime = "power" if s < Nh else ("log" if s == Nh else "bounded")
            fitted[f"{name} s={s:g} ({regime})"] = {"C": Cs[0], "C_extended": Cs[1]}
            drift = max(drift, abs(Cs[1] / Cs[0] - 1))
    tol = sc.tol("bessel.small_x", 0.25)
    return ({"r": [1e-3, 0.5], "extended_to": 1e-4}, {"extension_drift": drift}, fitted,
            {"drift": tol}, drift <= tol)


def _graded_line(points, R, depth=14, ratio=2.0, n=12):
    t, w = np.polynomial.legendre.leggauss(n)
    pts = sorted(set([-R, R] + [float(p) for p in points]))
    edges = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        g = (hi - lo) / 2 * ratio ** (-np.arange(depth))[::-1]
        edges.append(lo + np.concatenate([[0.0], g]))
        edges.append(hi - np.concatenate([[0.0], g]))
    e = np.unique(np.concatenate(edges))
    h = 0.5 * np.diff(e)
    c = 0.5 * (e[1:] + e[:-1])
    return (c[:, None] + h[:, None] * t).ravel(), (h[:, None] * w).ravel()


def bessel_lipschitz_integral(rs, s, y, y2, ratio=2.0, n_nodes=400):
    """int |J^s(x, y) - J^s(x, y')| dw(x) in rank one."""
    tn, tw = heat.subordination_rule(n_nodes)
    x, w = _graded_line([0.0, y, y2, -y, -y2], abs(y) + abs(y2) + 40.0, ratio=ratio)
    dens = axis_density(float(rs.require_product()[0]), x) * w
    diff = 0.0
    for t, wt in zip(tn, tw):
        g = wt * np.exp(-t) * t ** (s / 2)
        diff = diff + g * (heat.heat_kernel(rs, t, x[:, None], np.full((x.size, 1), y))
                           - heat.heat_kernel(rs, t, x[:, None], np.full((x.size, 1), y2)))
    from scipy import special
    return float(np.sum(np.abs(diff) * dens) * special.rgamma(s / 2))


@check("bessel.lipschitz", "int |J^s(x,y) - J^s(x,y')| dw(x) <= C min(1, |y-y'|^delta)")
def _bessel_lipschitz(sc):
    rs = preset("z2", float(sc.k))
    fitted, drift = {}, 0.0
    for s in (1.0, 2.0, 3.0):
        delta = min(1.0, s / 2)
        Cs = []
        for m in (1, 2):
            hs = np.geomspace(1e-2, 4, 4 * m + 1)
            ys = [0.0, 0.5, -1.0, 2.0][:2 * m]
            Cs.append(max(bessel_lipschitz_integral(rs, s, y, y + h, ratio=2.0 ** (1 / m)) / min(1.0, h ** delta)
                          for y in ys for h in hs))
        fitted[f"s={s}"] = {"delta": delta, "coarse": Cs[0], "refined": Cs[1]}
        drift = max(drift, abs(Cs[1] / Cs[0] - 1))
    tol = sc.tol("bessel.lipschitz", 0.25)
    return {"k": sc.k}, {"refinement_drift": drift}, fitted, {"drift": tol}, drift <= tol


# ---------------------------------------------------------------------------
# kernel suite

def _kernel(sc, name, rs):
    return kernels.builtin_kernel(name, rs, **sc.kernel_params.get(name, {}))


@check("kernel.classical_truncated_hilbert", "k=0 reduction: truncated Hilbert transform")
def _classical_hilbert(sc):
    sp = _classical_pair(sc)
    K = kernels.builtin_kernel("riesz_1", sp.root_system)
    x, w = sp.space_grid.nodes[:, 0], sp.space_grid.weights
    sel = np.flatnonzero(np.abs(x) < 0.75 * sc.box)[::8]
    F = _classical_family(sc, "classical.hilbert")
    out = {}
    for a, b in ((0.25, 2.0), (0.5, 8.0), (0.1, 0.3)):
        m = kernels.kernel_multiplier(sp, K, kernels.TruncationBand(a, b))
        out[f"({a}, {b})"] = max(_rel_l2(kernels.apply_multiplier(sp, m, f.sample(sp.space_grid)).values[sel],
                                         cl.truncated_hilbert(f, a, b, x[sel], kernels.DEFAULT_CUTOFF), w[sel])
                                 for f in F)
    tol = sc.tol("kernel.classical_truncated_hilbert", 1e-6)
    return {"functions": len(F), "points": int(sel.size)}, {"max_rel_l2": out}, {}, {"rel_l2": tol}, max(out.values()) <= tol


@check("kernel.multiplier_uniformity", "sup_{a<b} |F K^{a,b}| bounded uniformly in a, b")
def _multiplier_uniformity(sc):
    sp = _pair("z2", float(sc.k), sc.points, sc.box)
    xi = sp.freq_grid.nodes[:, 0]
    c = 2.0 ** np.arange(-10, 10 + 1e-9, 0.5)
    measured, growth, series = {}, 0.0, []
    slices = [float(xi[np.argmin(np.abs(xi - v))]) for v in (0.5, 1.0, 2.0, 4.0, 8.0)]
    for name in sc.kernels:
        T = kernels.MultiplierTable(_kernel(sc, name, sp.root_system), xi, c)
        inner, outer = T.all_bands_sup(2.0 ** -8, 2.0 ** 8), T.all_bands_sup()
        measured[name] = {"sup_inner": inner, "sup_extended": outer, "growth": outer / inner - 1}
        growth = max(growth, outer / inner - 1)
        for v in slices:
            i = int(np.argmin(np.abs(xi - v)))
            col = T.P[:, i]
            y = [float(np.max(np.abs(col[j + 1:] - col[j]))) for j in range(len(c) - 1)]
            series.append({"name": f"{name} xi={v:.4g}", "x": list(np.log2(c[:-1])), "y": y})
    tol = sc.tol("kernel.multiplier_uniformity", 0.10)
    return ({"a_b_grid": "2^[-8,8] vs 2^[-10,10], half octaves", "kernels": list(sc.kernels)},
            {"max_growth": growth}, measured, {"growth": tol}, growth <= tol, series)


@check("kernel.limit_multiplier", "F K^a is Cauchy as a -> 0 under the cancellation condition")
def _limit_multiplier(sc):
    sp = _pair("z2", float(sc.k), sc.points, sc.box)
    gaps = {}
    for name in sc.kernels:
        K = _kernel(sc, name, sp.root_system)
        if not K.has_limit_L:
            continue
        _, g = kernels.limit_multiplier(sp, K)
        gaps[name] = float(g[-1])
    tol = sc.tol("kernel.limit_multiplier", 1e-5)
    return {"kernels": list(gaps)}, {"last_gap": gaps}, {}, {"cauchy": tol}, bool(gaps) and max(gaps.values()) < tol


@check("kernel.no_limit_oscillating", "|x|^{-N+i gamma} has no principal-value limit", quick=True)
def _no_limit(sc):
    rs = preset("z2", float(sc.k))
    K = kernels.builtin_kernel("oscillating", rs)
    L = kernels.limit_L(K)
    raised = False
    try:
        kernels.limit_multiplier(_pair("z2", float(sc.k), sc.points, sc.box), K)
    except NoLimitKernel:
        raised = True
    ok = raised and isinstance(L, kernels.NoLimit)
    return {"gamma": 1.0}, {"multiplier_not_cauchy": raised, "limit_L": repr(L)}, {}, {}, ok


def _test_points(sc, d, n=4000):
    return fam.rng_for(sc.seed, f"kernel.points.{d}").normal(size=(n, d)) * 3


@check("kernel.band_telescoping", "K^{a,b} = sum over the dyadic split of (a, b)", quick=True)
def _telescoping(sc):
    worst = 0.0
    for name, k in (("z2", float(sc.k)), ("z2^2", _k2(sc))):
        rs = preset(name, k)
        pts = _test_points(sc, rs.dimension)
        for kname in sc.kernels:
            K = _kernel(sc, kname, rs)
            for a, b in ((0.3, 5.0), (0.01, 100.0), (1.0, 1.9), (0.7, 33.0)):
                full = kernels.truncate(K, None, kernels.TruncationBand(a, b))(pts)
                parts = sum(kernels.truncate(K, None, B)(pts) for B in kernels.dyadic_band_split(a, b))
                worst = max(worst, float(np.abs(full - parts).max() / np.abs(full).max()))
    tol = sc.tol("kernel.band_telescoping", 1e-12)
    return {"bands": [[0.3, 5], [0.01, 100], [1, 1.9], [0.7, 33]]}, {"max_rel_error": worst}, {}, {"rel": tol}, worst <= tol


@check("kernel.truncation_support", "supp K^{a,b} in {a/2 <= |x| <= b}", quick=True)
def _trunc_support(sc):
    worst = 0.0
    for name, k in (("z2", float(sc.k)), ("z2^2", _k2(sc))):
        rs = preset(name, k)
        pts = _test_points(sc, rs.dimension)
        r = np.linalg.norm(pts, axis=1)
        for kname in sc.kernels:
            K = _kernel(sc, kname, rs)
            for a, b in ((0.3, 5.0), (1.0, 1.9), (0.05, 0.5)):
                v = kernels.truncate(K, None, kernels.TruncationBand(a, b))(pts)
                out = (r < a / 2) | (r > b)
                worst = max(worst, float(np.abs(v[out]).max(initial=0.0)))
    return {"points": 4000}, {"max_outside": worst}, {}, {"outside": 0.0}, worst == 0.0


@check("kernel.l1_sharp_smooth", "sup_{a<b} |K_{a,b} - K^{a,b}|_1 finite")
def _l1_gap(sc):
    fitted, drift = {}, 0.0
    for name, k in (("z2", float(sc.k)), ("z2^2", _k2(sc))):
        rs = preset(name, k)
        K = _kernel(sc, sc.kernels[0], rs)
        sups = []
        for step in (1.0, 0.5):
            g = 2.0 ** np.arange(-3, 3 + 1e-9, step)
            sups.append(max(kernels.l1_sharp_smooth_gap(K, a, b) for a in g for b in g if b > a))
        fitted[name] = {"coarse": sups[0], "refined": sups[1]}
        drift = max(drift, abs(sups[1] / sups[0] - 1))
    tol = sc.tol("kernel.l1_sharp_smooth", 0.10)
    ok = drift <= tol and all(np.isfinite(v["refined"]) for v in fitted.values())
    return {"kernel": sc.kernels[0], "a_b": "2^[-3,3]"}, {"grid_drift": drift}, fitted, {"drift": tol}, ok


@check("kernel.limit_L", "lim int_{eps<|x|<1} K dw = L", quick=True)
def _limit_L(sc):
    out = {}
    L0 = float(sc.kernel_params.get("shifted_riesz", {}).get("L0", 0.7))
    for name, k in (("z2", float(sc.k)), ("z2^2", _k2(sc))):
        K = kernels.builtin_kernel("shifted_riesz", preset(name, k), L0=L0)
        out[name] = abs(kernels.limit_L(K) - L0)
        out[f"{name} smooth a=1e-4"] = abs(kernels.smooth_ball_integral(K, 1e-4) - L0)
    worst = max(out.values())
    tol = sc.tol("kernel.limit_L", 1e-6)
    return {"L0": L0}, {"abs_error": out}, {}, {"abs": tol}, worst <= tol


@check("kernel.row_regularity", "row-regularity integrals scale as 2^{+-j delta}")
def _row_regularity(sc):
    rs = preset("z2", float(sc.k))
    K = kernels.builtin_kernel("riesz_1", rs)
    delta = kernels.regularity_delta(rs)
    xs, pairs = kernels.regularity_samples(levels=range(-8, 9, 2), ratios=(0.5, 1.5, -1.0, -0.5))
    rows = {j: kernels.regularity_row_integrals(K, j, delta, xs=xs, pairs=pairs) for j in range(-2, 3)}
    keys = ("C_size", "C_holder_x", "C_holder_y", "C_holder_a")
    dev = max(abs(rows[j][key] / rows[0][key] - 1) for j in rows for key in keys)
    tol = sc.tol("kernel.row_regularity", 0.5)
    series = [{"name": key, "x": list(rows), "y": [rows[j][key] for j in rows]} for key in keys]
    fitted = {f"j={j}": {key: rows[j][key] for key in keys} for j in rows}
    if not sc.quick:
        # sensitivity to the choice of delta, recorded only
        for d in (delta / 2, 2 * delta):
            r = kernels.regularity_row_integrals(K, 0, d, xs=xs, pairs=pairs)
            fitted[f"j=0 delta={d:g}"] = {key: r[key] for key in keys}
    return {"delta": delta, "j": list(rows)}, {"max_rel_deviation_from_j0": dev}, fitted, {"rel": tol}, dev <= tol, series


# ---------------------------------------------------------------------------
# cz suite

_CZ_GRIDS = (("z2", 64, 2.0), ("z2", 32, 4.0), ("z2^2", 16, 2.0), ("z2^2", 12, 2.0))


def _cz_instances(sc):
    rng = fam.rng_for(sc.seed, "cz.instances")
    out = []
    for i in range(_n(sc, 50, 12)):
        name, n, box = _CZ_GRIDS[i % 4]
        k = float(sc.k) if name == "z2" else _k2(sc)
        if i % 4 == 3:
            k = (0.5 * float(sc.k), float(sc.k))
        g = build_grid(preset(name, k), (-box, box), n)
        f = fam.random_packets(rng, g.dim, count=2, spread=0.7 * box, widths=(0.05, 0.4), real=bool(i % 2))
        fv = f(g.nodes)
        p = (1.0, 1.5, 2.0)[i % 3]
        base = (np.sum(np.abs(fv) ** p * g.weights) / g.weights.sum()) ** (1 / p)
        out.append((g, GridFunction(g, fv), float(base * rng.uniform(1.2, 6.0)), p))
    return out


@check("cz.invariants", "Calderon-Zygmund decomposition: f = g + sum b_l, |g| <= C lam, int b_l = 0", quick=True)
def _cz_invariants(sc):
    m = {"sum_identity": 0.0, "good_bound_excess": 0.0, "cancellation": 0.0, "measure_excess": -np.inf, "measure_ratio": 0.0, "C1": 0.0, "C2": 0.0}
    for g, f, lam, p in _cz_instances(sc):
        D = cz.cz_decompose(g, f, lam, p)
        w = g.weights
        fv = f.values
        m["sum_identity"] = max(m["sum_identity"], float(np.abs(D.good.values + D.bad.values - fv).max() / np.abs(fv).max()))
        bound = max(D.C1, 1.0) ** (1 / p) * lam
        m["good_bound_excess"] = max(m["good_bound_excess"], float(np.abs(D.good.values).max() / bound - 1))
        n1 = float(np.sum(np.abs(fv) * w))
        for cube, b in D.bad_parts:
            outside = np.ones(g.size, dtype=bool)
            outside[cube.nodes] = False
            m["cancellation"] = max(m["cancellation"], abs(complex(np.sum(b.values * w))) / n1,
                                    float(np.abs(b.values[outside]).max(initial=0.0)))
        total = sum(float(w[c.nodes].sum()) for c in D.cubes)
        m["measure_excess"] = max(m["measure_excess"], total / (float(np.sum(np.abs(fv) ** p * w)) / lam ** p) - 1)
        m["measure_ratio"] = max(m["measure_ratio"], total / (float(np.sum(np.abs(fv) ** p * w)) / lam ** p))
        m["C1"] = max(m["C1"], D.C1)
        m["C2"] = max(m["C2"], D.C2)
    tol = {"sum_identity": 1e-10, "good_bound_excess": 1e-12, "cancellation": 1e-8, "measure_excess": 1e-6}
    ok = all(m[key] <= v for key, v in tol.items())
    return ({"instances": len(_cz_instances(sc))}, {key: m[key] for key in tol},
            {"C1": m["C1"], "C2": m["C2"], "max_measure_ratio": m["measure_ratio"]}, tol, ok)


@check("cz.exhaustive_oracle", "selected cubes are the maximal dyadic cubes over lam^p", quick=True)
def _cz_oracle(sc):
    mismatches = 0
    insts = _cz_instances(sc)
    for g, f, lam, p in insts:
        D = cz.cz_decompose(g, f, lam, p)
        mine = {(c.level, tuple(int(v) for v in c.index)) for c in D.cubes}
        if mine != cz.exhaustive_cz_cubes(g, f, lam, p):
            mismatches += 1
    cells = max(2 ** (cz.leaf_level(g) * g.dim) for g, *_ in insts)
    return {"instances": len(insts), "max_cells": cells}, {"mismatches": mismatches}, {}, {"mismatches": 0}, mismatches == 0


_WEAK_SCALES = (1.0, 2.0, 4.0)
_WEAK_RELATIVE = (0.25, 0.5, 1.0)


def _weak_bands():
    return [kernels.TruncationBand(t / 4, t / 4 * r) for t in _WEAK_SCALES for r in (2, 4)]


def weak_family(grid, seed, scale, nb=4):
    """Bumps and signed three-bump combs at ``scale`` times (1/4, 1/2, 1), L^1-normalized.

    The base shapes depend only on the seed, so the families for different
    scales are dilates of one another.
    """
    rng = fam.rng_for(seed, "weak")
    base = [(rng.uniform(-1, 1), rng.uniform(0.25, 0.5), i % 2 == 1) for i in range(nb)]
    x = grid.nodes
    out = []
    for s in _WEAK_RELATIVE:
        d = scale * s
        for c, r, comb in base:
            if comb:
                v = fam.bump(x, d * (c - r), d * r / 2) - fam.bump(x, d * c, d * r / 2) + fam.bump(x, d * (c + r), d * r / 2)
            else:
                v = fam.bump(x, d * c, d * r)
            out.append(GridFunction(grid, v / np.sum(np.abs(v) * grid.weights)))
    return out


def _weak_runs(sc):
    """(sp, K, [(band, family, multiplier)]) at the base and the doubled resolution."""
    runs = []
    for n in (sc.points, 2 * sc.points):
        sp = _pair("z2", float(sc.k), n, 12.0, 48.0)
        K = kernels.builtin_kernel("riesz_1", sp.root_system)
        items = [(b, weak_family(sp.space_grid, sc.seed, 4 * b.a), kernels.kernel_multiplier(sp, K, b))
                 for b in _weak_bands()]
        runs.append((sp, K, items))
    return runs


@check("cz.weak_type", "lam w(|K^{a,b} f| > lam) <= C |f|_1 uniformly in a, b")
def _weak_type(sc):
    bands = _weak_bands()
    lams = np.geomspace(1e-3, 1, 49)
    per = [[cz.weak_type_estimator(sp, K, [b], F, lambdas=lams, multipliers=[m])["sup"] for b, F, m in items]
           for sp, K, items in _weak_runs(sc)]
    spread = max(per[0]) / min(per[0])
    drift = abs(max(per[1]) / max(per[0]) - 1)
    tol = {"band_spread": sc.tol("cz.weak_type.spread", 2.0), "refinement": sc.tol("cz.weak_type", 0.25)}
    series = [{"name": f"weak constant per band ({n} points)", "x": list(range(len(bands))), "y": p}
              for n, p in zip((sc.points, 2 * sc.points), per)]
    return ({"bands": [[b.a, b.b] for b in bands], "points": [sc.points, 2 * sc.points],
             "box": 12.0, "freq_box": 48.0, "relative_scales": list(_WEAK_RELATIVE)},
            {"band_spread": spread, "refinement_drift": drift},
            {"per_band": per[0], "sup": max(per[0]), "sup_refined": max(per[1])}, tol,
            spread <= tol["band_spread"] and drift <= tol["refinement"], series)


@check("cz.strong_type", "|K^{a,b} f|_p <= C_p |f|_p uniformly in a, b")
def _strong_type(sc):
    res = []
    for sp, K, items in _weak_runs(sc):
        per = [cz.strong_type_estimator(sp, K, [b], F, multipliers=[m]) for b, F, m in items]
        res.append({p: max(r[p] for r in per) for p in per[0]})
    drift = max(abs(res[1][p] / res[0][p] - 1) for p in res[0])
    tol = sc.tol("cz.strong_type", 0.25)
    fitted = {f"p={p}": {"coarse": res[0][p], "refined": res[1][p]} for p in res[0]}
    ok = drift <= tol and all(np.isfinite(v) for v in res[1].values())
    return {"p": list(res[0])}, {"refinement_drift": drift}, fitted, {"drift": tol}, ok


# ---------------------------------------------------------------------------
# maximal suite

@check("maximal.cotlar", "K* f <= C (sum_sigma M(Kf)(sigma x) + |f|_inf)")
def _cotlar(sc):
    sp = _pair("z2", float(sc.k), sc.points, sc.box)
    K = kernels.builtin_kernel("riesz_1", sp.root_system)
    F = [f.sample(sp.space_grid) for f in fam.packet_family(sc.seed, "cotlar", 40)]
    r = cz.cotlar_check(sp, K, F[:20], F[20:])
    tol = {"violation_fraction": sc.tol("maximal.cotlar", 0.01), "max_excess": sc.tol("maximal.cotlar.excess", 0.05)}
    ok = r["violation_fraction"] <= tol["violation_fraction"] and r["max_excess"] <= tol["max_excess"]
    return ({"train": 20, "test": 20}, {"violation_fraction": r["violation_fraction"], "max_excess": r["max_excess"]},
            {"C": r["C"]}, tol, ok)


@check("maximal.kstar_classical", "k=0 reduction: K* is the maximal truncated Hilbert transform")
def _kstar(sc):
    sp = _classical_pair(sc)
    K = kernels.builtin_kernel("riesz_1", sp.root_system)
    x = sp.space_grid.nodes[:, 0]
    sel = np.flatnonzero(np.abs(x) < 0.75 * sc.box)[::16]
    ag = cz.default_a_grid()
    err = 0.0
    F = fam.packet_family(sc.seed, "kstar", 2)
    for f in F:
        ks = cz.maximal_Kstar(sp, K, f.sample(sp.space_grid), ag).values[sel]
        ref = np.max(np.abs(np.array([cl.truncated_hilbert(f, a, np.inf, x[sel], kernels.DEFAULT_CUTOFF)
                                      for a in ag])), axis=0)
        err = max(err, float(np.abs(ks - ref).max() / np.abs(ref).max()))
    tol = sc.tol("maximal.kstar_classical", 1e-4)
    return {"a_grid": "2^[-8,8] quarter octaves", "points": int(sel.size), "functions": len(F)}, {"max_rel_error": err}, {}, {"rel": tol}, err <= tol
