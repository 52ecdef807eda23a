"""Singular kernels, smooth and sharp truncations, and their Dunkl multipliers.

Truncations follow

    K^{a}(x) = K(x) (1 - phi(x / a)),   K^{a,b} = K^{a} - K^{b} = K (phi(x/b) - phi(x/a)),
    K_{a,b}(x) = K(x) 1{a < |x| < b},

with phi(x) = phi~(|x|) the fixed cutoff profile. Since K^{a,b} telescopes,
multipliers over many (a, b) are differences of one cumulative table.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np
from scipy import integrate, special

from .errors import BoundaryMass, NoLimitKernel, QuadratureFailure, UnknownKernel, UnsupportedRootSystem
from .quadrature import GridFunction, ck_closed_form
from .roots import RootSystem
from .spectral import (
    SpectralPair,
    fd_weights,
    forward_transform,
    inverse_transform,
    normalized_bessel,
)
from .translation import rank1_translate, reflect_function, translate_spectrum

# smooth band pieces with |xi| * (inner support radius) above this are dropped;
# measured size there is below 1e-12 relative to the multiplier bound
OSC_CUTOFF = 256.0
_GL_T, _GL_W = np.polynomial.legendre.leggauss(16)


# ---------------------------------------------------------------------------
# cutoff profile

class CutoffProfile:
    """phi~(u) = 1 for u <= 1/2, 0 for u >= 1, and 1 - S(2(u - 1/2)) between,
    S the normalized primitive of exp(-1/(v(1-v))).

    S is tabulated on a uniform panel grid; inside a panel the remaining piece
    is integrated with Gauss-Legendre, so evaluation is accurate to ~1e-16.
    """

    def __init__(self, panels: int = 64, order: int = 20):
        self.panels = panels
        self._t, self._w = np.polynomial.legendre.leggauss(order)
        self.edges = np.linspace(0.0, 1.0, panels + 1)
        h = 1.0 / panels
        inc = [np.sum(self._psi(a + (self._t + 1) * 0.5 * h) * self._w) * 0.5 * h for a in self.edges[:-1]]
        self.cum = np.concatenate([[0.0], np.cumsum(inc)])
        self.total = self.cum[-1]

    @staticmethod
    def _psi(v):
        v = np.asarray(v, dtype=float)
        out = np.zeros_like(v)
        m = (v > 0) & (v < 1)
        out[m] = np.exp(-1.0 / (v[m] * (1.0 - v[m])))
        return out

    @cached_property
    def _table(self):
        v = np.linspace(0.0, 1.0, 8193)
        return v, self.step_exact(v), self._psi(v) / self.total

    def step(self, v):
        """S(v) by cubic Hermite interpolation of a fine table with exact slopes
        (agrees with ``step_exact`` to ~1e-15)."""
        v = np.asarray(v, dtype=float)
        shape = v.shape
        v = v.reshape(-1)
        out = (v >= 1.0).astype(float)
        mid = (v > 0.0) & (v < 1.0)
        if not mid.any():
            return out.reshape(shape)
        vm = v[mid]
        grid, S, dS = self._table
        h = grid[1]
        i = np.minimum((vm / h).astype(int), grid.size - 2)
        u = vm / h - i
        h00 = (1 + 2 * u) * (1 - u) ** 2
        h10 = u * (1 - u) ** 2
        h01 = u * u * (3 - 2 * u)
        h11 = u * u * (u - 1)
        out[mid] = h00 * S[i] + h10 * h * dS[i] + h01 * S[i + 1] + h11 * h * dS[i + 1]
        return out.reshape(shape)

    def step_exact(self, v):
        """S(v): smooth monotone step from 0 (v <= 0) to 1 (v >= 1)."""
        v = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
        i = np.minimum((v * self.panels).astype(int), self.panels - 1)
        a = self.edges[i]
        half = 0.5 * (v - a)
        nodes = a[..., None] + (self._t + 1) * half[..., None]
        part = np.sum(self._psi(nodes) * self._w, axis=-1) * half
        return (self.cum[i] + part) / self.total

    def __call__(self, u):
        """phi~(u) for radii u >= 0."""
        return 1.0 - self.step(2.0 * (np.abs(np.asarray(u, dtype=float)) - 0.5))

    def of_point(self, x):
        return self(np.linalg.norm(np.asarray(x, dtype=float), axis=-1))


DEFAULT_CUTOFF = CutoffProfile()


# ---------------------------------------------------------------------------
# kernels

def smallest_even_above_half(rs: RootSystem) -> int:
    """s_0: the smallest even integer strictly bigger than N/2."""
    s = 2
    while s <= rs.homogeneous_dimension / 2:
        s += 2
    return s


@dataclass(eq=False)
class SingularKernel:
    name: str
    rs: RootSystem
    evaluator: object = field(repr=False)
    derivative_order: int = 2
    has_limit_L: bool = False
    L: complex | None = None
    description: str = ""
    params: dict = field(default_factory=dict)
    odd: bool = False
    breaks: tuple = ()

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=float))

    @cached_property
    def derivative_constants(self) -> dict:
        return certify_derivatives(self)


def _radial_bump(lo: float, hi: float):
    """Smooth bump supported in (lo, hi), as a function of the radius."""
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def bump(r):
        r = np.asarray(r, dtype=float)
        u = (r - mid) / half
        out = np.zeros_like(r)
        m = np.abs(u) < 1
        out[m] = np.exp(-1.0 / (1.0 - u[m] ** 2))
        return out
    return bump


def builtin_kernel(name: str, rs: RootSystem, **params) -> SingularKernel:
    """riesz_j (j = params["j"], default 1), oscillating (gamma, default 1.0),
    shifted_riesz (j, L0 default 0.7)."""
    Nh = rs.homogeneous_dimension
    s0 = smallest_even_above_half(rs)
    if name in ("riesz", "riesz_j") or name.startswith("riesz_"):
        j = int(params.get("j", name.split("_")[1] if name.split("_")[-1].isdigit() else 1))
        ev = _riesz(j, Nh)
        return SingularKernel(f"riesz_{j}", rs, ev, s0, True, 0.0,
                              f"x_{j} / |x|^(N+1)", {"j": j}, odd=True)
    if name == "oscillating":
        gamma = float(params.get("gamma", 1.0))

        def ev(x):
            r = np.linalg.norm(x, axis=-1)
            return r ** (-Nh + 1j * gamma)
        return SingularKernel("oscillating", rs, ev, s0, False, None,
                              f"|x|^(-N + i {gamma})", {"gamma": gamma})
    if name == "shifted_riesz":
        j = int(params.get("j", 1))
        L0 = float(params.get("L0", 0.7))
        bump = _radial_bump(0.25, 0.5)
        mass = sphere_mass(rs) * integrate.quad(lambda r: bump(np.array(r)) * r ** (Nh - 1), 0.25, 0.5,
                                                epsabs=0, epsrel=1e-13)[0]
        riesz = _riesz(j, Nh)

        def ev(x):
            return riesz(x) + L0 / mass * bump(np.linalg.norm(x, axis=-1))
        return SingularKernel("shifted_riesz", rs, ev, s0, True, L0,
                              f"x_{j} / |x|^(N+1) + bump on 1/4 < |x| < 1/2 with integral {L0}",
                              {"j": j, "L0": L0}, breaks=(0.25, 0.375, 0.5))
    raise UnknownKernel(f"unknown kernel {name!r}")


def _riesz(j, Nh):
    def ev(x):
        r = np.linalg.norm(x, axis=-1)
        return x[..., j - 1] / r ** (Nh + 1)
    return ev


# ---------------------------------------------------------------------------
# (D) certification

def _central_weights(m: int, p: int):
    return fd_weights(0.0, np.arange(-p, p + 1, dtype=float), m)


def partial_derivative(f, x, beta, h: float):
    """Richardson-extrapolated tensor central difference for d^beta f at x."""
    x = np.asarray(x, dtype=float)

    def diff(step):
        total = 0.0
        axes = []
        for m in beta:
            p = m // 2 + 1 if m else 0
            axes.append((np.arange(-p, p + 1), _central_weights(m, p) if m else np.array([1.0])))
        offsets = np.array(list(product(*[a[0] for a in axes])), dtype=float)
        weights = np.prod(np.array(list(product(*[a[1] for a in axes]))), axis=1)
        vals = f(x + offsets * step)
        total = np.sum(weights * vals) / step ** sum(beta)
        return total
    return (4.0 * diff(h / 2) - diff(h)) / 3.0


def certify_derivatives(K: SingularKernel, order: int | None = None, radii=None,
                        directions: int = 12, rel_step: float = 0.02) -> dict:
    """sup |d^beta K(x)| |x|^(N+|beta|) over a log-radial sample, per |beta| <= order."""
    rs = K.rs
    order = K.derivative_order if order is None else order
    Nh = rs.homogeneous_dimension
    radii = np.geomspace(2.0 ** -6, 2.0 ** 6, 25) if radii is None else np.asarray(radii)
    if rs.dimension == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        ang = (np.arange(directions) + 0.37) * 2 * np.pi / directions
        if rs.dimension == 2:
            dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        else:
            rng = np.random.default_rng(0)
            d = rng.normal(size=(directions, rs.dimension))
            dirs = d / np.linalg.norm(d, axis=1, keepdims=True)
    out = {}
    for m in range(order + 1):
        betas = [b for b in product(range(m + 1), repeat=rs.dimension) if sum(b) == m]
        best = 0.0
        for r in radii:
            for d in dirs:
                x = r * d
                for beta in betas:
                    val = partial_derivative(K, x, beta, rel_step * r) if m else K(x)
                    best = max(best, float(np.abs(val)) * r ** (Nh + m))
        out[m] = best
    return out


# ---------------------------------------------------------------------------
# truncations

@dataclass(frozen=True)
class TruncationBand:
    a: float
    b: float = np.inf
    mode: str = "smooth"
    n0: int | None = None
    n1: int | None = None

    def __post_init__(self):
        if not (0 < self.a < self.b):
            raise ValueError("truncation band needs 0 < a < b")
        if self.mode not in ("smooth", "sharp"):
            raise ValueError("mode must be 'smooth' or 'sharp'")


@dataclass(frozen=True, eq=False)
class TruncatedKernel:
    K: SingularKernel
    band: TruncationBand
    cutoff: CutoffProfile

    def factor(self, r):
        """Radial factor multiplying K."""
        r = np.asarray(r, dtype=float)
        a, b = self.band.a, self.band.b
        if self.band.mode == "sharp":
            return ((r > a) & (r < b)).astype(float)
        upper = self.cutoff(r / b) if np.isfinite(b) else 1.0
        return upper - self.cutoff(r / a)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        f = self.factor(r)
        out = np.zeros(r.shape, dtype=complex)
        nz = f != 0
        out[nz] = self.K(x[nz]) * f[nz]
        return out if np.iscomplexobj(self.K(x[nz][:1])) else out.real

    def sample(self, grid) -> GridFunction:
        return GridFunction(grid, self(grid.nodes))

    @property
    def support(self):
        lo = self.band.a / 2 if self.band.mode == "smooth" else self.band.a
        return lo, self.band.b


def truncate(K: SingularKernel, cutoff: CutoffProfile | None, band: TruncationBand) -> TruncatedKernel:
    return TruncatedKernel(K, band, DEFAULT_CUTOFF if cutoff is None else cutoff)


def dyadic_band_split(a: float, b: float) -> list:
    """Split (a, b) at the powers of two 2^{n0} <= ... <= 2^{n1},
    2^{n0-1} < a <= 2^{n0}, 2^{n1} <= b < 2^{n1+1}. The smooth truncations of
    the returned bands sum to K^{a,b} exactly."""
    if not 0 < a < b:
        raise ValueError("need 0 < a < b")
    n0 = int(np.ceil(np.log2(a)))
    n1 = int(np.floor(np.log2(b)))
    if n0 >= n1:
        return [TruncationBand(a, b, "smooth", n0, n1)]
    edges = [a] + [2.0 ** j for j in range(n0, n1 + 1)] + [b]
    bands = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            bands.append(TruncationBand(lo, hi, "smooth", n0, n1))
    return bands


# ---------------------------------------------------------------------------
# radial quadrature

def sphere_rule(rs: RootSystem, n: int = 32):
    """Directions theta and weights with sum_i g(theta_i) w_i ~ int_S g w(theta) dsigma.

    N = 1: the two points +-1. N = 2: Gauss-Jacobi per quadrant absorbing
    |cos|^(2 k1) |sin|^(2 k2).
    """
    kappa = rs.require_product()
    if rs.dimension == 1:
        w = 2.0 ** kappa[0]
        return np.array([[1.0], [-1.0]]), np.array([w, w])
    if rs.dimension != 2:
        raise UnsupportedRootSystem("sphere rule implemented for N <= 2")
    k1, k2 = kappa
    t, w = special.roots_jacobi(n, 2 * k1, 2 * k2)
    th = (t + 1) * np.pi / 4
    # smooth remainder of the weight after the Jacobi factor (pi/2 - th)^(2k1) th^(2k2)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(k1 > 0, (np.cos(th) / (np.pi / 2 - th)) ** (2 * k1), 1.0) \
            * np.where(k2 > 0, (np.sin(th) / th) ** (2 * k2), 1.0)
    # Jacobi weight (1-t)^a (1+t)^b = (4/pi)^(a+b) (pi/2 - th)^a th^b, dth = pi/4 dt
    wt = w * ratio * (np.pi / 4) ** (2 * k1 + 2 * k2 + 1) * 2.0 ** (k1 + k2)
    dirs, weights = [], []
    for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
        dirs.append(np.stack([sx * np.cos(th), sy * np.sin(th)], axis=1))
        weights.append(wt)
    return np.concatenate(dirs), np.concatenate(weights)


def sphere_mass(rs: RootSystem) -> float:
    """Weighted measure of the unit sphere, S_w = N w(B(0,1))."""
    kappa = rs.require_product()
    # int_{B(0,1)} dw = prod Gamma(k_j+1/2) 2^{k_j} / Gamma(N/2 + 1)
    Nh = rs.homogeneous_dimension
    vol = np.prod(2.0 ** kappa * special.gamma(kappa + 0.5)) / special.gamma(Nh / 2 + 1)
    return float(Nh * vol)


def _log_panels(lo, hi, breaks=(), max_ratio=1.5):
    pts = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    edges = []
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(np.ceil(np.log(b / a) / np.log(max_ratio))))
        edges.append(np.geomspace(a, b, n + 1)[:-1])
    return np.concatenate(edges + [[hi]])


def _panel_nodes(edges, sub=None):
    a, b = edges[:-1], edges[1:]
    if sub is not None:
        a, b = _subdivide(a, b, sub)
    r = (0.5 * (a + b))[:, None] + (0.5 * (b - a))[:, None] * _GL_T
    w = (0.5 * (b - a))[:, None] * _GL_W
    return r.reshape(-1), w.reshape(-1)


def _subdivide(a, b, counts):
    aa, bb = [], []
    for lo, hi, n in zip(a, b, counts):
        e = np.linspace(lo, hi, int(n) + 1)
        aa.append(e[:-1])
        bb.append(e[1:])
    return np.concatenate(aa), np.concatenate(bb)


def radial_integral(rs: RootSystem, g, a: float, b: float, breaks=(), n_sphere: int = 32,
                    max_ratio: float = 1.5):
    """int_{a<|x|<b} g(x) dw(x) by log-panel Gauss rules in r and the sphere rule."""
    dirs, sw = sphere_rule(rs, n_sphere)
    r, wr = _panel_nodes(_log_panels(a, b, breaks, max_ratio))
    Nh = rs.homogeneous_dimension
    pts = r[:, None, None] * dirs[None, :, :]
    vals = g(pts)
    return np.sum(vals * sw[None, :] * (wr * r ** (Nh - 1))[:, None])


def annulus_integral(K, a: float, b: float, tol: float = 1e-10, rs: RootSystem | None = None):
    """int_{a<|x|<b} K dw, checked by refining the radial rule.

    With a > b the integral is oriented: the result is -int_{b<|x|<a}.
    """
    rs = K.rs if rs is None else rs
    if a == b:
        return 0.0
    if a > b:
        return -annulus_integral(K, b, a, tol, rs)
    breaks = getattr(K, "breaks", ())
    coarse = radial_integral(rs, K, a, b, breaks, max_ratio=1.05)
    fine = radial_integral(rs, K, a, b, breaks, max_ratio=1.02, n_sphere=48)
    scale = max(abs(fine), abs(radial_integral(rs, lambda x: np.abs(K(x)), a, b, breaks, max_ratio=1.05)))
    if not np.isfinite(fine) or abs(fine - coarse) > max(tol * scale, 1e-14):
        raise QuadratureFailure(f"annulus integral not converged ({abs(fine - coarse):.2e})")
    return fine


class NoLimit:
    """Marker returned when the principal-value sequence is not Cauchy."""

    def __repr__(self):
        return "NoLimit"

    def __bool__(self):
        return False


NO_LIMIT = NoLimit()


def limit_L(K: SingularKernel, epsilon_sequence=None, tol: float = 1e-5):
    """lim_{eps->0} int_{eps<|x|<1} K dw, or NO_LIMIT when the sequence is not Cauchy.

    Cauchy here means successive gaps do not grow and the last one is < tol.
    """
    eps = np.geomspace(1.0 / 2, 1e-5, 17) if epsilon_sequence is None else np.asarray(epsilon_sequence)
    vals = np.array([annulus_integral(K, e, 1.0) for e in eps])
    gaps = np.abs(np.diff(vals))
    if gaps.size and (np.all(gaps[1:] <= gaps[:-1] + 1e-12) and gaps[-1] < tol):
        return complex(vals[-1]) if np.iscomplexobj(vals) else float(vals[-1])
    return NO_LIMIT


def smooth_ball_integral(K: SingularKernel, a: float, cutoff: CutoffProfile | None = None):
    """int_{|x|<1} K^{a} dw (tends to L as a -> 0 under (L))."""
    cutoff = DEFAULT_CUTOFF if cutoff is None else cutoff

    def g(x):
        return K(x) * (1.0 - cutoff(np.linalg.norm(x, axis=-1) / a))
    lo = a / 2
    breaks = (a,) + tuple(getattr(K, "breaks", ()))
    return radial_integral(K.rs, g, lo, 1.0, breaks=breaks, max_ratio=1.02) if lo < 1 else 0.0


def l1_sharp_smooth_gap(K: SingularKernel, a: float, b: float, cutoff: CutoffProfile | None = None) -> float:
    """|| K_{a,b} - K^{a,b} ||_{L^1(dw)}."""
    cutoff = DEFAULT_CUTOFF if cutoff is None else cutoff
    sharp = truncate(K, cutoff, TruncationBand(a, b, "sharp"))
    smooth = truncate(K, cutoff, TruncationBand(a, b, "smooth"))

    def g(x):
        return np.abs(sharp(x) - smooth(x))
    breaks = (a, b / 2) + tuple(getattr(K, "breaks", ()))
    return float(np.real(radial_integral(K.rs, g, a / 2, b, breaks=breaks, max_ratio=1.1)))


# ---------------------------------------------------------------------------
# multipliers (rank one, radial band integration)

def _rank1_parts(K: SingularKernel, r):
    """K(r) + K(-r) and K(r) - K(-r) for radii r."""
    kp = K(r[:, None])
    km = K(-r[:, None])
    return kp + km, kp - km


def _band_piece_rank1(K, xi, lo, hi, cutoff, kappa, ck, sharp=False):
    """c_k^{-1} int K(x) (phi(x/hi) - phi(x/lo)) E(-i xi, x) dw(x) (sharp: 1{lo<|x|<hi})."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape, dtype=complex)
    if sharp:
        keep = np.ones(xi.shape, dtype=bool)
        start, breaks = lo, K.breaks
    else:
        keep = np.abs(xi) * lo / 2 <= OSC_CUTOFF
        start, breaks = lo / 2, (lo, hi / 2) + K.breaks
    if not np.any(keep):
        return out
    edges = _log_panels(start, hi, breaks, 1.5)
    xk = xi[keep]
    # group frequencies by octave so the oscillation resolution adapts
    mags = np.abs(xk)
    octave = np.floor(np.log2(np.maximum(mags, 1e-300))).astype(int)
    for o in np.unique(octave):
        sel = octave == o
        xmax = mags[sel].max()
        counts = np.ceil(xmax * np.diff(edges) / (3 * np.pi)).astype(int) + 1
        r, w = _panel_nodes(edges, counts)
        if sharp:
            fac = np.ones_like(r)
        else:
            fac = cutoff(r / hi) - cutoff(r / lo)
        even, odd = _rank1_parts(K, r)
        dens = 2.0 ** kappa * r ** (2 * kappa) * w * fac
        t = np.multiply.outer(xk[sel], r)
        A = normalized_bessel(kappa - 0.5, t)
        B = t / (2 * kappa + 1) * normalized_bessel(kappa + 0.5, t)
        vals = A @ (even * dens) - 1j * (B @ (odd * dens))
        idx = np.flatnonzero(keep)[sel]
        out[idx] = vals / ck
    return out


def _tail_edge(xi, start):
    """Outer radius beyond which the smooth tail piece is negligible.

    Frequencies below 1e-3 share the edge of 1e-3; at xi = 0 the tail is
    cut there (odd kernels give 0 regardless)."""
    return np.maximum(4 * OSC_CUTOFF / np.maximum(np.abs(xi), 1e-3), 2 * start)


@dataclass(eq=False)
class MultiplierTable:
    """Cumulative multipliers P(c) on a geometric c-grid for one rank-one kernel.

    F K^{a,b}(xi) = P(b) - P(a) for grid values a < b, and F K^{a}(xi) = P(inf) - P(a).
    ``floor`` extends the table to very small c so the a -> 0 limit is visible.
    """

    K: SingularKernel
    xi: np.ndarray
    c_grid: np.ndarray
    cutoff: CutoffProfile = field(default_factory=lambda: DEFAULT_CUTOFF)

    def __post_init__(self):
        kappa = self.K.rs.require_product()
        if self.K.rs.dimension != 1:
            raise UnsupportedRootSystem("band tables are implemented in rank one")
        self.kappa = float(kappa[0])
        self.ck = ck_closed_form(self.K.rs)
        c = np.asarray(self.c_grid, dtype=float)
        pieces = [np.zeros(self.xi.shape, dtype=complex)]
        for lo, hi in zip(c[:-1], c[1:]):
            pieces.append(_band_piece_rank1(self.K, self.xi, lo, hi, self.cutoff, self.kappa, self.ck))
        self.P = np.cumsum(np.array(pieces), axis=0)
        self.tail = self._tail(c[-1])

    def _tail(self, start):
        """F[K (1 - phi(x / start))] = P(inf) - P(c_max), by geometric bands outward."""
        total = np.zeros(self.xi.shape, dtype=complex)
        edge = _tail_edge(self.xi, start).max()
        lo = start
        while lo < edge:
            hi = min(lo * 8.0, edge) if lo * 8.0 < edge else edge
            total += _band_piece_rank1(self.K, self.xi, lo, hi, self.cutoff, self.kappa, self.ck)
            lo = hi
        return total

    def index(self, c):
        i = np.flatnonzero(np.isclose(self.c_grid, c, rtol=1e-12, atol=0))
        if i.size == 0:
            raise ValueError(f"{c} is not on the table grid")
        return int(i[0])

    def band(self, a, b):
        """F K^{a,b} on the frequency nodes (b may be inf)."""
        Pa = self.P[self.index(a)]
        if np.isinf(b):
            return self.P[-1] + self.tail - Pa
        return self.P[self.index(b)] - Pa

    def all_bands_sup(self, lo=None, hi=None) -> float:
        """sup over grid pairs lo <= a < b <= hi and frequencies of |F K^{a,b}|."""
        c = self.c_grid
        i0 = 0 if lo is None else self.index(lo)
        i1 = len(c) - 1 if hi is None else self.index(hi)
        P = self.P[i0:i1 + 1]
        best = 0.0
        for i in range(P.shape[0] - 1):
            best = max(best, float(np.max(np.abs(P[i + 1:] - P[i]))))
        return best

    def truncation_sequence(self, a_values):
        """F K^{a} for each a in ``a_values`` (grid values)."""
        return np.array([self.band(a, np.inf) for a in a_values])


def kernel_multiplier(sp: SpectralPair, K: SingularKernel, band: TruncationBand,
                      cutoff: CutoffProfile | None = None, method: str = "auto") -> GridFunction:
    """F of the truncated kernel on the frequency grid.

    Rank one uses radial band integration (b = inf allowed). Otherwise the
    truncated kernel is sampled on the space grid and transformed, which needs
    b inside the box.
    """
    cutoff = DEFAULT_CUTOFF if cutoff is None else cutoff
    rs = sp.root_system
    xi = sp.freq_grid.nodes
    if method == "auto":
        method = "radial" if rs.dimension == 1 else "grid"
    if method == "radial":
        if rs.dimension != 1:
            raise UnsupportedRootSystem("radial multiplier is implemented in rank one")
        kappa = float(rs.require_product()[0])
        ck = ck_closed_form(rs)
        x1 = xi[:, 0]
        sharp = band.mode == "sharp"
        if np.isfinite(band.b):
            vals = _band_piece_rank1(K, x1, band.a, band.b, cutoff, kappa, ck, sharp)
        else:
            if sharp:
                raise NotImplementedError("sharp truncations need a finite outer radius")
            edge = _tail_edge(x1, band.a).max()
            vals = np.zeros(x1.shape, dtype=complex)
            lo = band.a
            while lo < edge:
                hi = min(lo * 8.0, edge)
                vals += _band_piece_rank1(K, x1, lo, hi, cutoff, kappa, ck)
                lo = hi
        return GridFunction(sp.freq_grid, vals)
    if method == "grid":
        if not np.isfinite(band.b):
            raise BoundaryMass("grid multipliers need a finite outer radius")
        box_r = np.min(np.abs(sp.space_grid.box))
        if band.b >= box_r:
            raise BoundaryMass("truncated kernel reaches the box edge")
        tk = truncate(K, cutoff, band).sample(sp.space_grid)
        return forward_transform(sp, tk, check=False)
    raise ValueError(f"unknown method {method!r}")


def apply_multiplier(sp: SpectralPair, m: GridFunction, f: GridFunction, check: bool = True) -> GridFunction:
    """f * K = c_k F^{-1}(FK Ff), with FK given as ``m``."""
    F = forward_transform(sp, f, check)
    return inverse_transform(sp, F * m * sp.ck, check=False)


def apply_truncated(sp: SpectralPair, K: SingularKernel, band: TruncationBand, f: GridFunction,
                    cutoff: CutoffProfile | None = None) -> GridFunction:
    return apply_multiplier(sp, kernel_multiplier(sp, K, band, cutoff), f)


def limit_multiplier(sp: SpectralPair, K: SingularKernel, a_sequence=None, tol: float = 1e-5,
                     cutoff: CutoffProfile | None = None):
    """lim_{a->0} F K^{a} on the frequency grid with the Cauchy diagnostics.

    Returns (GridFunction, gaps) where gaps[m] = sup_xi |F K^{a_{m+1}} - F K^{a_m}|.
    Raises NoLimitKernel when the sequence is not Cauchy to ``tol``.
    """
    if sp.root_system.dimension != 1:
        raise UnsupportedRootSystem("limit multipliers are implemented in rank one")
    xi = sp.freq_grid.nodes[:, 0]
    # below a_min, |xi| a stays < 1e-7 on the grid, so F K^{a} has settled
    amin = 1e-7 / max(np.abs(xi).max(), 1.0)
    a_seq = np.geomspace(1.0, amin, 1 + int(np.ceil(np.log2(1.0 / amin)))) if a_sequence is None \
        else np.asarray(a_sequence, dtype=float)
    c_grid = np.sort(a_seq)
    table = MultiplierTable(K, xi, c_grid, DEFAULT_CUTOFF if cutoff is None else cutoff)
    seq = table.truncation_sequence(a_seq)
    gaps = np.max(np.abs(np.diff(seq, axis=0)), axis=1)
    cauchy = bool(gaps[-1] < tol and np.all(gaps[-3:] <= gaps[-4:-1] + 1e-12)) if gaps.size > 3 \
        else bool(gaps.size and gaps[-1] < tol)
    if not cauchy:
        raise NoLimitKernel(f"F K^a is not Cauchy as a -> 0 (last gap {gaps[-1] if gaps.size else np.nan:.2e})")
    return GridFunction(sp.freq_grid, seq[-1]), gaps


def apply_principal_value(sp: SpectralPair, K: SingularKernel, f: GridFunction, a_sequence=None,
                          cutoff: CutoffProfile | None = None) -> GridFunction:
    """Kf = c_k F^{-1}(FK Ff) with FK = lim F K^{a}."""
    if not K.has_limit_L:
        raise NoLimitKernel(f"{K.name} has no principal-value constant")
    m, _ = limit_multiplier(sp, K, a_sequence, cutoff=cutoff)
    return apply_multiplier(sp, m, f)


def principal_value_convergence(sp: SpectralPair, K: SingularKernel, f: GridFunction, a_values) -> np.ndarray:
    """|| K^{a} f - K f ||_2 along ``a_values`` (grid L^2 norm)."""
    m, _ = limit_multiplier(sp, K)
    Kf = apply_multiplier(sp, m, f)
    out = []
    for a in a_values:
        g = apply_truncated(sp, K, TruncationBand(a), f)
        out.append(np.sqrt(np.sum(np.abs(g.values - Kf.values) ** 2 * sp.space_grid.weights)))
    return np.array(out)


# ---------------------------------------------------------------------------
# translated kernels and row regularity

def translated_kernel_row(sp: SpectralPair, K: SingularKernel, band: TruncationBand, x,
                          multiplier: GridFunction | None = None) -> GridFunction:
    """y -> K^{band}(x, y) = tau_x K^{band}(-y) on the space grid."""
    m = kernel_multiplier(sp, K, band) if multiplier is None else multiplier
    return reflect_function(translate_spectrum(sp, m, x, check=False))


def kernel_column(sp: SpectralPair, m: GridFunction, y) -> GridFunction:
    """x -> K(x, y) = tau_{-y} K(x) for a kernel with multiplier ``m``."""
    return translate_spectrum(sp, m, -np.asarray(y, dtype=float), check=False)


def band_lattice(j: int, per_side: int = 3):
    """(a, b) pairs with 2^{j-1} <= a < b < 2^{j+1} on a 1/per_side-octave grid.

    a runs over 2^{j-1+i/per_side}, b over 2^{j+i/per_side}, i < per_side, so
    every value sits on the same geometric grid for all j.
    """
    steps = np.arange(per_side) / per_side
    return [(2.0 ** (j - 1 + u), 2.0 ** (j + v)) for u in steps for v in steps]


def a_lattice(j: int, per_side: int = 3):
    """a values 2^{j-1} <= a <= 2^{j+1} on the same grid as ``band_lattice``."""
    return 2.0 ** (j - 1 + np.arange(2 * per_side + 1) / per_side)


def kernel_values(K: SingularKernel, band, x: float, y, cutoff: CutoffProfile | None = None):
    """K^{band}(x, y) = tau_x K^{band}(-y) in rank one, for scalar x and an array of y.

    Uses the explicit rank one translation formula, so no spectral truncation
    enters. ``band`` may be a list of bands; the result then has a trailing band
    axis. K(x, y) = tau_{-y} K(x) = ``kernel_values(K, band, -y, -x)`` by symmetry.
    """
    rs = K.rs
    if rs.dimension != 1:
        raise UnsupportedRootSystem("direct kernel values are implemented in rank one")
    kappa = float(rs.require_product()[0])
    single = isinstance(band, TruncationBand)
    bands = [band] if single else list(band)
    tks = [truncate(K, cutoff, b) for b in bands]
    lo = min(t.support[0] for t in tks)
    hi = max(t.support[1] for t in tks)
    cut = DEFAULT_CUTOFF if cutoff is None else cutoff

    def f(r):
        r = np.asarray(r, dtype=float)
        ar = np.abs(r)
        base = K(r[..., None])
        phi = {}

        def ph(c):
            if c not in phi:
                phi[c] = cut(ar / c) if np.isfinite(c) else np.zeros_like(ar)
            return phi[c]
        facs = []
        for b in bands:
            if b.mode == "sharp":
                facs.append(((ar > b.a) & (ar < b.b)).astype(float))
            else:
                facs.append((ph(b.b) if np.isfinite(b.b) else 1.0) - ph(b.a))
        return base[..., None] * np.stack(facs, axis=-1)
    breaks = tuple(sorted({c for b in bands for c in (b.a, b.b / 2, b.b) if np.isfinite(c)} | set(K.breaks)))
    out = rank1_translate(kappa, f, x, -np.asarray(y, dtype=float), support=(lo, hi), breaks=breaks)
    return out[..., 0] if single else out


def _line_rule(centers, reach, outer=None, panels: int = 48, n: int = 8, breaks_at=()):
    """Composite Gauss-Legendre nodes/weights on the union of +-[max(0, c - reach), c + reach]
    over ``centers``, with extra breakpoints |c| +- d for d in ``breaks_at``; ``outer``
    adds geometric panels out to that radius."""
    t, w = np.polynomial.legendre.leggauss(n)
    cuts = {0.0}
    top = 0.0
    for c in np.abs(np.atleast_1d(centers)):
        cuts.update([max(0.0, c - reach), c + reach, c])
        cuts.update(max(0.0, c + s * d) for d in breaks_at for s in (-1, 1))
        top = max(top, c + reach)
    pts = np.array(sorted(cuts))
    # panels: equal split of each piece with total ~ ``panels``
    span = pts[-1] - pts[0]
    edges = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        m = max(2, int(np.ceil(panels * (b - a) / span)))
        edges.extend(np.linspace(a, b, m + 1)[1:])
    if outer is not None and outer > top:
        edges.extend(np.geomspace(top, outer, 1 + int(np.ceil(np.log(outer / top) / np.log(1.25))))[1:])
    e = np.array(edges)
    a, b = e[:-1], e[1:]
    nodes = (0.5 * (a + b))[:, None] + (0.5 * (b - a))[:, None] * t
    weights = (0.5 * (b - a))[:, None] * w
    r, wr = nodes.reshape(-1), weights.reshape(-1)
    return np.concatenate([-r[::-1], r]), np.concatenate([wr[::-1], wr])


def regularity_samples(levels=range(-10, 11), ratios=(0.5, 0.875, 1.125, 1.5, -1.0, -0.5)):
    """Dilation-closed sample: x in {0} U {2^{m/2}}, Hoelder pairs (y, r y)."""
    pts = 2.0 ** (np.asarray(list(levels)) / 2.0)
    xs = np.concatenate([[0.0], pts])
    pairs = [(y, r * y) for y in pts for r in ratios]
    return xs, pairs


def regularity_row_integrals(K: SingularKernel, j: int, delta: float, xs=None, pairs=None,
                             lattice: int = 3, panels: int = 48, tail_octaves: int = 12) -> dict:
    """The four row integrals at dyadic scale 2^j, in rank one, with fitted constants.

    size:     int sup_{a,b} |K^{a,b}(x, y)| d(x, y)^delta dw(y)          / 2^{j delta}
    holder_x: int sup_{a,b} |K^{a,b}(x, y) - K^{a,b}(x, y')| dw(x)       / (2^{-j delta} |y-y'|^delta)
    holder_y: int sup_{a,b} |K^{a,b}(y, x) - K^{a,b}(y', x)| dw(x)       / same
    holder_a: int sup_{a}   |K^{a}(y, x) - K^{a}(y', x)| dw(x)           / same

    sups over ``band_lattice(j)`` and ``a_lattice(j)``; fitted constants are
    maxima over the x sample and the (y, y') sample.
    """
    from .roots import axis_density
    rs = K.rs
    kappa = float(rs.require_product()[0])
    if xs is None or pairs is None:
        dx, dp = regularity_samples()
        xs = dx if xs is None else xs
        pairs = dp if pairs is None else pairs
    bands = [TruncationBand(a, b) for a, b in band_lattice(j, lattice)]
    a_bands = [TruncationBand(a) for a in a_lattice(j, lattice)]
    bmax = max(b.b for b in bands)
    marks = sorted({b.a / 2 for b in bands} | {b.a for b in bands} | {b.b / 2 for b in bands} | {b.b for b in bands})
    scale_h = lambda y, y2: 2.0 ** (-j * delta) * abs(y - y2) ** delta

    def dens(z):
        return axis_density(kappa, z)

    # (i) size integral, over y with d(x, y) <= bmax
    size = []
    for x in xs:
        y, wy = _line_rule([x], bmax, panels=panels, breaks_at=marks)
        vals = np.abs(kernel_values(K, bands, x, y)).max(axis=-1)
        d = np.abs(np.abs(x) - np.abs(y))
        size.append(float(np.sum(vals * d ** delta * dens(y) * wy)))
    hx, hy, ha = [], [], []
    for y1, y2 in pairs:
        if y1 == y2:
            hx.append(0.0), hy.append(0.0), ha.append(0.0)
            continue
        sc = scale_h(y1, y2)
        x, wx = _line_rule([y1, y2], bmax, panels=panels, breaks_at=marks)
        w = dens(x) * wx
        # K(x, y) = tau_{-y} K(x)
        d_x = np.abs(kernel_values(K, bands, -y1, -x) - kernel_values(K, bands, -y2, -x)).max(axis=-1)
        hx.append(float(np.sum(d_x * w)) / sc)
        d_y = np.abs(kernel_values(K, bands, y1, x) - kernel_values(K, bands, y2, x)).max(axis=-1)
        hy.append(float(np.sum(d_y * w)) / sc)
        outer = (max(abs(y1), abs(y2)) + bmax) * 2.0 ** tail_octaves
        xa, wxa = _line_rule([y1, y2], bmax, outer=outer, panels=panels, breaks_at=marks)
        d_a = np.abs(kernel_values(K, a_bands, y1, xa) - kernel_values(K, a_bands, y2, xa)).max(axis=-1)
        ha.append(float(np.sum(d_a * dens(xa) * wxa)) / sc)
    return {
        "j": j,
        "delta": delta,
        "C_size": max(size) / 2.0 ** (j * delta),
        "C_holder_x": max(hx),
        "C_holder_y": max(hy),
        "C_holder_a": max(ha),
    }


def regularity_delta(rs: RootSystem) -> float:
    """delta = min(1, s_0 - N/2) / 2."""
    return min(1.0, smallest_even_above_half(rs) - rs.homogeneous_dimension / 2) / 2
