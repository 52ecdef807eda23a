"""Root systems, reflection groups and the weighted measure dw."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, special

from .errors import (
    GroupTooLarge,
    NegativeMultiplicity,
    NotClosed,
    NotGInvariant,
    NotNormalized,
    QuadratureFailure,
    UnsupportedRootSystem,
    ZeroRoot,
)

GROUP_CAP = 1024
VEC_TOL = 1e-9


def reflect(alpha, x):
    """Reflection of ``x`` in the hyperplane orthogonal to ``alpha``.

    ``x`` may be a single vector or an array of vectors along the last axis.
    """
    alpha = np.asarray(alpha, dtype=float)
    x = np.asarray(x, dtype=float)
    nrm2 = float(alpha @ alpha)
    if nrm2 == 0.0:
        raise ZeroRoot("cannot reflect in a zero vector")
    return x - 2.0 / nrm2 * np.multiply.outer(x @ alpha, alpha)


def reflection_matrix(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    nrm2 = float(alpha @ alpha)
    if nrm2 == 0.0:
        raise ZeroRoot("cannot reflect in a zero vector")
    return np.eye(alpha.size) - 2.0 * np.outer(alpha, alpha) / nrm2


def _index_of(vec, vectors, tol=VEC_TOL):
    for i, v in enumerate(vectors):
        if np.all(np.abs(v - vec) <= tol):
            return i
    return -1


def _closure(generators, dim):
    group = [np.eye(dim)]
    frontier = [np.eye(dim)]
    while frontier:
        new = []
        for g in frontier:
            for s in generators:
                h = s @ g
                if not any(np.all(np.abs(h - e) <= VEC_TOL) for e in group):
                    group.append(h)
                    new.append(h)
                    if len(group) > GROUP_CAP:
                        raise GroupTooLarge(f"reflection group exceeds {GROUP_CAP} elements")
        frontier = new
    return group


@dataclass(frozen=True, eq=False)
class RootSystem:
    """Normalized root system with a G-invariant multiplicity function.

    ``roots`` is an (m, N) array, ``multiplicity`` an (m,) array aligned with it
    and ``group`` an (|G|, N, N) array of orthogonal matrices.
    """

    roots: np.ndarray
    multiplicity: np.ndarray
    group: np.ndarray
    dimension: int

    @cached_property
    def homogeneous_dimension(self) -> float:
        return float(self.dimension + self.multiplicity.sum())

    @cached_property
    def axis_multiplicities(self) -> np.ndarray | None:
        """Per-axis multiplicity when R is a product of rank-one systems.

        Returns None if some root is not a multiple of a coordinate vector and
        carries a nonzero multiplicity.
        """
        kappa = np.zeros(self.dimension)
        for a, k in zip(self.roots, self.multiplicity):
            nz = np.flatnonzero(np.abs(a) > VEC_TOL)
            if nz.size != 1:
                if k != 0.0:
                    return None
                continue
            kappa[nz[0]] = k
        return kappa

    @property
    def is_product(self) -> bool:
        return self.axis_multiplicities is not None

    def require_product(self) -> np.ndarray:
        kappa = self.axis_multiplicities
        if kappa is None:
            raise UnsupportedRootSystem("operation needs a product of rank-one root systems (or k = 0)")
        return kappa

    def orbit(self, x) -> np.ndarray:
        """All images sigma(x), one row per group element (with repetitions)."""
        return np.einsum("gij,...j->...gi", self.group, np.asarray(x, dtype=float))

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "roots": self.roots.tolist(),
            "multiplicity": self.multiplicity.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "RootSystem":
        rs = build_root_system(data["roots"], data["multiplicity"])
        if rs.dimension != int(data["dimension"]):
            raise NotNormalized("dimension field does not match root length")
        return rs

    @classmethod
    def from_json(cls, text: str) -> "RootSystem":
        return cls.from_dict(json.loads(text))


def build_root_system(roots, multiplicity) -> RootSystem:
    """Validate roots and multiplicities and enumerate the reflection group.

    ``multiplicity`` is a sequence aligned with ``roots`` or a mapping from
    root tuples to values.
    """
    R = np.atleast_2d(np.asarray(roots, dtype=float))
    m, dim = R.shape
    if isinstance(multiplicity, dict):
        k = []
        for a in R:
            key = next((kk for kk in multiplicity if np.allclose(np.asarray(kk, float), a, atol=VEC_TOL)), None)
            if key is None:
                raise NotGInvariant(f"no multiplicity given for root {a.tolist()}")
            k.append(float(multiplicity[key]))
        k = np.asarray(k)
    else:
        k = np.asarray(multiplicity, dtype=float).reshape(-1)
        if k.size == 1 and m > 1:
            k = np.full(m, float(k[0]))
    if k.size != m:
        raise NotGInvariant("multiplicity must be given for every root")
    if np.any(np.linalg.norm(R, axis=1) == 0.0):
        raise ZeroRoot("roots must be nonzero")
    if np.any(np.abs(np.einsum("ij,ij->i", R, R) - 2.0) > 1e-12):
        raise NotNormalized("every root must have norm sqrt(2)")
    if np.any(k < 0):
        raise NegativeMultiplicity("multiplicities must be nonnegative")
    for a in R:
        for b in R:
            if _index_of(reflect(a, b), R) < 0:
                raise NotClosed(f"reflection of {b.tolist()} in {a.tolist()} is not a root")
    gens = []
    for a in R:
        s = reflection_matrix(a)
        if not any(np.all(np.abs(s - g) <= VEC_TOL) for g in gens):
            gens.append(s)
    group = _closure(gens, dim)
    for g in group:
        for a, ka in zip(R, k):
            j = _index_of(g @ a, R)
            if abs(k[j] - ka) > 1e-12:
                raise NotGInvariant("multiplicity is not invariant under the reflection group")
    return RootSystem(roots=R, multiplicity=k, group=np.array(group), dimension=dim)


def preset(name: str, k=0.0) -> RootSystem:
    """Named product root systems "z2", "z2^2", "z2^3" with per-axis k."""
    dims = {"z2": 1, "z2^1": 1, "z2^2": 2, "z2^3": 3}
    if name not in dims:
        raise UnsupportedRootSystem(f"unknown preset {name!r}")
    n = dims[name]
    kk = np.broadcast_to(np.asarray(k, dtype=float), (n,))
    roots, mult = [], []
    for j in range(n):
        e = np.zeros(n)
        e[j] = np.sqrt(2.0)
        roots += [e, -e]
        mult += [kk[j], kk[j]]
    return build_root_system(roots, mult)


def orbit_distance(rs: RootSystem, x, y) -> np.ndarray:
    """min over sigma in G of ||sigma(x) - y||; broadcasts over leading axes."""
    imgs = rs.orbit(x)
    y = np.asarray(y, dtype=float)
    return np.min(np.linalg.norm(imgs - y[..., None, :], axis=-1), axis=-1)


def weight_density(rs: RootSystem, x) -> np.ndarray:
    """prod_alpha |<x, alpha>|^k(alpha); broadcasts over leading axes of x."""
    x = np.asarray(x, dtype=float)
    dots = np.abs(x @ rs.roots.T)
    with np.errstate(divide="ignore"):
        out = np.prod(np.where(rs.multiplicity == 0.0, 1.0, dots ** rs.multiplicity), axis=-1)
    return out


def homogeneous_dimension(rs: RootSystem) -> float:
    return rs.homogeneous_dimension


def axis_density(kappa: float, x):
    """One-dimensional factor 2^kappa |x|^(2 kappa) of the product weight."""
    x = np.asarray(x, dtype=float)
    if kappa == 0.0:
        return np.ones_like(x)
    return 2.0 ** kappa * np.abs(x) ** (2 * kappa)


def axis_primitive(kappa: float, x):
    """Antiderivative of ``axis_density`` vanishing at 0."""
    x = np.asarray(x, dtype=float)
    return 2.0 ** kappa * np.sign(x) * np.abs(x) ** (2 * kappa + 1) / (2 * kappa + 1)


def _product_ball(kappa, center, r, tol):
    if r <= 0.0:
        return 0.0
    k0 = kappa[0]
    c0 = center[0]
    if len(kappa) == 1:
        return float(axis_primitive(k0, c0 + r) - axis_primitive(k0, c0 - r))

    def integrand(theta):
        x = c0 + r * np.sin(theta)
        s = r * np.cos(theta)
        return float(axis_density(k0, x)) * _product_ball(kappa[1:], center[1:], s, tol) * r * np.cos(theta)

    pts = []
    if abs(c0) < r:
        pts.append(np.arcsin(-c0 / r))
    val, err = integrate.quad(integrand, -np.pi / 2, np.pi / 2, points=pts or None, epsabs=0.0, epsrel=tol, limit=200)
    if not np.isfinite(val) or err > 1e3 * tol * abs(val) + 1e-300:
        raise QuadratureFailure(f"ball quadrature did not converge (err={err:.3g})")
    return val


def ball_volume(rs: RootSystem, center, r: float, tol: float = 1e-10) -> float:
    """w(B(center, r)).

    Product systems use iterated adaptive quadrature with the innermost axis in
    closed form; other systems fall back to an indicator-clipped tensor rule.
    """
    center = np.asarray(center, dtype=float).reshape(rs.dimension)
    if r <= 0:
        raise ValueError("radius must be positive")
    kappa = rs.axis_multiplicities
    if kappa is not None:
        return _product_ball(list(kappa), list(center), float(r), tol)
    # generic fallback: Gauss-Legendre tensor grid on the bounding box, clipped
    n = 64
    t, w = np.polynomial.legendre.leggauss(n)
    axes = [c + r * t for c in center]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, rs.dimension)
    wt = np.prod(np.stack(np.meshgrid(*([w * r] * rs.dimension), indexing="ij"), axis=-1).reshape(-1, rs.dimension), axis=1)
    inside = np.linalg.norm(mesh - center, axis=1) <= r
    return float(np.sum(wt[inside] * weight_density(rs, mesh[inside])))


def ball_volumes_product(rs: RootSystem, centers, r: float, n: int = 48) -> np.ndarray:
    """w(B(c, r)) for many centers of a product system of rank <= 2.

    Vectorized version of the iterated rule: x_1 = c_1 + r sin(theta). Where
    the ball crosses x_1 = 0 the theta range is split there and each piece uses
    Gauss-Jacobi nodes carrying the |theta - theta_0|^(2 kappa_1) behaviour.
    """
    kappa = rs.require_product()
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if rs.dimension == 1:
        c = centers[:, 0]
        return axis_primitive(kappa[0], c + r) - axis_primitive(kappa[0], c - r)
    if rs.dimension != 2:
        return np.array([ball_volume(rs, c, r) for c in centers])
    k0, k1 = kappa

    def piece(c0, c1, lo, hi, t, w, sing):
        half = 0.5 * (hi - lo)
        th = 0.5 * (hi + lo) + half * t
        x = c0 + r * np.sin(th)
        s = r * np.cos(th)
        inner = axis_primitive(k1, c1 + s) - axis_primitive(k1, c1 - s)
        if sing is None:
            dens = axis_density(k0, x)
        else:
            # the rule carries |theta - theta_0|^(2 k0); divide it out of the density
            with np.errstate(divide="ignore", invalid="ignore"):
                dens = 2.0 ** k0 * (np.abs(x) / np.abs(th - sing)) ** (2 * k0) * half ** (2 * k0)
            dens = np.nan_to_num(dens)
        return np.sum(dens * inner * r * np.cos(th) * w, axis=1) * half[:, 0]

    c0, c1 = centers[:, 0:1], centers[:, 1:2]
    cross = np.abs(c0) < r
    th0 = np.where(cross, np.arcsin(np.clip(-c0 / r, -1.0, 1.0)), -np.pi / 2)
    # the inner primitive has a kink where c_1 +- s = 0
    kink = np.arccos(np.clip(np.abs(c1) / r, 0.0, 1.0))
    edges = np.sort(np.concatenate([np.full(c0.shape, -np.pi / 2), th0, -kink, kink,
                                    np.full(c0.shape, np.pi / 2)], axis=1), axis=1)
    tl, wl = np.polynomial.legendre.leggauss(n)
    if k0 != 0.0:
        ta, wa = special.roots_jacobi(n, 2 * k0, 0.0)
        tb, wb = special.roots_jacobi(n, 0.0, 2 * k0)
    out = np.zeros(centers.shape[0])
    for q in range(edges.shape[1] - 1):
        lo, hi = edges[:, q:q + 1], edges[:, q + 1:q + 2]
        val = piece(c0, c1, lo, hi, tl, wl, None)
        if k0 != 0.0:
            right = cross[:, 0] & (hi[:, 0] == th0[:, 0])
            left = cross[:, 0] & (lo[:, 0] == th0[:, 0]) & ~right
            if np.any(right):
                val[right] = piece(c0[right], c1[right], lo[right], hi[right], ta, wa, th0[right])
            if np.any(left):
                val[left] = piece(c0[left], c1[left], lo[left], hi[left], tb, wb, th0[left])
        out += np.where(hi[:, 0] > lo[:, 0], val, 0.0)
    return out


def ball_comparability(rs: RootSystem, center, r: float) -> float:
    """r^N prod_alpha (|<x,alpha>| + r)^k(alpha), the standard comparison size."""
    center = np.asarray(center, dtype=float)
    return float(r ** rs.dimension * np.prod((np.abs(rs.roots @ center) + r) ** rs.multiplicity))


def doubling_constant(rs: RootSystem, centers, radii) -> float:
    """sup of w(B(x,2r)) / w(B(x,r)) over the given (center, radius) sample."""
    best = 0.0
    for c in centers:
        for r in radii:
            best = max(best, ball_volume(rs, c, 2 * r) / ball_volume(rs, c, r))
    return best
