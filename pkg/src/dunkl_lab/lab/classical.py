"""Independent classical (k = 0, rank one) implementations used as oracles.

Gaussian packets p(x) = amp exp(-a (x - mu)^2 + i omega x) have closed-form
Fourier transforms, translations, convolutions and heat flows. The truncated
Hilbert transform and the Bessel potential are evaluated by direct quadrature.
"""
from __future__ import annotations

import numpy as np

from .families import Packet, PacketSum

_GL_T, _GL_W = np.polynomial.legendre.leggauss(32)


def _quad_form(p: Packet):
    """p(x) = exp(-A x^2 + B x + C)."""
    mu, om = float(p.mu[0]), float(p.omega[0])
    return p.a, 2 * p.a * mu + 1j * om, np.log(complex(p.amp)) - p.a * mu * mu


def fourier(f: PacketSum, xi):
    """(2 pi)^{-1/2} int f(x) e^{-i xi x} dx."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape, dtype=complex)
    for p in f.packets:
        A, B, C = _quad_form(p)
        b = B - 1j * xi
        out += np.exp(C + b * b / (4 * A)) / np.sqrt(2 * A)
    return out


def translate(f: PacketSum, x: float, y):
    """f(x + y)."""
    y = np.asarray(y, dtype=float)
    return f((x + y).reshape(-1, 1)).reshape(y.shape)


def _conv_quad(A1, B1, C1, A2, B2, C2, x):
    # int exp(-A1 y^2 + B1 y + C1 - A2 (x-y)^2 + B2 (x-y) + C2) dy
    s = A1 + A2
    lin = B1 + 2 * A2 * x - B2
    return np.exp(C1 + C2 - A2 * x * x + B2 * x + lin * lin / (4 * s)) * np.sqrt(np.pi / s)


def convolve(f: PacketSum, g: PacketSum, x):
    """int f(y) g(x - y) dy."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex)
    for p in f.packets:
        for q in g.packets:
            out += _conv_quad(*_quad_form(p), *_quad_form(q), x)
    return out


def heat(f: PacketSum, t: float, x):
    """e^{t d^2/dx^2} f = f * (4 pi t)^{-1/2} e^{-x^2/4t}."""
    x = np.asarray(x, dtype=float)
    A2, B2, C2 = 1 / (4 * t), 0.0, -0.5 * np.log(4 * np.pi * t)
    out = np.zeros(x.shape, dtype=complex)
    for p in f.packets:
        out += _conv_quad(*_quad_form(p), A2, B2, C2, x)
    return out


def bessel_apply(f: PacketSum, s: float, x, panels: int = 48):
    """(1 - d^2/dx^2)^{-s/2} f via the inverse Fourier integral of the closed-form spectrum."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex)
    for p in f.packets:
        sig = 1 / np.sqrt(2 * p.a)
        om = float(p.omega[0])
        lo, hi = om - 12 / sig, om + 12 / sig
        e = np.linspace(lo, hi, panels + 1)
        h = 0.5 * np.diff(e)
        xi = ((0.5 * (e[:-1] + e[1:]))[:, None] + h[:, None] * _GL_T).reshape(-1)
        w = (h[:, None] * _GL_W).reshape(-1)
        F = fourier(PacketSum((p,)), xi) * (1 + xi * xi) ** (-s / 2)
        out += (np.exp(1j * np.multiply.outer(x, xi)) @ (F * w)) / np.sqrt(2 * np.pi)
    return out


def truncated_hilbert(f: PacketSum, a: float, b: float, x, cutoff, panels: int = 64):
    """int f(x - y) (phi(y/b) - phi(y/a)) / y dy = int_{a/2}^{b} (f(x-y) - f(x+y)) (...) / y dy.

    b = inf integrates out to where the packets are negligible.
    """
    x = np.asarray(x, dtype=float)
    top = b if np.isfinite(b) else max(60.0, 4 * a)
    pts = sorted({a / 2, a, top} | ({b / 2} if np.isfinite(b) else set()))
    edges = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        edges.extend(np.geomspace(lo, hi, panels + 1)[:-1])
    edges = np.array(edges + [top])
    h = 0.5 * np.diff(edges)
    y = ((0.5 * (edges[:-1] + edges[1:]))[:, None] + h[:, None] * _GL_T).reshape(-1)
    w = (h[:, None] * _GL_W).reshape(-1)
    fac = (cutoff(y / b) if np.isfinite(b) else 1.0) - cutoff(y / a)
    xm = np.subtract.outer(x, y).reshape(-1, 1)
    xp = np.add.outer(x, y).reshape(-1, 1)
    diff = (f(xm) - f(xp)).reshape(x.size, y.size)
    return diff @ (fac * w / y)


def bessel_kernel(s: float, r):
    """Classical rank one Bessel kernel G_s, (1 + xi^2)^{-s/2} = int G_s(x) e^{-i xi x} dx."""
    from scipy import special
    r = np.abs(np.asarray(r, dtype=float))
    nu = (s - 1) / 2
    return (r / 2) ** nu * special.kv(nu, r) / (np.sqrt(np.pi) * special.gamma(s / 2))
