"""Seeded random test functions.

All randomness goes through numpy's PCG64 generator (``np.random.default_rng``)
seeded with the scenario seed, so families are reproducible from (seed, name).
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from ..quadrature import GridFunction, WeightedGrid


def rng_for(seed: int, name: str) -> np.random.Generator:
    """Independent stream per family name: PCG64 seeded with (seed, crc32(name))."""
    return np.random.default_rng([int(seed) & (2 ** 64 - 1), zlib.crc32(name.encode())])


@dataclass(frozen=True)
class Packet:
    """exp(-a |x - mu|^2 + i <omega, x>) * amp, a > 0."""

    amp: complex
    a: float
    mu: np.ndarray
    omega: np.ndarray

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = x - self.mu
        return self.amp * np.exp(-self.a * np.sum(d * d, axis=1) + 1j * x @ self.omega)


@dataclass(frozen=True)
class PacketSum:
    packets: tuple

    def __call__(self, x):
        return sum(p(x) for p in self.packets)

    def sample(self, grid: WeightedGrid) -> GridFunction:
        return GridFunction(grid, self(grid.nodes))


def random_packets(rng, dim: int = 1, count: int = 3, spread: float = 3.0, max_freq: float = 3.0,
                   widths=(0.7, 1.5), real: bool = False) -> PacketSum:
    """Sum of Gaussian wave packets with widths sigma in ``widths`` (a = 1/(2 sigma^2));
    spectrum effectively inside |xi| <= max_freq + 9/sigma_min."""
    out = []
    for _ in range(count):
        sigma = rng.uniform(*widths)
        mu = rng.uniform(-spread, spread, dim)
        omega = np.zeros(dim) if real else rng.uniform(-max_freq, max_freq, dim)
        amp = rng.normal() + (0.0 if real else 1j * rng.normal())
        out.append(Packet(complex(amp), 1.0 / (2 * sigma * sigma), mu, omega))
    return PacketSum(tuple(out))


def packet_family(seed: int, name: str, n: int, dim: int = 1, **kw) -> list:
    rng = rng_for(seed, name)
    return [random_packets(rng, dim, **kw) for _ in range(n)]


def bump(x, center, radius):
    """C^infinity bump supported in the closed ball B(center, radius), max 1."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    u = np.sum((x - center) ** 2, axis=1) / radius ** 2
    out = np.zeros(x.shape[0])
    m = u < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - u[m]))
    return out


def compact_family(seed: int, name: str, n: int, dim: int, radius: float, grid: WeightedGrid) -> list:
    """n smooth functions supported in B(0, radius): random combinations of bumps."""
    rng = rng_for(seed, name)
    out = []
    for _ in range(n):
        vals = np.zeros(grid.size)
        for _ in range(3):
            r = rng.uniform(0.4, 0.8) * radius
            c = rng.normal(size=dim)
            c *= rng.uniform(0, radius - r) / max(np.linalg.norm(c), 1e-12)
            vals += rng.normal() * bump(grid.nodes, c, r)
        out.append(GridFunction(grid, vals))
    return out


def spike_bump_family(seed: int, grid: WeightedGrid, n: int = 8, widths=(0.25, 0.5, 1.0, 2.0)) -> list:
    """L^1-normalized nonnegative spikes/bumps and signed combs, resolved by the grid."""
    rng = rng_for(seed, "spike_bump")
    w = grid.weights
    out = []
    for i in range(n):
        width = widths[i % len(widths)]
        c = rng.uniform(-4, 4, grid.dim)
        if i % 3 == 2:
            vals = sum(s * bump(grid.nodes, c + off, width / 2)
                       for s, off in zip((1, -1, 1), (-width, 0.0, width)))
        else:
            vals = bump(grid.nodes, c, width)
        vals = vals / np.sum(np.abs(vals) * w)
        out.append(GridFunction(grid, vals))
    return out
