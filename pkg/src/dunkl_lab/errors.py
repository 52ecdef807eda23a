"""Exception types raised across the package."""
from __future__ import annotations


class DunklLabError(Exception):
    """Base class for all errors raised by dunkl_lab."""


# root systems
class NotNormalized(DunklLabError):
    pass


class NotClosed(DunklLabError):
    pass


class NegativeMultiplicity(DunklLabError):
    pass


class NotGInvariant(DunklLabError):
    pass


class ZeroRoot(DunklLabError):
    pass


class GroupTooLarge(DunklLabError):
    pass


class UnsupportedRootSystem(DunklLabError):
    pass


# quadrature
class QuadratureFailure(DunklLabError):
    pass


class BoxDegenerate(DunklLabError):
    pass


class GridMismatch(DunklLabError):
    pass


class TailTooLarge(DunklLabError):
    pass


# spectral side
class SeriesDivergence(DunklLabError):
    pass


class GridNotGSymmetric(DunklLabError):
    pass


class BoundaryMass(DunklLabError):
    pass


class SubordinationUnderresolved(DunklLabError):
    pass


# kernels
class UnknownKernel(DunklLabError):
    pass


class NoLimitKernel(DunklLabError):
    pass


# decomposition
class RootSaturated(DunklLabError):
    pass


# lab
class ConfigError(DunklLabError):
    """Malformed scenario; carries the offending field and line when known."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class UnknownFormat(DunklLabError):
    pass
