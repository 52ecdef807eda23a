"""Scenario configuration.

A scenario is one YAML (or JSON, which YAML reads) mapping. Unknown keys and
ill-typed values raise ConfigError naming the field and its line.
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, replace

import yaml

from ..errors import ConfigError

SUITES = ("transform", "heat", "bessel", "kernel", "cz", "maximal")
PRESETS = ("z2", "z2^2")
KERNELS = ("riesz_1", "shifted_riesz", "oscillating")


@dataclass(frozen=True)
class Scenario:
    """Everything a verification run depends on besides the code itself.

    ``k`` is the per-axis multiplicity of the scenario root system. Rank one
    checks use Z_2 with this k; rank two checks use Z_2^2 with (k, k).
    """

    preset: str = "z2"
    k: float = 1.0
    points: int = 512
    box: float = 16.0
    points_2d: int = 96
    box_2d: float = 10.0
    kernels: tuple = ("riesz_1", "shifted_riesz")
    kernel_params: dict = field(default_factory=dict)
    suites: tuple = SUITES
    tolerances: dict = field(default_factory=dict)
    seed: int = 20240611
    threads: int = 1
    quick: bool = False

    def with_overrides(self, **kw) -> "Scenario":
        kw = {key: v for key, v in kw.items() if v is not None}
        if "suites" in kw:
            kw["suites"] = _suites(kw["suites"], None)
        out = replace(self, **kw)
        _validate(out, {})
        return out

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kernels"] = list(self.kernels)
        d["suites"] = list(self.suites)
        return d


QUICK = dict(quick=True)
_FIELDS = {f for f in Scenario.__dataclass_fields__}


def _suites(value, line):
    if isinstance(value, str):
        value = [value]
    out = []
    for s in value:
        if s == "all":
            out.extend(SUITES)
        elif s in SUITES:
            out.append(s)
        else:
            raise ConfigError(f"suites: unknown suite {s!r} (choose from {', '.join(SUITES)}, all)", line=line, field="suites")
    return tuple(dict.fromkeys(out))


def _line_map(text: str) -> dict:
    """Top-level key -> 1-based line number."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def _validate(sc: Scenario, lines: dict):
    def fail(name, msg):
        raise ConfigError(f"{name}: {msg}", line=lines.get(name), field=name)
    if sc.preset not in PRESETS:
        fail("preset", f"unknown preset {sc.preset!r} (choose from {', '.join(PRESETS)})")
    if not isinstance(sc.k, (int, float)) or isinstance(sc.k, bool) or sc.k < 0:
        fail("k", "must be a nonnegative number")
    for name in ("points", "points_2d", "threads"):
        v = getattr(sc, name)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            fail(name, "must be a positive integer")
    if sc.points < 16 or sc.points_2d < 16:
        fail("points", "grids need at least 16 points per axis")
    for name in ("box", "box_2d"):
        v = getattr(sc, name)
        if not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0:
            fail(name, "must be a positive number")
    for kname in sc.kernels:
        if kname not in KERNELS:
            fail("kernels", f"unknown kernel {kname!r} (choose from {', '.join(KERNELS)})")
    if not isinstance(sc.seed, int) or isinstance(sc.seed, bool) or not 0 <= sc.seed < 2 ** 64:
        fail("seed", "must be an unsigned 64-bit integer")
    if not isinstance(sc.tolerances, dict) or not all(isinstance(v, (int, float)) for v in sc.tolerances.values()):
        fail("tolerances", "must map check names to numbers")
    if not isinstance(sc.kernel_params, dict):
        fail("kernel_params", "must map kernel names to parameter mappings")


def parse_scenario(text: str, base: Scenario | None = None) -> Scenario:
    """Scenario from YAML/JSON text; fields missing from the text keep their defaults."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"not valid YAML/JSON: {getattr(exc, 'problem', exc)}", line=line) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", line=1)
    lines = _line_map(text)
    kw = {}
    for key, value in data.items():
        if key == "preset" and value == "quick":
            kw.update(QUICK)
            continue
        if key not in _FIELDS:
            raise ConfigError(f"{key}: unknown field", line=lines.get(key), field=str(key))
        if key == "suites":
            value = _suites(value, lines.get(key))
        elif key == "kernels":
            value = tuple([value] if isinstance(value, str) else value)
        elif key == "box" or key == "box_2d":
            if isinstance(value, (list, tuple)) and len(value) == 2 and value[0] == -value[1]:
                value = value[1]
        kw[key] = value
    sc = replace(base or Scenario(), **kw)
    _validate(sc, lines)
    return sc


def load_scenario(path, base: Scenario | None = None) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_scenario(text, base)


def default_threads() -> int:
    raw = os.environ.get("DUNKL_LAB_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"DUNKL_LAB_THREADS must be an integer, got {raw!r}", field="threads") from None
    if n < 1:
        raise ConfigError("DUNKL_LAB_THREADS must be positive", field="threads")
    return n
