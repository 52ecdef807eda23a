"""Verification reports and their serializations (json, csv, plotdata)."""
from __future__ import annotations

import csv
import io
import json
import platform
from dataclasses import dataclass, field

import numpy as np
import scipy

from ..errors import UnknownFormat
from .checks import CheckResult

FORMATS = ("json", "csv", "plotdata")
SCHEMA = "dunkl-lab/verification-report/1"


def environment() -> dict:
    """Versions that determine the numbers (no host names, no timestamps)."""
    from importlib.metadata import PackageNotFoundError, version
    try:
        own = version("dunkl-lab")
    except PackageNotFoundError:
        own = "unknown"
    return {
        "dunkl_lab": own,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "machine": platform.machine(),
        "prng": "numpy PCG64 (default_rng), seed sequence [seed, crc32(name)]",
    }


@dataclass
class VerificationReport:
    scenario: dict
    checks: list
    environment: dict = field(default_factory=environment)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def summary(self) -> dict:
        n_pass = sum(c.passed for c in self.checks)
        return {"checks": len(self.checks), "passed": n_pass, "failed": len(self.checks) - n_pass}

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "schema": SCHEMA,
            "scenario": self.scenario,
            "environment": self.environment,
            "summary": self.summary,
            "passed": self.passed,
            "checks": [c.to_dict(timing) for c in self.checks],
        }
        if timing:
            d["wall_clock"] = self.wall_clock
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"not a verification report (schema {d.get('schema')!r})")
        checks = []
        for c in d["checks"]:
            c = dict(c)
            seconds = c.pop("seconds", 0.0)
            r = CheckResult(**c)
            r.seconds = seconds
            checks.append(r)
        return cls(d["scenario"], checks, d["environment"], d.get("wall_clock", 0.0))


def parse_report(data) -> VerificationReport:
    """Inverse of the json emission."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return VerificationReport.from_dict(json.loads(data))


def _flat(prefix, value, out):
    if isinstance(value, dict):
        for k, v in value.items():
            _flat(f"{prefix}.{k}" if prefix else str(k), v, out)
    else:
        out[prefix] = value
    return out


CSV_COLUMNS = ("name", "suite", "anchor", "passed", "error", "measured", "fitted", "tol", "params")


def _csv(report: VerificationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in report.checks:
        cells = []
        for col in CSV_COLUMNS:
            v = getattr(c, col)
            if isinstance(v, dict):
                v = ";".join(f"{k}={x}" for k, x in _flat("", v, {}).items())
            elif isinstance(v, bool):
                v = "pass" if v else "fail"
            elif v is None:
                v = ""
            cells.append(v)
        w.writerow(cells)
    return buf.getvalue()


def _plotdata(report: VerificationReport) -> str:
    """One JSON document with every (x, y) series, keyed by check."""
    out = {"schema": SCHEMA + "/plotdata", "series": []}
    for c in report.checks:
        for s in c.series:
            out["series"].append({"check": c.name, "name": s["name"], "x": s["x"], "y": s["y"]})
    return json.dumps(out, indent=1, sort_keys=True) + "\n"


def emit_report(report: VerificationReport, fmt: str = "json", timing: bool = False) -> bytes:
    """Serialize the report. Wall-clock numbers are left out unless ``timing``,
    so identical runs give identical bytes."""
    if fmt == "json":
        text = json.dumps(report.to_dict(timing), indent=1, sort_keys=True) + "\n"
    elif fmt == "csv":
        text = _csv(report)
    elif fmt == "plotdata":
        text = _plotdata(report)
    else:
        raise UnknownFormat(f"unknown format {fmt!r} (choose from {', '.join(FORMATS)})")
    return text.encode("utf-8")
