"""Acceptance suite: one pass/fail line per criterion over a full default run.

Run with ``pytest -v tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
The full scenario takes several minutes on one core.
"""
import sys

import pytest

from dunkl_lab.lab.config import Scenario
from dunkl_lab.lab.runner import run_scenario

CRITERIA = {
    1: ("zero-multiplicity classical oracles",
        ["transform.classical_transform", "transform.classical_translation", "transform.classical_convolution",
         "kernel.classical_truncated_hilbert", "heat.classical_heat", "bessel.classical_bessel"]),
    2: ("Plancherel and inversion", ["transform.plancherel", "transform.inversion"]),
    3: ("Dunkl kernel bound, residual, Lipschitz drift",
        ["transform.kernel_bound", "transform.kernel_system_residual", "transform.kernel_lipschitz_drift"]),
    4: ("heat kernel mass, symmetry, semigroup, Gaussian bound",
        ["heat.mass", "heat.symmetry_positivity", "heat.semigroup", "heat.gaussian_bound"]),
    5: ("Bessel multiplier, small-x regimes, Lipschitz bound",
        ["bessel.multiplier", "bessel.small_x", "bessel.lipschitz"]),
    6: ("multiplier uniformity and limits",
        ["kernel.multiplier_uniformity", "kernel.limit_multiplier", "kernel.no_limit_oscillating"]),
    7: ("truncation structure",
        ["kernel.band_telescoping", "kernel.truncation_support", "kernel.l1_sharp_smooth", "kernel.limit_L"]),
    8: ("Calderon-Zygmund decomposition", ["cz.invariants", "cz.exhaustive_oracle"]),
    9: ("weak and strong type uniformity", ["cz.weak_type", "cz.strong_type"]),
    10: ("support of translations", ["transform.support_rank1", "transform.support_z2sq"]),
    11: ("Cotlar bound and maximal truncations", ["maximal.cotlar", "maximal.kstar_classical"]),
    12: ("row-regularity scaling", ["kernel.row_regularity"]),
}

_CACHE = {}


def full_report():
    if "rep" not in _CACHE:
        _CACHE["rep"] = run_scenario(Scenario())
    return _CACHE["rep"]


def evaluate(n, rep):
    title, names = CRITERIA[n]
    by_name = {c.name: c for c in rep.checks}
    lines, ok = [], True
    for name in names:
        c = by_name.get(name)
        if c is None:
            ok = False
            lines.append(f"    {name}: MISSING")
            continue
        ok &= c.passed
        detail = c.error or ", ".join(f"{k}={v}" for k, v in c.measured.items())
        lines.append(f"    {name}: {'pass' if c.passed else 'FAIL'} ({detail})")
    head = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {title}"
    return ok, "\n".join([head] + lines)


@pytest.fixture(scope="session")
def report():
    return full_report()


@pytest.mark.slow
@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, report, capsys):
    ok, text = evaluate(n, report)
    with capsys.disabled():
        print("\n" + text)
    assert ok, text


if __name__ == "__main__":
    rep = full_report()
    results = [evaluate(n, rep) for n in sorted(CRITERIA)]
    for _, text in results:
        print(text)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
