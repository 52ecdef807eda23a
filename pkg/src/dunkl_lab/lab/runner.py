"""Run the selected checks of a scenario on a bounded worker pool."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor

from . import checks as _checks
from .config import Scenario
from .report import VerificationReport

log = logging.getLogger(__name__)


def run_scenario(sc: Scenario, names=None, progress=None) -> VerificationReport:
    """Every selected check exactly once; results sorted by check name.

    Checks share no mutable state besides read-only caches, so running them
    on several threads changes timing only. ``names`` restricts the run to
    the given check names (still filtered by suite); ``progress`` is called
    with each finished CheckResult.
    """
    specs = _checks.selected_checks(sc)
    if names is not None:
        wanted = set(names)
        unknown = wanted - set(_checks.REGISTRY)
        if unknown:
            raise KeyError(f"unknown checks: {', '.join(sorted(unknown))}")
        specs = [s for s in specs if s.name in wanted]
    t0 = time.perf_counter()

    def one(spec):
        log.info("running %s", spec.name)
        res = _checks.run_check(spec, sc)
        if progress is not None:
            progress(res)
        return res

    if sc.threads <= 1:
        results = [one(s) for s in specs]
    else:
        with ThreadPoolExecutor(max_workers=sc.threads) as pool:
            results = list(pool.map(one, specs))
    results.sort(key=lambda r: r.name)
    return VerificationReport(sc.to_dict(), results, wall_clock=time.perf_counter() - t0)
