"""Command line entry point: ``dunkl-lab verify | kernel | cz | report``.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration or runtime error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

import numpy as np

from .. import cz, kernels
from ..errors import DunklLabError
from ..quadrature import GridFunction, build_grid, read_csv
from ..roots import preset
from ..spectral import make_spectral_pair
from . import families as fam
from .config import KERNELS, SUITES, Scenario, default_threads, load_scenario
from .report import FORMATS, emit_report, parse_report
from .runner import run_scenario

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario file (YAML or JSON)")
    common.add_argument("--seed", type=_u64, metavar="U64")
    common.add_argument("--threads", type=_positive, metavar="INT",
                        help="worker threads (default: $DUNKL_LAB_THREADS or 1)")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--format", choices=FORMATS, default="json")
    common.add_argument("--preset", metavar="NAME",
                        help="'quick' for the fast subset, or a root system preset (z2, z2^2)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="dunkl-lab", description="Numerical checks for Dunkl singular integrals.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("--suite", action="append", choices=SUITES + ("all",), metavar="NAME",
                   help=f"suite to run, repeatable ({', '.join(SUITES)}, all)")
    v.add_argument("--check", action="append", metavar="NAME", help="run only this check (repeatable)")
    v.add_argument("--timing", action="store_true", help="include wall-clock seconds in the output")
    v.add_argument("--list", action="store_true", help="list the selected checks and exit")

    k = sub.add_parser("kernel", parents=[common], help="inspect a truncated kernel and its multiplier")
    k.add_argument("--kernel", choices=KERNELS, default="riesz_1")
    k.add_argument("--k", type=float, help="multiplicity (overrides the scenario)")
    k.add_argument("--a", type=float, default=0.25)
    k.add_argument("--b", type=float, default=4.0, help="outer radius; 'inf' allowed in rank one")
    k.add_argument("--sharp", action="store_true", help="sharp instead of smooth truncation")

    c = sub.add_parser("cz", parents=[common], help="Calderon-Zygmund decomposition of a function")
    c.add_argument("--input", metavar="CSV", help="grid function CSV (default: a seeded random packet)")
    c.add_argument("--lam", type=float, required=True, metavar="LAMBDA")
    c.add_argument("--p", type=float, default=1.0)
    c.add_argument("--k", type=float, help="multiplicity (overrides the scenario)")
    c.add_argument("--points", type=_positive, default=64, help="grid points per axis for the random packet")
    c.add_argument("--box", type=float, default=4.0)

    r = sub.add_parser("report", help="reformat a saved JSON report")
    r.add_argument("input", metavar="REPORT")
    r.add_argument("--format", choices=FORMATS, default="json")
    r.add_argument("--out", metavar="PATH")
    r.add_argument("--timing", action="store_true")
    return p


def _scenario(args) -> Scenario:
    # precedence: flag > config file > $DUNKL_LAB_THREADS > 1
    base = Scenario(threads=default_threads())
    sc = load_scenario(args.config, base) if args.config else base
    over = {"seed": args.seed, "threads": args.threads}
    if args.preset == "quick":
        over["quick"] = True
    elif args.preset is not None:
        over["preset"] = args.preset
    if getattr(args, "suite", None):
        over["suites"] = args.suite
    if getattr(args, "k", None) is not None:
        over["k"] = args.k
    return sc.with_overrides(**over)


def _write(data: bytes, path):
    if path:
        with open(path, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _verify(args) -> int:
    sc = _scenario(args)
    if args.list:
        from .checks import selected_checks
        names = [c.name for c in selected_checks(sc) if not args.check or c.name in args.check]
        _write(("\n".join(names) + "\n").encode(), args.out)
        return EXIT_PASS

    def progress(res):
        status = "pass" if res.passed else ("ERROR" if res.error else "FAIL")
        print(f"{status:5s} {res.name} ({res.seconds:.1f}s)", file=sys.stderr, flush=True)
    rep = run_scenario(sc, names=args.check, progress=progress)
    _write(emit_report(rep, args.format, timing=args.timing), args.out)
    s = rep.summary
    print(f"{s['passed']}/{s['checks']} checks passed", file=sys.stderr)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def _kernel(args) -> int:
    sc = _scenario(args)
    name = sc.preset
    k = float(sc.k) if name == "z2" else (float(sc.k), float(sc.k))
    rs = preset(name, k)
    n, box = (sc.points, sc.box) if name == "z2" else (sc.points_2d, sc.box_2d)
    sp = make_spectral_pair(rs, (-box, box), n)
    K = kernels.builtin_kernel(args.kernel, rs, **sc.kernel_params.get(args.kernel, {}))
    band = kernels.TruncationBand(args.a, args.b, "sharp" if args.sharp else "smooth")
    m = kernels.kernel_multiplier(sp, K, band)
    xi = sp.freq_grid.nodes
    tk = kernels.truncate(K, None, band)
    x = sp.space_grid.nodes
    kv = tk(x)
    L = kernels.limit_L(K)
    doc = {
        "kernel": K.name,
        "description": K.description,
        "root_system": rs.to_dict(),
        "band": {"a": band.a, "b": band.b, "mode": band.mode},
        "limit_L": repr(L) if isinstance(L, kernels.NoLimit) else [float(np.real(L)), float(np.imag(L))],
        "multiplier_sup": float(np.abs(m.values).max()),
        "dyadic_split": [[b.a, b.b] for b in kernels.dyadic_band_split(band.a, band.b)] if np.isfinite(band.b) else [],
    }
    if args.format == "json":
        doc["xi"] = xi.tolist()
        doc["multiplier"] = {"re": np.real(m.values).tolist(), "im": np.imag(m.values).tolist()}
        out = json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n"
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"xi{j}" for j in range(rs.dimension)] + ["re", "im"])
        for row, v in zip(xi, m.values):
            w.writerow([repr(float(t)) for t in row] + [repr(float(np.real(v))), repr(float(np.imag(v)))])
        out = buf.getvalue()
    else:
        series = []
        if rs.dimension == 1:
            series.append({"name": "|F K^{a,b}|(xi)", "x": xi[:, 0].tolist(), "y": np.abs(m.values).tolist()})
            series.append({"name": "K^{a,b}(x)", "x": x[:, 0].tolist(), "y": np.real(kv).tolist()})
        else:
            on_axis = np.abs(xi[:, 1]) == np.abs(xi[:, 1]).min()
            series.append({"name": "|F K^{a,b}|(xi_1, ~0)", "x": xi[on_axis, 0].tolist(),
                           "y": np.abs(m.values[on_axis]).tolist()})
        out = json.dumps({"kernel": doc, "series": series}, indent=1, sort_keys=True, default=str) + "\n"
    _write(out.encode(), args.out)
    return EXIT_PASS


def _cz(args) -> int:
    sc = _scenario(args)
    name = sc.preset
    k = float(sc.k) if name == "z2" else (float(sc.k), float(sc.k))
    rs = preset(name, k)
    if args.input:
        with open(args.input, encoding="utf-8") as fh:
            f = read_csv(fh.read(), rs=rs)
        grid = f.grid
    else:
        grid = build_grid(rs, (-args.box, args.box), args.points)
        rng = fam.rng_for(sc.seed, "cli.cz")
        f = GridFunction(grid, fam.random_packets(rng, rs.dimension, count=2, spread=0.7 * args.box,
                                                  widths=(0.05, 0.4), real=True)(grid.nodes))
    D = cz.cz_decompose(grid, f, args.lam, args.p)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level"] + [f"index{j}" for j in range(rs.dimension)] + ["side", "measure", "mean_over_lambda_p"])
        for cube, mean in zip(D.cubes, D.means):
            w.writerow([cube.level, *cube.index, repr(cube.side), repr(cube.measure), repr(mean)])
        out = buf.getvalue()
    elif args.format == "plotdata":
        series = [{"name": "mean |f|^p / lambda^p per cube", "x": list(range(len(D.cubes))), "y": list(D.means)}]
        out = json.dumps({"series": series}, indent=1) + "\n"
    else:
        out = D.to_json() + "\n"
    _write(out.encode(), args.out)
    return EXIT_PASS


def _report(args) -> int:
    with open(args.input, "rb") as fh:
        rep = parse_report(fh.read())
    _write(emit_report(rep, args.format, timing=args.timing), args.out)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"verify": _verify, "kernel": _kernel, "cz": _cz, "report": _report}[args.command]
    try:
        return handler(args)
    except (DunklLabError, OSError, ValueError, KeyError) as exc:
        print(f"dunkl-lab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
