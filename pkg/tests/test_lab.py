import csv
import io
import json

import numpy as np
import pytest

from dunkl_lab.errors import ConfigError, UnknownFormat
from dunkl_lab.lab import families as fam
from dunkl_lab.lab.checks import REGISTRY, CheckResult, selected_checks
from dunkl_lab.lab.cli import main
from dunkl_lab.lab.config import SUITES, Scenario, default_threads, parse_scenario
from dunkl_lab.lab.report import VerificationReport, emit_report, parse_report
from dunkl_lab.lab.runner import run_scenario
from dunkl_lab.quadrature import build_grid, write_csv
from dunkl_lab.roots import preset

FAST = ["cz.exhaustive_oracle", "kernel.band_telescoping", "kernel.limit_L", "transform.classical_transform"]


# ---------------------------------------------------------------------------
# scenarios

def test_defaults_and_yaml_parsing():
    sc = parse_scenario("k: 0.5\npoints: 64\nsuites: [heat, kernel]\nseed: 7\n")
    assert (sc.k, sc.points, sc.suites, sc.seed) == (0.5, 64, ("heat", "kernel"), 7)
    assert parse_scenario("").to_dict() == Scenario().to_dict()
    assert parse_scenario("suites: all").suites == SUITES
    assert parse_scenario("preset: quick").quick
    assert parse_scenario('{"box": [-8, 8], "kernels": "oscillating"}').box == 8
    assert parse_scenario('{"kernels": "oscillating"}').kernels == ("oscillating",)


@pytest.mark.parametrize("text, line, fieldname", [
    ("k: 1\nbogus: 2\n", 2, "bogus"),
    ("k: 1\n\npoints: -3\n", 3, "points"),
    ("suites: [heat, nope]\n", 1, "suites"),
    ("preset: b3\n", 1, "preset"),
    ("seed: -1\n", 1, "seed"),
    ("kernels: [riesz_9]\n", 1, "kernels"),
])
def test_config_errors_name_the_line_and_field(text, line, fieldname):
    with pytest.raises(ConfigError) as err:
        parse_scenario(text)
    assert err.value.line == line and err.value.field == fieldname
    assert str(err.value).startswith(f"line {line}: ")


def test_malformed_yaml_and_non_mapping():
    with pytest.raises(ConfigError):
        parse_scenario("k: [1, 2\n")
    with pytest.raises(ConfigError):
        parse_scenario("- 1\n- 2\n")


def test_thread_default_from_environment(monkeypatch):
    monkeypatch.delenv("DUNKL_LAB_THREADS", raising=False)
    assert default_threads() == 1
    monkeypatch.setenv("DUNKL_LAB_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.setenv("DUNKL_LAB_THREADS", "many")
    with pytest.raises(ConfigError):
        default_threads()


# ---------------------------------------------------------------------------
# seeded families

def test_families_are_reproducible_and_name_separated():
    g = build_grid(preset("z2", 1.0), (-4.0, 4.0), 32)
    a = [p.sample(g).values for p in fam.packet_family(11, "alpha", 3)]
    b = [p.sample(g).values for p in fam.packet_family(11, "alpha", 3)]
    c = [p.sample(g).values for p in fam.packet_family(11, "beta", 3)]
    d = [p.sample(g).values for p in fam.packet_family(12, "alpha", 3)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.allclose(a[0], c[0]) and not np.allclose(a[0], d[0])


def test_rng_stream_is_pcg64_seeded_with_seed_and_crc():
    import zlib
    r = fam.rng_for(5, "x")
    ref = np.random.Generator(np.random.PCG64(np.random.SeedSequence([5, zlib.crc32(b"x")])))
    assert np.array_equal(r.random(4), ref.random(4))


# ---------------------------------------------------------------------------
# registry, runner, reports

def test_every_suite_has_checks_and_names_are_unique():
    names = [c.name for c in selected_checks(Scenario())]
    assert len(names) == len(set(names)) == len(REGISTRY)
    assert {c.suite for c in REGISTRY.values()} == set(SUITES)
    quick = selected_checks(Scenario(quick=True))
    assert 0 < len(quick) < len(names) and all(c.quick for c in quick)


def test_runner_is_deterministic_across_thread_counts():
    one = run_scenario(Scenario(threads=1), names=FAST)
    three = run_scenario(Scenario(threads=3), names=FAST)
    assert [c.name for c in one.checks] == sorted(FAST)
    assert all(c.passed for c in one.checks)
    # the scenario block records the thread count; every check value must agree
    assert [c.to_dict() for c in one.checks] == [c.to_dict() for c in three.checks]
    again = run_scenario(Scenario(threads=1), names=FAST)
    again.environment = one.environment
    assert emit_report(again, "json") == emit_report(one, "json")


def test_unknown_check_names_are_rejected():
    with pytest.raises(KeyError):
        run_scenario(Scenario(), names=["transform.nope"])


def _report():
    checks = [
        CheckResult("a.one", "a", "anchor one", {"n": 3}, {"err": 1e-13}, {"C": 2.0}, {"err": 1e-10}, True,
                    series=[{"name": "s", "x": [1, 2], "y": [3, 4]}], seconds=1.5),
        CheckResult("b.two", "b", "anchor two", {}, {}, {}, {}, False, "ValueError: boom"),
    ]
    return VerificationReport(Scenario().to_dict(), checks, {"python": "x"}, 2.0)


def test_report_json_round_trip_and_timing():
    rep = _report()
    data = emit_report(rep, "json")
    assert b"seconds" not in data and b"wall_clock" not in data
    back = parse_report(data)
    assert emit_report(back, "json") == data
    assert not back.passed and back.summary == {"checks": 2, "passed": 1, "failed": 1}
    timed = json.loads(emit_report(rep, "json", timing=True))
    assert timed["wall_clock"] == 2.0 and timed["checks"][0]["seconds"] == 1.5


def test_report_csv_and_plotdata():
    rep = _report()
    rows = list(csv.reader(io.StringIO(emit_report(rep, "csv").decode())))
    assert len(rows) == 3 and rows[1][0] == "a.one" and rows[1][3] == "pass" and rows[2][3] == "fail"
    plot = json.loads(emit_report(rep, "plotdata"))
    assert plot["series"] == [{"check": "a.one", "name": "s", "x": [1, 2], "y": [3, 4]}]
    with pytest.raises(UnknownFormat):
        emit_report(rep, "xml")
    with pytest.raises(ValueError):
        parse_report(b'{"schema": "other"}')


# ---------------------------------------------------------------------------
# command line

def test_cli_list_and_verify(tmp_path, capsys):
    assert main(["verify", "--suite", "kernel", "--list"]) == 0
    listed = capsys.readouterr().out.split()
    assert listed and all(n.startswith("kernel.") for n in listed)
    out = tmp_path / "r.json"
    assert main(["verify", "--check", "kernel.band_telescoping", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["summary"] == {"checks": 1, "passed": 1, "failed": 0}
    csv_out = tmp_path / "r.csv"
    assert main(["report", str(out), "--format", "csv", "--out", str(csv_out)]) == 0
    assert csv_out.read_text().startswith("name,suite,anchor")


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("k: 1\nbogus: 2\n")
    assert main(["verify", "--config", str(bad)]) == 2
    assert "line 2: bogus: unknown field" in capsys.readouterr().err
    assert main(["verify", "--suite", "nope"]) == 2
    assert main(["verify", "--check", "transform.nope"]) == 2
    assert main(["report", str(tmp_path / "missing.json")]) == 2
    assert main(["cz", "--lam", "1"]) != 1
    # a failing report gives exit code 1
    failing = tmp_path / "f.json"
    failing.write_bytes(emit_report(_report(), "json"))
    assert main(["report", str(failing)]) == 1
    assert main(["--help"]) == 0


def test_cli_kernel_and_cz(tmp_path, capsys):
    assert main(["kernel", "--kernel", "riesz_1", "--a", "0.5", "--b", "3", "--format", "plotdata",
                 "--config", _small(tmp_path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["kernel"]["dyadic_split"] == [[0.5, 1.0], [1.0, 2.0], [2.0, 3.0]]
    g = build_grid(preset("z2", 1.0), (-4.0, 4.0), 64)
    f = tmp_path / "f.csv"
    f.write_text(write_csv(g.sample(lambda y: 10.0 * ((y[:, 0] >= 0) & (y[:, 0] <= 0.125)))))
    assert main(["cz", "--input", str(f), "--lam", "1", "--format", "csv"]) == 0
    rows = capsys.readouterr().out.strip().splitlines()
    assert rows[0].startswith("level,index0") and len(rows) >= 2


def _small(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text("points: 64\nbox: 8\n")
    return str(p)
