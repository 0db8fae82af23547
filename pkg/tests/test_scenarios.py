"""Scenario registry, suite execution, report emission, CLI."""

import csv
import io
import json

import numpy as np
import pytest

from fbstab import cli
from fbstab import scenarios as sc
from fbstab.errors import ConfigError


def test_build_scenario_deterministic():
    a = sc.build_scenario("cap-disk-b4k2")
    b = sc.build_scenario("cap-disk-b4k2")
    assert np.array_equal(a.immersion.xs, b.immersion.xs)
    assert np.array_equal(a.immersion.Hs, b.immersion.Hs)
    from fbstab.submanifold import immersion_to_json

    assert immersion_to_json(a.immersion) == immersion_to_json(b.immersion)


def test_random_scenario_rebuild_identical_bytes():
    spec = sc.Scenario(
        name="tmp", n=5, k=3,
        immersion_spec={"kind": "random-graph", "degree": 2},
        seed=7,
    )
    from fbstab.submanifold import immersion_to_json

    a = sc.build_scenario(spec)
    b = sc.build_scenario(spec)
    assert immersion_to_json(a.immersion) == immersion_to_json(b.immersion)


def test_scenario_lookup_and_dimension_gate():
    with pytest.raises(ConfigError):
        sc.scenario("no-such")
    with pytest.raises(ConfigError):
        sc.Scenario(name="bad", n=4, k=4)


def test_quadrature_override():
    built = sc.build_scenario("flat-disk-b4k2", quadrature={"nr": 8, "ntheta": 16})
    assert built.immersion.n_interior == 8 * 16


def test_emit_report_formats():
    result = sc.SuiteResult(("traces",), 0, ())
    doc = json.loads(sc.emit_report(result, "json"))
    assert doc["schema"] == "fbstab-report/1"
    assert doc["n_checks"] == 0 and doc["all_passed"] is True

    checks = (
        sc.CheckResult("traces", "s1", "c1", True, 1.0, 1.0, 1e-6, "ok", (0.0, 1.0)),
        sc.CheckResult("traces", "s0", "c2", False, 2.0, None, None, "bad", None),
    )
    result = sc.SuiteResult(("traces",), 3, checks)
    doc = json.loads(sc.emit_report(result, "json"))
    assert doc["n_passed"] == 1 and doc["all_passed"] is False
    # deterministic ordering by (suite, scenario, name)
    assert [c["scenario"] for c in doc["checks"]] == ["s0", "s1"]

    rows = list(csv.reader(io.StringIO(sc.emit_report(result, "csv").decode())))
    assert rows[0][0] == "suite" and len(rows) == 3
    parsed = float(rows[2]["achieved" in rows[0] and rows[0].index("achieved")])
    assert parsed == 1.0

    text = sc.emit_report(result, "text").decode()
    assert "[FAIL]" in text and "[PASS]" in text

    with pytest.raises(ConfigError):
        sc.emit_report(result, "yaml")


def test_json_report_has_no_runtimes():
    result = sc.SuiteResult(("traces",), 0, (), runtimes={"traces": 1.23})
    doc = json.loads(sc.emit_report(result, "json"))
    assert "runtimes" not in doc
    assert b"1.23" not in sc.emit_report(result, "csv")


def test_run_suite_unknown_name():
    with pytest.raises(ConfigError):
        sc.run_suite("nonexistent")


def test_suite_records_failures_without_aborting(monkeypatch):
    real_build = sc.build_scenario

    def flaky(name, quadrature=None):
        if getattr(name, "name", name) == "cap-disk-b4k2":
            raise RuntimeError("injected failure")
        return real_build(name, quadrature)

    monkeypatch.setattr(sc, "build_scenario", flaky)
    result = sc.run_suite("traces", seed=0, quadrature={"nr": 6, "ntheta": 12})
    failed = [c for c in result.checks if not c.passed]
    assert failed and all("injected failure" in c.detail for c in failed)
    # the other scenarios' checks still ran and passed
    passed_scenarios = {c.scenario for c in result.checks if c.passed}
    assert "radial-custom-disk-b4" in passed_scenarios
    assert not result.all_passed


def test_sample_dump_round_trip():
    built = sc.build_scenario("cap-disk-b4k2", quadrature={"nr": 6, "ntheta": 12})
    data = sc.sample_dump_csv(built)
    rows = list(csv.DictReader(io.StringIO(data.decode())))
    assert len(rows) == built.immersion.n_interior + built.immersion.n_boundary
    interior = [r for r in rows if r["kind"] == "interior"]
    vals = np.array([float(r["trace_interior"]) for r in interior])
    assert np.max(np.abs(vals + 4.0)) < 1e-9
    # numbers written with repr round-trip exactly
    x0 = float(interior[0]["x0"])
    assert x0 == built.immersion.xs[0, 0]


def test_cli_verify_suite(tmp_path, capsys):
    rc = cli.main([
        "verify", "--suite", "traces", "--seed", "3",
        "--out", str(tmp_path), "--format", "json",
    ])
    assert rc == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["all_passed"] is True


def test_cli_stability_and_exit_codes(tmp_path):
    rc = cli.main(["stability", "--scenario", "flat-disk-b4k2", "--out", str(tmp_path)])
    assert rc == 0
    doc = json.loads((tmp_path / "stability-flat-disk-b4k2.json").read_text())
    assert doc["verdict"] == "unstable-certified"
    assert abs(doc["traced_total"] + 4 * np.pi) < 1e-4


def test_cli_convexity(tmp_path):
    rc = cli.main(["convexity", "--scenario", "ellipsoid-211", "--p", "1",
                   "--out", str(tmp_path)])
    assert rc == 0
    doc = json.loads((tmp_path / "convexity-ellipsoid-211.json").read_text())
    assert abs(doc["margin_g"] - 0.25) < 1e-3


def test_cli_dump(tmp_path):
    rc = cli.main(["dump", "--scenario", "flat-disk-b4k2", "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "samples-flat-disk-b4k2.csv").exists()


def test_cli_config_errors(tmp_path):
    assert cli.main(["verify", "--config", "/nonexistent.json"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert cli.main(["verify", "--config", str(bad)]) == 2
    assert cli.main(["stability"]) == 2  # no scenario given


def test_cli_inline_scenario(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "scenario": {
            "name": "inline-cap",
            "n": 4, "k": 2,
            "domain": {"kind": "ball", "radius": 1.0},
            "field": {"name": "radial-spherical"},
            "immersion": {"kind": "equatorial-disk", "nr": 12, "ntheta": 24},
        },
        "certificate": {"curvature_points": 2000, "convexity_samples": 128},
    }))
    rc = cli.main(["stability", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    doc = json.loads((tmp_path / "stability-inline-cap.json").read_text())
    assert doc["verdict"] == "unstable-certified"
