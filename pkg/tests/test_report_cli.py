from __future__ import annotations

import csv
import json
import math
import subprocess
import sys
from fractions import Fraction

import pytest

from anscombe_lab.cli import EXIT_ERROR, EXIT_FAIL, EXIT_OK, main
from anscombe_lab.config import parse_config
from anscombe_lab.report import TABLE_COLUMNS, read_report, run_experiment, write_report

CLT = """
scenario: exchangeable_clt
master_seed: 3
probe:
  n_values: [200, 400]
  delta_values: [0.2, 0.1]
  epsilon_values: [0.25, 0.5]
  replications: 400
  min_event_count: 50
diagnostics:
  n: 500
  reps: 600
"""

INDICATOR = """
scenario: moving_indicator
master_seed: 2
probe:
  n_values: [10, 20, 30]
  delta_values: [0.2, 0.1]
  epsilon_values: [0.5]
  replications: 1000
  variants: [c, d, e]
  min_event_count: 50
diagnostics:
  n: 10
  reps: 400
"""


@pytest.fixture(scope="module")
def clt_report():
    cfg = parse_config(CLT)
    return cfg, run_experiment(cfg)


def test_report_independent_of_workers(tmp_path, clt_report):
    cfg, rep1 = clt_report
    rep4 = run_experiment(cfg.with_overrides(workers=4))
    write_report(rep1, tmp_path / "w1", cfg)
    write_report(rep4, tmp_path / "w4", cfg.with_overrides(workers=4))
    a = (tmp_path / "w1" / "report.json").read_bytes()
    b = (tmp_path / "w4" / "report.json").read_bytes()
    assert a == b
    for v in ("c", "c_star", "d", "e"):
        assert (tmp_path / "w1" / "tables" / f"{v}.csv").read_bytes() == \
            (tmp_path / "w4" / "tables" / f"{v}.csv").read_bytes()


def test_report_round_trip(tmp_path, clt_report):
    cfg, rep = clt_report
    write_report(rep, tmp_path, cfg)
    back = read_report(tmp_path)
    assert back == rep
    assert back.to_json() == rep.to_json()


def test_csv_shape_and_values(tmp_path, clt_report):
    cfg, rep = clt_report
    write_report(rep, tmp_path, cfg)
    g = cfg.probe.grid
    n_events = {"c": 1, "d": 1, "e": 1, "c_star": 4}
    for v, k in n_events.items():
        with (tmp_path / "tables" / f"{v}.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == TABLE_COLUMNS
        assert len(rows) - 1 == len(g.n_values) * len(g.delta_values) * len(g.epsilon_values) * k
        # every CSV number is in report.json
        for csv_row, js in zip(rows[1:], rep.probes[v]):
            for col, cell in zip(TABLE_COLUMNS, csv_row):
                if col == "event":
                    assert cell == js[col]
                else:
                    assert float(cell) == js[col]


def test_clt_report_contents(clt_report):
    cfg, rep = clt_report
    assert not rep.partial
    assert set(rep.verdicts) == {"equivalence", "stable_convergence",
                                 "distributional_convergence"}
    assert rep.equivalence["exact"]
    assert rep.verdicts["stable_convergence"]
    assert [e["event"] for e in rep.diagnostics["stable"]["events"]] == \
        [f"U-quartile-{i}" for i in range(1, 5)]
    assert rep.replicates == {"probe": 400, "diagnostics": 600}
    assert "workers" not in rep.config and "output_dir" not in rep.config


def test_manifest_holds_scheduling_data(tmp_path, clt_report):
    cfg, rep = clt_report
    write_report(rep, tmp_path, cfg)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["config"]["workers"] == 1
    assert man["seed"] == 3
    assert set(man["wall_clock_seconds"]) == {"probe", "diagnostics"}
    assert man["kernel_backend"] in ("cython", "python")


def test_indicator_report_fails_stable_and_bounds_c():
    cfg = parse_config(INDICATOR)
    rep = run_experiment(cfg)
    assert not rep.verdicts["stable_convergence"]
    assert not rep.verdicts["distributional_convergence"]
    assert rep.diagnostics["distributional"]["events"][0]["statistic"] == 1.0
    for row in rep.probes["c"]:
        # at most one X_j = 1 fits in the window, so P(M > 1/2) = P(a one in [lo, hi]),
        # which tends to log((1 + delta) / (1 - delta)) from above
        n, d = row["n"], row["delta"]
        half = Fraction(n) * Fraction(d)
        lo, hi = math.ceil(n - half), math.floor(n + half)
        exact = math.log((hi + 1) / lo)
        assert exact >= math.log((1 + d) / (1 - d))
        assert abs(row["p_hat"] - exact) <= 3 * math.sqrt(exact * (1 - exact) / 1000)


def test_empty_grid(tmp_path):
    cfg = parse_config("scenario: moving_indicator\nprobe:\n  n_values: []\n"
                       "diagnostics:\n  enabled: false\n")
    rep = run_experiment(cfg)
    write_report(rep, tmp_path, cfg)
    d = json.loads((tmp_path / "report.json").read_text())
    assert d["probes"] == {} and d["equivalence"] is None and d["verdicts"] == {}
    assert d["config"]["probe"]["n_values"] == []
    assert list((tmp_path / "tables").iterdir()) == []
    assert read_report(tmp_path) == rep


def test_horizon_error_is_recorded_not_dropped():
    cfg = parse_config("scenario: moving_indicator\nprobe:\n  n_values: [10]\n"
                       "  max_horizon: 1000\n  variants: [d]\ndiagnostics:\n  enabled: false\n")
    rep = run_experiment(cfg)
    assert rep.partial
    err = rep.errors[0]
    assert err["type"] == "HorizonExceeded" and err["replicate"] == 0 and err["n"] == 10
    with pytest.raises(Exception):
        run_experiment(cfg, strict=True)


# -- CLI ---------------------------------------------------------------------------

def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_exit_pass(tmp_path, capsys):
    cfg = _write(tmp_path, "clt.yaml", CLT)
    code = main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert all(summary["verdicts"].values())
    assert (tmp_path / "o" / "report.json").exists()


def test_cli_exit_fail(tmp_path):
    cfg = _write(tmp_path, "ind.yaml", INDICATOR)
    assert main(["diagnose", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_FAIL


def test_cli_exit_error(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == EXIT_ERROR
    bad = _write(tmp_path, "bad.yaml", "scenario: moving_indicator\nprobe:\n  deltas: [0.1]\n")
    assert main(["probe", "--config", bad]) == EXIT_ERROR
    assert "line 3" in capsys.readouterr().err
    partial = _write(tmp_path, "p.yaml", "scenario: moving_indicator\nprobe:\n  n_values: [10]\n"
                     "  max_horizon: 1000\ndiagnostics:\n  enabled: false\n")
    assert main(["probe", "--config", partial, "--out", str(tmp_path / "p")]) == EXIT_ERROR
    assert main(["probe"]) == EXIT_ERROR


def test_cli_seed_override(tmp_path):
    cfg = _write(tmp_path, "clt.yaml", CLT)
    main(["probe", "--config", cfg, "--seed", "11", "--out", str(tmp_path / "a")])
    assert json.loads((tmp_path / "a" / "report.json").read_text())["seed"] == 11


def test_scenario_dump_stdout(capsys):
    assert main(["scenario-dump", "--scenario", "hitting_midpoint", "--reps", "2"]) == EXIT_OK
    d = json.loads(capsys.readouterr().out)
    assert d["scenario"] == "hitting_midpoint" and len(d["replicates"]) == 2
    r = d["replicates"][0]
    assert "U_eff" in r["mixing"]
    assert [t["n"] for t in r["times"]] == [10, 15, 20, 25]


@pytest.mark.parametrize("scenario", ["exchangeable_clt", "exchangeable_empirical",
                                      "moving_indicator"])
def test_scenario_dump_paths(tmp_path, scenario):
    out = tmp_path / "d"
    assert main(["scenario-dump", "--scenario", scenario, "--reps", "2", "--dump-paths",
                 "--out", str(out)]) == EXIT_OK
    d = json.loads((out / "scenario_dump.json").read_text())
    for rid in range(2):
        with (out / "paths" / f"replicate_{rid}.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "value"]
        assert len(rows) > 2
        assert [[float(a), float(b)] for a, b in rows[1:]] == d["replicates"][rid]["path"]
    if scenario == "exchangeable_empirical":
        ts = [p[0] for p in d["replicates"][0]["path"]]
        assert ts[0] == 0.0 and max(ts) <= 1.0


def test_module_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "anscombe_lab", "--help"],
                         capture_output=True, text=True, check=True)
    assert "scenario-dump" in res.stdout
    assert "min_event_count" in res.stdout
