import hashlib
import json
import subprocess
import sys

import pytest

from hytep.cli import EXIT_DATA, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, RunConfig, UsageError, run
from hytep.grid_model import bundled_case_path, save_case
from hytep.oracle import brute_force_optimum
from hytep.solver import import_mps, solve_milp
from random_cases import random_case, random_case_dict


def stderr_doc(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


def test_validate_bundled(capsys):
    for name in ("fig2_two_bus", "fig3_low_demand", "six_bus_sweep.json"):
        assert run(["validate", "--case", name]) == EXIT_OK
    assert "ok" in capsys.readouterr().out


def test_validate_broken(tmp_path, capsys):
    d = json.loads(bundled_case_path("fig2_two_bus").read_text())
    for b in d["buses"]:
        b["is_slack"] = True
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(d))
    assert run(["validate", "--case", str(path)]) == EXIT_DATA
    out = capsys.readouterr()
    assert "slack" in out.out
    doc = json.loads(out.err.strip().splitlines()[-1])
    assert doc["exit_code"] == EXIT_DATA and doc["error"] == "data"


def test_plan_fig2(tmp_path, capsys, fig2):
    out = tmp_path / "o"
    code = run(["plan", "--case", "fig2_two_bus.json", "--model", "tep-h", "--gap", "0.001", "--out", str(out)])
    assert code == EXIT_OK
    plan = json.loads((out / "plan.json").read_text())
    assert plan["hydrogen_routes"][0]["build_period"] == 0
    costs = json.loads((out / "costs.json").read_text())
    ref = brute_force_optimum(fig2)
    assert abs(costs["costs"]["total"] - ref.total) <= 1e-3 * ref.total
    assert (out / "operation" / "dispatch.csv").exists()
    assert (out / "timeseries" / "timeseries_p1_d1.csv").exists()
    assert json.loads(capsys.readouterr().out)["routes_built"] == [1]


def test_oracle_check_six_bus(capsys):
    assert run(["oracle-check", "--case", "six_bus_sweep.json"]) == EXIT_OK
    text = capsys.readouterr().out
    gap = float(text.strip().splitlines()[-1].split()[-1])
    assert gap <= 1e-3


def test_oracle_check_cap_is_data_error(capsys):
    assert run(["oracle-check", "--case", "six_bus_sweep", "--cap", "5"]) == EXIT_DATA
    assert stderr_doc(capsys)["type"] == "EnumerationCapError"


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["plan", "--case", "fig2_two_bus", "--gap", "2"],
    ["plan", "--case", "fig2_two_bus", "--model", "tep-x"],
    ["plan"],
    ["sweep", "--case", "fig2_two_bus", "--round-trip", "abc"],
    ["evaluate", "--case", "fig2_two_bus"],
])
def test_usage_errors(argv, capsys):
    assert run(argv) == EXIT_USAGE
    doc = stderr_doc(capsys)
    assert doc["error"] == "usage" and doc["exit_code"] == EXIT_USAGE


def test_missing_case_is_data_error(tmp_path, capsys):
    assert run(["validate", "--case", str(tmp_path / "nope.json")]) == EXIT_DATA
    assert "not found" in stderr_doc(capsys)["message"]
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert run(["plan", "--case", str(bad)]) == EXIT_DATA


def test_help_and_version(capsys):
    assert run(["--help"]) == 0
    assert run(["--version"]) == 0
    assert "hytep" in capsys.readouterr().out


def test_export_mps(tmp_path, capsys, six_bus):
    assert run(["export-mps", "--case", "six_bus_sweep", "--model", "tep-t", "--out", str(tmp_path)]) == EXIT_OK
    path = tmp_path / "six_bus_sweep_tep_t.mps"
    m = import_mps(path)
    assert m.n_integer == 2 * len(six_bus.candidate_lines) * six_bus.horizon.n_periods
    assert solve_milp(m).objective == pytest.approx(brute_force_optimum(six_bus, "tep_t").total, rel=1e-3)


def test_evaluate_plan_file(tmp_path, capsys, fig2):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"hydrogen_routes": [{"id": 1, "build_period": None}]}))
    assert run(["evaluate", "--case", "fig2_two_bus", "--plan", str(plan), "--out", str(tmp_path / "e")]) == 0
    doc = json.loads((tmp_path / "e" / "costs.json").read_text())
    assert doc["total_shed_pu"] == pytest.approx(5.0)
    plan.write_text(json.dumps({"hydrogen_routes": [{"id": 4, "build_period": 0}]}))
    capsys.readouterr()
    assert run(["evaluate", "--case", "fig2_two_bus", "--plan", str(plan), "--out", str(tmp_path / "e")]) == EXIT_DATA


def test_sweep_via_config(tmp_path, capsys, monkeypatch):
    # relative "out" resolves against the working directory
    monkeypatch.chdir(tmp_path)
    conf = tmp_path / "sweep.json"
    conf.write_text(json.dumps({"case": "fig2_two_bus", "round_trip_levels": [0.4, 0.5], "out": "tables"}))
    assert run(["sweep", "--config", str(conf)]) == EXIT_OK
    text = (tmp_path / "tables" / "tep_h_rt0.4-0.5.csv").read_text().splitlines()
    assert len(text) == 3
    # a command-line flag overrides the config value
    assert run(["sweep", "--config", str(conf), "--round-trip", "0.5", "--model", "tep-t"]) == EXIT_OK
    assert (tmp_path / "tables" / "tep_t_rt0.5.csv").exists()


def test_bundled_sweep_config(tmp_path, capsys):
    assert run(["sweep", "--config", "six_bus_sweep.sweep.json", "--out", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "tep_h_pen0.2-0.8_rt0.4-0.6-0.8_cr0.csv").read_text().splitlines()
    assert len(rows) == 1 + 6


def test_sweep_failure_exit_code(tmp_path, capsys):
    d = json.loads(bundled_case_path("fig2_two_bus").read_text())
    d["hydrogen_routes"][0]["eta_e"] = 0.9
    d["hydrogen_routes"][0]["eta_f"] = 0.5
    path = tmp_path / "c.json"
    path.write_text(json.dumps(d))
    assert run(["sweep", "--case", str(path), "--round-trip", "1.0", "--out", str(tmp_path)]) == EXIT_SOLVER
    assert stderr_doc(capsys)["error"] == "solver"
    assert (tmp_path / "tep_h_rt1.csv").exists()


def test_node_limit_without_incumbent_is_solver_error(tmp_path, capsys):
    # seed 8 has a fractional root relaxation, so one node cannot produce a plan
    path = save_case(random_case(8), tmp_path / "r8.json")
    assert run(["plan", "--case", str(path), "--node-limit", "1", "--out", str(tmp_path)]) == EXIT_SOLVER
    assert "no feasible plan" in stderr_doc(capsys)["message"]


def test_case_file_untouched(tmp_path, capsys):
    path = tmp_path / "case.json"
    path.write_text(json.dumps(random_case_dict(3)))
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    for argv in (["validate"], ["plan"], ["export-mps"], ["oracle-check"]):
        run(argv + ["--case", str(path), "--out", str(tmp_path / "o")])
    assert hashlib.sha256(path.read_bytes()).hexdigest() == digest


def test_run_config_checks():
    assert RunConfig("plan", model="tep-t").model == "tep_t"
    with pytest.raises(UsageError):
        RunConfig("plan", gap=0.0)
    with pytest.raises(UsageError):
        RunConfig("plan", node_limit=0)


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hytep", "validate", "--case", "fig3_low_demand"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "hytep", "plan"], capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
    assert json.loads(proc.stderr.strip().splitlines()[-1])["exit_code"] == EXIT_USAGE
