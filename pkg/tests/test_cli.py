import csv
import io
import json

import numpy as np
import pytest

from interfmap.cli import main, parse_budgets, run_command
from interfmap.loadmodel import random_scenario
from interfmap.maxmin import CanonicalProblem, solve_canonical
from interfmap.core import MonotoneNorm
from interfmap.report import Report, emit_report, fmt_number
from interfmap.scenario import (
    ScenarioFileError,
    builtin_names,
    dump_scenario,
    load_input,
    load_scenario,
    parse_scenario,
)

MINIMAL = {
    "num_bs": 1,
    "num_users": 1,
    "assignment": [0],
    "pathloss": {"units": "db", "values": [[-10.0]]},
    "demands_bps": [1e5],
    "resource_blocks": 10,
    "bandwidth_hz": 180e3,
    "noise_power_w": 1e-12,
}


def write(tmp_path, doc, name="s.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if isinstance(doc, dict) else doc)
    return str(path)


class TestScenarioFiles:
    def test_minimal_file(self, tmp_path):
        s = load_scenario(write(tmp_path, MINIMAL))
        assert s.gains[0, 0] == pytest.approx(0.1)
        assert s.power is None and s.load.tolist() == [1.0]

    def test_psd_noise(self, tmp_path):
        doc = dict(MINIMAL)
        del doc["noise_power_w"]
        doc["noise_psd_dbm_hz"] = -174.0
        assert load_scenario(write(tmp_path, doc)).noise == pytest.approx(10 ** -20.4 * 180e3)

    @pytest.mark.parametrize("change, needle", [
        ({"assignment": [3]}, "out of range"),
        ({"assignment": [0.5]}, "assignment"),
        ({"pathloss": {"units": "watts", "values": [[1.0]]}}, "pathloss.units"),
        ({"demands_bps": [1.0, 2.0]}, "demands_bps"),
        ({"noise_psd_dbm_hz": -174.0}, "exactly one"),
        ({"noise_power_w": 0.0}, "positive"),
        ({"num_bs": 0}, "num_bs"),
    ])
    def test_errors_name_the_field(self, tmp_path, change, needle):
        with pytest.raises(ScenarioFileError, match=needle):
            load_scenario(write(tmp_path, {**MINIMAL, **change}))

    def test_missing_field(self, tmp_path):
        doc = dict(MINIMAL)
        del doc["resource_blocks"]
        with pytest.raises(ScenarioFileError, match="resource_blocks"):
            load_scenario(write(tmp_path, doc))

    def test_json_syntax_error_location(self, tmp_path):
        with pytest.raises(ScenarioFileError, match=r"s\.json:2:3"):
            load_scenario(write(tmp_path, '{"num_bs": 1,\n  oops}'))

    def test_round_trip(self, tmp_path):
        s = random_scenario(4, seed=2, rate_cap=5e6)
        path = tmp_path / "r.json"
        dump_scenario(s, path)
        assert load_scenario(str(path)) == s

    def test_builtins(self):
        assert {"five_bs", "affine_1d", "two_user"} <= set(builtin_names())
        assert load_scenario("builtin:five_bs").num_bs == 5
        assert load_input("builtin:affine_1d").kind == "affine"
        with pytest.raises(ScenarioFileError):
            load_scenario("builtin:affine_1d")

    def test_synthetic_validation(self):
        with pytest.raises(ScenarioFileError):
            parse_scenario('{"kind": "affine", "matrix": [[0.5]], "offset": [0.0]}')
        with pytest.raises(ScenarioFileError):
            parse_scenario('{"kind": "nope"}')


class TestReport:
    def test_number_format(self):
        assert fmt_number(1 / 3) == "0.333333333333"
        assert fmt_number(True) == "true" and fmt_number(None) == ""

    def test_emission_deterministic(self, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
        r1 = Report("x", "d", {"a": np.float64(0.5), "v": np.array([1.0, np.inf])})
        r2 = Report("x", "d", {"a": np.float64(0.5), "v": np.array([1.0, np.inf])})
        for fmt in ("table", "csv", "json"):
            assert emit_report(r1, fmt) == emit_report(r2, fmt)
        doc = json.loads(emit_report(r1, "json"))
        assert doc["timestamp"] == "1970-01-01T00:00:00+00:00"
        assert doc["result"]["v"] == [1.0, None]

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            emit_report(Report("x", "d", {}), "xml")


class TestBudgets:
    def test_grids(self):
        np.testing.assert_allclose(parse_budgets("1:3:3"), [1, 2, 3])
        np.testing.assert_allclose(parse_budgets("1e-3:1e3:7log"), np.geomspace(1e-3, 1e3, 7))

    @pytest.mark.parametrize("bad", ["1:2", "0:1:3", "2:1:3", "1:2:0", "1:1:3"])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            parse_budgets(bad)


class TestCommands:
    def test_feasibility_json(self, capsys):
        assert main(["feasibility", "--scenario", "builtin:five_bs", "--format", "json"]) == 0
        res = json.loads(capsys.readouterr().out)["result"]
        assert res["feasible"] is True and res["rho"] == pytest.approx(res["rho_coupling"], rel=1e-8)

    def test_fixed_point_infeasible_exit_2(self, tmp_path):
        path = write(tmp_path, {"kind": "affine", "matrix": [[1.5]], "offset": [1.0]})
        assert main(["fixed-point", "--scenario", path]) == 2

    def test_fixed_point_ok(self, capsys):
        assert main(["fixed-point", "--scenario", "builtin:affine_1d", "--format", "csv"]) == 0
        row = [l for l in capsys.readouterr().out.splitlines() if l.startswith("point[0],")][0]
        assert float(row.split(",")[1]) == pytest.approx(2.0, rel=1e-9)

    def test_usage_errors_exit_1(self, capsys):
        assert main(["feasibility", "--scenario", "builtin:five_bs", "--bogus"]) == 1
        assert main(["maxmin", "--scenario", "builtin:five_bs"]) == 1
        assert main(["sweep", "--scenario", "builtin:affine_1d", "--budgets", "1:2"]) == 1
        assert main(["feasibility", "--scenario", "/nonexistent/x.json"]) == 1
        assert "error" in capsys.readouterr().err

    def test_maxmin_matches_library(self):
        code, rep = run_command(["maxmin", "--scenario", "builtin:two_user", "--budget", "3"])
        prob = CanonicalProblem(load_input("builtin:two_user").mapping, MonotoneNorm.l1())
        assert code == 0 and rep.result["utility"] == solve_canonical(prob, 3.0).utility

    def test_sweep_csv(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main(["sweep", "--scenario", "builtin:five_bs", "--budgets", "1e-3:1e3:25log",
                     "--format", "csv", "--output", str(out), "--jobs", "2"])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# transition_point=")
        assert lines[1] == "budget,utility,efficiency,utility_bound,efficiency_bound,lambda"
        rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
        assert len(rows) == 25
        eff = [float(r["efficiency"]) for r in rows]
        assert all(a >= b * (1 - 1e-9) for a, b in zip(eff, eff[1:]))
        for r in rows:
            assert float(r["utility"]) <= float(r["utility_bound"]) * (1 + 1e-9)
            assert float(r["efficiency"]) <= float(r["efficiency_bound"]) * (1 + 1e-9)

    def test_spectral_radius_and_capped(self):
        code, rep = run_command(["spectral-radius", "--scenario", "builtin:two_user"])
        assert code == 0 and rep.result["rho"] == pytest.approx(0.5)
        # five_bs carries no rate cap.
        assert main(["feasibility", "--scenario", "builtin:five_bs", "--capped"]) == 1

    def test_verify_axioms(self):
        code, rep = run_command(["verify-axioms", "--scenario", "builtin:five_bs", "--samples", "30"])
        assert code == 0 and rep.result["load"]["passed"]
        assert set(rep.result) == {"load", "power"}

    def test_capped_with_cap(self, tmp_path):
        s = random_scenario(3, seed=1, rate_cap=1e7)
        path = tmp_path / "c.json"
        dump_scenario(s, path)
        code, rep = run_command(["feasibility", "--scenario", str(path), "--capped"])
        assert code == 0 and rep.result["feasible"] is True

    def test_default_power_noted(self, tmp_path):
        path = write(tmp_path, MINIMAL)
        code, rep = run_command(["feasibility", "--scenario", path])
        assert code == 0 and "power_note" in rep.diagnostics

    def test_unwritable_output(self, capsys):
        assert main(["feasibility", "--scenario", "builtin:affine_1d", "--output", "/nonexistent/dir/x"]) == 1
