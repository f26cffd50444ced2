import json

import numpy as np
import pytest

from partial_ot.cli import main
from partial_ot.measure import DiscreteMeasure, measure_to_json


def write_measure(path, mu):
    path.write_text(json.dumps(measure_to_json(mu)))
    return str(path)


def deltas(*pairs):
    return DiscreteMeasure(np.array([[x] for x, _ in pairs], dtype=float), [w for _, w in pairs])


class TestSolve:
    def test_mm_partial_fixture_plan(self, tmp_path, capsys):
        code = main(["solve", "--problem", "mm_partial", "--m", "1", "--fixtures", "example42", "--out", str(tmp_path)])
        assert code == 0
        plan = (tmp_path / "plan.csv").read_text().splitlines()
        assert plan[0] == "# partial-ot v1"
        assert plan[2] == "1,1,0,-3.0,0.0,3.0,1.0"
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["cost"] == pytest.approx(108.0)
        assert "iterations" in report["diagnostics"]
        actives = sorted(p.name for p in tmp_path.glob("active_*.csv"))
        assert actives == ["active_1.csv", "active_2.csv", "active_3.csv"]

    def test_barycenter_fixture_atoms(self, tmp_path):
        code = main(["solve", "--problem", "barycenter", "--m", "2", "--fixtures", "example42", "--out", str(tmp_path)])
        assert code == 0
        rows = (tmp_path / "barycenter.csv").read_text().splitlines()[2:]
        xs = sorted(float(r.split(",")[0]) for r in rows)
        assert xs == [-1.0, 1.0]

    def test_ot_with_json_inputs(self, tmp_path):
        a = write_measure(tmp_path / "a.json", deltas((0, 1.0)))
        b = write_measure(tmp_path / "b.json", deltas((3, 1.0)))
        code = main(["solve", "--problem", "ot", "--input", a, b, "--out", str(tmp_path / "o")])
        assert code == 0
        report = json.loads((tmp_path / "o" / "report.json").read_text())
        assert report["cost"] == pytest.approx(9.0)

    def test_malformed_json_is_input_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        code = main(["solve", "--problem", "ot", "--input", str(bad), str(bad), "--out", str(tmp_path / "o")])
        assert code == 2

    def test_missing_m_is_input_error(self, tmp_path):
        code = main(["solve", "--problem", "mm_partial", "--fixtures", "example42", "--out", str(tmp_path)])
        assert code == 2

    def test_tensor_cap_is_input_error(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PARTIAL_OT_MAX_TENSOR", "2")
        code = main(["solve", "--problem", "mm_partial", "--m", "1", "--fixtures", "example42", "--out", str(tmp_path)])
        assert code == 2

    def test_no_partial_files_left_behind(self, tmp_path):
        main(["solve", "--problem", "mm", "--fixtures", "prop41", "--resolution", "4", "--m", "1", "--out", str(tmp_path)])
        assert not list(tmp_path.glob("*.tmp*"))


class TestSweep:
    def test_three_point_grid(self, tmp_path):
        code = main(
            ["sweep", "--m-grid", "0.6:0.9:0.15", "--eps", "0.5", "--resolution", "6",
             "--out", str(tmp_path), "--format", "csv,svg,json"]
        )
        assert code == 0
        values = (tmp_path / "values.csv").read_text().splitlines()
        assert values[0] == "# partial-ot v1"
        rows = [r.split(",") for r in values[2:]]
        assert [float(r[0]) for r in rows] == [0.6, 0.75, 0.9]
        costs = [float(r[2]) for r in rows]
        assert costs == sorted(costs)  # value curve nondecreasing in m
        violations = json.loads((tmp_path / "violations.json").read_text())
        pairs = {(v["m"], v["m_bar"]) for v in violations}
        assert pairs == {(0.6, 0.75), (0.6, 0.9), (0.75, 0.9)}
        svg = (tmp_path / "sweep.svg").read_text()
        assert svg.startswith("<svg") and "polyline" in svg

    def test_single_point_grid_has_no_pairs(self, tmp_path):
        code = main(["sweep", "--m-grid", "0.75:0.75:0.1", "--resolution", "5", "--out", str(tmp_path)])
        assert code == 0
        assert json.loads((tmp_path / "violations.json").read_text()) == []

    def test_bad_grid_rejected(self, tmp_path):
        assert main(["sweep", "--m-grid", "nonsense", "--out", str(tmp_path)]) == 2


class TestVerify:
    def test_single_check(self, tmp_path, capsys):
        code = main(["verify", "--check", "equivalence", "--fixtures", "example42", "--m", "1", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "equivalence" in out and "PASS" in out

    def test_all_checks_deterministic_bytes(self, tmp_path):
        code = main(["verify", "--all", "--seed", "7", "--out", str(tmp_path / "a")])
        assert code == 0
        code = main(["verify", "--all", "--seed", "7", "--out", str(tmp_path / "b")])
        assert code == 0
        assert (tmp_path / "a" / "checks.jsonl").read_bytes() == (tmp_path / "b" / "checks.jsonl").read_bytes()

    def test_unknown_check_rejected(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            main(["verify", "--check", "nope", "--out", str(tmp_path)])
        assert err.value.code == 2

    def test_naive_extension_by_name(self, tmp_path):
        code = main(["verify", "--check", "naive-extension", "--eps", "0.5", "--m", "0.75",
                     "--resolution", "6", "--out", str(tmp_path)])
        assert code == 0
        line = json.loads((tmp_path / "checks.jsonl").read_text())
        assert line["passed"] is True
