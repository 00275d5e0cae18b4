"""CLI contract: scenario ingestion, exit codes, output formats, and the
subcommand surfaces."""

import csv
import io
import json
import math

import pytest

from fedfair.cli import ScenarioFile, load_scenario_file, main, run_reproduce


@pytest.fixture
def scenario_620(tmp_path):
    path = tmp_path / "pair620.json"
    path.write_text(
        json.dumps(
            {
                "mu_e": 10,
                "sigma_sq": 1,
                "players": [{"id": "s", "n": 6}, {"id": "l", "n": 20}],
                "method": "uniform",
            }
        )
    )
    return str(path)


def run_cli(args, tmp_path, fmt="csv"):
    out = tmp_path / "out.txt"
    code = main(["--format", fmt, "--out", str(out), *args])
    return code, out.read_text() if out.exists() else ""


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    return [dict(zip(header, row)) for row in body]


class TestAudit:
    def test_motivating_pair_csv(self, scenario_620, tmp_path):
        code, text = run_cli(["audit", scenario_620], tmp_path)
        assert code == 0
        rows = parse_csv(text)
        players = [r for r in rows if r["kind"] == "player"]
        coalition = [r for r in rows if r["kind"] == "coalition"]
        assert len(players) == 2 and len(coalition) == 1
        by_id = {r["id"]: r for r in players}
        assert math.isclose(float(by_id["s"]["error"]), 1060 / 676)
        assert math.isclose(float(by_id["l"]["error"]), 332 / 676)
        summary = coalition[0]
        assert math.isclose(float(summary["max_ratio"]), 3.1927710843373496)
        assert float(summary["bound"]) == 5.0
        assert summary["egalitarian_satisfied"] == "true"
        assert summary["proportionality"] == "sub"
        assert summary["individually_rational"] == "true"

    def test_csv_and_json_carry_identical_numbers(self, scenario_620, tmp_path):
        code_csv, text_csv = run_cli(["audit", scenario_620], tmp_path, fmt="csv")
        code_json, text_json = run_cli(["audit", scenario_620], tmp_path, fmt="json")
        assert code_csv == code_json == 0
        csv_rows = parse_csv(text_csv)
        json_rows = json.loads(text_json)["rows"]
        assert len(csv_rows) == len(json_rows)
        for c_row, j_row in zip(csv_rows, json_rows):
            for key, value in j_row.items():
                if isinstance(value, float):
                    assert float(c_row[key]) == value

    def test_singleton_ratio_one(self, tmp_path):
        path = tmp_path / "solo.json"
        path.write_text(
            json.dumps(
                {
                    "mu_e": 10,
                    "sigma_sq": 1,
                    "players": [{"n": 5}],
                    "method": "local",
                }
            )
        )
        code, text = run_cli(["audit", str(path)], tmp_path)
        assert code == 0
        summary = [r for r in parse_csv(text) if r["kind"] == "coalition"][0]
        assert float(summary["max_ratio"]) == 1.0

    def test_table_format_rounds_to_three_significant_figures(
        self, scenario_620, tmp_path
    ):
        code, text = run_cli(["audit", scenario_620], tmp_path, fmt="table")
        assert code == 0
        assert "1.57" in text and "0.491" in text and "3.19" in text

    def test_dump_scenario_round_trips(self, scenario_620, tmp_path):
        dumped = tmp_path / "dumped.json"
        code, _ = run_cli(
            ["audit", scenario_620, "--dump-scenario", str(dumped)], tmp_path
        )
        assert code == 0
        original = load_scenario_file(scenario_620)
        reparsed = load_scenario_file(str(dumped))
        assert reparsed == original
        assert reparsed.to_scenario() == original.to_scenario()


class TestScenarioParsing:
    def write(self, tmp_path, data):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data) if not isinstance(data, str) else data)
        return str(path)

    def test_unknown_field_named(self, tmp_path, capsys):
        path = self.write(
            tmp_path,
            {"mu_e": 1, "sigma_sq": 1, "players": [{"n": 2}], "method": "local",
             "extra": 5},
        )
        assert main(["audit", path]) == 2
        assert "extra" in capsys.readouterr().err

    def test_missing_field_named(self, tmp_path, capsys):
        path = self.write(
            tmp_path, {"sigma_sq": 1, "players": [{"n": 2}], "method": "local"}
        )
        assert main(["audit", path]) == 2
        assert "mu_e" in capsys.readouterr().err

    def test_player_entry_diagnosed_by_index(self, tmp_path, capsys):
        path = self.write(
            tmp_path,
            {"mu_e": 1, "sigma_sq": 1, "players": [{"n": 2}, {"id": "x"}],
             "method": "local"},
        )
        assert main(["audit", path]) == 2
        assert "players[1]" in capsys.readouterr().err

    def test_unknown_method_rejected(self, tmp_path, capsys):
        path = self.write(
            tmp_path,
            {"mu_e": 1, "sigma_sq": 1, "players": [{"n": 2}],
             "method": "coarse_grained"},
        )
        assert main(["audit", path]) == 2
        assert "method" in capsys.readouterr().err

    def test_empty_players_rejected(self, tmp_path, capsys):
        path = self.write(
            tmp_path, {"mu_e": 1, "sigma_sq": 1, "players": [], "method": "local"}
        )
        assert main(["audit", path]) == 2
        assert "player" in capsys.readouterr().err.lower()

    def test_invalid_json_rejected(self, tmp_path, capsys):
        path = self.write(tmp_path, "{not json")
        assert main(["audit", path]) == 2
        assert "JSON" in capsys.readouterr().err

    def test_nonpositive_n_rejected(self, tmp_path):
        path = self.write(
            tmp_path,
            {"mu_e": 1, "sigma_sq": 1, "players": [{"n": -3}], "method": "local"},
        )
        assert main(["audit", path]) == 2

    def test_default_ids_are_positional(self):
        sfile = ScenarioFile.from_dict(
            {"mu_e": 1, "sigma_sq": 1, "players": [{"n": 2}, {"n": 3}],
             "method": "local"}
        )
        assert [pid for pid, _ in sfile.players] == ["p1", "p2"]


class TestReproduce:
    def test_motivating_table_matches(self, tmp_path):
        code, text = run_cli(["reproduce", "motivating"], tmp_path)
        assert code == 0
        rows = parse_csv(text)
        assert [r["n_l"] for r in rows] == ["20", "30", "40"]
        assert all(r["matches"] == "true" for r in rows)
        assert math.isclose(float(rows[0]["err_small"]), 1060 / 676)
        assert math.isclose(float(rows[2]["ratio"]), 915 / 133)

    def test_injected_noise_fails_self_test(self, capsys):
        buffer = io.StringIO()
        assert run_reproduce("motivating", "csv", buffer, mu_e=11.0) == 1

    def test_unknown_table_is_usage_error(self, tmp_path):
        code, _ = run_cli(["reproduce", "mystery"], tmp_path)
        assert code == 2


class TestVerify:
    def test_modularity_suite(self, tmp_path):
        code, text = run_cli(["verify", "modularity"], tmp_path)
        assert code == 0
        rows = parse_csv(text)
        # five properties per method, three methods
        assert len(rows) == 15
        honest = [r for r in rows if r["method"] in ("uniform", "fine_grained")]
        assert all(r["passed"] == "true" for r in honest)
        adversarial_p1 = [
            r
            for r in rows
            if r["method"] == "inverse_size_error" and r["property"] == "1"
        ][0]
        assert adversarial_p1["passed"] == "false"
        assert adversarial_p1["counterexample"]

    def test_propstab_small(self, tmp_path):
        code, text = run_cli(
            ["--seed", "42", "verify", "propstab", "--instances", "250"], tmp_path
        )
        assert code == 0
        summary = parse_csv(text)[0]
        assert summary["passed"] == "true"
        assert summary["instances"] == "250"

    def test_egalitarian_bound_small(self, tmp_path):
        code, text = run_cli(
            ["--seed", "42", "verify", "egalitarian-bound", "--instances", "250"],
            tmp_path,
            fmt="json",
        )
        assert code == 0
        summary = json.loads(text)["rows"][0]
        assert summary["passed"] is True
        assert summary["max_ratio_over_bound"] < 1.0

    def test_deterministic_given_seed(self, tmp_path):
        _, first = run_cli(
            ["--seed", "9", "verify", "egalitarian-bound", "--instances", "50"],
            tmp_path,
        )
        _, second = run_cli(
            ["--seed", "9", "verify", "egalitarian-bound", "--instances", "50"],
            tmp_path,
        )
        assert first == second


class TestSimulate:
    def test_motivating_pair(self, scenario_620, tmp_path):
        code, text = run_cli(
            ["--seed", "7", "simulate", scenario_620, "--trials", "20000"], tmp_path
        )
        assert code == 0
        rows = parse_csv(text)
        assert [r["id"] for r in rows] == ["l", "s"]
        closed = {r["id"]: float(r["closed_form"]) for r in rows}
        assert math.isclose(closed["s"], 1060 / 676)
        assert math.isclose(closed["l"], 332 / 676)
        assert all(abs(float(r["z_score"])) <= 5.0 for r in rows)
        assert all(r["trials"] == "20000" for r in rows)

    def test_single_trial_is_input_error(self, scenario_620, tmp_path, capsys):
        assert main(["simulate", scenario_620, "--trials", "1"]) == 2

    def test_non_integer_samples_rejected(self, tmp_path, capsys):
        path = tmp_path / "frac.json"
        path.write_text(
            json.dumps(
                {"mu_e": 10, "sigma_sq": 1, "players": [{"n": 6.5}, {"n": 20}],
                 "method": "uniform"}
            )
        )
        assert main(["simulate", str(path), "--trials", "100"]) == 2
        assert "integer" in capsys.readouterr().err


class TestScan:
    def test_motivating_sweep(self, tmp_path):
        code, text = run_cli(
            [
                "scan", "--ns", "6", "--nl-start", "20", "--nl-stop", "40",
                "--nl-step", "10", "--mu-e", "10", "--sigma-sq", "1",
            ],
            tmp_path,
        )
        assert code == 0
        rows = parse_csv(text)
        assert [r["n_l"] for r in rows] == ["20.0", "30.0", "40.0"]
        assert [r["proportionality"] for r in rows] == ["sub", "exact", "super"]
        assert [r["individually_rational"] for r in rows] == ["true", "true", "false"]
        for row in rows:
            assert math.isclose(float(row["defection_threshold"]), 30.0)
            assert math.isclose(float(row["subproportionality_threshold"]), 30.0)
        assert math.isclose(float(rows[1]["ratio"]), 5.0)

    def test_boundary_small_player_yields_infinite_thresholds(self, tmp_path):
        code, text = run_cli(
            [
                "scan", "--ns", "5", "--nl-start", "20", "--nl-stop", "30",
                "--nl-step", "10", "--mu-e", "10", "--sigma-sq", "1",
            ],
            tmp_path,
        )
        assert code == 0
        rows = parse_csv(text)
        assert all(r["defection_threshold"] == "Infinity" for r in rows)
        assert all(r["subproportionality_threshold"] == "Infinity" for r in rows)

    def test_zero_step_is_usage_error(self, tmp_path):
        code, _ = run_cli(
            [
                "scan", "--ns", "6", "--nl-start", "20", "--nl-stop", "40",
                "--nl-step", "0", "--mu-e", "10", "--sigma-sq", "1",
            ],
            tmp_path,
        )
        assert code == 2

    def test_empty_range_is_usage_error(self, tmp_path):
        code, _ = run_cli(
            [
                "scan", "--ns", "6", "--nl-start", "50", "--nl-stop", "40",
                "--nl-step", "10", "--mu-e", "10", "--sigma-sq", "1",
            ],
            tmp_path,
        )
        assert code == 2

    def test_infinity_survives_json(self, tmp_path):
        code, text = run_cli(
            [
                "scan", "--ns", "5", "--nl-start", "20", "--nl-stop", "20",
                "--nl-step", "1", "--mu-e", "10", "--sigma-sq", "1",
            ],
            tmp_path,
            fmt="json",
        )
        assert code == 0
        row = json.loads(text)["rows"][0]
        assert row["defection_threshold"] == math.inf


class TestArgumentErrors:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_missing_scenario_file(self, capsys):
        assert main(["audit", "/nonexistent/scenario.json"]) == 2
