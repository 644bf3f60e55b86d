"""CLI contract tests: exit codes, JSON output, reproducibility."""

import json
import math
import subprocess
import sys

import pytest

from detqkd.cli import main

SQ17 = math.sqrt(17.0)


def run_cli(capsys, *argv) -> tuple[int, dict | None]:
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


class TestSchemeCommands:
    def test_validate_three_one(self, capsys):
        code, data = run_cli(capsys, "scheme", "validate", "--name", "three-one")
        assert code == 0
        assert data["all_passed"] is True
        names = {c["name"] for c in data["checks"]}
        assert "determinism_both_bases" in names
        assert "inference_grid_three_one" in names

    def test_validate_k1_complementarity(self, capsys):
        code, data = run_cli(capsys, "scheme", "validate", "--name", "k", "--k", "1")
        assert code == 0
        comp = next(c for c in data["checks"] if c["name"] == "complementarity_deviation")
        assert comp["passed"] is True
        # deviation reported in the detail is zero at machine precision
        assert float(comp["detail"].split()[-1]) <= 1e-12

    @pytest.mark.parametrize("name,k", [("product", None), ("k4", "0.5")])
    def test_validate_other_schemes(self, capsys, name, k):
        argv = ["scheme", "validate", "--name", name] + (["--k", k] if k else [])
        code, data = run_cli(capsys, *argv)
        assert code == 0
        assert data["all_passed"] is True

    def test_degenerate_k_is_usage_error(self, capsys):
        code = main(["scheme", "validate", "--name", "k", "--k", "1e-9"])
        capsys.readouterr()
        assert code == 2

    def test_missing_k_is_usage_error(self, capsys):
        code = main(["scheme", "validate", "--name", "k"])
        capsys.readouterr()
        assert code == 2

    def test_unknown_scheme_is_usage_error(self, capsys):
        code = main(["scheme", "validate", "--name", "bb84"])
        capsys.readouterr()
        assert code == 2

    def test_dump(self, capsys):
        code, data = run_cli(capsys, "scheme", "dump", "--name", "k4", "--k", "2")
        assert code == 0
        assert data["name"] == "k4" and data["k"] == 2.0
        assert len(data["pairs"]) == 4
        assert len(data["basis_b"]["vectors"]) == 4


class TestQkdCommand:
    def test_defaults_small(self, capsys):
        code, data = run_cli(capsys, "qkd", "--photons", "60", "--check", "10", "--seed", "1")
        assert code == 0
        s = data["summary"]
        assert s["verdicts"] == ["KEY"]
        assert s["keys_match"] is True
        assert s["observed"]["inconsistent_outcomes"] == 0
        assert len(data["transcript"]["photons"]) == 60

    def test_zero_photons_usage_error(self, capsys):
        code = main(["qkd", "--photons", "0"])
        capsys.readouterr()
        assert code == 2

    def test_check_must_leave_key_bits(self, capsys):
        code = main(["qkd", "--photons", "10", "--check", "10"])
        capsys.readouterr()
        assert code == 2

    def test_undetected_attack_bound(self, capsys):
        code, data = run_cli(capsys, "qkd", "--photons", "110", "--check", "100", "--seed", "3")
        assert code == 0
        bound = data["summary"]["undetected_attack_bound"]["value"]
        assert bound == pytest.approx((1 - (2 - math.sqrt(2)) / 4) ** 100, rel=1e-12)
        assert bound == pytest.approx(1.3e-7, rel=0.05)

    def test_bit_reproducible(self, capsys, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        for target in (a, b):
            code = main(
                ["qkd", "--photons", "80", "--check", "20", "--seed", "9",
                 "--evan", "naive", "--out", str(target)]
            )
            capsys.readouterr()
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seed_recorded_when_generated(self, capsys, monkeypatch):
        monkeypatch.delenv("DETQKD_SEED", raising=False)
        code, data = run_cli(capsys, "qkd", "--photons", "20", "--check", "0", "--summary-only")
        assert code == 0
        assert data["summary"]["seed_generated"] is True
        assert isinstance(data["summary"]["seed"], int)

    def test_env_seed_fallback(self, capsys, monkeypatch):
        monkeypatch.setenv("DETQKD_SEED", "314")
        code, data = run_cli(capsys, "qkd", "--photons", "20", "--check", "0", "--summary-only")
        assert code == 0
        assert data["summary"]["seed"] == 314
        assert data["summary"]["seed_generated"] is False

    def test_naive_evan_band_fields(self, capsys):
        code, data = run_cli(
            capsys, "qkd", "--photons", "3000", "--check", "100", "--seed", "5",
            "--evan", "naive", "--summary-only",
        )
        assert code == 0
        s = data["summary"]
        assert "expected_rate" in s and "band_3sigma" in s
        # the naive attack disturbs more than the optimum, so the observed
        # rate is far above the optimal band
        assert s["observed"]["observed_rate"] > s["expected_rate"]


class TestCommCommand:
    def test_message_round_trip(self, capsys):
        code, data = run_cli(capsys, "comm", "--message", "++--", "--seed", "7")
        assert code == 0
        s = data["summary"]
        assert s["verdicts"] == ["MESSAGE"]
        assert s["message_delivered"] == "++--"
        assert s["message_exact"] is True

    def test_message_required(self, capsys):
        code = main(["comm"])
        capsys.readouterr()
        assert code == 2

    def test_bad_message_usage_error(self, capsys):
        code = main(["comm", "--message", "+0-", "--seed", "1"])
        capsys.readouterr()
        assert code == 2

    def test_replay_table3(self, capsys):
        code, data = run_cli(capsys, "comm", "--replay-table3")
        assert code == 0
        assert data["reconstructed_message"] == "+---++-"
        assert data["rows"]["states_sent"] == ["1+", "3+", "4-", "4-", "1-", "2+", "1-", "3+", "3-"]
        assert all(c["passed"] for c in data["checks"])

    def test_sessions_aggregate(self, capsys):
        code, data = run_cli(
            capsys, "comm", "--message", "+-+-", "--sessions", "5", "--seed", "11",
        )
        assert code == 0
        assert len(data["summary"]["verdicts"]) == 5
        assert data["summary"]["abort_rate"] == 0.0
        assert "transcript" not in data


class TestEveCommands:
    def test_optimize_k1(self, capsys):
        code, data = run_cli(
            capsys, "eve", "optimize", "--scheme", "k", "--k", "1",
            "--restarts", "5", "--seed", "21",
        )
        assert code == 0
        assert data["p_min"] == pytest.approx((2 - math.sqrt(2)) / 4, abs=1e-4)
        assert data["abs_difference"] < 1e-4
        assert data["converged"] is True
        assert len(data["history"]) == 5
        assert len(data["strategy"]["resend"]) == 4
        assert data["strategy"]["measurement"]["label"] == "E"

    def test_sweep_single_point_four_pair(self, capsys):
        code, data = run_cli(
            capsys, "eve", "sweep", "--scheme", "k4", "--k-grid", "1",
            "--restarts", "6", "--seed", "22",
        )
        assert code == 0
        point = data["points"][0]
        assert point["p_min_closed_form"] == pytest.approx(0.25)
        assert point["abs_difference"] < 1e-3
        assert data["any_flagged"] is False

    def test_sweep_three_one_closed_form(self, capsys):
        code, data = run_cli(
            capsys, "eve", "sweep", "--scheme", "three-one", "--k-grid", "1",
            "--restarts", "6", "--seed", "23",
        )
        assert code == 0
        assert data["points"][0]["p_min_closed_form"] == pytest.approx(1 / 6)

    def test_sweep_csv(self, capsys, tmp_path):
        csv_path = tmp_path / "sweep.csv"
        code, data = run_cli(
            capsys, "eve", "sweep", "--scheme", "k", "--k-grid", "1",
            "--restarts", "4", "--seed", "24", "--csv", str(csv_path),
        )
        assert code == 0
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "k,p_min_numeric,p_min_closed_form,abs_difference,flagged"
        assert len(lines) == 2

    def test_sweep_empty_grid_usage_error(self, capsys):
        code = main(["eve", "sweep", "--scheme", "k", "--k-grid", ",", "--seed", "1"])
        capsys.readouterr()
        assert code == 2

    def test_sweep_reproducible_up_to_wall_time(self, capsys, tmp_path):
        # every scientific field is seed-reproducible; the recorded wall
        # time is the one legitimately varying entry
        outputs = []
        for name in ("a.json", "b.json"):
            path = tmp_path / name
            code = main(
                ["eve", "sweep", "--scheme", "k", "--k-grid", "0.5,1", "--restarts", "3",
                 "--seed", "25", "--out", str(path)]
            )
            capsys.readouterr()
            assert code == 0
            data = json.loads(path.read_text())
            del data["metadata"]["wall_time_s"]
            outputs.append(data)
        assert outputs[0] == outputs[1]

    def test_strategy_file_round_trip(self, capsys, tmp_path):
        # a saved optimization report drives a session through --evan-file
        report_path = tmp_path / "strategy.json"
        code = main(
            ["eve", "optimize", "--scheme", "k", "--k", "1", "--restarts", "4",
             "--seed", "26", "--out", str(report_path)]
        )
        capsys.readouterr()
        assert code == 0
        code, data = run_cli(
            capsys, "qkd", "--photons", "2000", "--check", "100", "--seed", "27",
            "--evan-file", str(report_path), "--summary-only",
        )
        assert code == 0
        s = data["summary"]
        assert s["evan"] == "file"
        # the loaded attack disturbs the channel at roughly the optimal rate
        assert 0.10 < s["observed"]["observed_rate"] < 0.20


class TestGuessCommand:
    def test_k1(self, capsys):
        code, data = run_cli(capsys, "guess", "--scheme", "k", "--k", "1")
        assert code == 0
        assert data["guess_odds"] == pytest.approx(0.8535533905932737, abs=1e-9)
        assert data["abs_difference"] <= 1e-12

    def test_k4_parameter(self, capsys):
        code, data = run_cli(capsys, "guess", "--scheme", "k", "--k", "4")
        assert code == 0
        assert data["guess_odds"] == pytest.approx(0.5 + 1 / (2 * SQ17), abs=1e-9)

    def test_three_one(self, capsys):
        code, data = run_cli(capsys, "guess", "--scheme", "three-one")
        assert code == 0
        assert data["guess_odds"] == pytest.approx(0.5, abs=1e-9)

    def test_four_pair_has_no_closed_form(self, capsys):
        code, data = run_cli(capsys, "guess", "--scheme", "k4", "--k", "1")
        assert code == 0
        assert data["guess_odds"] == pytest.approx(0.75, abs=1e-9)
        assert data["closed_form"] is None
        assert data["abs_difference"] is None


class TestConsoleEntryPoint:
    def test_installed_script(self):
        result = subprocess.run(
            [sys.executable, "-m", "detqkd.cli", "guess", "--scheme", "three-one"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert json.loads(result.stdout)["guess_odds"] == pytest.approx(0.5)
