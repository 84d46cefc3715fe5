import json

import pytest

from mixedrates import cli
from mixedrates.acceptance import CheckResult


def run_cli(args):
    return cli.main(list(args))


class TestRatesCommand:
    def test_coupled_example(self, capsys):
        assert run_cli(["rates", "--alpha", "4", "--beta", "2", "--term", "2:1"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["tau_a"] == "1/6"
        assert out["tau_b"] == "1/3"
        assert out["regime"] == "coupled"

    def test_fraction_arguments(self, capsys):
        assert run_cli(["rates", "--alpha", "7/2", "--beta", "3/2"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["tau_a"] == "1/5"
        assert out["lambda0"] == "1"

    def test_invalid_profile_exits_3(self, capsys):
        assert run_cli(["rates", "--alpha", "2", "--beta", "3"]) == 3
        assert "alpha > beta" in capsys.readouterr().err

    def test_malformed_term_exits_3(self):
        assert run_cli(["rates", "--alpha", "4", "--beta", "2", "--term", "21"]) == 3

    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            run_cli(["rates", "--alpha", "4", "--beta", "2", "--frobnicate"])
        assert exc.value.code == 2


class TestSimulateCommand:
    def test_reruns_are_byte_identical(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text(
            "# comment\nexperiment = shorth\nn_values = 100, 200, 400, 800\n"
            "replicates = 50\nmaster_seed = 3\n"
        )
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run_cli(["simulate", "--config", str(cfg), "--out-dir", str(out1)]) == 0
        assert run_cli(["simulate", "--config", str(cfg), "--out-dir", str(out2)]) == 0
        assert (out1 / "records.csv").read_bytes() == (out2 / "records.csv").read_bytes()
        assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()

    def test_outputs_exist_and_parse(self, tmp_path):
        out = tmp_path / "run"
        assert (
            run_cli(
                [
                    "simulate", "--experiment", "shorth", "--n-values", "100,200,400,800",
                    "--replicates", "50", "--seed", "9", "--out-dir", str(out),
                ]
            )
            == 0
        )
        summary = json.loads((out / "summary.json").read_text())
        assert set(summary["rates"]) == {"m", "r"}
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["master_seed"] == 9
        assert (out / "plotdata" / "m_loglog.csv").exists()
        header = (out / "records.csv").read_text().splitlines()[0]
        assert header == "experiment,n,replicate,component,error,zero_flag,choice,tie_flag,diag_flags"

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text(
            "experiment = shorth\nn_values = 100, 200, 400, 800\n"
            "replicates = 50\nmaster_seed = 3\n"
        )
        out = tmp_path / "o"
        assert run_cli(
            ["simulate", "--config", str(cfg), "--seed", "4", "--out-dir", str(out)]
        ) == 0
        assert json.loads((out / "manifest.json").read_text())["master_seed"] == 4

    def test_unknown_config_key_exits_3(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("experiment = shorth\nwibble = 3\n")
        assert run_cli(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 3
        assert "unknown key" in capsys.readouterr().err

    def test_missing_experiment_exits_3(self, tmp_path):
        assert run_cli(["simulate", "--out-dir", str(tmp_path)]) == 3

    def test_bad_ladder_exits_3(self, tmp_path):
        assert (
            run_cli(
                [
                    "simulate", "--experiment", "shorth", "--n-values", "100,200",
                    "--replicates", "50", "--out-dir", str(tmp_path),
                ]
            )
            == 3
        )

    def test_summary_and_design_mode_recorded(self, tmp_path):
        out = tmp_path / "run"
        assert (
            run_cli(
                [
                    "simulate", "--experiment", "lasso", "--n-values", "60,120,240,480",
                    "--replicates", "50", "--seed", "3", "--out-dir", str(out),
                    "--summary", "rmse", "--design-mode", "fixed",
                ]
            )
            == 0
        )
        summary = json.loads((out / "summary.json").read_text())
        assert summary["error_summary"] == "rmse"
        assert summary["params"]["design_mode"] == "fixed"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["summary"] == "rmse"


class TestLimitCommand:
    def test_chernoff_csv(self, tmp_path):
        out = tmp_path / "draws.csv"
        assert (
            run_cli(
                ["limit", "--law", "chernoff", "--draws", "50", "--seed", "5",
                 "--out", str(out)]
            )
            == 0
        )
        lines = out.read_text().splitlines()
        assert lines[0] == "index,t"
        assert len(lines) == 51

    def test_lasso_first_to_stdout(self, capsys):
        assert run_cli(["limit", "--law", "lasso-first", "--draws", "5", "--seed", "5"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "index,u"
        assert len(lines) == 6

    def test_dump_two_line(self, capsys):
        assert run_cli(["limit", "--dump-sample", "two-line", "--draws", "4", "--seed", "7"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "index,x,y"
        assert all(line.split(",")[1] in ("-1.0", "1.0") for line in lines[1:])

    def test_law_and_dump_are_exclusive(self, capsys):
        assert run_cli(["limit", "--law", "chernoff", "--dump-sample", "laplace"]) == 2
        assert run_cli(["limit"]) == 2

    def test_deterministic_output(self, capsys):
        run_cli(["limit", "--law", "lasso-first", "--draws", "10", "--seed", "5"])
        first = capsys.readouterr().out
        run_cli(["limit", "--law", "lasso-first", "--draws", "10", "--seed", "5"])
        assert capsys.readouterr().out == first


class TestVerifyCommand:
    def _fake_results(self, all_pass):
        return [
            CheckResult("a", True, {}, "t"),
            CheckResult("b", all_pass, {"x": 1.0}, "t"),
        ]

    def test_exit_zero_when_all_pass(self, monkeypatch, tmp_path, capsys):
        monkeypatch.setattr(
            cli, "run_all", lambda tier, master_seed, workers, progress: self._fake_results(True)
        )
        assert run_cli(["verify", "--quick", "--out-dir", str(tmp_path)]) == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert [c["passed"] for c in manifest["checks"]] == [True, True]
        assert manifest["config"]["tier"] == "quick"

    def test_exit_four_on_failure(self, monkeypatch, capsys):
        monkeypatch.setattr(
            cli, "run_all", lambda tier, master_seed, workers, progress: self._fake_results(False)
        )
        assert run_cli(["verify", "--full"]) == 4
        assert "1/2 checks passed" in capsys.readouterr().out

    def test_tiers_are_exclusive(self):
        with pytest.raises(SystemExit) as exc:
            run_cli(["verify", "--quick", "--full"])
        assert exc.value.code == 2


def test_help_documents_exit_codes(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert "exit codes" in out
    assert "verification failed" in out
