"""Command-line behavior that needs no compiler: offline campaigns, report
rendering, and error exit codes (0 ok, 2 config)."""

import json

from click.testing import CliRunner

from conftest import offline_campaign_config
from driversmith.cli import main
from driversmith.config import dump_config


def write_offline_config(tmp_path, **overrides):
    cfg = offline_campaign_config(tmp_path / "run", **overrides)
    path = tmp_path / "campaign.yaml"
    path.write_text(dump_config(cfg))
    return path, tmp_path / "run"


class TestFuzzCommand:
    def test_offline_campaign_runs_to_halt(self, tmp_path):
        cfg_path, workdir = write_offline_config(tmp_path)
        result = CliRunner().invoke(main, ["fuzz", "--config", str(cfg_path)])
        assert result.exit_code == 0, result.output
        assert "stop reason: no_progress" in result.output
        assert "iterations: 11" in result.output
        assert "covered branches: 21" in result.output
        assert (workdir / "bank" / "manifest.jsonl").exists()

    def test_resume_flag_continues_previous_run(self, tmp_path):
        cfg_path, workdir = write_offline_config(tmp_path, max_iterations=2)
        runner = CliRunner()
        assert runner.invoke(main, ["fuzz", "--config", str(cfg_path)]).exit_code == 0
        cfg_path2, _ = write_offline_config(tmp_path)  # unlimited, same workdir
        result = runner.invoke(main, ["fuzz", "--config", str(cfg_path2), "--resume"])
        assert result.exit_code == 0, result.output
        assert "iterations: 11" in result.output

    def test_missing_config_file_exits_two(self):
        result = CliRunner().invoke(main, ["fuzz", "--config", "/nonexistent.yaml"])
        assert result.exit_code == 2

    def test_malformed_config_exits_two(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("generation: [unclosed\n")
        result = CliRunner().invoke(main, ["fuzz", "--config", str(bad)])
        assert result.exit_code == 2
        assert "config error" in result.output

    def test_offline_without_records_exits_two(self, tmp_path):
        cfg_path, _ = write_offline_config(tmp_path, records_dir="")
        result = CliRunner().invoke(main, ["fuzz", "--config", str(cfg_path)])
        assert result.exit_code == 2
        assert "records_dir" in result.output


class TestBankGatedCommands:
    def test_infer_constraints_needs_a_bank(self, tmp_path):
        cfg_path, _ = write_offline_config(tmp_path)
        result = CliRunner().invoke(main, ["infer-constraints", "--config", str(cfg_path)])
        assert result.exit_code == 2
        assert "bank is empty" in result.output

    def test_fuse_needs_a_bank(self, tmp_path):
        cfg_path, _ = write_offline_config(tmp_path)
        result = CliRunner().invoke(main, ["fuse", "--config", str(cfg_path)])
        assert result.exit_code == 2
        assert "bank is empty" in result.output


class TestReportCommand:
    def test_renders_csv_and_figures_for_campaign(self, tmp_path):
        cfg_path, workdir = write_offline_config(tmp_path)
        runner = CliRunner()
        assert runner.invoke(main, ["fuzz", "--config", str(cfg_path)]).exit_code == 0
        out = tmp_path / "report"
        result = runner.invoke(
            main,
            ["report", "--campaign", str(workdir), "--out", str(out), "--label", "offline"],
        )
        assert result.exit_code == 0, result.output
        assert (out / "offline.csv").exists()
        assert (out / "coverage.png").exists()
        assert (out / "energy_offline.png").exists()
        csv_lines = (out / "offline.csv").read_text().splitlines()
        assert len(csv_lines) == 1 + 11  # header + one row per iteration
        # every rendered path is echoed for scripting
        for name in ("offline.csv", "coverage.png"):
            assert any(name in line for line in result.output.splitlines())

    def test_missing_campaign_dir_exits_two(self, tmp_path):
        result = CliRunner().invoke(
            main, ["report", "--campaign", str(tmp_path / "nope"), "--out", str(tmp_path / "o")]
        )
        assert result.exit_code == 2


class TestRunDriverCommand:
    def test_missing_driver_file_exits_two(self, tmp_path):
        cfg_path, _ = write_offline_config(tmp_path)
        result = CliRunner().invoke(
            main, ["run-driver", "--config", str(cfg_path), "--driver", str(tmp_path / "no.c")]
        )
        assert result.exit_code == 2
