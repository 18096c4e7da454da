"""Command line entry points via the click test runner."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from nbgate.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def test_help_lists_commands(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for command in ("serve", "scenario", "bench", "login", "logs", "blocks"):
        assert command in result.output


def test_scenario_command_prints_report(runner, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(main, ["scenario", "4", "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["scenario"] == 4
    assert report["passed"] is True
    assert json.loads(out.read_text()) == report


def test_scenario_command_accepts_quota_override(runner):
    result = runner.invoke(main, ["scenario", "5", "--quota-limit", "8"])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["limit"] == 8


def test_scenario_command_rejects_out_of_range(runner):
    result = runner.invoke(main, ["scenario", "9"])
    assert result.exit_code != 0
    assert "9" in result.output


def test_bench_command_writes_outputs(runner, tmp_path):
    result = runner.invoke(
        main,
        [
            "bench",
            "--requests", "6",
            "--delay", "0.01",
            "--workers", "4",
            "--out-dir", str(tmp_path),
        ],
    )
    assert result.exit_code == 0, result.output
    for name in ("bench_cached.csv", "bench_uncached.csv", "bench.png"):
        assert (tmp_path / name).exists()
    summary_text = result.output[: result.output.rindex("}") + 1]
    summary = json.loads(summary_text)
    assert summary["requests"] == 6
    assert summary["accounting_equal"] is True


def test_serve_help(runner):
    result = runner.invoke(main, ["serve", "--help"])
    assert result.exit_code == 0
    assert "--verify-delay" in result.output
