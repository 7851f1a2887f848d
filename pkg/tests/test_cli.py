import json

import pandas as pd
import pytest
from click.testing import CliRunner

from app.main import cli
from app.schemas.report import LawResult, SuiteReport
from app.services import verifier


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def rr_file(tmp_path, runner):
    path = tmp_path / "rr.json"
    result = runner.invoke(cli, ["gen", "--type", "randomized_response", "--n", "2", "--flip-prob", "0.25",
                                 "--output", str(path)])
    assert result.exit_code == 0, result.output
    return path


def test_gen_writes_dense_table(rr_file):
    data = json.loads(rr_file.read_text())
    assert data["domain"] == ["0", "1"]
    assert len(data["matrix"]) == 4
    assert all(len(row) == 4 for row in data["matrix"].values())
    assert data["matrix"]["0,0"][0] == "0.5625"


def test_gen_gaussian_large_n(tmp_path, runner):
    path = tmp_path / "gauss.json"
    result = runner.invoke(cli, ["gen", "--type", "gaussian_sum", "--n", "500", "--epsilon", "0.5",
                                 "--delta", str(2 ** -20), "--output", str(path)])
    assert result.exit_code == 0, result.output
    data = json.loads(path.read_text())
    assert data["generator"]["type"] == "gaussian_sum"
    assert data["generator"]["noise"]["kind"] == "gaussian"


def test_gen_missing_parameter(runner):
    result = runner.invoke(cli, ["gen", "--type", "randomized_response", "--n", "2"])
    assert result.exit_code == 2
    assert "error:" in result.output


def test_analyze_csv(tmp_path, runner, rr_file):
    out = tmp_path / "curve.csv"
    result = runner.invoke(cli, ["analyze", "--mechanism", str(rr_file), "--epsilons", "0,0.5,1.0986",
                                 "--format", "csv", "--output", str(out)])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["epsilon", "delta", "worst_x", "worst_y"]
    assert len(frame) == 3
    assert list(frame["delta"]) == sorted(frame["delta"], reverse=True)


def test_analyze_json(tmp_path, runner, rr_file):
    out = tmp_path / "report.json"
    result = runner.invoke(cli, ["analyze", "--mechanism", str(rr_file), "--epsilons", "0",
                                 "--solve-delta", "0", "--output", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert report["epsilon_max"] == pytest.approx(1.0986122886681098)
    assert report["epsilon_for_delta"]["epsilon"] == pytest.approx(1.0986122886681098, abs=1e-8)


def test_analyze_malformed_file(tmp_path, runner):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    result = runner.invoke(cli, ["analyze", "--mechanism", str(path)])
    assert result.exit_code == 2
    assert "not valid JSON" in result.output


def test_analyze_missing_file(tmp_path, runner):
    result = runner.invoke(cli, ["analyze", "--mechanism", str(tmp_path / "nope.json")])
    assert result.exit_code == 2


def test_semantic(tmp_path, runner, rr_file):
    prior = tmp_path / "prior.json"
    prior.write_text(json.dumps([{"database": "0,0", "weight": "0.5"}, {"database": "1,1", "weight": "0.5"}]))
    out = tmp_path / "semantic.json"
    result = runner.invoke(cli, ["semantic", "--mechanism", str(rr_file), "--prior", str(prior),
                                 "--dp-epsilon", "1.0986", "--output", str(out)])
    assert result.exit_code == 0, result.output
    assert "epsilon_star=" in result.output
    report = json.loads(out.read_text())
    assert "game_losses" not in report
    assert len(report["per_transcript_loss"]) == 4
    assert "excess_ratio" in report["bound_margins"]


def test_semantic_csv_trace(tmp_path, runner, rr_file):
    prior = tmp_path / "prior.json"
    prior.write_text(json.dumps([{"database": "0,1", "weight": "1"}]))
    out = tmp_path / "trace.csv"
    result = runner.invoke(cli, ["semantic", "--mechanism", str(rr_file), "--prior", str(prior),
                                 "--real-db", "1,1", "--format", "csv", "--output", str(out)])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out)
    assert len(frame) == 4 * 2
    assert "weighting=real_db" in result.output


def test_counterexample(tmp_path, runner):
    out = tmp_path / "trace.csv"
    summary = tmp_path / "summary.json"
    result = runner.invoke(cli, ["counterexample", "--n", "20", "--output", str(out), "--summary", str(summary)])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["transcript", "ratio", "posterior_x0", "sd_game1"]
    assert json.loads(summary.read_text())["n"] == 20
    assert "mass_sd_at_least(0.45)=" in result.output


def test_verify_passes(runner):
    result = runner.invoke(cli, ["verify", "--suite", "claims", "--trials", "5", "--seed", "3"])
    assert result.exit_code == 0, result.output
    lines = [line for line in result.output.splitlines() if line.startswith(("PASS", "FAIL"))]
    assert len(lines) == 6
    assert all(line.startswith("PASS") for line in lines)


def test_verify_is_deterministic(runner):
    first = runner.invoke(cli, ["verify", "--suite", "claims", "--trials", "5", "--seed", "3"])
    second = runner.invoke(cli, ["verify", "--suite", "claims", "--trials", "5", "--seed", "3"])
    assert first.output == second.output


def test_verify_failure_exit_code(runner, monkeypatch):
    def failing_suite(suite, trials=None, seed=None):
        return SuiteReport(suite=suite, seed=0, trials=1, results=[
            LawResult(name="broken", passed=False, worst_margin=-1.0, trials=1),
        ])

    monkeypatch.setattr(verifier, "run_suite", failing_suite)
    result = runner.invoke(cli, ["verify", "--suite", "claims"])
    assert result.exit_code == 1
    assert "FAIL broken" in result.output


def test_verify_bad_trials(runner):
    result = runner.invoke(cli, ["verify", "--trials", "0"])
    assert result.exit_code == 2
