import json

import numpy as np
import pytest
from numpy.testing import assert_allclose
from openpyxl import load_workbook

from cli.app import (
    EXIT_CONFIG, EXIT_DEGENERATE, EXIT_NON_CONVERGENCE, EXIT_OK, EXIT_PARSE, build_parser, exit_code_for, run,
)
from core.data_processor import DataProcessor
from core.exceptions import (
    ConfigError, DataParsingError, EstimationFailureError, ExcelExportError, InvalidParameterError,
    ModelDegeneracyError, NonConvergenceError,
)
from core.models import RATE_NAMES

from .conftest import PUBLISHED_THETA


THETA_ARG = ",".join(str(v) for v in PUBLISHED_THETA)


def run_json(tmp_path, *argv):
    output = tmp_path / "report.json"
    code = run([*argv, "--output", str(output)])
    assert code == EXIT_OK
    return json.loads(output.read_text(encoding="utf-8"))


def test_estimate(tmp_path, tables_path, capsys):
    document = run_json(tmp_path, "estimate", "--input", str(tables_path))
    assert document["command"] == "estimate"
    pooled = [document["estimation"]["pooled_theta"][name] for name in RATE_NAMES]
    assert_allclose(pooled, PUBLISHED_THETA, atol=3.5e-3)
    assert document["dataset"]["total_transitions"] == 1000
    assert document["estimation"]["weights"] == pytest.approx({"1": 0.8, "2": 0.15, "3": 0.05})
    assert "Объединённая оценка" in capsys.readouterr().out


def test_summarize_with_model_and_example_config(tmp_path, model_path, example_config_path):
    document = run_json(
        tmp_path, "summarize", "--model", str(model_path), "--config", str(example_config_path)
    )
    summary = document["summary"]
    assert summary["sojourn"]["s1"] == pytest.approx(3.1883, abs=1e-4)
    assert summary["sojourn"]["var_s1"] == pytest.approx(8.8975, abs=2e-3)
    assert summary["sojourn"]["s1_years_months"] == [3, 2]
    assert_allclose(summary["horizons"][0]["occupancy"], [0.51983, 0.37204, 0.07104, 0.03709], atol=1e-4)
    assert_allclose(summary["horizons"][0]["expected_counts"], [1559.48, 1116.13, 213.11, 111.28], atol=0.5)
    assert_allclose(summary["limiting"]["pi"], [0.0, 0.0, 0.70959, 0.29041], atol=1e-5)
    assert summary["limiting"]["covariance"][0][0] == pytest.approx(0.087268, abs=1e-5)


def test_flags_override_config_file(tmp_path, example_config_path):
    document = run_json(
        tmp_path, "summarize", "--theta", THETA_ARG, "--config", str(example_config_path),
        "--pi0", "1,0,0,0", "--horizons", "2", "--strict-gradient",
    )
    summary = document["summary"]
    assert summary["pi0"] == [1.0, 0.0, 0.0, 0.0]
    assert summary["u0"] == [2100.0, 900.0, 0.0, 0.0]
    assert [h["t"] for h in summary["horizons"]] == [2.0]
    assert summary["sojourn"]["var_s1"] is None
    assert summary["limiting"]["covariance"] is None


def test_absorb(tmp_path):
    document = run_json(tmp_path, "absorb", "--theta", THETA_ARG)
    absorption = document["absorption"]
    assert_allclose(absorption["etau"], [[4.9142, 1.9121], [2.9164, 1.0074]], atol=1e-4)
    assert_allclose(absorption["absorption_probabilities"], [[0.693249, 0.306751], [0.747721, 0.252279]], atol=1e-6)
    assert absorption["flags"] == []


def test_absorb_flags_unreachable_state(tmp_path):
    document = run_json(tmp_path, "absorb", "--theta", "0.3,0.1,0.02,0,0.2")
    assert document["absorption"]["flags"] == ["state 3 is unreachable: its E(tau) column is 0"]


def test_gof(tmp_path, tables_path, model_path):
    document = run_json(tmp_path, "gof", "--input", str(tables_path), "--model", str(model_path))
    gof = document["gof"]
    assert gof["pooled_chi_sq"] == pytest.approx(119.1, abs=0.6)
    assert gof["pooled_df"] == 27
    assert gof["reject_null"] is True
    assert gof["critical_value"] == pytest.approx(40.113, abs=1e-3)


def test_report_all_with_workbook(tmp_path, tables_path):
    xlsx = tmp_path / "report.xlsx"
    document = run_json(tmp_path, "report-all", "--input", str(tables_path), "--xlsx", str(xlsx))
    assert set(document) == {"command", "dataset", "estimation", "summary", "absorption", "gof"}
    assert load_workbook(xlsx).sheetnames == ["Сводка", "dataset", "estimation", "summary", "absorption", "gof"]


def test_estimated_model_feeds_summarize(tmp_path, tables_path):
    estimate = tmp_path / "estimate.json"
    assert run(["estimate", "--input", str(tables_path), "--output", str(estimate)]) == EXIT_OK
    model = tmp_path / "model.json"
    model.write_text(json.dumps(json.loads(estimate.read_text(encoding="utf-8"))["estimation"]), encoding="utf-8")
    document = run_json(tmp_path, "summarize", "--model", str(model))
    assert document["summary"]["sojourn"]["var_s1"] is not None


def test_simulate_is_reproducible(tmp_path):
    outputs = []
    for name in ("a.txt", "b.txt"):
        path = tmp_path / name
        argv = ["simulate", "--theta", THETA_ARG, "--subjects", "200", "--visits", "5",
                "--skip-probability", "0.2", "--seed", "3", "--output", str(path)]
        assert run(argv) == EXIT_OK
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]


def test_simulate_without_dynamics(tmp_path):
    path = tmp_path / "tables.txt"
    argv = ["simulate", "--theta", "0,0,0,0,0", "--subjects", "10", "--visits", "3", "--output", str(path)]
    assert run(argv) == EXIT_OK
    dataset = DataProcessor.read_dataset(path)
    assert dataset.delta_ts == [1]
    assert dataset.table(1).count(1, 1) == 30


def test_simulate_then_estimate(tmp_path):
    records = tmp_path / "records.csv"
    argv = ["simulate", "--theta", THETA_ARG, "--subjects", "3000", "--visits", "8", "--seed", "17",
            "--format", "records", "--output", str(records)]
    assert run(argv) == EXIT_OK
    assert records.read_text(encoding="utf-8").startswith("subject,time,state")
    document = run_json(tmp_path, "estimate", "--input", str(records), "--estimator", "likelihood")
    pooled = document["estimation"]["pooled_theta"]
    estimated = [pooled[name] for name in RATE_NAMES]
    assert_allclose(estimated, PUBLISHED_THETA, atol=0.03)
    assert list(document["estimation"]["per_interval"]) == ["1"]


def test_exit_code_missing_input(tmp_path):
    assert run(["estimate", "--input", str(tmp_path / "absent.txt")]) == EXIT_PARSE


def test_exit_code_malformed_input(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("delta_t=1\n1,2,3\n", encoding="utf-8")
    assert run(["estimate", "--input", str(path)]) == EXIT_PARSE
    assert "Ошибка" in capsys.readouterr().err


def test_exit_code_non_convergence(tables_path):
    argv = ["estimate", "--input", str(tables_path), "--tol", "1e-300", "--max-iter", "1"]
    assert run(argv) == EXIT_NON_CONVERGENCE


def test_exit_code_degenerate_model():
    assert run(["summarize", "--theta", "0,0,0.1,0.1,0.1"]) == EXIT_DEGENERATE


@pytest.mark.parametrize("argv", [
    [],
    ["fit"],
    ["summarize"],
    ["estimate"],
    ["simulate", "--input", "data.txt"],
    ["summarize", "--theta", "0.1,0.2"],
    ["summarize", "--theta", "0.1,-0.2,0.1,0.1,0.1"],
    ["summarize", "--theta", "a,b,c,d,e"],
    ["gof", "--theta", THETA_ARG, "--alpha", "2"],
    ["estimate", "--estimator", "newton"],
])
def test_exit_code_bad_configuration(argv):
    assert run(argv) == EXIT_CONFIG


def test_missing_config_file_is_configuration_error(tmp_path, tables_path):
    argv = ["estimate", "--input", str(tables_path), "--config", str(tmp_path / "absent.json")]
    assert run(argv) == EXIT_CONFIG


@pytest.mark.parametrize("error, code", [
    (DataParsingError("x"), EXIT_PARSE),
    (ExcelExportError("x"), EXIT_PARSE),
    (NonConvergenceError("x", []), EXIT_NON_CONVERGENCE),
    (ConfigError("x"), EXIT_CONFIG),
    (InvalidParameterError("x"), EXIT_CONFIG),
    (ModelDegeneracyError("x"), EXIT_DEGENERATE),
    (EstimationFailureError("x"), EXIT_DEGENERATE),
])
def test_exit_code_mapping(error, code):
    assert exit_code_for(error) == code


def test_verbose_is_a_global_flag():
    args = build_parser().parse_args(["--verbose", "absorb", "--theta", THETA_ARG])
    assert args.verbose
    assert args.command == "absorb"
    assert np.isclose(float(args.theta.split(",")[0]), PUBLISHED_THETA[0])
