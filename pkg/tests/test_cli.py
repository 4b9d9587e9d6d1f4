"""End-to-end tests of the command line and its exit codes."""

import json

import pandas as pd
import pytest
from pydantic import ValidationError

from src.exceptions import ConvergenceError, InvalidParameterError, ParseError
from src.main import exit_code_for, main
from src.schemas.loss import CheckLoss


@pytest.fixture
def dataset(tmp_path):
    path = tmp_path / "data.csv"
    code = main(
        ["synth", "--output", str(path), "--m", "3", "--n", "30", "--dim", "2", "--seed", "4"]
    )
    assert code == 0
    return path


def test_synth_writes_data_and_truth(dataset):
    frame = pd.read_csv(dataset)
    assert list(frame.columns) == ["task", "y", "x1", "x2"]
    assert len(frame) == 90
    truth = pd.read_csv(dataset.with_name("data_truth.csv"))
    assert list(truth.columns) == ["coefficient", "task_000", "task_001", "task_002"]
    assert len(truth) == 3


def test_synth_bakery_fixture(tmp_path):
    path = tmp_path / "bakery.csv"
    assert main(["synth", "--bakery", "--output", str(path), "--stores", "2", "--months", "1"]) == 0
    frame = pd.read_csv(path)
    assert "date" in frame.columns
    assert frame["task"].nunique() == 2


@pytest.mark.parametrize("method", ["fused", "stl", "dp"])
def test_fit_writes_coefficients(dataset, tmp_path, method):
    out = tmp_path / f"{method}.csv"
    assert main(["fit", "--data", str(dataset), "--method", method, "--c", "0.5", "--output", str(out)]) == 0
    coefficients = pd.read_csv(out, index_col="coefficient")
    assert coefficients.shape == (3, 3)
    if method == "dp":
        assert (coefficients.nunique(axis=1) == 1).all()


def test_cv_writes_scores_and_refit(dataset, tmp_path):
    out = tmp_path / "cv"
    code = main(
        [
            "cv",
            "--data",
            str(dataset),
            "--scheme",
            "kfold",
            "--folds",
            "3",
            "--c-grid",
            "0.2,1.0",
            "--output-dir",
            str(out),
        ]
    )
    assert code == 0
    scores = pd.read_csv(out / "cv_scores.csv")
    assert scores["c"].tolist() == [0.2, 1.0]
    assert list(scores.columns[3:6]) == ["fold_1", "fold_2", "fold_3"]
    assert scores["chosen"].sum() == 1
    assert (out / "refit.csv").exists()


def test_experiment_from_config_file(tmp_path):
    config = tmp_path / "experiment.json"
    config.write_text(
        json.dumps(
            {
                "epsilons": [0.0],
                "deltas": [0.0, 1.0],
                "replications": 1,
                "methods": ["stl", "dp"],
                "scale": {"m": 3, "n": 20, "dim": 2},
            }
        ),
        encoding="utf-8",
    )
    out = tmp_path / "report"
    assert main(["experiment", "--config", str(config), "--output-dir", str(out)]) == 0
    results = pd.read_csv(out / "results.csv")
    assert len(results) == 4
    assert (out / "summary.csv").exists()
    assert (out / "plotdata.csv").exists()


def test_newsvendor_on_the_fixture(tmp_path):
    out = tmp_path / "news"
    args = ["newsvendor", "--stores", "2", "--fixture-months", "3", "--methods", "stl,dp"]
    assert main([*args, "--months", "1,2", "--output-dir", str(out)]) == 0
    assert len(pd.read_csv(out / "results.csv")) == 4


# --- exit codes ---


def test_missing_file_is_a_data_error(tmp_path):
    assert main(["fit", "--data", str(tmp_path / "nope.csv")]) == 3


def test_missing_column_is_a_data_error(dataset):
    assert main(["fit", "--data", str(dataset), "--response-column", "sales", "--covariates", "x1"]) == 3


def test_bad_cell_is_a_data_error(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("task,y,x1\na,1.0,0.5\na,oops,1.0\n", encoding="utf-8")
    assert main(["fit", "--data", str(path), "--method", "stl"]) == 3


def test_bad_loss_is_a_config_error(dataset):
    assert main(["fit", "--data", str(dataset), "--loss", '{"kind": "check", "tau": 2}']) == 2


def test_bad_experiment_config_is_a_config_error(tmp_path):
    config = tmp_path / "experiment.json"
    config.write_text(json.dumps({"epsilons": [1.5]}), encoding="utf-8")
    assert main(["experiment", "--config", str(config)]) == 2
    assert main(["experiment", "--config", str(tmp_path / "missing.json")]) == 2


def test_window_too_long_is_a_data_error(tmp_path):
    args = ["newsvendor", "--stores", "2", "--fixture-months", "3", "--methods", "stl"]
    assert main([*args, "--months", "5", "--output-dir", str(tmp_path)]) == 3


def test_exit_code_mapping():
    assert exit_code_for(ConvergenceError("stalled")) == 4
    assert exit_code_for(ParseError(0, "y", "x")) == 3
    assert exit_code_for(InvalidParameterError("bad")) == 2
    with pytest.raises(ValidationError) as info:
        CheckLoss(tau=3.0)
    assert exit_code_for(info.value) == 2
    assert exit_code_for(KeyError("x")) == 1


def test_usage_errors_exit_through_argparse():
    with pytest.raises(SystemExit) as info:
        main(["fit"])
    assert info.value.code == 2
