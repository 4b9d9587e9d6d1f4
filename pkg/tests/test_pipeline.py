"""Tests for ingestion, metrics, experiment sweeps and the report files."""

import math

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from src.exceptions import InvalidInputError, InvalidParameterError, ParseError, SchemaError, ShapeError
from src.repositories.results_repo import ResultsRepository, emit_report, write_dataset_csv
from src.schemas.experiment import (
    CvPlan,
    ExperimentConfig,
    IngestSchema,
    NewsvendorConfig,
    ResultRow,
    ScaleConfig,
)
from src.schemas.loss import CheckLoss
from src.schemas.truth import RelatednessSpec
from src.services.datagen import generate_bakery_fixture, generate_related_coefficients
from src.services.pipeline import (
    derive_seed,
    evaluate_metrics,
    ingest_csv,
    plot_data,
    results_frame,
    run_experiment,
    run_newsvendor_experiment,
    run_synthetic_experiment,
    split_windows,
    summarize,
)
from src.services.pipeline.summary import RESULT_COLUMNS
from tests.conftest import location_data

SMALL = ScaleConfig(m=3, n=20, dim=2)


def small_config(**overrides) -> ExperimentConfig:
    base = dict(
        epsilons=(0.0,),
        deltas=(0.0, 0.5, 1.0),
        scale=SMALL,
        replications=1,
        methods=("stl",),
        cv=CvPlan(c_grid=(0.5, 1.0), folds=2),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def write_csv(path, text: str):
    path.write_text(text, encoding="utf-8")
    return path


# --- ingestion ---


def test_ingest_groups_rows_by_task(tmp_path):
    path = write_csv(tmp_path / "data.csv", "task,y,x1\na,1.0,0.5\nb,2.0,1.5\na,3.0,2.5\n")
    data = ingest_csv(path, IngestSchema(covariate_columns=("x1",)))
    assert data.task_ids == ["a", "b"]
    assert data.sizes == [2, 1]
    assert data.d == 2
    np.testing.assert_array_equal(data.tasks[0].covariates, [[1.0, 0.5], [1.0, 2.5]])
    np.testing.assert_array_equal(data.tasks[0].response, [1.0, 3.0])


def test_ingest_missing_response_column(tmp_path):
    path = write_csv(tmp_path / "data.csv", "task,target,x1\na,1.0,0.5\n")
    with pytest.raises(SchemaError) as info:
        ingest_csv(path, IngestSchema(covariate_columns=("x1",)))
    assert info.value.column == "y"


def test_ingest_reports_the_bad_row(tmp_path):
    path = write_csv(tmp_path / "data.csv", "task,y,x1\na,1.0,0.5\na,2.0,abc\n")
    with pytest.raises(ParseError) as info:
        ingest_csv(path, IngestSchema(covariate_columns=("x1",)))
    assert (info.value.row, info.value.column, info.value.value) == (1, "x1", "abc")


def test_empty_cell_is_a_parse_error(tmp_path):
    path = write_csv(tmp_path / "data.csv", "task,y,x1\na,,0.5\n")
    with pytest.raises(ParseError):
        ingest_csv(path, IngestSchema(covariate_columns=("x1",)))


def test_ingested_floats_are_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    values = rng.normal(size=2000)
    frame = pd.DataFrame({"task": "a", "y": values, "x1": values[::-1]})
    frame.to_csv(tmp_path / "floats.csv", index=False, float_format="%.17g")
    data = ingest_csv(tmp_path / "floats.csv", IngestSchema(covariate_columns=("x1",)))
    np.testing.assert_array_equal(data.tasks[0].response, values)
    np.testing.assert_array_equal(data.tasks[0].covariates[:, 1], values[::-1])


def test_nan_cell_is_a_parse_error(tmp_path):
    path = write_csv(tmp_path / "data.csv", "task,y,x1\na,1.0,0.5\na,nan,1.0\n")
    with pytest.raises(ParseError) as info:
        ingest_csv(path, IngestSchema(covariate_columns=("x1",)))
    assert (info.value.row, info.value.column) == (1, "y")


def test_dataset_csv_round_trip(tmp_path):
    data = generate_bakery_fixture(stores=2, months=1).data
    schema = write_dataset_csv(data, tmp_path / "bakery.csv")
    back = ingest_csv(tmp_path / "bakery.csv", schema)
    assert back.task_ids == data.task_ids
    np.testing.assert_allclose(back.tasks[1].covariates, data.tasks[1].covariates, rtol=1e-15)
    np.testing.assert_array_equal(back.tasks[1].times, data.tasks[1].times)


# --- metrics ---


def test_estimation_errors_split_by_inliers():
    truth = generate_related_coefficients(RelatednessSpec(m=4, epsilon=0.25, dim=2, seed=1))
    shift = np.zeros_like(truth.theta_star)
    shift[0] = [0.0, 1.0, 2.0, 3.0]
    report = evaluate_metrics({"stl": truth.theta_star + shift}, truth=truth)["stl"]
    assert report.max_error_all == pytest.approx(3.0)
    assert report.max_error_S == pytest.approx(max(shift[0, j] for j in truth.inliers))
    assert report.max_error_Sc == pytest.approx(shift[0, truth.outliers[0]])
    assert report.avg_test_loss is None


def test_no_outliers_leaves_the_outlier_error_empty():
    truth = generate_related_coefficients(RelatednessSpec(m=3, dim=2))
    reports = evaluate_metrics({"dp": truth.theta_star[:, 0]}, truth=truth)
    assert reports["dp"].max_error_Sc is None
    assert reports["dp"].max_error_all == pytest.approx(0.0)


def test_average_test_loss(two_location_tasks):
    reports = evaluate_metrics(
        {"stl": np.array([[0.0, 2.0]]), "dp": np.array([0.0])},
        test=two_location_tasks,
        spec=CheckLoss(tau=0.5),
    )
    assert reports["stl"].avg_test_loss == 0.0
    assert reports["dp"].avg_test_loss == pytest.approx(0.5)
    assert reports["dp"].max_error_all is None


def test_metrics_arguments(two_location_tasks):
    with pytest.raises(InvalidParameterError):
        evaluate_metrics({"stl": np.zeros((1, 2))})
    with pytest.raises(InvalidParameterError):
        evaluate_metrics({"stl": np.zeros((1, 2))}, test=two_location_tasks)
    with pytest.raises(ShapeError):
        evaluate_metrics(
            {"stl": np.zeros((2, 2))}, test=two_location_tasks, spec=CheckLoss(tau=0.5)
        )


# --- seeds ---


def test_derive_seed_is_stable_and_keyed():
    a = derive_seed(2024, "synthetic", 0.1, 0.4, 3)
    assert a == derive_seed(2024, "synthetic", 0.1, 0.4, 3)
    assert a != derive_seed(2024, "synthetic", 0.1, 0.4, 4)
    assert a != derive_seed(2025, "synthetic", 0.1, 0.4, 3)
    assert 0 <= a < 2**63


def test_full_scale_preset_validates_overrides():
    cfg = ExperimentConfig.full_scale(replications=3)
    assert cfg.scale == ScaleConfig(m=50, n=200, dim=20)
    assert cfg.replications == 3
    assert len(cfg.deltas) == 11
    assert cfg.deltas[-1] == pytest.approx(2.0)
    with pytest.raises(ValidationError):
        ExperimentConfig.full_scale(epsilons=(1.5,))


# --- synthetic sweep ---


def test_synthetic_sweep_has_one_row_per_cell():
    table = run_synthetic_experiment(small_config())
    assert list(table.columns) == RESULT_COLUMNS
    assert len(table) == 3
    assert table["delta"].tolist() == [0.0, 0.5, 1.0]
    assert (table["status"] == "ok").all()
    assert table["lambda"].isna().all()
    assert table["max_error_all"].notna().all()
    assert table["avg_test_loss"].notna().all()
    assert table["months"].isna().all()


def test_fused_rows_carry_the_chosen_penalty():
    table = run_synthetic_experiment(small_config(methods=("fused", "dp"), deltas=(0.0,)))
    fused = table[table["method"] == "fused"].iloc[0]
    assert fused["chosen_c"] in (0.5, 1.0)
    assert fused["lambda"] == pytest.approx(fused["chosen_c"] * math.sqrt(3 / 20))
    assert math.isnan(table[table["method"] == "dp"].iloc[0]["lambda"])


def test_sweep_does_not_depend_on_n_jobs():
    cfg = small_config(methods=("fused", "stl"), replications=2, deltas=(0.0, 1.0))
    serial = run_synthetic_experiment(cfg)
    threaded = run_synthetic_experiment(cfg.model_copy(update={"n_jobs": 3}))
    pd.testing.assert_frame_equal(serial, threaded)


def test_failed_generation_becomes_error_rows():
    table = run_synthetic_experiment(small_config(deltas=(0.0, 9.0), methods=("stl", "dp")))
    bad = table[table["delta"] == 9.0]
    assert len(bad) == 2
    assert (bad["status"] == "error").all()
    assert bad["error"].str.startswith("InvalidParameterError").all()
    assert (table[table["delta"] == 0.0]["status"] == "ok").all()


DESK = ScaleConfig(m=20, n=100, dim=10)
DESK_CV = CvPlan(c_grid=(0.1, 0.2, 0.4, 0.7, 1.0), folds=3)


def method_means(table: pd.DataFrame, metric: str) -> pd.DataFrame:
    return table.pivot_table(index="delta", columns="method", values=metric, aggfunc="mean")


@pytest.mark.slow
def test_fused_tracks_the_better_baseline_without_outliers():
    cfg = small_config(
        scale=DESK,
        deltas=(0.0, 1.0, 2.0),
        replications=20,
        methods=("fused", "stl", "dp"),
        cv=DESK_CV,
        n_jobs=4,
    )
    means = method_means(run_synthetic_experiment(cfg), "max_error_all")
    assert means.loc[0.0, "fused"] <= 1.15 * means.loc[0.0, "dp"]
    assert means.loc[2.0, "dp"] >= 2.0 * means.loc[2.0, "fused"]
    assert (means["fused"] <= 1.1 * means["stl"]).all()


@pytest.mark.slow
def test_outlier_tasks_keep_their_own_fit():
    cfg = small_config(
        epsilons=(0.2,),
        scale=DESK,
        deltas=(0.0, 2.0),
        replications=20,
        methods=("fused", "stl", "dp"),
        cv=DESK_CV,
        n_jobs=4,
    )
    table = run_synthetic_experiment(cfg)
    inliers = method_means(table, "max_error_S")
    outliers = method_means(table, "max_error_Sc")
    assert (inliers["fused"] <= 1.1 * inliers["stl"]).all()
    assert inliers.loc[2.0, "dp"] >= 2.0 * inliers.loc[2.0, "fused"]
    assert (outliers["fused"] <= 1.2 * outliers["stl"]).all()


@pytest.mark.slow
def test_fused_orders_are_competitive_on_short_windows():
    wins = 0
    for seed in range(20):
        data = generate_bakery_fixture(stores=8, months=3, seed=seed).data
        table = run_newsvendor_experiment(data, NewsvendorConfig(months=(1,)), seed=seed)
        loss = table.set_index("method")["avg_test_loss"]
        wins += loss["fused"] <= 1.05 * min(loss["stl"], loss["dp"])
    assert wins >= 16


# --- newsvendor ---


@pytest.fixture
def bakery():
    return generate_bakery_fixture(stores=3, months=4, start="2018-07-01", seed=5).data


def test_split_windows_before_the_test_month(bakery):
    train, test = split_windows(bakery, 2, pd.Timestamp("2018-10-01"))
    assert pd.Timestamp(train.tasks[0].times.min()) == pd.Timestamp("2018-08-01")
    assert pd.Timestamp(train.tasks[0].times.max()) == pd.Timestamp("2018-09-30")
    assert test.sizes == [31] * 3


def test_newsvendor_study_rows(bakery):
    table = run_newsvendor_experiment(
        bakery,
        NewsvendorConfig(months=(1, 2, 3)),
        plan=CvPlan(c_grid=(0.5, 1.0)),
    )
    assert len(table) == 9
    assert table["months"].tolist() == [1, 1, 1, 2, 2, 2, 3, 3, 3]
    assert (table["status"] == "ok").all()
    assert table["avg_test_loss"].notna().all()
    assert table["max_error_all"].isna().all()
    assert table["epsilon"].isna().all()


def test_newsvendor_window_too_long(bakery):
    with pytest.raises(InvalidInputError):
        run_newsvendor_experiment(bakery, NewsvendorConfig(months=(4,)), methods=("stl",))


def test_newsvendor_needs_dates():
    with pytest.raises(InvalidInputError):
        run_newsvendor_experiment(location_data([1.0], [2.0]), NewsvendorConfig())


def test_newsvendor_config_runs_on_the_fixture():
    cfg = ExperimentConfig(
        mode="newsvendor",
        methods=("stl", "dp"),
        newsvendor=NewsvendorConfig(months=(1, 2), fixture_stores=2, fixture_months=3),
    )
    table = run_experiment(cfg)
    assert len(table) == 4
    assert set(table["mode"]) == {"newsvendor"}


def test_newsvendor_csv_needs_a_time_column(tmp_path):
    cfg = ExperimentConfig(
        mode="newsvendor",
        newsvendor=NewsvendorConfig(
            data_path=str(tmp_path / "sales.csv"), ingest=IngestSchema(covariate_columns=("x1",))
        ),
    )
    with pytest.raises(InvalidInputError):
        run_experiment(cfg)


# --- summary and report ---


def rows_for_cell(values, status=None):
    status = status or ["ok"] * len(values)
    return [
        ResultRow(
            mode="synthetic",
            method="stl",
            epsilon=0.1,
            delta=0.4,
            replication=r,
            max_error_all=v,
            status=s,
            error="" if s == "ok" else "ConvergenceError: stop",
        )
        for r, (v, s) in enumerate(zip(values, status))
    ]


def test_summary_statistics():
    summary = summarize(results_frame(rows_for_cell([1.0, 2.0, 3.0])))
    row = summary.iloc[0]
    assert row["n_ok"] == 3
    assert bool(row["complete"])
    assert row["max_error_all_mean"] == pytest.approx(2.0)
    assert row["max_error_all_sd"] == pytest.approx(1.0)
    assert row["max_error_all_ci95"] == pytest.approx(1.96 / math.sqrt(3))
    assert math.isnan(row["avg_test_loss_mean"])


def test_summary_skips_error_rows():
    summary = summarize(results_frame(rows_for_cell([1.0, None], status=["ok", "error"])))
    row = summary.iloc[0]
    assert (row["n_ok"], row["n_total"]) == (1, 2)
    assert not bool(row["complete"])
    assert row["max_error_all_mean"] == 1.0
    assert math.isnan(row["max_error_all_sd"])


def test_plot_data_series():
    summary = summarize(results_frame(rows_for_cell([1.0, 3.0])))
    plot = plot_data(summary)
    assert len(plot) == 1
    record = plot.iloc[0]
    assert record["mode"] == "synthetic(epsilon=0.1)"
    assert (record["x_name"], record["x"]) == ("delta", 0.4)
    assert record["lower"] < record["mean"] < record["upper"]


def test_empty_report_has_headers_only(tmp_path):
    paths = emit_report(results_frame([]), tmp_path)
    lines = paths["results"].read_text(encoding="utf-8").splitlines()
    assert lines == [",".join(RESULT_COLUMNS)]
    assert len(paths["summary"].read_text(encoding="utf-8").splitlines()) == 1
    assert len(paths["plotdata"].read_text(encoding="utf-8").splitlines()) == 1


def test_single_row_report(tmp_path):
    paths = emit_report(results_frame(rows_for_cell([1.5])), tmp_path)
    assert len(paths["results"].read_text(encoding="utf-8").splitlines()) == 2
    loaded = ResultsRepository(tmp_path).load_results()
    assert loaded["max_error_all"].tolist() == [1.5]
    assert loaded["error"].tolist() == [""]


def test_reports_are_byte_identical_across_runs(tmp_path):
    cfg = small_config(methods=("stl", "dp"))
    first = emit_report(run_synthetic_experiment(cfg), tmp_path / "a")
    second = emit_report(run_synthetic_experiment(cfg), tmp_path / "b")
    for name in ("results", "summary", "plotdata"):
        assert first[name].read_bytes() == second[name].read_bytes()
