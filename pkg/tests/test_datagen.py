"""Tests for synthetic task families, the bakery fixture and CSV frames."""

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from src.exceptions import InvalidParameterError, ParseError, SchemaError
from src.schemas.experiment import IngestSchema
from src.schemas.truth import RelatednessSpec
from src.services.datagen import (
    COVARIATE_NAMES,
    dataset_to_frame,
    frame_to_dataset,
    generate_bakery_fixture,
    generate_quantile_tasks,
    generate_related_coefficients,
    normal_quantile,
)
from tests.conftest import location_data


@pytest.mark.parametrize(
    "p, expected", [(0.5, 0.0), (0.9, 1.2815515655), (0.975, 1.9599639845), (0.1, -1.2815515655)]
)
def test_normal_quantile(p, expected):
    assert normal_quantile(p) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1])
def test_normal_quantile_rejects_endpoints(p):
    with pytest.raises(InvalidParameterError):
        normal_quantile(p)


# --- related coefficients ---


def test_coefficients_lie_on_the_sphere():
    spec = RelatednessSpec(m=30, epsilon=0.2, delta=0.7, dim=5, signal=2.0, seed=7)
    truth = generate_related_coefficients(spec)
    assert truth.gamma_star.shape == (5, 30)
    np.testing.assert_allclose(np.linalg.norm(truth.gamma_star, axis=0), 2.0, rtol=1e-12)
    center = np.zeros(5)
    center[0] = 2.0
    inliers = truth.gamma_star[:, list(truth.inliers)]
    np.testing.assert_allclose(np.linalg.norm(inliers - center[:, None], axis=0), 0.7, rtol=1e-12)


def test_outlier_count_and_partition():
    truth = generate_related_coefficients(RelatednessSpec(m=30, epsilon=0.1, seed=3))
    assert len(truth.outliers) == 3
    assert len(truth.inliers) == 27
    assert sorted(truth.inliers + truth.outliers) == list(range(30))


def test_zero_delta_gives_identical_inliers():
    truth = generate_related_coefficients(RelatednessSpec(m=10, epsilon=0.0, delta=0.0, dim=4))
    expected = np.zeros(4)
    expected[0] = 2.0
    np.testing.assert_allclose(truth.gamma_star, np.tile(expected[:, None], (1, 10)))


def test_diameter_delta_gives_antipode():
    spec = RelatednessSpec(m=4, delta=4.0, dim=3, signal=2.0)
    truth = generate_related_coefficients(spec)
    np.testing.assert_allclose(truth.gamma_star[0], -2.0)
    np.testing.assert_allclose(truth.gamma_star[1:], 0.0, atol=1e-12)


def test_intercept_row_is_the_noise_quantile():
    spec = RelatednessSpec(m=3, tau=0.9, noise_sd=0.5)
    truth = generate_related_coefficients(spec)
    np.testing.assert_allclose(truth.theta_star[0], 0.5 * 1.2815515655, rtol=1e-9)
    np.testing.assert_array_equal(truth.theta_star[1:], truth.gamma_star)


def test_invalid_relatedness_parameters():
    with pytest.raises(InvalidParameterError):
        generate_related_coefficients(RelatednessSpec(delta=5.0, signal=2.0))
    with pytest.raises(InvalidParameterError):
        generate_related_coefficients(RelatednessSpec(m=2, delta=1.0, dim=1))
    with pytest.raises(ValidationError):
        RelatednessSpec(epsilon=1.0)


# --- quantile tasks ---


def test_task_shapes_and_ids():
    truth = generate_related_coefficients(RelatednessSpec(m=6, dim=20, seed=1))
    data = generate_quantile_tasks(truth, n=40)
    assert data.m == 6
    assert data.d == 21
    assert data.sizes == [40] * 6
    assert data.task_ids[0] == "task_000"
    np.testing.assert_array_equal(data.tasks[2].covariates[:, 0], 1.0)


def test_generation_is_deterministic():
    spec = RelatednessSpec(m=5, epsilon=0.2, delta=0.3, dim=4, seed=99)
    first = generate_quantile_tasks(generate_related_coefficients(spec), n=20)
    second = generate_quantile_tasks(generate_related_coefficients(spec), n=20)
    for a, b in zip(first.tasks, second.tasks):
        np.testing.assert_array_equal(a.covariates, b.covariates)
        np.testing.assert_array_equal(a.response, b.response)
    other = generate_quantile_tasks(generate_related_coefficients(spec), n=20, seed=100)
    assert not np.array_equal(other.tasks[0].response, first.tasks[0].response)


def test_task_draws_depend_only_on_seed_and_index():
    small = generate_related_coefficients(RelatednessSpec(m=3, dim=4, seed=5))
    large = generate_related_coefficients(RelatednessSpec(m=8, dim=4, seed=5))
    a = generate_quantile_tasks(small, n=15)
    b = generate_quantile_tasks(large, n=15)
    np.testing.assert_array_equal(a.tasks[1].covariates, b.tasks[1].covariates)


def test_responses_follow_the_quantile_model():
    spec = RelatednessSpec(m=1, dim=2, tau=0.8, noise_sd=1.0, seed=11)
    truth = generate_related_coefficients(spec)
    task = generate_quantile_tasks(truth, n=20000).tasks[0]
    below = np.mean(task.response <= task.covariates @ truth.theta_star[:, 0])
    assert below == pytest.approx(0.8, abs=0.02)


def test_task_arguments_must_agree_with_truth():
    truth = generate_related_coefficients(RelatednessSpec(m=2, tau=0.9))
    with pytest.raises(InvalidParameterError):
        generate_quantile_tasks(truth, n=10, tau=0.5)
    with pytest.raises(InvalidParameterError):
        generate_quantile_tasks(truth, n=0)


# --- bakery fixture ---


def test_bakery_fixture_layout():
    fixture = generate_bakery_fixture(stores=3, months=2, start="2018-07-01", seed=4)
    data = fixture.data
    assert data.task_ids == ["store_00", "store_01", "store_02"]
    assert data.d == len(COVARIATE_NAMES)
    # July and August
    assert data.sizes == [62] * 3
    task = data.tasks[0]
    assert pd.Timestamp(task.times[0]) == pd.Timestamp("2018-07-01")
    assert pd.Timestamp(task.times[-1]) == pd.Timestamp("2018-08-31")
    np.testing.assert_array_equal(task.covariates[:, 0], 1.0)
    assert fixture.coefficients.shape == (10, 3)


def test_bakery_weekday_dummies_are_exclusive():
    task = generate_bakery_fixture(stores=1, months=1).data.tasks[0]
    dummies = task.covariates[:, 1:7]
    assert set(dummies.sum(axis=1).tolist()) <= {0.0, 1.0}
    mondays = pd.DatetimeIndex(task.times).dayofweek == 0
    np.testing.assert_array_equal(dummies[mondays].sum(axis=1), 0.0)


def test_bakery_without_heterogeneity_shares_one_model():
    fixture = generate_bakery_fixture(stores=4, months=1, heterogeneity=0.0)
    np.testing.assert_array_equal(
        fixture.coefficients, np.tile(fixture.coefficients[:, :1], (1, 4))
    )


def test_bakery_rejects_bad_arguments():
    with pytest.raises(InvalidParameterError):
        generate_bakery_fixture(stores=0)
    with pytest.raises(InvalidParameterError):
        generate_bakery_fixture(heterogeneity=-0.1)


# --- frames ---


def test_frame_round_trip_keeps_task_order():
    data = location_data([3.0, 1.0], [2.0])
    reordered = data.replace_tasks((data.tasks[1], data.tasks[0]))
    frame, schema = dataset_to_frame(reordered)
    assert list(frame.columns) == ["task", "y"] + list(schema.covariate_columns)
    back = frame_to_dataset(frame, schema)
    assert back.task_ids == ["t1", "t0"]
    np.testing.assert_array_equal(back.tasks[1].response, [3.0, 1.0])


def test_frame_round_trip_of_generated_tasks():
    truth = generate_related_coefficients(RelatednessSpec(m=3, dim=2, seed=2))
    data = generate_quantile_tasks(truth, n=5)
    frame, schema = dataset_to_frame(data)
    assert schema.add_intercept
    assert schema.covariate_columns == ("x1", "x2")
    back = frame_to_dataset(frame, schema)
    for a, b in zip(data.tasks, back.tasks):
        np.testing.assert_array_equal(a.covariates, b.covariates)


def test_frame_keeps_dates():
    data = generate_bakery_fixture(stores=2, months=1).data
    frame, schema = dataset_to_frame(data, list(COVARIATE_NAMES[1:]))
    assert schema.time_column == "date"
    back = frame_to_dataset(frame, schema)
    np.testing.assert_array_equal(back.tasks[0].times, data.tasks[0].times)


def test_missing_column_raises_schema_error():
    frame = pd.DataFrame({"task": ["a"], "x1": ["1.0"]})
    schema = IngestSchema(covariate_columns=("x1",))
    with pytest.raises(SchemaError) as info:
        frame_to_dataset(frame, schema)
    assert info.value.column == "y"


def test_non_numeric_cell_raises_parse_error():
    frame = pd.DataFrame({"task": ["a", "a", "b"], "y": ["1.0", "abc", "2"], "x1": ["0", "1", "2"]})
    with pytest.raises(ParseError) as info:
        frame_to_dataset(frame, IngestSchema(covariate_columns=("x1",)))
    assert info.value.row == 1
    assert info.value.column == "y"
    assert info.value.value == "abc"


def test_bad_date_raises_parse_error():
    frame = pd.DataFrame(
        {"task": ["a", "a"], "y": ["1", "2"], "x1": ["0", "1"], "date": ["2018-07-01", "soon"]}
    )
    schema = IngestSchema(covariate_columns=("x1",), time_column="date")
    with pytest.raises(ParseError) as info:
        frame_to_dataset(frame, schema)
    assert info.value.row == 1
