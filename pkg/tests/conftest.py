"""Shared fixtures and small dataset builders."""

import numpy as np
import pytest

from src.schemas.dataset import MultiTaskDataset, TaskDataset


def location_task(values, task_id: str = "t") -> TaskDataset:
    """1-d location task: covariate 1 for every sample."""
    values = np.asarray(values, dtype=float)
    return TaskDataset(task_id=task_id, covariates=np.ones((values.size, 1)), response=values)


def location_data(*groups) -> MultiTaskDataset:
    return MultiTaskDataset(
        tasks=tuple(location_task(g, task_id=f"t{j}") for j, g in enumerate(groups))
    )


def random_regression(rng, m: int, n: int, d: int, spread: float = 0.5) -> MultiTaskDataset:
    """Linear tasks with intercept sharing a common coefficient up to ``spread``."""
    common = rng.normal(size=d)
    tasks = []
    for j in range(m):
        X = np.hstack([np.ones((n, 1)), rng.normal(size=(n, d - 1))])
        theta = common + spread * rng.normal(size=d)
        y = X @ theta + rng.normal(scale=0.5, size=n)
        tasks.append(TaskDataset(task_id=f"task_{j}", covariates=X, response=y))
    return MultiTaskDataset(tasks=tuple(tasks))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_location_tasks() -> MultiTaskDataset:
    """Tasks {y=0} and {y=2} with x=[1]."""
    return location_data([0.0], [2.0])
