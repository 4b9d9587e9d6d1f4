"""Bakery-like daily demand for several stores.

Each store follows a linear demand model in calendric covariates (weekday
dummies, a yearly sine/cosine season) and the mean demand of the previous
seven days. Store models are a shared model plus a scaled deviation, so
``heterogeneity=0`` gives one true model for every store.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.exceptions import InvalidParameterError
from src.schemas.dataset import MultiTaskDataset, TaskDataset

COVARIATE_NAMES = (
    "intercept",
    "tue",
    "wed",
    "thu",
    "fri",
    "sat",
    "sun",
    "season_sin",
    "season_cos",
    "lag7_mean",
)

_SHARED = np.array([20.0, 2.0, 3.0, 4.0, 9.0, 16.0, 12.0, 6.0, -3.0, 0.5])
_WARMUP = 7


@dataclass(frozen=True)
class BakeryFixture:
    data: MultiTaskDataset
    coefficients: np.ndarray  # d x stores
    noise_sd: float


def _calendar(days: pd.DatetimeIndex) -> np.ndarray:
    weekday = days.dayofweek.to_numpy()
    dummies = np.column_stack([(weekday == k).astype(float) for k in range(1, 7)])
    angle = 2.0 * np.pi * days.dayofyear.to_numpy() / 365.25
    return np.column_stack([dummies, np.sin(angle), np.cos(angle)])


def generate_bakery_fixture(
    stores: int = 8,
    months: int = 6,
    start: str = "2018-07-01",
    heterogeneity: float = 0.2,
    noise_sd: float = 6.0,
    seed: int = 0,
) -> BakeryFixture:
    """Dated multi-store demand with covariates in ``COVARIATE_NAMES`` order."""
    if stores < 1 or months < 1:
        raise InvalidParameterError("need at least one store and one month")
    if heterogeneity < 0 or noise_sd <= 0:
        raise InvalidParameterError("heterogeneity must be >= 0 and noise_sd > 0")

    first = pd.Timestamp(start)
    days = pd.date_range(
        first - pd.Timedelta(days=_WARMUP),
        first + pd.DateOffset(months=months) - pd.Timedelta(days=1),
        freq="D",
    )
    calendar = _calendar(days)
    root = np.random.SeedSequence(seed)
    rngs = [np.random.Generator(np.random.Philox(child)) for child in root.spawn(stores)]

    tasks, coefficients = [], []
    for j, rng in enumerate(rngs):
        theta = _SHARED * (1.0 + heterogeneity * rng.uniform(-1.0, 1.0, _SHARED.size))
        demand = np.empty(days.size)
        demand[:_WARMUP] = theta[0] / (1.0 - theta[-1]) + noise_sd * rng.standard_normal(_WARMUP)
        lags = np.zeros(days.size)
        for t in range(_WARMUP, days.size):
            lags[t] = demand[t - _WARMUP : t].mean()
            x = np.concatenate([[1.0], calendar[t], [lags[t]]])
            demand[t] = x @ theta + noise_sd * rng.standard_normal()
        covariates = np.column_stack(
            [np.ones(days.size), calendar, lags]
        )[_WARMUP:]
        tasks.append(
            TaskDataset(
                task_id=f"store_{j:02d}",
                covariates=covariates,
                response=demand[_WARMUP:],
                times=days[_WARMUP:].to_numpy(),
            )
        )
        coefficients.append(theta)
    return BakeryFixture(
        data=MultiTaskDataset(tasks=tuple(tasks)),
        coefficients=np.column_stack(coefficients),
        noise_sd=noise_sd,
    )
