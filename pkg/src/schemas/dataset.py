"""Pydantic schemas for multi-task datasets.

Why arrays inside pydantic models?
- Solvers work on (X, y) matrices, so tasks store covariates as an n x d array
  instead of n separate objects
- Validation (shapes, finiteness, unique task ids) still runs once at
  construction, and the arrays are frozen afterwards so datasets can be
  shared freely between threads
- SamplePoint remains available as a view for per-sample evaluation
"""

from collections.abc import Iterator, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


class SamplePoint(BaseModel):
    """One observation xi = (x, y).

    The intercept coordinate, if any, is already part of ``covariates``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    covariates: np.ndarray = Field(..., description="Feature vector of length d")
    response: float = Field(..., description="Demand, response or +/-1 label")

    @field_validator("covariates", mode="before")
    @classmethod
    def _as_vector(cls, value) -> np.ndarray:
        array = np.atleast_1d(np.asarray(value, dtype=float))
        if array.ndim != 1:
            raise ValueError("covariates must be a vector")
        return _frozen(array)

    @property
    def d(self) -> int:
        return self.covariates.shape[0]


class TaskDataset(BaseModel):
    """Samples D_j of one task, kept in their original (time) order."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    task_id: str = Field(..., description="Opaque task identifier")
    covariates: np.ndarray = Field(..., description="n_j x d covariate matrix")
    response: np.ndarray = Field(..., description="Responses of length n_j")
    times: np.ndarray | None = Field(
        None, description="Optional datetime64 stamps, one per sample"
    )

    @field_validator("task_id", mode="before")
    @classmethod
    def _stringify(cls, value) -> str:
        return str(value)

    @field_validator("covariates", mode="before")
    @classmethod
    def _as_matrix(cls, value) -> np.ndarray:
        array = np.asarray(value, dtype=float)
        if array.ndim == 1:
            array = array.reshape(-1, 1)
        if array.ndim != 2:
            raise ValueError("covariates must be an n x d matrix")
        if not np.all(np.isfinite(array)):
            raise ValueError("covariates must be finite")
        return _frozen(array)

    @field_validator("response", mode="before")
    @classmethod
    def _as_response(cls, value) -> np.ndarray:
        array = np.atleast_1d(np.asarray(value, dtype=float))
        if array.ndim != 1:
            raise ValueError("response must be a vector")
        if not np.all(np.isfinite(array)):
            raise ValueError("response must be finite")
        return _frozen(array)

    @field_validator("times", mode="before")
    @classmethod
    def _as_times(cls, value) -> np.ndarray | None:
        if value is None:
            return None
        array = np.asarray(value, dtype="datetime64[ns]")
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_lengths(self) -> "TaskDataset":
        n = self.covariates.shape[0]
        if n < 1:
            raise ValueError(f"task {self.task_id!r} has no samples")
        if self.response.shape[0] != n:
            raise ValueError(
                f"task {self.task_id!r}: {n} covariate rows but "
                f"{self.response.shape[0]} responses"
            )
        if self.times is not None and self.times.shape[0] != n:
            raise ValueError(f"task {self.task_id!r}: times length mismatch")
        return self

    @classmethod
    def from_samples(
        cls, task_id: str, samples: Sequence[SamplePoint]
    ) -> "TaskDataset":
        """Build a task from individual sample points."""
        return cls(
            task_id=task_id,
            covariates=np.vstack([s.covariates for s in samples]),
            response=np.array([s.response for s in samples], dtype=float),
        )

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def d(self) -> int:
        return self.covariates.shape[1]

    @property
    def samples(self) -> Iterator[SamplePoint]:
        """Iterate over the task as SamplePoint views."""
        for x, y in zip(self.covariates, self.response):
            yield SamplePoint(covariates=x, response=float(y))

    def subset(self, index: Sequence[int] | np.ndarray) -> "TaskDataset":
        """Return the task restricted to ``index`` (order preserved)."""
        index = np.asarray(index, dtype=int)
        return TaskDataset(
            task_id=self.task_id,
            covariates=self.covariates[index],
            response=self.response[index],
            times=None if self.times is None else self.times[index],
        )


class MultiTaskDataset(BaseModel):
    """m tasks sharing the covariate dimension d."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    tasks: tuple[TaskDataset, ...] = Field(..., description="Ordered task list")

    @model_validator(mode="after")
    def _check_tasks(self) -> "MultiTaskDataset":
        if len(self.tasks) < 1:
            raise ValueError("a dataset needs at least one task")
        dims = {task.d for task in self.tasks}
        if len(dims) != 1:
            raise ValueError(f"tasks disagree on covariate dimension: {sorted(dims)}")
        ids = [task.task_id for task in self.tasks]
        if len(set(ids)) != len(ids):
            raise ValueError("task ids must be unique")
        return self

    @property
    def m(self) -> int:
        return len(self.tasks)

    @property
    def d(self) -> int:
        return self.tasks[0].d

    @property
    def sizes(self) -> list[int]:
        """Sample counts n_j."""
        return [task.n for task in self.tasks]

    @property
    def task_ids(self) -> list[str]:
        return [task.task_id for task in self.tasks]

    def replace_tasks(self, tasks: Sequence[TaskDataset]) -> "MultiTaskDataset":
        return MultiTaskDataset(tasks=tuple(tasks))
