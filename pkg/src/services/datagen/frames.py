"""Conversion between MultiTaskDataset and the long CSV layout.

One row per sample: task column, response column, covariate columns and an
optional time column. The intercept is never stored; ``add_intercept``
prepends it again on the way back.
"""

import numpy as np
import pandas as pd

from src.exceptions import ParseError, SchemaError
from src.schemas.dataset import MultiTaskDataset, TaskDataset
from src.schemas.experiment import IngestSchema


def _has_intercept(data: MultiTaskDataset) -> bool:
    return all(np.all(task.covariates[:, 0] == 1.0) for task in data.tasks)


def dataset_to_frame(
    data: MultiTaskDataset, covariate_names: list[str] | None = None
) -> tuple[pd.DataFrame, IngestSchema]:
    """Long-format frame plus the schema that reads it back.

    A leading all-one column is dropped and recorded as ``add_intercept``.
    """
    intercept = _has_intercept(data) and data.d > 1
    start = 1 if intercept else 0
    if covariate_names is None:
        covariate_names = [f"x{k}" for k in range(start, data.d)]
    elif len(covariate_names) != data.d - start:
        raise ValueError(f"{len(covariate_names)} names for {data.d - start} covariates")
    with_times = all(task.times is not None for task in data.tasks)

    frames = []
    for task in data.tasks:
        frame = pd.DataFrame(task.covariates[:, start:], columns=covariate_names)
        frame.insert(0, "y", task.response)
        frame.insert(0, "task", task.task_id)
        if with_times:
            frame["date"] = pd.to_datetime(task.times)
        frames.append(frame)
    schema = IngestSchema(
        covariate_columns=tuple(covariate_names),
        add_intercept=intercept,
        time_column="date" if with_times else None,
    )
    return pd.concat(frames, ignore_index=True), schema


def _numeric(frame: pd.DataFrame, column: str) -> np.ndarray:
    # correctly rounded: %.17g text reads back bit-exact
    cells = frame[column].to_numpy()
    values = np.empty(len(cells))
    for row, cell in enumerate(cells):
        try:
            values[row] = float(cell)
        except (TypeError, ValueError):
            raise ParseError(row=row, column=column, value=cell) from None
        if np.isnan(values[row]):
            raise ParseError(row=row, column=column, value=cell)
    return values


def frame_to_dataset(frame: pd.DataFrame, schema: IngestSchema) -> MultiTaskDataset:
    """Group rows by task (first-appearance order), keeping row order within a task.

    Raises:
        SchemaError: a mapped column is missing.
        ParseError: a response/covariate cell is not numeric, or a time
            cell is not a date; ``row`` is the 0-based data row.
    """
    required = [schema.task_column, schema.response_column, *schema.covariate_columns]
    if schema.time_column:
        required.append(schema.time_column)
    for column in required:
        if column not in frame.columns:
            raise SchemaError(column)

    frame = frame.reset_index(drop=True)
    response = _numeric(frame, schema.response_column)
    covariates = np.column_stack([_numeric(frame, c) for c in schema.covariate_columns])
    if schema.add_intercept:
        covariates = np.hstack([np.ones((len(frame), 1)), covariates])
    times = None
    if schema.time_column:
        parsed = pd.to_datetime(frame[schema.time_column], errors="coerce")
        bad = parsed.isna().to_numpy()
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise ParseError(row, schema.time_column, frame[schema.time_column].iloc[row])
        times = parsed.to_numpy()

    labels = frame[schema.task_column].astype(str)
    tasks = []
    for task_id, index in labels.groupby(labels, sort=False).indices.items():
        tasks.append(
            TaskDataset(
                task_id=task_id,
                covariates=covariates[index],
                response=response[index],
                times=None if times is None else times[index],
            )
        )
    return MultiTaskDataset(tasks=tuple(tasks))
