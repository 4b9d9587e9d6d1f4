"""Result table layout and its reductions (summary and plot data)."""

import math

import numpy as np
import pandas as pd

RESULT_COLUMNS = [
    "mode",
    "method",
    "epsilon",
    "delta",
    "months",
    "replication",
    "seed",
    "lambda",
    "chosen_c",
    "max_error_all",
    "max_error_S",
    "max_error_Sc",
    "avg_test_loss",
    "status",
    "error",
]
METRICS = ["max_error_all", "max_error_S", "max_error_Sc", "avg_test_loss"]
CELL_KEYS = ["mode", "method", "epsilon", "delta", "months"]
SUMMARY_COLUMNS = [
    *CELL_KEYS,
    "n_ok",
    "n_total",
    "complete",
    *[f"{metric}_{stat}" for metric in METRICS for stat in ("mean", "sd", "ci95")],
]
PLOT_COLUMNS = ["mode", "x_name", "x", "method", "metric", "mean", "lower", "upper"]

_Z95 = 1.96


def results_frame(rows) -> pd.DataFrame:
    """Typed results table in the fixed column order (rows are ResultRow)."""
    records = [row.model_dump(by_alias=True) for row in rows]
    frame = pd.DataFrame.from_records(records, columns=RESULT_COLUMNS)
    for column in ("epsilon", "delta", "lambda", "chosen_c", *METRICS):
        frame[column] = frame[column].astype(float)
    for column in ("months", "replication"):
        frame[column] = frame[column].astype("Int64")
    frame["seed"] = frame["seed"].astype("int64")
    return frame


def _stats(values: np.ndarray) -> tuple[float, float, float]:
    if values.size == 0:
        return math.nan, math.nan, math.nan
    mean = float(np.mean(values))
    if values.size < 2:
        return mean, math.nan, math.nan
    sd = float(np.std(values, ddof=1))
    return mean, sd, _Z95 * sd / math.sqrt(values.size)


def summarize(table: pd.DataFrame) -> pd.DataFrame:
    """Per-cell mean, sd and normal 95% half-width over successful replications."""
    rows = []
    if not table.empty:
        for key, group in table.groupby(CELL_KEYS, sort=False, dropna=False):
            ok = group[group["status"] == "ok"]
            row = dict(zip(CELL_KEYS, key))
            row.update(n_ok=len(ok), n_total=len(group), complete=len(ok) == len(group))
            for metric in METRICS:
                values = ok[metric].dropna().to_numpy(dtype=float)
                mean, sd, ci95 = _stats(values)
                row.update(
                    {f"{metric}_mean": mean, f"{metric}_sd": sd, f"{metric}_ci95": ci95}
                )
            rows.append(row)
    frame = pd.DataFrame.from_records(rows, columns=SUMMARY_COLUMNS)
    frame["months"] = frame["months"].astype("Int64")
    return frame


def plot_data(summary: pd.DataFrame) -> pd.DataFrame:
    """Long table of mean +/- ci95 per (series, x, method, metric).

    Synthetic series are split by epsilon (``synthetic(epsilon=0.2)``) with
    delta on the x axis; newsvendor series use the window length in months.
    """
    rows = []
    for record in summary.to_dict("records"):
        if record["mode"] == "synthetic":
            mode = f"synthetic(epsilon={record['epsilon']:g})"
            x_name, x = "delta", record["delta"]
        else:
            mode, x_name, x = record["mode"], "months", record["months"]
        for metric in METRICS:
            mean = record[f"{metric}_mean"]
            if pd.isna(mean):
                continue
            half = record[f"{metric}_ci95"]
            rows.append(
                {
                    "mode": mode,
                    "x_name": x_name,
                    "x": float(x),
                    "method": record["method"],
                    "metric": metric,
                    "mean": mean,
                    "lower": mean - half,
                    "upper": mean + half,
                }
            )
    return pd.DataFrame.from_records(rows, columns=PLOT_COLUMNS)
