"""Repository for experiment tables and dataset files.

Handles CSV persistence of results, summaries, plot data and datasets.
"""

import logging
from pathlib import Path

import pandas as pd

from src.schemas.dataset import MultiTaskDataset
from src.schemas.experiment import IngestSchema
from src.services.datagen import dataset_to_frame
from src.services.pipeline.summary import (
    PLOT_COLUMNS,
    RESULT_COLUMNS,
    SUMMARY_COLUMNS,
    plot_data,
    summarize,
)

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _write(frame: pd.DataFrame, path: Path) -> None:
    # Reruns must be byte-identical
    frame.to_csv(
        path,
        index=False,
        float_format=FLOAT_FORMAT,
        na_rep="",
        encoding="utf-8",
        lineterminator="\n",
    )


class ResultsRepository:
    """Handles persistence of one experiment's output directory."""

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)

    @property
    def results_path(self) -> Path:
        return self.out_dir / "results.csv"

    @property
    def summary_path(self) -> Path:
        return self.out_dir / "summary.csv"

    @property
    def plotdata_path(self) -> Path:
        return self.out_dir / "plotdata.csv"

    def save(self, table: pd.DataFrame) -> dict[str, Path]:
        """Write results.csv, summary.csv and plotdata.csv, overwriting old files.

        Returns:
            dict: Output name -> written path.
        """
        self.out_dir.mkdir(parents=True, exist_ok=True)
        table = table.reindex(columns=RESULT_COLUMNS)
        summary = summarize(table)
        _write(table, self.results_path)
        _write(summary.reindex(columns=SUMMARY_COLUMNS), self.summary_path)
        _write(plot_data(summary).reindex(columns=PLOT_COLUMNS), self.plotdata_path)
        logger.info(
            f"Saved {len(table)} result rows and {len(summary)} summary rows to {self.out_dir}"
        )
        return {
            "results": self.results_path,
            "summary": self.summary_path,
            "plotdata": self.plotdata_path,
        }

    def load_results(self) -> pd.DataFrame:
        """Read results.csv back with its numeric columns typed."""
        frame = pd.read_csv(self.results_path, keep_default_na=True)
        frame["error"] = frame["error"].fillna("")
        return frame


def emit_report(table: pd.DataFrame, out_dir: str | Path) -> dict[str, Path]:
    """Write the three report files for ``table`` into ``out_dir``."""
    return ResultsRepository(out_dir).save(table)


def write_dataset_csv(
    data: MultiTaskDataset,
    path: str | Path,
    covariate_names: list[str] | None = None,
) -> IngestSchema:
    """Write a dataset in the long CSV layout; returns the schema that reads it back."""
    frame, schema = dataset_to_frame(data, covariate_names)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write(frame, path)
    logger.info(f"Wrote {len(frame)} rows ({data.m} tasks) to {path}")
    return schema
