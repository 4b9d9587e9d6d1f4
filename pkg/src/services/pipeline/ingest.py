"""CSV ingestion into a MultiTaskDataset."""

import logging
from pathlib import Path

import pandas as pd

from src.schemas.dataset import MultiTaskDataset
from src.schemas.experiment import IngestSchema
from src.services.datagen import frame_to_dataset

logger = logging.getLogger(__name__)


def ingest_csv(path: str | Path, schema: IngestSchema) -> MultiTaskDataset:
    """Read a long-format CSV and group it by task.

    Cells are read as text so a bad value surfaces as a ParseError with its
    row instead of silently turning the column into objects or NaN.
    """
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    data = frame_to_dataset(frame, schema)
    logger.info(f"Ingested {len(frame)} rows from {path}: m={data.m}, d={data.d}")
    return data
