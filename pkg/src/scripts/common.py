"""Argument groups shared by the CLI subcommands."""

import argparse
from pathlib import Path

import numpy as np
import pandas as pd

from src.exceptions import InvalidParameterError, SchemaError
from src.schemas.experiment import IngestSchema
from src.schemas.loss import LossSpec, parse_loss_spec
from src.services.pipeline import ingest_csv

DEFAULT_LOSS = '{"kind": "check", "tau": 0.9}'


def parse_floats(text: str) -> tuple[float, ...]:
    """'0.1,0.2' -> (0.1, 0.2)."""
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as e:
        raise InvalidParameterError(f"expected comma-separated numbers, got {text!r}") from e


def parse_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as e:
        raise InvalidParameterError(f"expected comma-separated integers, got {text!r}") from e


def add_data_arguments(parser: argparse.ArgumentParser, time_column: str | None = None) -> None:
    """Input CSV and its column mapping."""
    group = parser.add_argument_group("data")
    group.add_argument("--data", required=time_column is None, help="Long-format CSV file")
    group.add_argument("--task-column", default="task")
    group.add_argument("--response-column", default="y")
    group.add_argument(
        "--covariates",
        default=None,
        help="Comma-separated covariate columns (default: every other column)",
    )
    group.add_argument("--time-column", default=time_column)
    group.add_argument(
        "--no-intercept", action="store_true", help="Do not prepend a constant column"
    )


def add_loss_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--loss",
        default=DEFAULT_LOSS,
        help='Loss as JSON, e.g. \'{"kind": "newsvendor", "b": 9, "h": 1}\', or a JSON file',
    )


def loss_from_args(args: argparse.Namespace) -> LossSpec:
    text = args.loss
    if not text.lstrip().startswith("{") and Path(text).is_file():
        text = Path(text).read_text(encoding="utf-8")
    return parse_loss_spec(text)


def schema_from_args(args: argparse.Namespace) -> IngestSchema:
    """IngestSchema for ``args.data``; covariates default to the remaining header columns."""
    if args.covariates:
        covariates = tuple(c.strip() for c in args.covariates.split(",") if c.strip())
    else:
        header = pd.read_csv(args.data, nrows=0, encoding="utf-8").columns
        taken = {args.task_column, args.response_column, args.time_column}
        covariates = tuple(c for c in header if c not in taken)
        if not covariates:
            raise SchemaError("covariates", f"{args.data} has no covariate columns")
    return IngestSchema(
        task_column=args.task_column,
        response_column=args.response_column,
        covariate_columns=covariates,
        add_intercept=not args.no_intercept,
        time_column=args.time_column,
    )


def load_data(args: argparse.Namespace):
    return ingest_csv(args.data, schema_from_args(args))


def write_matrix(matrix: np.ndarray, columns: list[str], path: str | Path) -> None:
    """Coefficient matrix (one row per coefficient, one column per task) as CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(np.atleast_2d(matrix), columns=columns)
    frame.index.name = "coefficient"
    frame.to_csv(path, float_format="%.17g", encoding="utf-8", lineterminator="\n")
