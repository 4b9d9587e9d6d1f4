"""Schemas for tuning plans, ingestion, experiment configs and reports."""

import math
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.exceptions import InvalidParameterError
from src.schemas.solver import FusionSolution

Method = Literal["fused", "stl", "dp"]


class CvPlan(BaseModel):
    """Lambda selection plan: lambda = C sqrt(d / n) over ``c_grid``.

    ``folds`` drives k-fold CV, ``holdout_fraction`` the time-ordered split.
    """

    model_config = ConfigDict(frozen=True)

    c_grid: tuple[float, ...] = Field(
        (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0), min_length=1
    )
    folds: int = Field(5, ge=2)
    holdout_fraction: float = Field(0.8, gt=0.0, lt=1.0)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_grid(self) -> "CvPlan":
        if any(not math.isfinite(c) or c <= 0 for c in self.c_grid):
            raise ValueError("every C must be positive")
        return self


class CvReport(BaseModel):
    """Scores per C, the chosen C / lambda and the refit on all data."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    c_grid: tuple[float, ...]
    lambdas: tuple[float, ...]
    mean_scores: tuple[float, ...]
    fold_scores: tuple[tuple[float, ...], ...] = Field(
        ..., description="fold_scores[c][k]: validation score of fold k at C"
    )
    chosen_c: float
    chosen_lambda: float
    refit: FusionSolution
    failed: tuple[float, ...] = ()


class IngestSchema(BaseModel):
    """Column mapping of a long-format CSV (one row per sample)."""

    model_config = ConfigDict(frozen=True)

    task_column: str = "task"
    response_column: str = "y"
    covariate_columns: tuple[str, ...] = Field(..., min_length=1)
    add_intercept: bool = True
    time_column: str | None = None

    @model_validator(mode="after")
    def _distinct(self) -> "IngestSchema":
        names = [self.task_column, self.response_column, *self.covariate_columns]
        if self.time_column:
            names.append(self.time_column)
        if len(set(names)) != len(names):
            raise ValueError("column names must be distinct")
        return self


class ScaleConfig(BaseModel):
    """Synthetic problem size."""

    model_config = ConfigDict(frozen=True)

    m: int = Field(20, ge=1)
    n: int = Field(100, ge=2)
    dim: int = Field(10, ge=2)
    tau: float = Field(0.9, gt=0.0, lt=1.0)
    noise_sd: float = Field(0.5, gt=0.0)
    signal: float = Field(2.0, gt=0.0)


class NewsvendorConfig(BaseModel):
    """Windowed newsvendor study on a dated dataset."""

    model_config = ConfigDict(frozen=True)

    data_path: str | None = Field(None, description="CSV to ingest; fixture if None")
    ingest: IngestSchema | None = None
    months: tuple[int, ...] = Field((1, 2, 3), min_length=1)
    test_start: str | None = Field(
        None, description="First day of the test window (ISO date)"
    )
    b: float = Field(9.0, gt=0.0, description="Backorder cost per unit")
    h: float = Field(1.0, gt=0.0, description="Holding cost per unit")
    fixture_stores: int = Field(8, ge=1)
    fixture_months: int = Field(6, ge=2)
    fixture_heterogeneity: float = Field(
        0.2, ge=0.0, description="Spread of store models around the shared one"
    )

    @model_validator(mode="after")
    def _months_positive(self) -> "NewsvendorConfig":
        if any(k < 1 for k in self.months):
            raise ValueError("training windows are counted in whole months >= 1")
        return self


class ExperimentConfig(BaseModel):
    """Declarative description of a full experiment sweep."""

    model_config = ConfigDict(frozen=True)

    mode: Literal["synthetic", "newsvendor"] = "synthetic"
    epsilons: tuple[float, ...] = Field((0.0,), min_length=1)
    deltas: tuple[float, ...] = Field((0.0, 1.0, 2.0), min_length=1)
    scale: ScaleConfig = Field(default_factory=ScaleConfig)
    replications: int = Field(20, ge=1)
    methods: tuple[Method, ...] = Field(("fused", "stl", "dp"), min_length=1)
    cv: CvPlan = Field(default_factory=CvPlan)
    newsvendor: NewsvendorConfig = Field(default_factory=NewsvendorConfig)
    output_dir: str = "output/experiment"
    master_seed: int = Field(2024, ge=0)
    n_jobs: int = Field(1, ge=1)
    solver_tol_abs: float = Field(1e-6, gt=0)
    solver_tol_rel: float = Field(1e-4, gt=0)

    @model_validator(mode="after")
    def _check_grids(self) -> "ExperimentConfig":
        if any(not 0.0 <= e < 1.0 for e in self.epsilons):
            raise ValueError("epsilon values must lie in [0, 1)")
        if any(d < 0 for d in self.deltas):
            raise ValueError("delta values must be >= 0")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("methods must be distinct")
        return self

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        """Read a JSON config file."""
        text = Path(path).read_text(encoding="utf-8")
        try:
            return cls.model_validate_json(text)
        except ValidationError as e:
            raise InvalidParameterError(f"invalid experiment config {path}: {e}") from e

    @classmethod
    def full_scale(cls, **overrides) -> "ExperimentConfig":
        """Full-size synthetic study: m=50, n=200, dim=20, 100 replications."""
        base = cls(
            scale=ScaleConfig(m=50, n=200, dim=20),
            replications=100,
            deltas=tuple(round(0.2 * k, 1) for k in range(11)),
            epsilons=(0.0, 0.1, 0.2),
        )
        return cls.model_validate({**base.model_dump(), **overrides})


class MetricsReport(BaseModel):
    """Metrics of one method on one replication of one grid point."""

    model_config = ConfigDict(frozen=True)

    method: Method
    max_error_all: float | None = None
    max_error_S: float | None = None
    max_error_Sc: float | None = None
    avg_test_loss: float | None = None


class ResultRow(BaseModel):
    """One line of results.csv: a method on one grid cell and replication."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    mode: Literal["synthetic", "newsvendor"]
    method: Method
    epsilon: float | None = None
    delta: float | None = None
    months: int | None = None
    replication: int = 0
    seed: int = 0
    lam: float | None = Field(None, alias="lambda")
    chosen_c: float | None = None
    max_error_all: float | None = None
    max_error_S: float | None = None
    max_error_Sc: float | None = None
    avg_test_loss: float | None = None
    status: Literal["ok", "error"] = "ok"
    error: str = ""

    @classmethod
    def from_metrics(cls, metrics: MetricsReport, **cell) -> "ResultRow":
        return cls(**cell, **metrics.model_dump())
