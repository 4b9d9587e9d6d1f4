"""Pydantic schemas for datasets, losses, solver results and experiments."""

from src.schemas.dataset import MultiTaskDataset, SamplePoint, TaskDataset
from src.schemas.experiment import (
    CvPlan,
    CvReport,
    ExperimentConfig,
    IngestSchema,
    MetricsReport,
    NewsvendorConfig,
    ResultRow,
    ScaleConfig,
)
from src.schemas.loss import (
    CheckLoss,
    GeneralizedNewsvendorLoss,
    HingeRidgeLoss,
    LossSpec,
    NewsvendorLoss,
    PiecewisePolynomial,
    PolynomialSegment,
    QuadraticLoss,
    parse_loss_spec,
)
from src.schemas.solver import FusionConfig, FusionSolution, SolverDiagnostics
from src.schemas.truth import (
    GroundTruth,
    PersonalizationReport,
    ReferenceSolution,
    RegularityParams,
    RelatednessSpec,
)

__all__ = [
    "SamplePoint",
    "TaskDataset",
    "MultiTaskDataset",
    "CheckLoss",
    "NewsvendorLoss",
    "GeneralizedNewsvendorLoss",
    "HingeRidgeLoss",
    "QuadraticLoss",
    "LossSpec",
    "PiecewisePolynomial",
    "PolynomialSegment",
    "parse_loss_spec",
    "FusionConfig",
    "FusionSolution",
    "SolverDiagnostics",
    "RelatednessSpec",
    "GroundTruth",
    "RegularityParams",
    "ReferenceSolution",
    "PersonalizationReport",
    "CvPlan",
    "CvReport",
    "IngestSchema",
    "ScaleConfig",
    "NewsvendorConfig",
    "ResultRow",
    "ExperimentConfig",
    "MetricsReport",
]
