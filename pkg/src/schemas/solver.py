"""Pydantic schemas for the fusion solver: configuration and results."""

from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.config import get_settings
from src.exceptions import ShapeError


def per_task(value, m: int, name: str) -> np.ndarray:
    array = np.atleast_1d(np.asarray(value, dtype=float))
    if array.size == 1:
        return np.full(m, float(array[0]))
    if array.shape != (m,):
        raise ShapeError(f"{name} has {array.size} entries for {m} tasks")
    return array.copy()


class FusionConfig(BaseModel):
    """Weights w, penalties lambda and solver controls for program (2).

    ``weights``/``penalties`` accept a scalar (broadcast to every task) or one
    value per task. ``weights=None`` means w_j = 1.
    """

    model_config = ConfigDict(frozen=True)

    weights: float | tuple[float, ...] | None = Field(None, description="w_j >= 0")
    penalties: float | tuple[float, ...] = Field(0.0, description="lambda_j >= 0")
    admm_step: float = Field(default_factory=lambda: get_settings().admm_step, gt=0)
    residual_balancing: bool = Field(
        default_factory=lambda: get_settings().residual_balancing
    )
    balance_period: int = Field(
        default_factory=lambda: get_settings().balance_period, ge=1
    )
    balance_until: int = Field(
        default_factory=lambda: get_settings().balance_until, ge=0
    )
    tol_abs: float = Field(default_factory=lambda: get_settings().tol_abs, gt=0)
    tol_rel: float = Field(default_factory=lambda: get_settings().tol_rel, gt=0)
    max_outer_iters: int = Field(
        default_factory=lambda: get_settings().max_outer_iters, ge=1
    )
    inner_tol: float = Field(default_factory=lambda: get_settings().inner_tol, gt=0)
    max_inner_iters: int = Field(
        default_factory=lambda: get_settings().max_inner_iters, ge=1
    )
    kink_tol: float = Field(default_factory=lambda: get_settings().kink_tol, ge=0)
    n_jobs: int = Field(default_factory=lambda: get_settings().n_jobs, ge=1)

    @field_validator("weights", "penalties")
    @classmethod
    def _nonnegative(cls, value):
        if value is None:
            return value
        values = value if isinstance(value, tuple) else (value,)
        if any(not np.isfinite(v) or v < 0 for v in values):
            raise ValueError("weights and penalties must be finite and >= 0")
        return value

    def resolve_weights(self, m: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(m)
        return per_task(self.weights, m, "weights")

    def resolve_penalties(self, m: int) -> np.ndarray:
        return per_task(self.penalties, m, "penalties")

    def with_penalty(self, penalties: float | Sequence[float]) -> "FusionConfig":
        value = float(penalties) if np.isscalar(penalties) else tuple(penalties)
        return self.model_copy(update={"penalties": value})


class SolverDiagnostics(BaseModel):
    """Convergence report of one consensus-ADMM run."""

    model_config = ConfigDict(frozen=True)

    iterations: int = 0
    primal_residual: float = 0.0
    dual_residual: float = 0.0
    primal_threshold: float = 0.0
    dual_threshold: float = 0.0
    converged: bool = True
    admm_step: float = 1.0
    inner_residuals: tuple[float, ...] = ()
    polished: bool = False
    message: str = ""


class FusionSolution(BaseModel):
    """Estimates (Theta_hat, beta_hat) of program (2).

    ``theta_hat`` is d x m: column j is theta_hat_j.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    theta_hat: np.ndarray
    beta_hat: np.ndarray
    objective: float
    pooled_mask: tuple[bool, ...]
    diagnostics: SolverDiagnostics = Field(default_factory=SolverDiagnostics)

    @property
    def m(self) -> int:
        return self.theta_hat.shape[1]

    @property
    def d(self) -> int:
        return self.theta_hat.shape[0]

    @property
    def all_pooled(self) -> bool:
        return all(self.pooled_mask)
