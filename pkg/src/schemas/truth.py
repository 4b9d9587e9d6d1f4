"""Schemas for ground truth, regularity metadata and oracle outputs."""

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class RelatednessSpec(BaseModel):
    """Parameters of an (epsilon, delta)-related synthetic task family."""

    model_config = ConfigDict(frozen=True)

    m: int = Field(50, ge=1, description="Number of tasks")
    epsilon: float = Field(0.0, ge=0.0, lt=1.0, description="Outlier fraction")
    delta: float = Field(0.0, ge=0.0, description="Similarity radius")
    dim: int = Field(20, ge=1, description="Coefficient dimension")
    signal: float = Field(2.0, gt=0.0, description="Coefficient sphere radius")
    tau: float = Field(0.9, gt=0.0, lt=1.0, description="Target quantile level")
    noise_sd: float = Field(0.5, gt=0.0, description="Noise standard deviation")
    seed: int = Field(0, ge=0, lt=2**64)

    @property
    def n_outliers(self) -> int:
        # Small guard so e.g. 0.1 * 30 counts as 3
        return int(math.floor(self.epsilon * self.m + 1e-9))


class GroundTruth(BaseModel):
    """True coefficients of a synthetic family.

    ``gamma_star`` is dim x m, ``theta_star`` is (dim + 1) x m with the
    intercept row first.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    gamma_star: np.ndarray
    theta_star: np.ndarray
    inliers: tuple[int, ...] = Field(..., description="Index set S")
    spec: RelatednessSpec

    @property
    def outliers(self) -> tuple[int, ...]:
        inliers = set(self.inliers)
        return tuple(j for j in range(self.spec.m) if j not in inliers)


class RegularityParams(BaseModel):
    """Regularity constants used by the deterministic bound checks."""

    model_config = ConfigDict(frozen=True)

    rho: float = Field(..., gt=0.0, description="Strong convexity modulus")
    lip: float = Field(..., gt=0.0, description="Smoothness constant L")
    radius: float = Field(math.inf, gt=0.0, description="Radius M")
    zeta: tuple[float, ...] = Field((), description="Per-task gaps zeta_j")
    zeta_S: float = Field(0.0, ge=0.0)
    sigma: float = Field(0.0, ge=0.0, description="Subgaussian proxy (metadata)")

    @model_validator(mode="after")
    def _check_order(self) -> "RegularityParams":
        if self.lip < self.rho:
            raise ValueError("need rho <= L")
        if any(z < 0 for z in self.zeta):
            raise ValueError("zeta_j must be >= 0")
        if self.zeta and self.zeta_S > sum(self.zeta) + 1e-12:
            raise ValueError("zeta_S cannot exceed the sum of zeta_j")
        return self

    @property
    def kappa(self) -> float:
        return self.lip / self.rho

    def zeta_for(self, m: int) -> np.ndarray:
        if not self.zeta:
            return np.zeros(m)
        return np.asarray(self.zeta, dtype=float)


class ReferenceSolution(BaseModel):
    """Output of the slow reference solver."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    theta: np.ndarray
    beta: np.ndarray
    objective: float
    certified_gap: float = Field(..., ge=0.0)
    iterations: int = 0


class PersonalizationReport(BaseModel):
    """Per-task slack of ||theta_hat_j - theta_tilde_j|| <= (lambda_j + zeta_j)/rho."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    holds: bool
    distances: tuple[float, ...]
    bounds: tuple[float, ...]
    slack: tuple[float, ...]

    def __bool__(self) -> bool:
        return self.holds
