"""Pydantic schemas describing the per-sample loss l(theta, xi).

A LossSpec is a tagged union on ``kind`` so configs stay plain JSON:

    {"kind": "check", "tau": 0.9}
    {"kind": "newsvendor", "b": 9, "h": 1}
    {"kind": "generalized_newsvendor", "backorder": {...}, "holding": {...}}
    {"kind": "hinge_ridge", "mu": 0.01}
    {"kind": "quadratic"}

Generalized newsvendor costs are piecewise polynomials rather than callables,
validated for continuity, convexity and monotonicity when they are loaded.
"""

from typing import Annotated, Literal

import numpy as np
from numpy.polynomial import polynomial as P
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError
from pydantic import model_validator

from src.exceptions import InvalidParameterError

_SHAPE_TOL = 1e-9


class PolynomialSegment(BaseModel):
    """Polynomial sum_k c_k x^k valid from ``start`` up to the next segment."""

    model_config = ConfigDict(frozen=True)

    start: float
    coefficients: tuple[float, ...] = Field(..., min_length=1)


class PiecewisePolynomial(BaseModel):
    """Scalar function given by ordered polynomial segments.

    The first segment also extends to the left of its start, the last one to
    +infinity. Interior breakpoints join continuously; the slope may jump
    upward there, which leaves a kink.
    """

    model_config = ConfigDict(frozen=True)

    segments: tuple[PolynomialSegment, ...] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_shape(self) -> "PiecewisePolynomial":
        starts = [s.start for s in self.segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("segment starts must be strictly increasing")
        for left, right in zip(self.segments, self.segments[1:]):
            x = right.start
            a = P.polyval(x, left.coefficients)
            b = P.polyval(x, right.coefficients)
            if abs(a - b) > _SHAPE_TOL * (1.0 + abs(a)):
                raise ValueError(f"value jumps at breakpoint {x}")
            slope_in = P.polyval(x, P.polyder(left.coefficients))
            slope_out = P.polyval(x, P.polyder(right.coefficients))
            if slope_out < slope_in - _SHAPE_TOL * (1.0 + abs(slope_in)):
                raise ValueError(f"derivative drops at breakpoint {x}")
        for k, segment in enumerate(self.segments):
            lo = segment.start
            hi = self.segments[k + 1].start if k + 1 < len(self.segments) else None
            if not _nonnegative_on(P.polyder(segment.coefficients, 2), lo, hi):
                raise ValueError(f"segment starting at {lo} is not convex")
        return self

    @classmethod
    def linear(cls, slope: float, intercept: float = 0.0) -> "PiecewisePolynomial":
        return cls(
            segments=(PolynomialSegment(start=0.0, coefficients=(intercept, slope)),)
        )

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Interior segment starts."""
        return tuple(s.start for s in self.segments[1:])

    def _pieces(self, x: np.ndarray, side: str = "right") -> np.ndarray:
        starts = np.array([s.start for s in self.segments])
        return np.clip(np.searchsorted(starts, x, side=side) - 1, 0, None)

    def _evaluate(self, x, order: int, side: str = "right") -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pieces = self._pieces(x, side)
        for k, segment in enumerate(self.segments):
            mask = pieces == k
            if np.any(mask):
                out[mask] = P.polyval(x[mask], P.polyder(segment.coefficients, order))
        return out

    def __call__(self, x) -> np.ndarray:
        return self._evaluate(x, 0)

    def derivative(self, x) -> np.ndarray:
        """Right derivative."""
        return self._evaluate(x, 1)

    def left_derivative(self, x) -> np.ndarray:
        return self._evaluate(x, 1, side="left")

    def second_derivative(self, x) -> np.ndarray:
        return self._evaluate(x, 2)


def _nonnegative_on(coefficients: np.ndarray, lo: float, hi: float | None) -> bool:
    """Exact sign check of a polynomial on [lo, hi] (hi=None means +inf)."""
    coefficients = np.trim_zeros(np.atleast_1d(coefficients), "b")
    if coefficients.size == 0:
        return True
    points = [lo]
    if coefficients.size > 1:
        roots = P.polyroots(coefficients)
        real = sorted(
            r.real
            for r in roots
            if abs(r.imag) < 1e-12 and r.real > lo and (hi is None or r.real < hi)
        )
        points.extend(real)
    if hi is None:
        points.append(points[-1] + 1.0)
        if coefficients.size > 1 and coefficients[-1] < 0:
            return False
    else:
        points.append(hi)
    probes = points + [(a + b) / 2 for a, b in zip(points, points[1:])]
    scale = 1.0 + np.max(np.abs(coefficients))
    return bool(np.all(P.polyval(np.array(probes), coefficients) >= -_SHAPE_TOL * scale))


class CheckLoss(BaseModel):
    """Quantile check loss rho_tau(y - x'theta)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["check"] = "check"
    tau: float = Field(..., gt=0.0, lt=1.0)


class NewsvendorLoss(BaseModel):
    """Backorder/holding cost b (y - x'theta)^+ + h (y - x'theta)^-."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["newsvendor"] = "newsvendor"
    b: float = Field(..., gt=0.0, description="Backorder cost per unit")
    h: float = Field(..., gt=0.0, description="Holding cost per unit")

    @property
    def tau(self) -> float:
        return self.b / (self.b + self.h)


class GeneralizedNewsvendorLoss(BaseModel):
    """Convex cost B((y - x'theta)^+) + H((y - x'theta)^-)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["generalized_newsvendor"] = "generalized_newsvendor"
    backorder: PiecewisePolynomial
    holding: PiecewisePolynomial

    @model_validator(mode="after")
    def _check_costs(self) -> "GeneralizedNewsvendorLoss":
        for name, cost in (("backorder", self.backorder), ("holding", self.holding)):
            if cost.segments[0].start != 0.0:
                raise ValueError(f"{name} cost must start at 0")
            if float(cost.derivative(np.array([0.0]))[0]) < -_SHAPE_TOL:
                raise ValueError(f"{name} cost must be non-decreasing")
        b0 = float(self.backorder(np.array([0.0]))[0])
        h0 = float(self.holding(np.array([0.0]))[0])
        if abs(b0 - h0) > _SHAPE_TOL * (1.0 + abs(b0)):
            raise ValueError("backorder and holding costs must agree at 0")
        return self


class HingeRidgeLoss(BaseModel):
    """Soft-margin SVM loss (1 - y x'theta)^+ + mu ||theta||^2."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["hinge_ridge"] = "hinge_ridge"
    mu: float = Field(0.0, ge=0.0)


class QuadraticLoss(BaseModel):
    """Squared error (y - x'theta)^2 / 2."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["quadratic"] = "quadratic"


LossSpec = Annotated[
    CheckLoss
    | NewsvendorLoss
    | GeneralizedNewsvendorLoss
    | HingeRidgeLoss
    | QuadraticLoss,
    Field(discriminator="kind"),
]

_loss_adapter = TypeAdapter(LossSpec)


def parse_loss_spec(payload: dict | str) -> LossSpec:
    """Validate a loss description from a dict or JSON string."""
    try:
        if isinstance(payload, str):
            return _loss_adapter.validate_json(payload)
        return _loss_adapter.validate_python(payload)
    except ValidationError as e:
        raise InvalidParameterError(f"invalid loss spec: {e}") from e
