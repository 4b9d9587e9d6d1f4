"""Loss and empirical-risk evaluation.

Public functions take a LossSpec and a sample/task; the solvers use
``RiskTerms``, the same risk already reduced to transformed arrays with
per-sample weights, so one code path serves f_j, w_j f_j and the pooled
sum_j w_j f_j.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear

from src.config import get_settings
from src.exceptions import InvalidInputError, InvalidParameterError, ShapeError
from src.schemas.dataset import MultiTaskDataset, SamplePoint, TaskDataset
from src.schemas.loss import LossSpec
from src.services.losses.profiles import ResidualProfile, profile_for


def check_loss(z, tau: float):
    """rho_tau(z) = (1 - tau) z^- + tau z^+ (scalar or array)."""
    if not 0.0 < tau < 1.0:
        raise InvalidParameterError(f"tau must lie in (0, 1), got {tau}")
    z = np.asarray(z, dtype=float)
    value = (1.0 - tau) * np.maximum(-z, 0.0) + tau * np.maximum(z, 0.0)
    return float(value) if value.ndim == 0 else value


def tau_from_costs(b: float, h: float) -> float:
    """Critical ratio b / (b + h) of the newsvendor problem."""
    if b < 0 or h < 0 or b + h <= 0:
        raise InvalidParameterError(f"need b, h >= 0 and b + h > 0, got b={b}, h={h}")
    return b / (b + h)


def _as_theta(theta, d: int) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (d,):
        raise ShapeError(f"theta has shape {theta.shape}, expected ({d},)")
    return theta


def loss_value(spec: LossSpec, theta, xi: SamplePoint) -> float:
    """l(theta, xi)."""
    theta = _as_theta(theta, xi.d)
    profile = profile_for(spec)
    X, y = profile.transform(xi.covariates[None, :], np.array([xi.response]))
    r = y - X @ theta
    return float(profile.value(r)[0] + profile.ridge * theta @ theta)


def loss_subgradient(spec: LossSpec, theta, xi: SamplePoint) -> np.ndarray:
    """Chosen element of d_theta l(theta, xi).

    At a zero residual the loss term contributes 0, so the hinge at margin
    exactly 1 returns 2 mu theta.
    """
    theta = _as_theta(theta, xi.d)
    profile = profile_for(spec)
    X, y = profile.transform(xi.covariates[None, :], np.array([xi.response]))
    r = y - X @ theta
    return -profile.derivative(r)[0] * X[0] + 2.0 * profile.ridge * theta


def task_arrays(spec: LossSpec, task: TaskDataset) -> tuple[np.ndarray, np.ndarray]:
    """Transformed (x~, y~) arrays of one task."""
    return profile_for(spec).transform(task.covariates, task.response)


def _require_samples(task: TaskDataset) -> None:
    if task.n == 0:
        raise InvalidInputError(f"task {task.task_id!r} has no samples")


def empirical_risk(spec: LossSpec, theta, task: TaskDataset) -> float:
    """f_j(theta) = mean of l(theta, xi) over the task, in sample order."""
    _require_samples(task)
    theta = _as_theta(theta, task.d)
    profile = profile_for(spec)
    X, y = profile.transform(task.covariates, task.response)
    # np.mean reduces pairwise
    return float(np.mean(profile.value(y - X @ theta)) + profile.ridge * theta @ theta)


def empirical_subgradient(spec: LossSpec, theta, task: TaskDataset) -> np.ndarray:
    """Mean of loss_subgradient over the task."""
    _require_samples(task)
    theta = _as_theta(theta, task.d)
    return task_terms(spec, task).gradient(theta)


def lipschitz_bound(
    spec: LossSpec, task: TaskDataset, theta, kink_tol: float | None = None
) -> float:
    """Upper bound on sup ||g|| over g in d f_j(theta).

    Samples off a kink contribute their exact gradient; samples within
    kink_tol of a kink add the larger end of its slope interval times
    ||x~_i|| / n.
    """
    _require_samples(task)
    theta = _as_theta(theta, task.d)
    if kink_tol is None:
        kink_tol = get_settings().kink_tol
    terms = task_terms(spec, task)
    r = terms.residual(theta)
    at_kink, _, lower, upper = terms.profile.locate_kinks(r, kink_tol)
    slopes = np.where(at_kink, 0.0, terms.profile.derivative(r))
    smooth = -terms.X.T @ (terms.weights * slopes) + 2.0 * terms.ridge * theta
    bound = float(np.linalg.norm(smooth))
    if np.any(at_kink):
        reach = np.maximum(np.abs(lower[at_kink]), np.abs(upper[at_kink]))
        norms = np.linalg.norm(terms.X[at_kink], axis=1)
        bound += float(np.sum(reach * terms.weights[at_kink] * norms))
    return bound


@dataclass(frozen=True)
class RiskTerms:
    """sum_i weights_i phi(y~_i - x~_i'theta) + ridge ||theta||^2."""

    profile: ResidualProfile
    X: np.ndarray
    y: np.ndarray
    weights: np.ndarray

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def ridge(self) -> float:
        return self.profile.ridge * float(np.sum(self.weights))

    def residual(self, theta: np.ndarray) -> np.ndarray:
        return self.y - self.X @ theta

    def value(self, theta: np.ndarray) -> float:
        r = self.residual(theta)
        return float(np.sum(self.weights * self.profile.value(r)) + self.ridge * theta @ theta)

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        """Chosen subgradient (kink samples contribute 0)."""
        r = self.residual(theta)
        return -self.X.T @ (self.weights * self.profile.derivative(r)) + 2.0 * self.ridge * theta

    def subdifferential(
        self, theta: np.ndarray, kink_tol: float
    ) -> tuple[np.ndarray, np.ndarray, tuple[np.ndarray, np.ndarray] | None]:
        """Parametrize the subdifferential as fixed + A a with lower <= a <= upper.

        Samples within kink_tol (1 + |y~_i|) of a kink of phi become the k
        columns of A, each bounded by that kink's slope interval; every other
        sample is in ``fixed``.
        """
        profile = self.profile
        r = self.residual(theta)
        if not profile.kinks:
            return self.gradient(theta), np.zeros((self.d, 0)), None
        at_kink, _, lower, upper = profile.locate_kinks(
            r, kink_tol * (1.0 + np.abs(self.y))
        )
        off = ~at_kink
        fixed = -self.X[off].T @ (self.weights[off] * profile.derivative(r[off]))
        fixed = fixed + 2.0 * self.ridge * theta
        A = -(self.X[at_kink] * self.weights[at_kink, None]).T
        return fixed, A, (lower[at_kink], upper[at_kink])

    def min_norm_subgradient(
        self, theta: np.ndarray, shift: np.ndarray, kink_tol: float
    ) -> tuple[float, np.ndarray]:
        """min ||g + shift|| over g in the subdifferential, and the minimizing g."""
        fixed, A, bounds = self.subdifferential(theta, kink_tol)
        if A.shape[1] == 0:
            g = fixed
        else:
            b = -(fixed + shift)
            fit = lsq_linear(A, b, bounds=bounds, method="bvls")
            g = fixed + A @ fit.x
        return float(np.linalg.norm(g + shift)), g

    def scaled(self, factor: float) -> "RiskTerms":
        return RiskTerms(self.profile, self.X, self.y, self.weights * factor)

    def subset(self, index: np.ndarray) -> "RiskTerms":
        return RiskTerms(self.profile, self.X[index], self.y[index], self.weights[index])


def task_terms(spec: LossSpec, task: TaskDataset) -> RiskTerms:
    """f_j as RiskTerms (weights 1 / n_j)."""
    X, y = task_arrays(spec, task)
    return RiskTerms(profile_for(spec), X, y, np.full(task.n, 1.0 / task.n))


def stack_tasks(
    spec: LossSpec, data: MultiTaskDataset, weights: np.ndarray | None = None
) -> RiskTerms:
    """sum_j w_j f_j as one RiskTerms; ``weights=None`` means w_j = n_j."""
    sizes = np.asarray(data.sizes, dtype=float)
    w = sizes if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (data.m,):
        raise ShapeError(f"{w.size} weights for {data.m} tasks")
    arrays = [task_arrays(spec, task) for task in data.tasks]
    return RiskTerms(
        profile_for(spec),
        np.vstack([X for X, _ in arrays]),
        np.concatenate([y for _, y in arrays]),
        np.concatenate([np.full(task.n, wj / task.n) for task, wj in zip(data.tasks, w)]),
    )
