"""Single-task (STL) and data-pooling (DP) baselines.

Both reduce to minimizing one weighted risk sum_i w_i phi(r_i) + ridge ||theta||^2:
- piecewise-linear phi without ridge: linear program (HiGHS), then a snap to
  the vertex through the d samples closest to zero residual
- quadratic phi: weighted least squares
- everything else: proximal-point iterations on the theta subproblem
"""

import logging

import numpy as np
from scipy import sparse
from scipy.linalg import lstsq
from scipy.optimize import linprog

from src.exceptions import ConvergenceError, InvalidParameterError, ShapeError
from src.schemas.dataset import MultiTaskDataset, TaskDataset
from src.schemas.loss import LossSpec
from src.schemas.solver import FusionConfig
from src.services.losses import RiskTerms, SquaredProfile, stack_tasks, task_terms
from src.services.solver.prox import solve_prox

logger = logging.getLogger(__name__)


def solve_stl(
    task: TaskDataset, spec: LossSpec, config: FusionConfig | None = None
) -> np.ndarray:
    """theta_j = argmin f_j(theta)."""
    return minimize_risk(task_terms(spec, task), config or FusionConfig())


def solve_dp(
    data: MultiTaskDataset,
    spec: LossSpec,
    weights=None,
    config: FusionConfig | None = None,
) -> np.ndarray:
    """argmin sum_j w_j f_j(theta); ``weights=None`` means w_j = n_j."""
    if weights is not None:
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if weights.size == 1:
            weights = np.full(data.m, float(weights[0]))
        if weights.shape != (data.m,):
            raise ShapeError(f"{weights.size} weights for {data.m} tasks")
        if np.any(weights < 0) or not np.any(weights > 0):
            raise InvalidParameterError("DP weights must be >= 0 and not all zero")
    return minimize_risk(stack_tasks(spec, data, weights), config or FusionConfig())


def predict(theta_hat, covariates) -> np.ndarray:
    """Linear decision rule x'theta (order quantities for newsvendor losses).

    ``theta_hat`` may be one vector or a d x m matrix; covariates are n x d.
    """
    covariates = np.atleast_2d(np.asarray(covariates, dtype=float))
    theta_hat = np.asarray(theta_hat, dtype=float)
    if covariates.shape[1] != theta_hat.shape[0]:
        raise ShapeError(
            f"covariates have {covariates.shape[1]} columns, theta has {theta_hat.shape[0]} rows"
        )
    return covariates @ theta_hat


def minimize_risk(terms: RiskTerms, config: FusionConfig) -> np.ndarray:
    """Minimizer of a weighted risk, exact where the loss allows it."""
    profile = terms.profile
    if isinstance(profile, SquaredProfile):
        root = np.sqrt(terms.weights)
        return lstsq(terms.X * root[:, None], terms.y * root)[0]
    if profile.piecewise_linear and terms.ridge == 0.0:
        return _snap_to_vertex(terms, _solve_lp(terms))
    return _proximal_point(terms, config)


def _solve_lp(terms: RiskTerms) -> np.ndarray:
    """min w'(hi p - lo q)  s.t.  X theta + p - q = y,  p, q >= 0."""
    X, y, w = terms.X, terms.y, terms.weights
    n, d = X.shape
    lo, hi = terms.profile.kink
    cost = np.concatenate([np.zeros(d), w * hi, -w * lo])
    identity = sparse.identity(n, format="csr")
    A_eq = sparse.hstack([sparse.csr_matrix(X), identity, -identity], format="csr")
    bounds = [(None, None)] * d + [(0, None)] * (2 * n)
    result = linprog(cost, A_eq=A_eq, b_eq=y, bounds=bounds, method="highs")
    if result.status != 0:
        raise ConvergenceError(
            f"linear program failed: {result.message}", best_iterate=np.zeros(d)
        )
    return result.x[:d]


def _snap_to_vertex(terms: RiskTerms, theta: np.ndarray) -> np.ndarray:
    """Interpolate the d samples nearest the kink when that does not hurt."""
    d = terms.d
    r = terms.residual(theta)
    closest = np.argsort(np.abs(r), kind="stable")[:d]
    snapped = lstsq(terms.X[closest], terms.y[closest])[0]
    if terms.value(snapped) <= terms.value(theta):
        return snapped
    return theta


def _proximal_point(terms: RiskTerms, config: FusionConfig) -> np.ndarray:
    """theta_{k+1} = argmin risk(theta) + (s / 2) ||theta - theta_k||^2.

    Stops once s ||theta_{k+1} - theta_k|| plus the inner residual is below
    ``inner_tol``, which bounds the optimality residual of the risk itself.
    """
    d = terms.d
    curvature = float(np.sum(terms.weights * np.sum(terms.X**2, axis=1))) / d
    strength = 2.0 * terms.ridge if terms.ridge > 0 else max(0.1 * curvature, 1e-6)
    theta = np.zeros(d)
    state = None
    for iteration in range(1, config.max_outer_iters + 1):
        result = solve_prox(
            terms,
            theta,
            strength,
            1.0,
            tol=config.inner_tol / 2.0,
            max_iters=config.max_inner_iters,
            kink_tol=config.kink_tol,
            state=state,
        )
        step = float(np.linalg.norm(result.theta - theta))
        theta, state = result.theta, result.state
        if strength * step + result.residual <= config.inner_tol:
            logger.debug(f"proximal point converged after {iteration} iterations")
            return theta
    raise ConvergenceError(
        f"proximal point did not converge in {config.max_outer_iters} iterations",
        best_iterate=theta,
        residual=strength * step,
        iterations=config.max_outer_iters,
    )
