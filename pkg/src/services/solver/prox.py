"""Proximal primitives used by the consensus ADMM.

``theta_subproblem`` minimizes

    c * f(theta) + (s / 2) ||theta - t||^2

for one task's empirical risk f. The ridge part of f is folded into the
quadratic, so the solvers below only see sum_i w_i phi(y~_i - x~_i'theta)
plus (s~ / 2) ||theta - t~||^2.

Paths:
  quadratic loss        exact Cholesky solve
  1-d piecewise linear  exact scan over the loss breakpoints
  otherwise             residual-split ADMM, finished by an active-set
                        Newton polish on the samples sitting at a kink
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lstsq

from src.config import get_settings
from src.exceptions import ConvergenceError, InvalidParameterError, ShapeError
from src.schemas.dataset import TaskDataset
from src.schemas.loss import LossSpec
from src.services.losses import RiskTerms, SquaredProfile, task_terms

logger = logging.getLogger(__name__)

_EXACT_SCAN_LIMIT = 1000  # samples; the scan is O(n^2) in memory
_CHECK_EVERY = 10
_NEWTON_STEPS = 50
_RHO_BOUNDS = (1e-8, 1e8)


def prox_group_norm(v, kappa: float) -> np.ndarray:
    """Block soft-threshold (1 - kappa / ||v||)_+ v, the prox of kappa ||.||_2."""
    if kappa < 0:
        raise InvalidParameterError(f"threshold must be >= 0, got {kappa}")
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm <= kappa:
        return np.zeros_like(v)
    return (1.0 - kappa / norm) * v


@dataclass
class InnerState:
    """Warm start of the residual-split ADMM (theta, split residual, dual, rho)."""

    theta: np.ndarray
    split: np.ndarray
    dual: np.ndarray
    rho: float


@dataclass(frozen=True)
class ProxResult:
    theta: np.ndarray
    residual: float
    iterations: int
    state: InnerState | None = None


def prox_residual(
    terms: RiskTerms,
    theta: np.ndarray,
    strength: float,
    target: np.ndarray,
    w_scale: float,
    kink_tol: float,
) -> float:
    """min over d(w_scale * f)(theta) of ||g + strength (theta - target)||.

    Residuals within kink_tol * (1 + |y~_i|) count as kinks; their slopes
    range over the kink interval and are fitted with a bounded least squares.
    """
    residual, _ = terms.scaled(w_scale).min_norm_subgradient(
        theta, strength * (theta - target), kink_tol
    )
    return residual


def solve_prox(
    terms: RiskTerms,
    target: np.ndarray,
    strength: float,
    w_scale: float,
    tol: float,
    max_iters: int,
    kink_tol: float,
    state: InnerState | None = None,
) -> ProxResult:
    """Minimize w_scale * terms(theta) + (strength / 2) ||theta - target||^2."""
    s_eff = strength + 2.0 * w_scale * terms.ridge
    t_eff = strength * target / s_eff
    weights = w_scale * terms.weights
    profile = terms.profile

    if isinstance(profile, SquaredProfile):
        theta = _solve_quadratic(terms.X, terms.y, weights, s_eff, t_eff)
        iterations = 0
    elif profile.piecewise_linear and terms.d == 1 and terms.X.shape[0] <= _EXACT_SCAN_LIMIT:
        theta = _scan_1d(terms, weights, s_eff, t_eff)
        iterations = 0
    else:
        return _split_admm(
            terms, target, strength, w_scale, tol, max_iters, kink_tol, state
        )

    residual = prox_residual(terms, theta, strength, target, w_scale, kink_tol)
    return ProxResult(theta=theta, residual=residual, iterations=iterations)


def theta_subproblem(
    task: TaskDataset,
    spec: LossSpec,
    target,
    strength: float,
    w_scale: float = 1.0,
    inner_tol: float | None = None,
    *,
    max_iters: int | None = None,
    kink_tol: float | None = None,
) -> np.ndarray:
    """argmin_theta w_scale * f_j(theta) + (strength / 2) ||theta - target||^2.

    Raises:
        ConvergenceError: the optimality residual stayed above ``inner_tol``
            within ``max_iters``; ``best_iterate`` holds the best theta seen.
    """
    settings = get_settings()
    if strength <= 0:
        raise InvalidParameterError(f"strength must be > 0, got {strength}")
    if w_scale < 0:
        raise InvalidParameterError(f"w_scale must be >= 0, got {w_scale}")
    target = np.atleast_1d(np.asarray(target, dtype=float))
    if target.shape != (task.d,):
        raise ShapeError(f"target has shape {target.shape}, expected ({task.d},)")
    if w_scale == 0:
        return target.copy()
    result = solve_prox(
        task_terms(spec, task),
        target,
        strength,
        w_scale,
        tol=settings.inner_tol if inner_tol is None else inner_tol,
        max_iters=settings.max_inner_iters if max_iters is None else max_iters,
        kink_tol=settings.kink_tol if kink_tol is None else kink_tol,
    )
    return result.theta


def _solve_quadratic(X, y, weights, s_eff, t_eff) -> np.ndarray:
    d = X.shape[1]
    lhs = s_eff * np.eye(d) + X.T @ (X * weights[:, None])
    rhs = s_eff * t_eff + X.T @ (weights * y)
    return cho_solve(cho_factor(lhs), rhs)


def _scan_1d(terms: RiskTerms, weights, s_eff, t_eff) -> np.ndarray:
    """Exact minimizer of a 1-d piecewise-quadratic objective.

    Candidates are the breakpoints y~_i / x~_i and the stationary point of
    each segment between them; the best candidate is the minimizer.
    """
    x = terms.X[:, 0]
    y = terms.y
    profile = terms.profile
    moving = x != 0
    knots = np.unique(y[moving] / x[moving])
    if knots.size == 0:
        return t_eff.copy()

    probes = np.concatenate(
        [[knots[0] - 1.0], 0.5 * (knots[:-1] + knots[1:]), [knots[-1] + 1.0]]
    )
    slopes = profile.derivative(y[:, None] - x[:, None] * probes[None, :])
    # d/dtheta of the loss part is constant on each segment
    pull = -(x[:, None] * weights[:, None] * slopes).sum(axis=0)
    stationary = t_eff[0] - pull / s_eff
    lower = np.concatenate([[-np.inf], knots])
    upper = np.concatenate([knots, [np.inf]])
    inside = (stationary > lower) & (stationary < upper)
    candidates = np.concatenate([knots, stationary[inside]])

    losses = profile.value(y[:, None] - x[:, None] * candidates[None, :])
    values = (weights[:, None] * losses).sum(axis=0)
    values += 0.5 * s_eff * (candidates - t_eff[0]) ** 2
    return np.array([candidates[int(np.argmin(values))]])


def _split_admm(
    terms: RiskTerms,
    target: np.ndarray,
    strength: float,
    w_scale: float,
    tol: float,
    max_iters: int,
    kink_tol: float,
    state: InnerState | None,
) -> ProxResult:
    """ADMM on r = y~ - X~ theta with the scalar prox of phi on r."""
    X, y = terms.X, terms.y
    profile = terms.profile
    d = X.shape[1]
    gram = X.T @ X
    weights = w_scale * terms.weights
    s_eff = strength + 2.0 * w_scale * terms.ridge
    t_eff = strength * target / s_eff

    if state is None:
        theta = t_eff.copy()
        split = y - X @ theta
        dual = np.zeros_like(y)
        rho = s_eff * d / max(float(np.trace(gram)), 1e-12)
    else:
        theta, split, dual, rho = state.theta, state.split, state.dual, state.rho
    rho = float(np.clip(rho, *_RHO_BOUNDS))
    factor = cho_factor(s_eff * np.eye(d) + rho * gram)

    def certificate(candidate: np.ndarray) -> float:
        return prox_residual(terms, candidate, strength, target, w_scale, kink_tol)

    best_theta = theta.copy()
    best_residual = certificate(theta)
    iterations = 0
    while best_residual > tol and iterations < max_iters:
        iterations += 1
        theta = cho_solve(factor, s_eff * t_eff + rho * X.T @ (y - split + dual))
        fit = y - X @ theta
        previous = split
        split = profile.prox(fit + dual, weights / rho)
        dual = dual + fit - split

        if iterations % _CHECK_EVERY:
            continue
        for candidate in (theta, _polish(terms, weights, theta, split, s_eff, t_eff)):
            residual = certificate(candidate)
            if residual < best_residual:
                best_theta, best_residual = candidate.copy(), residual

        primal = float(np.linalg.norm(fit - split))
        dual_gap = rho * float(np.linalg.norm(X.T @ (split - previous)))
        if primal > 10.0 * dual_gap and rho < _RHO_BOUNDS[1]:
            rho, dual = rho * 2.0, dual / 2.0
            factor = cho_factor(s_eff * np.eye(d) + rho * gram)
        elif dual_gap > 10.0 * primal and rho > _RHO_BOUNDS[0]:
            rho, dual = rho / 2.0, dual * 2.0
            factor = cho_factor(s_eff * np.eye(d) + rho * gram)

    state = InnerState(theta=theta, split=split, dual=dual, rho=rho)
    if best_residual > tol:
        raise ConvergenceError(
            f"theta subproblem stalled at residual {best_residual:.3e} "
            f"after {iterations} iterations",
            best_iterate=best_theta,
            residual=best_residual,
            iterations=iterations,
        )
    logger.debug(f"theta subproblem: {iterations} iterations, residual {best_residual:.2e}")
    return ProxResult(best_theta, best_residual, iterations, state)


def _polish(
    terms: RiskTerms,
    weights: np.ndarray,
    theta: np.ndarray,
    split: np.ndarray,
    s_eff: float,
    t_eff: np.ndarray,
) -> np.ndarray:
    """Newton/KKT solve with the kink set read off the split residual.

    Samples whose split residual sits exactly on a kink p of phi are held
    there (x~_i'theta = y~_i - p); the rest stay on the smooth piece of
    phi that holds their split residual.
    """
    X, y = terms.X, terms.y
    profile = terms.profile
    d = X.shape[1]
    kink, points, _, _ = profile.locate_kinks(split)
    off = ~kink
    X_k = X[kink]
    k = X_k.shape[0]

    current = theta.copy()
    for _ in range(_NEWTON_STEPS):
        res = y - X @ current
        same_side = profile.piece(res) == profile.piece(split)
        at = np.where(same_side, res, split)
        slopes = np.where(off, profile.derivative(at), 0.0)
        curvature = np.where(off, profile.curvature(at), 0.0)
        hessian = X.T @ (X * (weights * curvature)[:, None])
        grad = -X.T @ (weights * slopes)

        lhs = np.zeros((d + k, d + k))
        lhs[:d, :d] = s_eff * np.eye(d) + hessian
        lhs[:d, d:] = -X_k.T
        lhs[d:, :d] = X_k
        rhs = np.concatenate([s_eff * t_eff - grad + hessian @ current, y[kink] - points[kink]])
        step = lstsq(lhs, rhs)[0][:d]

        done = np.linalg.norm(step - current) <= 1e-14 * (1.0 + np.linalg.norm(current))
        current = step
        if done or profile.piecewise_linear:
            break
    return current
