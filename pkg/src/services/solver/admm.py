"""Consensus ADMM for the fused program

    min_{Theta, beta}  sum_j w_j [ f_j(theta_j) + lambda_j ||theta_j - beta||_2 ]

split as z_j = theta_j - beta with scaled duals u_j. Each outer iteration:

1. theta_j = argmin w_j f_j + (sigma / 2) ||theta - (beta + z_j - u_j)||^2
2. (beta, Z) jointly: alternate z_j = prox(theta_j + u_j - beta, w_j lambda_j / sigma)
   and beta = mean_j(theta_j + u_j - z_j) until stationary
3. u_j += theta_j - beta - z_j

Thresholded z_j are exactly zero, which is what makes pooling detectable.
"""

import logging

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import lsq_linear

from src.exceptions import ConvergenceError, ShapeError
from src.schemas.dataset import MultiTaskDataset
from src.schemas.loss import LossSpec
from src.schemas.solver import (
    FusionConfig,
    FusionSolution,
    SolverDiagnostics,
    per_task,
)
from src.services.losses import (
    RiskTerms,
    empirical_risk,
    lipschitz_bound,
    task_terms,
)
from src.services.solver.baselines import solve_dp, solve_stl
from src.services.solver.prox import ProxResult, solve_prox

logger = logging.getLogger(__name__)

_MAX_SWEEPS = 200
_STEP_BOUNDS = (1e-4, 1e4)
_BALANCE_RATIO = 10.0
_POOL_TOL = 1e-12


def _as_matrix(theta, d: int, m: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 1 and m == 1:
        theta = theta.reshape(-1, 1)
    if theta.shape != (d, m):
        raise ShapeError(f"Theta has shape {theta.shape}, expected ({d}, {m})")
    return theta


def _as_vector(beta, d: int) -> np.ndarray:
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if beta.shape != (d,):
        raise ShapeError(f"beta has shape {beta.shape}, expected ({d},)")
    return beta


def _resolve(config: FusionConfig, m: int) -> tuple[np.ndarray, np.ndarray]:
    return config.resolve_weights(m), config.resolve_penalties(m)


def objective_value(
    data: MultiTaskDataset, spec: LossSpec, weights, penalties, theta, beta
) -> float:
    """F_{w,lambda}(Theta, beta) = sum_j w_j [f_j(theta_j) + lambda_j ||theta_j - beta||]."""
    m, d = data.m, data.d
    w = np.ones(m) if weights is None else per_task(weights, m, "weights")
    lam = per_task(penalties, m, "penalties")
    theta = _as_matrix(theta, d, m)
    beta = _as_vector(beta, d)
    risks = np.array(
        [empirical_risk(spec, theta[:, j], task) for j, task in enumerate(data.tasks)]
    )
    gaps = np.linalg.norm(theta - beta[:, None], axis=0)
    return float(np.sum(w * (risks + lam * gaps)))


def pooled_columns(theta: np.ndarray, beta: np.ndarray, penalties: np.ndarray) -> np.ndarray:
    """Columns equal to beta exactly, among tasks with a positive penalty."""
    return np.all(theta == beta[:, None], axis=0) & (penalties > 0)


def optimality_residual(
    data: MultiTaskDataset, spec: LossSpec, config: FusionConfig, theta, beta
) -> float:
    """Minimal-norm stationarity residual of the fused program at (Theta, beta).

    Tasks with theta_j != beta need w_j (g_j + lambda_j e_j) = 0 for some
    g_j in d f_j(theta_j); tasks sitting at beta contribute their subgradients
    to the beta equation and any excess of ||g_j|| over lambda_j.
    """
    m, d = data.m, data.d
    w, lam = _resolve(config, m)
    theta = _as_matrix(theta, d, m)
    beta = _as_vector(beta, d)
    tol = config.kink_tol

    squares = []
    beta_force = np.zeros(d)
    pooled: list[tuple[int, np.ndarray, np.ndarray, tuple[np.ndarray, np.ndarray] | None]] = []
    for j, task in enumerate(data.tasks):
        if w[j] == 0:
            continue
        terms = task_terms(spec, task)
        gap = theta[:, j] - beta
        gap_norm = float(np.linalg.norm(gap))
        if lam[j] > 0 and gap_norm <= _POOL_TOL * (1.0 + np.linalg.norm(beta)):
            fixed, A, bounds = terms.subdifferential(theta[:, j], tol)
            pooled.append((j, fixed, A, bounds))
            continue
        direction = gap / gap_norm if lam[j] > 0 else np.zeros(d)
        residual, _ = terms.min_norm_subgradient(theta[:, j], lam[j] * direction, tol)
        squares.append((w[j] * residual) ** 2)
        beta_force += w[j] * lam[j] * direction

    if pooled:
        # beta equation: sum over free tasks of w lambda e = sum over pooled of w g
        fixed_sum = sum(w[j] * fixed for j, fixed, _, _ in pooled)
        blocks = [w[j] * A for j, _, A, _ in pooled]
        A_all = np.hstack(blocks)
        b = beta_force - fixed_sum
        multipliers = np.zeros(A_all.shape[1])
        if A_all.shape[1]:
            ranges = [bounds for _, _, A, bounds in pooled if A.shape[1]]
            lo = np.concatenate([lower for lower, _ in ranges])
            hi = np.concatenate([upper for _, upper in ranges])
            multipliers = lsq_linear(A_all, b, bounds=(lo, hi), method="bvls").x
        squares.append(float(np.linalg.norm(A_all @ multipliers - b)) ** 2)
        offset = 0
        for j, fixed, A, _ in pooled:
            g = fixed + A @ multipliers[offset : offset + A.shape[1]]
            offset += A.shape[1]
            excess = max(0.0, float(np.linalg.norm(g)) - lam[j])
            squares.append((w[j] * excess) ** 2)
    else:
        squares.append(float(np.linalg.norm(beta_force)) ** 2)

    return float(np.sqrt(np.sum(squares)))


def pooling_threshold(
    data: MultiTaskDataset,
    spec: LossSpec,
    weights=None,
    margin: float = 1e-3,
    config: FusionConfig | None = None,
) -> float:
    """Penalty level above which every task collapses onto the DP solution.

    (2 / min_j w_j) max_j w_j G_j, plus ``margin`` relative to that value,
    where G_j bounds the subgradients of f_j at the weighted DP solution.
    """
    config = config or FusionConfig()
    w = np.ones(data.m) if weights is None else per_task(weights, data.m, "weights")
    theta_dp = solve_dp(data, spec, weights=w, config=config)
    bounds = np.array(
        [lipschitz_bound(spec, task, theta_dp, config.kink_tol) for task in data.tasks]
    )
    active = w > 0
    core = 2.0 / float(np.min(w[active])) * float(np.max(w * bounds))
    return core + margin * max(1.0, core)


def _theta_step(
    terms: RiskTerms,
    target: np.ndarray,
    sigma: float,
    weight: float,
    tol: float,
    config: FusionConfig,
    state,
) -> ProxResult:
    if weight == 0:
        return ProxResult(target.copy(), 0.0, 0)
    try:
        return solve_prox(
            terms,
            target,
            sigma,
            weight,
            tol=tol,
            max_iters=config.max_inner_iters,
            kink_tol=config.kink_tol,
            state=state,
        )
    except ConvergenceError as e:
        logger.warning(f"inner solve stopped early, continuing with best iterate: {e}")
        return ProxResult(e.best_iterate, e.residual, e.iterations)


def _center_block(
    V: np.ndarray, thresholds: np.ndarray, beta: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Joint minimizer of sum_j t_j ||z_j|| + 1/2 ||V_j - beta - z_j||^2 by sweeps."""

    def shrink(center: np.ndarray) -> np.ndarray:
        diff = V - center[:, None]
        norms = np.linalg.norm(diff, axis=0)
        safe = np.where(norms > 0, norms, 1.0)
        factor = np.where(norms > thresholds, 1.0 - thresholds / safe, 0.0)
        return diff * factor

    for _ in range(_MAX_SWEEPS):
        Z = shrink(beta)
        updated = np.mean(V - Z, axis=1)
        moved = np.linalg.norm(updated - beta)
        beta = updated
        if moved <= 1e-14 * (1.0 + np.linalg.norm(beta)):
            break
    return beta, shrink(beta)


def solve_fused(
    data: MultiTaskDataset, spec: LossSpec, config: FusionConfig | None = None
) -> FusionSolution:
    """Fused estimates (Theta_hat, beta_hat) by consensus ADMM.

    Raises:
        ConvergenceError: residuals stayed above their thresholds for
            ``max_outer_iters`` iterations; ``best_iterate`` is the best
            FusionSolution found.
    """
    config = config or FusionConfig()
    m, d = data.m, data.d
    w, lam = _resolve(config, m)
    coupling = w * lam
    if not np.any(coupling > 0):
        return _decoupled(data, spec, config, w, lam)

    terms = [task_terms(spec, task) for task in data.tasks]
    theta = np.zeros((d, m))
    beta = np.zeros(d)
    Z = np.zeros((d, m))
    U = np.zeros((d, m))
    sigma = config.admm_step
    states = [None] * m
    inner = np.zeros(m)
    inner_tol = max(config.inner_tol, 1e-3)
    floor = config.tol_abs * np.sqrt(d * m)
    converged = False
    primal = dual = eps_pri = eps_dual = np.inf

    iteration = 0
    with Parallel(n_jobs=config.n_jobs, prefer="threads") as parallel:
        for iteration in range(1, config.max_outer_iters + 1):
            targets = beta[:, None] + Z - U
            results = parallel(
                delayed(_theta_step)(
                    terms[j], targets[:, j], sigma, w[j], inner_tol, config, states[j]
                )
                for j in range(m)
            )
            theta = np.column_stack([r.theta for r in results])
            states = [r.state for r in results]
            inner = np.array([r.residual for r in results])

            beta_old, Z_old = beta, Z
            beta, Z = _center_block(theta + U, coupling / sigma, beta)
            U = U + theta - beta[:, None] - Z

            primal = float(np.linalg.norm(theta - beta[:, None] - Z))
            dual = sigma * float(np.linalg.norm((beta - beta_old)[:, None] + Z - Z_old))
            eps_pri = floor + config.tol_rel * max(
                float(np.linalg.norm(theta)), float(np.linalg.norm(beta[:, None] + Z))
            )
            eps_dual = floor + config.tol_rel * sigma * float(np.linalg.norm(U))
            logger.debug(
                f"iter {iteration}: primal {primal:.3e}/{eps_pri:.3e}, "
                f"dual {dual:.3e}/{eps_dual:.3e}, sigma {sigma:g}"
            )
            if primal <= eps_pri and dual <= eps_dual:
                converged = True
                break

            inner_tol = max(config.inner_tol, 0.1 * min(primal, dual))
            rebalance = (
                config.residual_balancing
                and iteration <= config.balance_until
                and iteration % config.balance_period == 0
            )
            if rebalance:
                if primal > _BALANCE_RATIO * dual and sigma * 2.0 <= _STEP_BOUNDS[1]:
                    sigma, U = sigma * 2.0, U / 2.0
                elif dual > _BALANCE_RATIO * primal and sigma / 2.0 >= _STEP_BOUNDS[0]:
                    sigma, U = sigma / 2.0, U * 2.0

    diagnostics = SolverDiagnostics(
        iterations=iteration,
        primal_residual=primal,
        dual_residual=dual,
        primal_threshold=eps_pri,
        dual_threshold=eps_dual,
        converged=converged,
        admm_step=sigma,
        inner_residuals=tuple(float(r) for r in inner),
    )
    solution = _select_iterate(data, spec, config, w, lam, theta, beta, Z, diagnostics)
    if not converged:
        raise ConvergenceError(
            f"consensus ADMM did not converge in {iteration} iterations "
            f"(primal {primal:.2e}, dual {dual:.2e})",
            best_iterate=solution,
            residual=max(primal, dual),
            iterations=iteration,
        )
    logger.info(
        f"fused solve: {iteration} iterations, objective {solution.objective:.10g}, "
        f"{sum(solution.pooled_mask)}/{m} tasks pooled"
    )
    return solution


def _select_iterate(
    data: MultiTaskDataset,
    spec: LossSpec,
    config: FusionConfig,
    w: np.ndarray,
    lam: np.ndarray,
    theta: np.ndarray,
    beta: np.ndarray,
    Z: np.ndarray,
    diagnostics: SolverDiagnostics,
) -> FusionSolution:
    """Best of {DP polish, snapped, final, initial} by objective (ties: first)."""
    d, m = theta.shape
    thresholded = np.all(Z == 0.0, axis=0) & (lam > 0)
    snapped = theta.copy()
    snapped[:, thresholded] = beta[:, None]

    candidates: list[tuple[str, np.ndarray, np.ndarray]] = []
    if np.all(thresholded):
        try:
            center = solve_dp(data, spec, weights=w, config=config)
            candidates.append(("polished", np.tile(center[:, None], (1, m)), center))
        except ConvergenceError as e:
            logger.warning(f"DP polish skipped: {e}")
    candidates.append(("snapped", snapped, beta))
    candidates.append(("final", theta, beta))
    candidates.append(("initial", np.zeros((d, m)), np.zeros(d)))

    scored = [
        (objective_value(data, spec, w, lam, cand_theta, cand_beta), name, cand_theta, cand_beta)
        for name, cand_theta, cand_beta in candidates
    ]
    best = min(range(len(scored)), key=lambda k: (scored[k][0], k))
    objective, name, best_theta, best_beta = scored[best]
    return FusionSolution(
        theta_hat=best_theta,
        beta_hat=best_beta,
        objective=objective,
        pooled_mask=tuple(bool(b) for b in pooled_columns(best_theta, best_beta, lam)),
        diagnostics=diagnostics.model_copy(
            update={"polished": name == "polished", "message": f"reported iterate: {name}"}
        ),
    )


def _decoupled(
    data: MultiTaskDataset,
    spec: LossSpec,
    config: FusionConfig,
    w: np.ndarray,
    lam: np.ndarray,
) -> FusionSolution:
    """No coupling: per-task STL fits, beta the w-weighted mean of the columns."""
    columns = Parallel(n_jobs=config.n_jobs, prefer="threads")(
        delayed(solve_stl)(task, spec, config) for task in data.tasks
    )
    theta = np.column_stack(columns)
    total = float(np.sum(w))
    beta = theta @ w / total if total > 0 else theta.mean(axis=1)
    objective = objective_value(data, spec, w, lam, theta, beta)
    return FusionSolution(
        theta_hat=theta,
        beta_hat=beta,
        objective=objective,
        pooled_mask=tuple(bool(b) for b in pooled_columns(theta, beta, lam)),
        diagnostics=SolverDiagnostics(message="decoupled: no task carries a penalty"),
    )
