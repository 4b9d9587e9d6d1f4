"""Slow reference solver for the fused program.

Restarted averaged subgradient method on the joint variable (Theta, beta):
normalized steps c / sqrt(k) inside fixed-length epochs, each epoch restarted
from the best point seen with c halved. The iterate sequence does not depend
on the budget, so the best objective is non-increasing in the budget.
"""

import logging

import numpy as np

from src.config import get_settings
from src.schemas.dataset import MultiTaskDataset
from src.schemas.loss import LossSpec
from src.schemas.solver import FusionConfig
from src.schemas.truth import ReferenceSolution
from src.services.losses import task_terms
from src.services.solver import optimality_residual

logger = logging.getLogger(__name__)

_EPOCH = 250


def reference_solve_fused(
    data: MultiTaskDataset,
    spec: LossSpec,
    config: FusionConfig | None = None,
    budget: int | None = None,
    step_scale: float | None = None,
) -> ReferenceSolution:
    """Best (Theta, beta) found within ``budget`` objective evaluations.

    ``certified_gap`` is optimality_residual times 1 + ||(Theta, beta)||, the
    convexity bound F(x) - F* <= ||g|| dist(x, argmin) with the distance
    replaced by that radius.
    """
    config = config or FusionConfig()
    budget = get_settings().reference_budget if budget is None else budget
    if budget < 1:
        raise ValueError("budget must be >= 1")
    m, d = data.m, data.d
    w = config.resolve_weights(m)
    lam = config.resolve_penalties(m)
    terms = [task_terms(spec, task) for task in data.tasks]
    if step_scale is None:
        step_scale = max(1.0, max(float(np.max(np.abs(t.y))) for t in terms))

    def unpack(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return x[: m * d].reshape(m, d).T, x[m * d :]

    def objective(x: np.ndarray) -> float:
        theta, beta = unpack(x)
        total = 0.0
        for j, term in enumerate(terms):
            total += w[j] * (term.value(theta[:, j]) + lam[j] * np.linalg.norm(theta[:, j] - beta))
        return total

    def subgradient(x: np.ndarray) -> np.ndarray:
        theta, beta = unpack(x)
        g_theta = np.zeros((d, m))
        g_beta = np.zeros(d)
        for j, term in enumerate(terms):
            gap = theta[:, j] - beta
            norm = np.linalg.norm(gap)
            pull = gap / norm if norm > 0 else np.zeros(d)
            g_theta[:, j] = w[j] * (term.gradient(theta[:, j]) + lam[j] * pull)
            g_beta -= w[j] * lam[j] * pull
        return np.concatenate([g_theta.T.ravel(), g_beta])

    x = np.zeros((m + 1) * d)
    best_x, best_value = x.copy(), objective(x)
    used = 1
    scale = step_scale
    while used < budget:
        x = best_x.copy()
        average = np.zeros_like(x)
        for k in range(1, _EPOCH + 1):
            if used >= budget:
                break
            g = subgradient(x)
            norm = np.linalg.norm(g)
            if norm == 0:
                break
            x = x - scale / np.sqrt(k) * g / norm
            average += (x - average) / k
            value = objective(x)
            used += 1
            if value < best_value:
                best_x, best_value = x.copy(), value
        if used < budget:
            value = objective(average)
            used += 1
            if value < best_value:
                best_x, best_value = average.copy(), value
        if norm == 0:
            break
        scale /= 2.0

    theta, beta = unpack(best_x)
    residual = optimality_residual(data, spec, config, theta, beta)
    gap = residual * (1.0 + float(np.linalg.norm(best_x)))
    logger.debug(f"reference solve: {used} evaluations, objective {best_value:.10g}")
    return ReferenceSolution(
        theta=theta.copy(),
        beta=beta.copy(),
        objective=float(best_value),
        certified_gap=gap,
        iterations=used,
    )
