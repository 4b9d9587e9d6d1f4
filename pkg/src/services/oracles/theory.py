"""Checks of the deterministic guarantees on quadratic tasks."""

import numpy as np
from scipy.linalg import eigvalsh

from src.exceptions import InvalidInputError, InvalidParameterError, ShapeError
from src.schemas.dataset import MultiTaskDataset
from src.schemas.solver import FusionSolution, per_task
from src.schemas.truth import PersonalizationReport, RegularityParams

_SINGULAR_RTOL = 1e-12


def quadratic_regularity(data: MultiTaskDataset) -> RegularityParams:
    """rho and L of the quadratic risks from the Gram matrices (1/n) X'X.

    rho is the smallest eigenvalue over all tasks, L the largest; every
    zeta_j is 0 because each f_j is its own target.
    """
    lows, highs = [], []
    for task in data.tasks:
        X = task.covariates
        eigenvalues = eigvalsh(X.T @ X / task.n)
        lows.append(eigenvalues[0])
        highs.append(eigenvalues[-1])
    rho = float(min(lows))
    if rho <= _SINGULAR_RTOL * max(highs):
        raise InvalidInputError("a task has a singular Gram matrix; rho is 0")
    return RegularityParams(rho=rho, lip=float(max(highs)), zeta=(0.0,) * data.m)


def check_personalization_bound(
    fused: FusionSolution,
    stl,
    penalties,
    params: RegularityParams,
    tol: float = 1e-7,
) -> PersonalizationReport:
    """Test ||theta_hat_j - theta_tilde_j|| <= lambda_j / rho + zeta_j / rho + tol."""
    if params.rho <= 0:
        raise InvalidParameterError("rho must be > 0")
    m, d = fused.m, fused.d
    stl = np.asarray(stl, dtype=float)
    if stl.ndim == 1 and m == 1:
        stl = stl.reshape(-1, 1)
    if stl.shape != (d, m):
        raise ShapeError(f"STL matrix has shape {stl.shape}, expected ({d}, {m})")
    lam = per_task(penalties, m, "penalties")
    zeta = params.zeta_for(m)
    if zeta.shape != (m,):
        raise ShapeError(f"{zeta.size} zeta values for {m} tasks")

    distances = np.linalg.norm(fused.theta_hat - stl, axis=0)
    bounds = (lam + zeta) / params.rho
    slack = bounds - distances
    return PersonalizationReport(
        holds=bool(np.all(slack >= -tol)),
        distances=tuple(float(v) for v in distances),
        bounds=tuple(float(v) for v in bounds),
        slack=tuple(float(v) for v in slack),
    )
