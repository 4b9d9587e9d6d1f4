"""Exact and exhaustive oracles: 1-d quantiles, grid search, infimal convolution."""

import logging
from collections.abc import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from src.config import get_settings
from src.exceptions import BudgetError, InvalidInputError, InvalidParameterError
from src.schemas.dataset import MultiTaskDataset
from src.schemas.loss import LossSpec, PiecewisePolynomial
from src.schemas.solver import FusionConfig
from src.services.losses import task_terms

logger = logging.getLogger(__name__)

# Points where the signed count #{D <= q} - tau n is within this many samples
# of zero are flat spots of the check objective.
_COUNT_TOL = 1e-9

Field = Callable[[np.ndarray], np.ndarray]


def exact_quantile_location(samples: Sequence[float], tau: float) -> tuple[float, float]:
    """Full argmin interval of q -> sum_i rho_tau(D_i - q).

    The right derivative at q is #{D_i <= q} - tau n; the argmin starts at
    the first order statistic where it turns nonnegative and extends to the
    next one when it is exactly zero there.
    """
    if not 0.0 < tau < 1.0:
        raise InvalidParameterError(f"tau must lie in (0, 1), got {tau}")
    data = np.asarray(samples, dtype=float).ravel()
    if data.size == 0:
        raise InvalidInputError("need at least one sample")
    values, counts = np.unique(data, return_counts=True)
    n = data.size
    right = np.cumsum(counts) - tau * n
    eps = _COUNT_TOL * n
    k = int(np.argmax(right >= -eps))
    if abs(right[k]) <= eps and k + 1 < values.size:
        return float(values[k]), float(values[k + 1])
    return float(values[k]), float(values[k])


def brute_force_minimize(
    objective: Field,
    box: Sequence[tuple[float, float]],
    step: float,
    cell_budget: int | None = None,
) -> tuple[np.ndarray, float]:
    """Exhaustive grid minimization over a box in at most 3 variables.

    ``objective`` maps an (N, k) array of points to N values. Grid points are
    lo + i * step up to hi; the first minimizer in lexicographic order wins.
    """
    if step <= 0:
        raise InvalidParameterError(f"step must be > 0, got {step}")
    if not 1 <= len(box) <= 3:
        raise InvalidParameterError(f"brute force handles 1 to 3 variables, got {len(box)}")
    budget = get_settings().brute_force_cell_budget if cell_budget is None else cell_budget
    axes = []
    for lo, hi in box:
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
            raise InvalidParameterError(f"invalid interval [{lo}, {hi}]")
        count = int(np.floor((hi - lo) / step + 1e-9)) + 1
        axes.append(lo + step * np.arange(count))
    cells = int(np.prod([axis.size for axis in axes], dtype=np.int64))
    if cells > budget:
        raise BudgetError(f"grid has {cells} cells, budget is {budget}")

    best_point, best_value = None, np.inf
    rest = axes[1:]
    for head in axes[0]:
        mesh = np.meshgrid(np.array([head]), *rest, indexing="ij")
        points = np.column_stack([grid.ravel() for grid in mesh])
        values = np.asarray(objective(points), dtype=float)
        k = int(np.argmin(values))
        if values[k] < best_value:
            best_point, best_value = points[k].copy(), float(values[k])
    logger.debug(f"brute force over {cells} cells: min {best_value:.12g}")
    return best_point, best_value


def fused_objective_field(
    data: MultiTaskDataset, spec: LossSpec, config: FusionConfig | None = None
) -> Field:
    """Vectorized F_{w,lambda} over points (theta_1, ..., theta_m, beta).

    Only for m * d + d <= 3 so the field can feed brute_force_minimize.
    """
    config = config or FusionConfig()
    m, d = data.m, data.d
    if m * d + d > 3:
        raise InvalidParameterError(f"field has {m * d + d} variables, at most 3 supported")
    w = config.resolve_weights(m)
    lam = config.resolve_penalties(m)
    terms = [task_terms(spec, task) for task in data.tasks]

    def field(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        beta = points[:, m * d :]
        total = np.zeros(points.shape[0])
        for j, term in enumerate(terms):
            theta = points[:, j * d : (j + 1) * d]
            residuals = term.y[:, None] - term.X @ theta.T
            risk = term.weights @ term.profile.value(residuals)
            risk = risk + term.ridge * np.sum(theta**2, axis=1)
            total += w[j] * (risk + lam[j] * np.linalg.norm(theta - beta, axis=1))
        return total

    return field


def infimal_convolution_1d(
    f: PiecewisePolynomial | Field,
    lam: float,
    x: float,
    radius: float | None = None,
    grid_points: int = 4001,
) -> float:
    """inf_{x'} f(x') + lam |x - x'| by a grid around x plus bounded refinement."""
    if lam < 0:
        raise InvalidParameterError(f"lam must be >= 0, got {lam}")
    radius = 10.0 * (1.0 + abs(x)) if radius is None else radius
    grid = np.linspace(x - radius, x + radius, grid_points)
    values = np.asarray(f(grid), dtype=float) + lam * np.abs(x - grid)
    k = int(np.argmin(values))
    spacing = grid[1] - grid[0]
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]

    def moved(point: float) -> float:
        return float(np.asarray(f(np.array([point])), dtype=float)[0] + lam * abs(x - point))

    refined = minimize_scalar(
        moved,
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12 * max(1.0, spacing)},
    )
    return min(float(values[k]), float(refined.fun), moved(x))


def infimal_identity_radius(
    lip: float,
    lam: float,
    grad_norm: float = 0.0,
    zeta: float = 0.0,
    radius: float = np.inf,
) -> float:
    """Radius around the minimizer where f equals its inf-convolution with lam ||.||.

    With grad f L-Lipschitz, ||grad f(x)|| <= grad_norm + L ||x - x*||, so a
    subgradient of norm <= lam exists while L ||x - x*|| + grad_norm + zeta <= lam.
    """
    if lip <= 0:
        raise InvalidParameterError(f"lip must be > 0, got {lip}")
    return float(min(radius, max(0.0, (lam - grad_norm - zeta) / lip)))
