"""(epsilon, delta)-related coefficients and quantile-regression tasks.

Random streams are Philox generators spawned from one SeedSequence:
spawn key (0,) drives the coefficients (child 0 picks the outliers, child
1 + j draws task j), spawn key (1,) drives the samples (child j for task j).
Each task's draws therefore depend only on the seed and its index.
"""

import logging

import numpy as np
from scipy.special import ndtri

from src.exceptions import InvalidParameterError
from src.schemas.dataset import MultiTaskDataset, TaskDataset
from src.schemas.truth import GroundTruth, RelatednessSpec

logger = logging.getLogger(__name__)

_COEFFICIENTS = 0
_SAMPLES = 1


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF Phi^{-1}(p)."""
    if not 0.0 < p < 1.0:
        raise InvalidParameterError(f"p must lie in (0, 1), got {p}")
    return float(ndtri(p))


def _streams(seed: int, purpose: int, count: int) -> list[np.random.Generator]:
    root = np.random.SeedSequence(seed, spawn_key=(purpose,))
    return [np.random.Generator(np.random.Philox(child)) for child in root.spawn(count)]


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    while True:
        draw = rng.standard_normal(dim)
        norm = np.linalg.norm(draw)
        if norm > 0:
            return draw / norm


def generate_related_coefficients(spec: RelatednessSpec) -> GroundTruth:
    """gamma*_j on the sphere of radius ``signal``; inliers at distance delta from signal e_1.

    Inliers use gamma = signal (cos a e_1 + sin a eta) with eta a unit vector
    orthogonal to e_1 and a = 2 arcsin(delta / (2 signal)), so both norms hold
    exactly. Outliers are signal times a uniform unit vector.
    """
    if spec.delta > 2.0 * spec.signal:
        raise InvalidParameterError(
            f"delta={spec.delta} exceeds the sphere diameter 2*signal={2 * spec.signal}"
        )
    if spec.dim < 2 and 0.0 < spec.delta < 2.0 * spec.signal:
        raise InvalidParameterError("dim >= 2 is needed for 0 < delta < 2*signal")

    m, dim, signal = spec.m, spec.dim, spec.signal
    streams = _streams(spec.seed, _COEFFICIENTS, m + 1)
    outliers = np.sort(streams[0].choice(m, size=spec.n_outliers, replace=False))
    is_outlier = np.zeros(m, dtype=bool)
    is_outlier[outliers] = True

    alpha = 2.0 * np.arcsin(spec.delta / (2.0 * signal))
    gamma = np.zeros((dim, m))
    for j in range(m):
        rng = streams[j + 1]
        if is_outlier[j]:
            gamma[:, j] = signal * _unit(rng, dim)
            continue
        eta = np.zeros(dim)
        if dim > 1:
            eta[1:] = _unit(rng, dim - 1)
        gamma[0, j] = signal * np.cos(alpha)
        gamma[:, j] += signal * np.sin(alpha) * eta

    intercept = spec.noise_sd * normal_quantile(spec.tau)
    theta = np.vstack([np.full((1, m), intercept), gamma])
    inliers = tuple(int(j) for j in np.flatnonzero(~is_outlier))
    logger.debug(f"related coefficients: m={m}, |S|={len(inliers)}, alpha={alpha:.4f}")
    return GroundTruth(gamma_star=gamma, theta_star=theta, inliers=inliers, spec=spec)


def generate_quantile_tasks(
    truth: GroundTruth,
    n: int,
    tau: float | None = None,
    noise_sd: float | None = None,
    seed: int | None = None,
) -> MultiTaskDataset:
    """Tasks with x ~ N(0, I_dim), y = x'gamma*_j + N(0, noise_sd^2).

    Covariates are emitted as (1, x), so column j of ``truth.theta_star`` is
    the conditional tau-quantile model of task j. ``tau`` and ``noise_sd``
    default to the generating spec and must agree with it when given.
    """
    spec = truth.spec
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    for name, value, expected in (("tau", tau, spec.tau), ("noise_sd", noise_sd, spec.noise_sd)):
        if value is not None and value != expected:
            raise InvalidParameterError(
                f"{name}={value} disagrees with the ground truth ({expected})"
            )
    seed = spec.seed if seed is None else seed
    dim, m = truth.gamma_star.shape
    tasks = []
    for j, rng in enumerate(_streams(seed, _SAMPLES, m)):
        x = rng.standard_normal((n, dim))
        y = x @ truth.gamma_star[:, j] + spec.noise_sd * rng.standard_normal(n)
        tasks.append(
            TaskDataset(
                task_id=f"task_{j:03d}",
                covariates=np.hstack([np.ones((n, 1)), x]),
                response=y,
            )
        )
    return MultiTaskDataset(tasks=tuple(tasks))
