"""Residual profiles: every supported loss written as phi(y~ - x~'theta) + mu||theta||^2.

- check / newsvendor: phi(r) = max(lo * r, hi * r) with lo <= 0 <= hi
- hinge:              phi(r) = max(0, r) on r = 1 - y x'theta  (x~ = y x, y~ = 1)
- quadratic:          phi(r) = r^2 / 2
- generalized:        phi(r) = B(r) for r >= 0, H(-r) for r < 0, kinked
                      wherever a tiered cost changes slope

Solvers only talk to profiles, never to the LossSpec variants directly.
"""

from functools import lru_cache

import numpy as np

from src.schemas.loss import (
    CheckLoss,
    GeneralizedNewsvendorLoss,
    HingeRidgeLoss,
    LossSpec,
    NewsvendorLoss,
    PiecewisePolynomial,
    QuadraticLoss,
)

_BISECTION_STEPS = 80
_JUMP_TOL = 1e-9


class ResidualProfile:
    """Scalar convex phi plus the data transform and ridge weight."""

    ridge: float = 0.0
    # Subdifferential of phi at r = 0, or None when phi is differentiable there
    kink: tuple[float, float] | None = None
    # Every kink of phi as (r, lower slope, upper slope), sorted by r
    kinks: tuple[tuple[float, float, float], ...] = ()
    piecewise_linear: bool = False

    def transform(self, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return X, y

    def value(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, r: np.ndarray) -> np.ndarray:
        """Chosen element of d phi(r); 0 at a kink at r = 0."""
        raise NotImplementedError

    def curvature(self, r: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(r, dtype=float))

    def prox(self, u: np.ndarray, kappa: np.ndarray) -> np.ndarray:
        """argmin_r kappa * phi(r) + (r - u)^2 / 2, elementwise."""
        raise NotImplementedError

    def locate_kinks(
        self, r: np.ndarray, tol=0.0
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Residuals within ``tol`` of a kink: mask, kink location, slope interval."""
        r = np.asarray(r, dtype=float)
        tol = np.broadcast_to(np.asarray(tol, dtype=float), r.shape)
        mask = np.zeros(r.shape, dtype=bool)
        points, lower, upper = np.zeros(r.shape), np.zeros(r.shape), np.zeros(r.shape)
        for point, lo, hi in self.kinks:
            near = ~mask & (np.abs(r - point) <= tol)
            mask |= near
            points[near], lower[near], upper[near] = point, lo, hi
        return mask, points, lower, upper

    def piece(self, r: np.ndarray) -> np.ndarray:
        """Index of the smooth piece of phi between kinks that holds r."""
        edges = np.array([point for point, _, _ in self.kinks])
        return np.searchsorted(edges, np.asarray(r, dtype=float), side="left")

    def derivative_interval(
        self, r: np.ndarray, kink_tol: float = 0.0
    ) -> tuple[np.ndarray, np.ndarray]:
        """Lower/upper ends of d phi(r); residuals within kink_tol of a kink count as on it."""
        g = self.derivative(r)
        lower, upper = g.copy(), g.copy()
        mask, _, lo, hi = self.locate_kinks(r, kink_tol)
        lower[mask] = lo[mask]
        upper[mask] = hi[mask]
        return lower, upper


class LinearKinkProfile(ResidualProfile):
    """phi(r) = max(lo * r, hi * r)."""

    piecewise_linear = True

    def __init__(self, lo: float, hi: float, margin: bool = False, ridge: float = 0.0):
        self.lo = float(lo)
        self.hi = float(hi)
        self.margin = margin
        self.ridge = float(ridge)
        self.kink = (self.lo, self.hi)
        self.kinks = ((0.0, self.lo, self.hi),)

    def transform(self, X, y):
        if self.margin:
            return X * y[:, None], np.ones_like(y)
        return X, y

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return np.maximum(self.lo * r, self.hi * r)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r > 0, self.hi, np.where(r < 0, self.lo, 0.0))

    def prox(self, u, kappa):
        u = np.asarray(u, dtype=float)
        upper = kappa * self.hi
        lower = kappa * self.lo
        return np.where(u > upper, u - upper, np.where(u < lower, u - lower, 0.0))


class SquaredProfile(ResidualProfile):
    """phi(r) = r^2 / 2."""

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return 0.5 * r * r

    def derivative(self, r):
        return np.asarray(r, dtype=float).copy()

    def curvature(self, r):
        return np.ones_like(np.asarray(r, dtype=float))

    def prox(self, u, kappa):
        return np.asarray(u, dtype=float) / (1.0 + kappa)


class PiecewiseCostProfile(ResidualProfile):
    """phi(r) = B(r) for r >= 0 and H(-r) for r < 0.

    Kinks sit at r = 0 (unless B'(0) = H'(0) = 0), at every backorder
    breakpoint b where B' jumps and at -c for every holding breakpoint c
    where H' jumps.
    """

    def __init__(self, backorder: PiecewisePolynomial, holding: PiecewisePolynomial):
        self.backorder = backorder
        self.holding = holding
        zero = np.array([0.0])
        lo = -float(holding.derivative(zero)[0])
        hi = float(backorder.derivative(zero)[0])
        self.kink = (lo, hi) if hi > lo else None
        self._slopes = (lo, hi)

        kinks = [(0.0, lo, hi)] if self.kink else []
        for b, left, right in _slope_jumps(backorder):
            kinks.append((b, left, right))
        for c, left, right in _slope_jumps(holding):
            kinks.append((-c, -right, -left))
        self.kinks = tuple(sorted(kinks))

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r >= 0, self.backorder(np.abs(r)), self.holding(np.abs(r)))

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        up = self.backorder.derivative(np.abs(r))
        down = -self.holding.derivative(np.abs(r))
        return np.where(r > 0, up, np.where(r < 0, down, 0.0))

    def curvature(self, r):
        r = np.asarray(r, dtype=float)
        up = self.backorder.second_derivative(np.abs(r))
        down = self.holding.second_derivative(np.abs(r))
        return np.where(r > 0, up, np.where(r < 0, down, 0.0))

    def prox(self, u, kappa):
        u = np.asarray(u, dtype=float)
        kappa = np.broadcast_to(np.asarray(kappa, dtype=float), u.shape)
        out = np.zeros_like(u)
        up = u > kappa * self._slopes[1]
        down = u < kappa * self._slopes[0]
        if np.any(up):
            out[up] = _solve_monotone(self.backorder, u[up], kappa[up])
        if np.any(down):
            out[down] = -_solve_monotone(self.holding, -u[down], kappa[down])
        return out


def _slope_jumps(cost: PiecewisePolynomial) -> list[tuple[float, float, float]]:
    """Positive breakpoints of ``cost`` where its slope jumps: (q, left, right)."""
    jumps = []
    for q in cost.breakpoints:
        if q <= 0.0:
            continue
        at = np.array([q])
        left = float(cost.left_derivative(at)[0])
        right = float(cost.derivative(at)[0])
        if right > left + _JUMP_TOL * (1.0 + abs(left)):
            jumps.append((q, left, right))
    return jumps


def _solve_monotone(
    cost: PiecewisePolynomial, target: np.ndarray, kappa: np.ndarray
) -> np.ndarray:
    """Root of q + kappa * cost'(q) = target on (0, target].

    q + kappa * cost'(q) is increasing and jumps up at kinked breakpoints;
    a target inside a jump lands exactly on the breakpoint. Breakpoints
    bracket the rest, which bisection finishes inside one smooth piece.
    """
    out = np.full(target.shape, np.nan)
    lo = np.zeros_like(target)
    hi = target.copy()
    for q in cost.breakpoints:
        if q <= 0.0:
            continue
        at = np.array([q])
        before = q + kappa * float(cost.left_derivative(at)[0])
        after = q + kappa * float(cost.derivative(at)[0])
        on = np.isnan(out) & (target >= before) & (target <= after)
        out[on] = q
        hi = np.where(target < before, np.minimum(hi, q), hi)
        lo = np.where(target > after, np.maximum(lo, q), lo)

    open_ = np.isnan(out)
    lo, hi, target, kappa = lo[open_], hi[open_], target[open_], kappa[open_]
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        above = mid + kappa * cost.derivative(mid) > target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    out[open_] = 0.5 * (lo + hi)
    return out


@lru_cache(maxsize=64)
def profile_for(spec: LossSpec) -> ResidualProfile:
    """Residual profile of a loss description."""
    match spec:
        case CheckLoss(tau=tau):
            return LinearKinkProfile(lo=tau - 1.0, hi=tau)
        case NewsvendorLoss(b=b, h=h):
            return LinearKinkProfile(lo=-h, hi=b)
        case HingeRidgeLoss(mu=mu):
            return LinearKinkProfile(lo=0.0, hi=1.0, margin=True, ridge=mu)
        case QuadraticLoss():
            return SquaredProfile()
        case GeneralizedNewsvendorLoss(backorder=backorder, holding=holding):
            return PiecewiseCostProfile(backorder, holding)
    raise TypeError(f"unsupported loss spec: {spec!r}")
