"""Penalized least squares with a concave power penalty and exact zeros.

The criterion is ``sum_i (Y_i - x_i' b)^2 + lambda_n * sum_j |b_j|^gamma`` with
``lambda_n = lambda0 * sqrt(n)``.  For gamma < 1 the penalty has infinite
slope at zero, so coordinates of the minimizer can be *exactly* zero with
sizable probability; the solver below keeps the zero axes as explicit
candidates instead of hoping a smooth optimizer lands on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..distributions import SeedStream

__all__ = [
    "LassoConfig",
    "LassoFit",
    "DesignError",
    "SearchBoxError",
    "generate_lasso_design",
    "fit_bridge_lasso",
    "criterion_value",
    "search_box",
]

_MIN_EIGENVALUE = 1e-6


class DesignError(ValueError):
    """The design matrix is unusable (singular normalized Gram matrix)."""


class SearchBoxError(RuntimeError):
    """The minimizer kept escaping the search box after repeated widenings."""


@dataclass(frozen=True)
class LassoConfig:
    """Problem instance: design, truth, penalty exponent and scale, noise sd."""

    design: np.ndarray
    beta_true: np.ndarray
    gamma: float = 0.5
    lambda0: float = 2.0
    sigma: float = 1.0

    def __init__(self, design, beta_true, gamma=0.5, lambda0=2.0, sigma=1.0):
        X = np.asarray(design, dtype=np.float64)
        b = np.asarray(beta_true, dtype=np.float64).ravel()
        if X.ndim != 2 or X.shape[1] != b.size:
            raise ValueError("design must be an n x d matrix matching beta_true")
        if not 0.0 < gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if lambda0 < 0.0 or sigma < 0.0:
            raise ValueError("lambda0 and sigma must be nonnegative")
        col_means = X.mean(axis=0)
        if np.max(np.abs(col_means)) > 1e-10:
            raise ValueError("design columns must be centered to mean zero")
        cn = X.T @ X / X.shape[0]
        if np.linalg.eigvalsh(cn)[0] <= _MIN_EIGENVALUE:
            raise DesignError("normalized Gram matrix C_n is numerically singular")
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "beta_true", b)
        object.__setattr__(self, "gamma", float(gamma))
        object.__setattr__(self, "lambda0", float(lambda0))
        object.__setattr__(self, "sigma", float(sigma))

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def d(self) -> int:
        return self.design.shape[1]

    @property
    def lambda_n(self) -> float:
        return self.lambda0 * math.sqrt(self.n)


@dataclass(frozen=True)
class LassoFit:
    alpha_hat: np.ndarray
    zero_flags: np.ndarray  # zero_flags[j] iff alpha_hat[j] == 0.0 exactly
    criterion_value: float


def generate_lasso_design(n: int, d: int, stream: SeedStream) -> np.ndarray:
    """i.i.d. Uniform[-1, 1] entries with each column centered to exact mean 0.

    Bounded entries keep the leverage condition automatic and the normalized
    Gram matrix converges to identity/3.  A singular draw is retried on the
    next stream index, at most three times.
    """
    if n < d + 1:
        raise ValueError("need n >= d + 1 observations")
    for attempt in range(4):
        gen = SeedStream(stream.master_seed, stream.stream_index + attempt).generator()
        X = gen.uniform(-1.0, 1.0, size=(n, d))
        X -= X.mean(axis=0)
        cn = X.T @ X / n
        if np.linalg.eigvalsh(cn)[0] > _MIN_EIGENVALUE:
            return X
    raise DesignError("could not draw a nonsingular design in 4 attempts")


def _quad_parts(y: np.ndarray, X: np.ndarray):
    return X.T @ X, X.T @ y, float(y @ y)


def criterion_value(alpha, y: np.ndarray, config: LassoConfig) -> float:
    """Evaluate the penalized criterion at one point."""
    a = np.asarray(alpha, dtype=np.float64)
    resid = y - config.design @ a
    return float(resid @ resid + config.lambda_n * np.sum(np.abs(a) ** config.gamma))


def _batch_values(A: np.ndarray, xtx, xty, yty, lam: float, gamma: float) -> np.ndarray:
    """Criterion on a batch of points, O(d^2) per point via the Gram form."""
    quad = np.einsum("ij,jk,ik->i", A, xtx, A)
    return yty - 2.0 * (A @ xty) + quad + lam * np.sum(np.abs(A) ** gamma, axis=1)


def search_box(y: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Compact box centered at the OLS solution with half-width
    4 * max(1, rms residual); returns (ols, lo, hi)."""
    ols, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ ols
    scale = math.sqrt(float(resid @ resid) / X.shape[0])
    w = 4.0 * max(1.0, scale)
    return ols, ols - w, ols + w


def _axis_grid(lo: float, hi: float, points: int) -> np.ndarray:
    g = np.linspace(lo, hi, points)
    if lo < 0.0 < hi and not np.any(g == 0.0):
        g = np.sort(np.append(g, 0.0))
    return g


def _grid_points(los, his, points: int) -> list[np.ndarray]:
    return [_axis_grid(lo, hi, points) for lo, hi in zip(los, his)]


def _grid_min(axes: list[np.ndarray], xtx, xty, yty, lam, gamma):
    mesh = np.meshgrid(*axes, indexing="ij")
    A = np.column_stack([m.ravel() for m in mesh])
    vals = _batch_values(A, xtx, xty, yty, lam, gamma)
    i = int(np.argmin(vals))
    return A[i].copy(), float(vals[i])


def _golden(f, lo: float, hi: float, iters: int = 90) -> tuple[float, float]:
    """Golden-section minimization on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - (b - a) * invphi
    d = a + (b - a) * invphi
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a < 1e-13 * max(1.0, abs(a), abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * invphi
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * invphi
            fd = f(d)
    x = c if fc < fd else d
    return (x, fc) if fc < fd else (x, fd)


def _coordinate_polish(start, lo, hi, free, xtx, xty, yty, lam, gamma, sweeps=3):
    """Cyclic per-coordinate golden-section descent restricted to the sign
    orthant of the start point (the penalty is smooth away from zero)."""
    x = start.copy()

    def value(v):
        return float(_batch_values(v[None, :], xtx, xty, yty, lam, gamma)[0])

    best = value(x)
    for _ in range(sweeps):
        for j in free:
            b_lo, b_hi = lo[j], hi[j]
            if x[j] > 0.0:
                b_lo = max(b_lo, 0.0)
            elif x[j] < 0.0:
                b_hi = min(b_hi, 0.0)

            def slice_f(t, j=j):
                xt = x.copy()
                xt[j] = t
                return value(xt)

            t, ft = _golden(slice_f, b_lo, b_hi)
            # Strictly-better-than-noise acceptance keeps exact starts (e.g.
            # the OLS point when the penalty vanishes) untouched.
            if ft < best - 1e-12 * (1.0 + abs(best)):
                x[j] = t
                best = ft
    return x, best


def fit_bridge_lasso(responses: np.ndarray, config: LassoConfig) -> LassoFit:
    """Global minimization of the penalized criterion over a compact box.

    Three stages: a 101-per-axis grid with the zero axes inserted as exact
    grid lines, two 5x5-cell refinements around the incumbent, and a
    golden-section polish run separately on the interior and on every
    axis/origin restriction.  A coordinate is reported as exactly zero
    whenever its axis-restricted optimum beats the interior value.  If the
    incumbent lands within one coarse cell of the box edge the box is doubled,
    at most twice.
    """
    y = np.asarray(responses, dtype=np.float64).ravel()
    X = config.design
    n, d = X.shape
    if y.size != n:
        raise ValueError("responses length does not match the design")
    if d > 6:
        raise ValueError("solver enumerates zero patterns; d > 6 is not supported")
    xtx, xty, yty = _quad_parts(y, X)
    lam, gamma = config.lambda_n, config.gamma

    ols, lo, hi = search_box(y, X)
    for _widening in range(3):
        alpha, value = _solve_in_box(ols, lo, hi, xtx, xty, yty, lam, gamma, d)
        cell = (hi - lo) / 100.0
        near_edge = np.any(alpha <= lo + cell) or np.any(alpha >= hi - cell)
        if not near_edge:
            zero = alpha == 0.0
            return LassoFit(alpha_hat=alpha, zero_flags=zero, criterion_value=value)
        center = 0.5 * (lo + hi)
        half = hi - center
        lo, hi = center - 2.0 * half, center + 2.0 * half
    raise SearchBoxError("minimizer hit the search-box boundary after 2 widenings")


def _solve_in_box(ols, lo, hi, xtx, xty, yty, lam, gamma, d):
    # Stage 1: coarse grid with zero lines inserted.
    axes = _grid_points(lo, hi, 101)
    inc, inc_val = _grid_min(axes, xtx, xty, yty, lam, gamma)

    # Stage 2: refine twice on a 5x5-cell neighborhood of the incumbent.
    cur_lo, cur_hi = lo.copy(), hi.copy()
    for _ in range(2):
        cell = (cur_hi - cur_lo) / 100.0
        cur_lo = np.maximum(lo, inc - 2.5 * cell)
        cur_hi = np.minimum(hi, inc + 2.5 * cell)
        axes = _grid_points(cur_lo, cur_hi, 101)
        cand, cand_val = _grid_min(axes, xtx, xty, yty, lam, gamma)
        if cand_val < inc_val:
            inc, inc_val = cand, cand_val

    # Stage 3: polish per zero-restriction; pinned coordinates stay exact 0.0.
    best_x, best_val = inc, inc_val
    all_coords = list(range(d))
    for mask in range(1 << d):
        pinned = [j for j in all_coords if (mask >> j) & 1]
        free = [j for j in all_coords if not (mask >> j) & 1]
        for start in (inc, ols):
            x0 = start.copy()
            for j in pinned:
                x0[j] = 0.0
            x0 = np.clip(x0, lo, hi)
            if free:
                x, val = _coordinate_polish(x0, lo, hi, free, xtx, xty, yty, lam, gamma)
            else:
                x = x0
                val = float(_batch_values(x[None, :], xtx, xty, yty, lam, gamma)[0])
            for j in pinned:  # keep exact zeros through clipping/rounding
                x[j] = 0.0
            if val < best_val:
                best_x, best_val = x, val
            if not free:
                break  # origin does not depend on the start point
    return best_x, best_val
