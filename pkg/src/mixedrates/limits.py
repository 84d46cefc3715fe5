"""Samplers for the limiting distributions the experiments are compared to.

Three laws are shipped: the argmax of a drifted two-sided Brownian motion
(the cube-root limit of the shorth center), the Gaussian limit of the first
penalized-regression coefficient, and the two-stage (s*, t*) limit of the
mixed-rates k-means solution.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .distributions import CovMatrix, SeedStream, sample_gaussian_vector, sample_two_line
from .estimators.kmeans import centers_from_coords, within_ss

__all__ = [
    "ChernoffConfig",
    "BoundaryHitError",
    "LinearizationGateError",
    "KmeansLimitInputs",
    "sample_chernoff_argmax",
    "sample_lasso_limits",
    "kmeans_two_line_sample",
    "kmeans_scores",
    "empirical_criterion_diff",
    "estimate_kmeans_cov",
    "sample_kmeans_limit",
    "psi_slow",
    "slow_block_objective",
]

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Brownian argmax (cube-root limit)


class BoundaryHitError(RuntimeError):
    """Too many argmaxes landed on the grid boundary; enlarge the horizon."""


@dataclass(frozen=True)
class ChernoffConfig:
    """Parameters of argmax_t [c2 * t^2 + sqrt(c1) * B(t)] on a finite grid.

    The drift coefficient ``c2`` must be negative (concave drift); ``c1`` is
    the squared diffusion scale.  Defaults: T = 4 * (sqrt(c1)/|c2|)^(2/3)
    covers the argmax support comfortably, h = T/4000.
    """

    c1: float
    c2: float
    T: float | None = None
    h: float | None = None
    paths: int = 10_000

    def __post_init__(self):
        if not self.c1 > 0:
            raise ValueError("c1 must be positive")
        if not self.c2 < 0:
            raise ValueError("c2 must be negative (concave drift)")
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        T = self.T
        if T is None:
            T = 4.0 * (math.sqrt(self.c1) / abs(self.c2)) ** (2.0 / 3.0)
        h = self.h if self.h is not None else T / 4000.0
        if not 0 < h <= T:
            raise ValueError("need 0 < h <= T")
        object.__setattr__(self, "T", float(T))
        object.__setattr__(self, "h", float(h))


def sample_chernoff_argmax(cfg: ChernoffConfig, stream: SeedStream) -> np.ndarray:
    """Grid argmax of the drifted two-sided Brownian motion, one per path.

    Ties (which have probability zero in the limit) are broken toward the
    smallest |t| and then toward negative t.  The run fails if more than 1%
    of argmaxes sit on the boundary +/-T, a sign the horizon is too small.
    """
    from .distributions import _two_sided_values, _validate_grid

    n = _validate_grid(cfg.T, cfg.h)
    gen = stream.generator()
    t_grid = (np.arange(2 * n + 1) - n) * cfg.h
    drift = cfg.c2 * t_grid**2
    scale = math.sqrt(cfg.c1)
    # Scan order: increasing |t|, negative before positive, so that argmax's
    # first-maximum rule implements the tie-break.
    perm = np.lexsort((t_grid, np.abs(t_grid)))
    t_perm = t_grid[perm]
    drift_perm = drift[perm]

    out = np.empty(cfg.paths, dtype=np.float64)
    boundary = 0
    chunk = 512
    done = 0
    while done < cfg.paths:
        m = min(chunk, cfg.paths - done)
        values = _two_sided_values(gen, m, n, cfg.h)
        obj = values[:, perm] * scale + drift_perm
        idx = np.argmax(obj, axis=1)
        ts = t_perm[idx]
        out[done : done + m] = ts
        boundary += int(np.sum(np.abs(ts) >= cfg.T - 0.5 * cfg.h))
        done += m
    frac = boundary / cfg.paths
    logger.debug("chernoff argmax boundary-hit fraction: %.4f", frac)
    if frac > 0.01:
        raise BoundaryHitError(
            f"{frac:.1%} of argmaxes hit the boundary; enlarge T (currently {cfg.T:g})"
        )
    return out


# ---------------------------------------------------------------------------
# Penalized-regression first-coordinate limit


def sample_lasso_limits(
    C11: float, lambda0: float, sigma: float, stream: SeedStream, draws: int
) -> np.ndarray:
    """Draws from the Gaussian limit of sqrt(n) times the first-coefficient
    error: N(-lambda0/(4*C11), sigma^2/C11).

    The mean is the penalty-induced shrinkage bias (the minimizer of
    u^2*C11 - 2*u*Z + (lambda0/2)*u with Z ~ N(0, sigma^2*C11)); with
    lambda0 = 0 this is the plain least-squares limit.
    """
    if not C11 > 0:
        raise ValueError("C11 must be positive")
    gen = stream.generator()
    return gen.normal(-lambda0 / (4.0 * C11), sigma / math.sqrt(C11), size=draws)


# ---------------------------------------------------------------------------
# k-means two-stage limit


class LinearizationGateError(RuntimeError):
    """The score-based linearization failed its finite-difference validation."""


@dataclass(frozen=True, eq=False)
class KmeansLimitInputs:
    """Covariance of the Gaussian (Z1, Z2), ordered (Z_ds, Z_ed, Z_dd, Z_es)."""

    Sigma: CovMatrix


def kmeans_two_line_sample(n: int, stream: SeedStream) -> np.ndarray:
    """Two-line draws oriented for the mixed-rates analysis: support lines
    horizontal (second coordinate +/-1), double-exponential coordinate along
    each line.  In this orientation the cv center pair straddles the support
    and its split line crosses both lines transversally."""
    pts = sample_two_line(n, stream)
    return pts[:, ::-1].copy()


def kmeans_scores(points: np.ndarray) -> np.ndarray:
    """Pointwise criterion gradients at the cv configuration, columns ordered
    (delta_s, eps_d, delta_d, eps_s).

    With H- = {x <= 0} and H+ = {x > 0} (the two Voronoi half-planes):
      d/d(delta_s) = -2(x+1) H- - 2(x-1) H+
      d/d(eps_d)   = -2y H- + 2y H+
      d/d(delta_d) = -2(x+1) H- + 2(x-1) H+
      d/d(eps_s)   = -2y
    """
    x = points[:, 0]
    y = points[:, 1]
    hminus = x <= 0.0
    hplus = ~hminus
    g_ds = np.where(hminus, -2.0 * (x + 1.0), -2.0 * (x - 1.0))
    g_ed = np.where(hminus, -2.0 * y, 2.0 * y)
    g_dd = np.where(hminus, -2.0 * (x + 1.0), 2.0 * (x - 1.0))
    g_es = -2.0 * y
    return np.column_stack([g_ds, g_ed, g_dd, g_es])


def empirical_criterion_diff(points: np.ndarray, coords4) -> float:
    """Empirical criterion at the displaced cv pair minus its value at the
    pair itself; ``coords4`` = (delta_s, eps_d, delta_d, eps_s) deviations."""
    ds, ed, dd, es = coords4
    centers = centers_from_coords(ds, ed, dd, es, init="cv")
    base = centers_from_coords(0.0, 0.0, 0.0, 0.0, init="cv")
    return within_ss(points, centers) - within_ss(points, base)


def _linearization_gate(stream: SeedStream, n: int = 200_000,
                        rel_tol: float = 1e-2) -> float:
    """Central finite differences of the empirical criterion at the cv pair
    must reproduce the score-based directional derivative to ``rel_tol``
    relative error.  Returns the worst relative error; raises on failure.

    The empirical criterion has kinks where a sample point crosses the split
    boundary, so the step is chosen per direction small enough that no point
    crosses: the boundary offset under a (delta_s, eps_d) displacement is at
    most t * (|d_ds| + |d_ed|) plus second order, kept under the smallest
    |x| in the sample.
    """
    pts = kmeans_two_line_sample(n, stream.child("gate-sample"))
    grad = kmeans_scores(pts).mean(axis=0)
    xmin = float(np.min(np.abs(pts[:, 0])))
    gen = stream.child("gate-directions").generator()
    directions = list(np.eye(4))
    for _ in range(4):
        v = gen.standard_normal(4)
        directions.append(v / np.linalg.norm(v))
    worst = 0.0
    for d in directions:
        t = min(1e-6, 0.25 * xmin / (abs(d[0]) + abs(d[1]) + 1e-12))
        t = max(t, 1e-10)
        fd = (
            empirical_criterion_diff(pts, t * d) - empirical_criterion_diff(pts, -t * d)
        ) / (2.0 * t)
        lin = float(d @ grad)
        rel = abs(fd - lin) / (abs(lin) + 1e-9)
        worst = max(worst, rel)
        if rel > rel_tol:
            raise LinearizationGateError(
                f"finite-difference check failed along {np.round(d, 3)}: "
                f"fd = {fd:.6e}, linearization = {lin:.6e}, rel err = {rel:.3e}"
            )
    return worst


def estimate_kmeans_cov(samples: int, stream: SeedStream) -> KmeansLimitInputs:
    """Monte Carlo estimate of Sigma = E[score * score'] over the two-line
    law, gated by a finite-difference validation of the scores.

    The gate aborts (rather than returning a silently wrong covariance) if
    the empirical directional derivatives disagree with the score
    linearization by more than 1% relative.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    _linearization_gate(stream.child("gate"))
    acc = np.zeros((4, 4))
    done = 0
    chunk = 1_000_000
    part = 0
    while done < samples:
        m = min(chunk, samples - done)
        pts = kmeans_two_line_sample(m, stream.child("cov", part))
        s = kmeans_scores(pts)
        acc += s.T @ s
        done += m
        part += 1
    return KmeansLimitInputs(Sigma=CovMatrix(acc / samples))


def psi_slow(delta_s, eps_d):
    """Cubic positive part of the slow block: the two split-line crossing
    offsets are delta_s +/- eps_d and each contributes |offset|^3 / 6."""
    u = np.abs(delta_s) + np.abs(eps_d)
    v = np.abs(np.abs(delta_s) - np.abs(eps_d))
    return (u**3 + v**3) / 6.0


def slow_block_objective(delta_s, eps_d, z1):
    return psi_slow(delta_s, eps_d) + delta_s * z1[0] + eps_d * z1[1]


def _grid_min_slow(z1, lo, hi, points=201):
    gx = np.linspace(lo[0], hi[0], points)
    gy = np.linspace(lo[1], hi[1], points)
    DS, ED = np.meshgrid(gx, gy, indexing="ij")
    vals = slow_block_objective(DS, ED, z1)
    flat = np.argmin(vals)
    m = vals.reshape(-1)[flat]
    ties = np.flatnonzero(vals.reshape(-1) == m)
    if len(ties) > 1:
        # break toward the origin, then lexicographically
        pts = np.column_stack([DS.reshape(-1)[ties], ED.reshape(-1)[ties]])
        key = np.lexsort((pts[:, 1], pts[:, 0], np.hypot(pts[:, 0], pts[:, 1])))
        flat = ties[key[0]]
    i, j = np.unravel_index(flat, vals.shape)
    cells = np.array([gx[1] - gx[0], gy[1] - gy[0]])
    return np.array([gx[i], gy[j]]), cells


def _polish_slow(s, z1, step, rounds=60):
    best = float(slow_block_objective(s[0], s[1], z1))
    cur = s.copy()
    for _ in range(rounds):
        moved = False
        for idx in (0, 1):
            for sign in (1.0, -1.0):
                cand = cur.copy()
                cand[idx] += sign * step
                val = float(slow_block_objective(cand[0], cand[1], z1))
                if val < best:
                    cur, best, moved = cand, val, True
        if not moved:
            step *= 0.5
            if step < 1e-9:
                break
    return cur


def _solve_slow_block(z1: np.ndarray) -> np.ndarray:
    """Minimize the slow-block objective by coarse grid, two refinements and
    a compass polish; the box is doubled (at most twice) if the incumbent
    touches its edge."""
    L = 4.0 * math.sqrt(np.linalg.norm(z1)) + 1e-12
    for _ in range(3):
        lo = np.array([-L, -L])
        hi = np.array([L, L])
        s, cells = _grid_min_slow(z1, lo, hi)
        for _ in range(2):
            rlo = np.maximum(lo, s - 2.5 * cells)
            rhi = np.minimum(hi, s + 2.5 * cells)
            s, cells = _grid_min_slow(z1, rlo, rhi)
        if np.all(np.abs(s) < L - 2.0 * cells.max()):
            return _polish_slow(s, z1, step=float(cells.max()))
        L *= 2.0
    raise RuntimeError("slow-block argmin kept escaping the search box")


def fast_block_closed_form(s_star: np.ndarray, z2: np.ndarray) -> np.ndarray:
    """Given the slow block, the fast block minimizes a clean quadratic:
    delta_d* = -(Z_dd + delta_s^2 - eps_d^2)/2, eps_s* = -(Z_es + 2*delta_s*eps_d)/2."""
    ds, ed = s_star
    return np.array([-(z2[0] + ds * ds - ed * ed) / 2.0, -(z2[1] + 2.0 * ds * ed) / 2.0])


def sample_kmeans_limit(
    inputs: KmeansLimitInputs, stream: SeedStream, draws: int
) -> np.ndarray:
    """Draws of the two-stage limit (s*, t*): per draw, sample (Z1, Z2) from
    N(0, Sigma), grid-minimize the cubic slow-block objective, then complete
    the square for the fast block.

    Returns a (draws, 4) array with columns (delta_s, eps_d, delta_d, eps_s).
    """
    z = sample_gaussian_vector(inputs.Sigma, stream, draws=draws)
    out = np.empty((draws, 4))
    for i in range(draws):
        s = _solve_slow_block(z[i, :2])
        t = fast_block_closed_form(s, z[i, 2:])
        out[i, :2] = s
        out[i, 2:] = t
    return out
