import math

import numpy as np
import pytest

from mixedrates.distributions import SeedStream
from mixedrates.estimators import (
    LassoConfig,
    criterion_value,
    fit_bridge_lasso,
    generate_lasso_design,
    search_box,
)


def brute_force_minimum(y, cfg, points=2001):
    """Dense-grid oracle over the solver's own search box, zero lines included."""
    ols, lo, hi = search_box(y, cfg.design)
    axes = []
    for j in range(2):
        g = np.linspace(lo[j], hi[j], points)
        if lo[j] < 0.0 < hi[j]:
            g = np.sort(np.append(g, 0.0))
        axes.append(g)
    X = cfg.design
    xtx, xty, yty = X.T @ X, X.T @ y, float(y @ y)
    best_val, best_pt = math.inf, None
    for g1_chunk in np.array_split(axes[0], 8):
        A1, A2 = np.meshgrid(g1_chunk, axes[1], indexing="ij")
        A = np.column_stack([A1.ravel(), A2.ravel()])
        vals = (
            yty
            - 2.0 * (A @ xty)
            + np.einsum("ij,jk,ik->i", A, xtx, A)
            + cfg.lambda_n * np.sum(np.abs(A) ** cfg.gamma, axis=1)
        )
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_pt = float(vals[i]), A[i]
    return best_pt, best_val


def make_instance(n, seed, lambda0=2.0, sigma=1.0):
    s = SeedStream(seed, 0)
    X = generate_lasso_design(n, 2, s)
    y = X @ np.array([1.0, 0.0]) + sigma * s.child("noise").generator().standard_normal(n)
    cfg = LassoConfig(design=X, beta_true=[1.0, 0.0], gamma=0.5, lambda0=lambda0, sigma=sigma)
    return y, cfg


class TestDesign:
    def test_columns_centered(self):
        X = generate_lasso_design(500, 2, SeedStream(10, 0))
        assert np.max(np.abs(X.mean(axis=0))) < 1e-12

    def test_gram_matrix_converges_to_third_identity(self):
        X = generate_lasso_design(100_000, 2, SeedStream(10, 1))
        cn = X.T @ X / X.shape[0]
        assert np.max(np.abs(cn - np.eye(2) / 3.0)) < 0.02

    def test_max_leverage_bounded(self):
        # entries bounded by 1 before centering, so row norms stay ~ 2/n
        n = 500
        X = generate_lasso_design(n, 2, SeedStream(10, 2))
        assert np.max(np.sum(X**2, axis=1)) / n <= 2.5 / n

    def test_needs_enough_rows(self):
        with pytest.raises(ValueError):
            generate_lasso_design(2, 2, SeedStream(10, 3))


class TestBridgeLassoSolver:
    def test_no_penalty_reduces_to_least_squares(self):
        y, _ = make_instance(200, 11)
        X = generate_lasso_design(200, 2, SeedStream(11, 0))
        cfg = LassoConfig(design=X, beta_true=[1.0, 0.0], gamma=0.5, lambda0=0.0)
        fit = fit_bridge_lasso(y, cfg)
        normal_eq_resid = np.linalg.norm(X.T @ (y - X @ fit.alpha_hat))
        assert normal_eq_resid <= 1e-6 * np.linalg.norm(y)
        assert not fit.zero_flags.any()

    def test_zero_responses_give_exact_origin(self):
        X = generate_lasso_design(50, 2, SeedStream(12, 0))
        cfg = LassoConfig(design=X, beta_true=[1.0, 0.0], gamma=0.5, lambda0=2.0)
        fit = fit_bridge_lasso(np.zeros(50), cfg)
        assert fit.alpha_hat.tolist() == [0.0, 0.0]
        assert fit.zero_flags.all()
        assert fit.criterion_value == 0.0

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_dense_grid_oracle(self, seed):
        y, cfg = make_instance(6, 100 + seed)
        fit = fit_bridge_lasso(y, cfg)
        _, brute_val = brute_force_minimum(y, cfg)
        rel_gap = (fit.criterion_value - brute_val) / abs(brute_val)
        assert rel_gap <= 1e-4

    def test_reported_value_matches_point(self):
        y, cfg = make_instance(100, 13)
        fit = fit_bridge_lasso(y, cfg)
        assert fit.criterion_value == pytest.approx(
            criterion_value(fit.alpha_hat, y, cfg), rel=1e-12
        )

    def test_zero_flags_iff_exact_zero(self):
        y, cfg = make_instance(1000, 14)
        fit = fit_bridge_lasso(y, cfg)
        assert fit.zero_flags.tolist() == [v == 0.0 for v in fit.alpha_hat]
        assert fit.zero_flags[1]  # strong penalty collapses the null coordinate

    def test_never_above_ols_or_origin_value(self):
        for seed in range(5):
            y, cfg = make_instance(60, 200 + seed)
            fit = fit_bridge_lasso(y, cfg)
            ols, _, _ = search_box(y, cfg.design)
            assert fit.criterion_value <= criterion_value(ols, y, cfg) + 1e-9
            assert fit.criterion_value <= criterion_value([0.0, 0.0], y, cfg) + 1e-9

    def test_coordinate_permutation_equivariance(self):
        y, cfg = make_instance(80, 15)
        swapped = LassoConfig(
            design=cfg.design[:, ::-1].copy(),
            beta_true=cfg.beta_true[::-1].copy(),
            gamma=cfg.gamma,
            lambda0=cfg.lambda0,
            sigma=cfg.sigma,
        )
        f1 = fit_bridge_lasso(y, cfg)
        f2 = fit_bridge_lasso(y, swapped)
        assert f1.criterion_value == pytest.approx(f2.criterion_value, rel=1e-9)
        assert f1.alpha_hat.tolist() == pytest.approx(f2.alpha_hat[::-1].tolist(), abs=1e-7)

    def test_deterministic(self):
        y, cfg = make_instance(100, 16)
        a = fit_bridge_lasso(y, cfg)
        b = fit_bridge_lasso(y, cfg)
        assert a.alpha_hat.tolist() == b.alpha_hat.tolist()


class TestLassoConfigValidation:
    def test_rejects_uncentered_design(self):
        X = np.ones((10, 2))
        with pytest.raises(ValueError):
            LassoConfig(design=X, beta_true=[1.0, 0.0])

    def test_rejects_singular_design(self):
        col = np.linspace(-1, 1, 10)
        X = np.column_stack([col, col])
        with pytest.raises(ValueError):
            LassoConfig(design=X, beta_true=[1.0, 0.0])

    def test_rejects_bad_gamma(self):
        X = generate_lasso_design(20, 2, SeedStream(17, 0))
        with pytest.raises(ValueError):
            LassoConfig(design=X, beta_true=[1.0, 0.0], gamma=1.5)

    def test_lambda_scales_with_root_n(self):
        X = generate_lasso_design(400, 2, SeedStream(17, 1))
        cfg = LassoConfig(design=X, beta_true=[1.0, 0.0], lambda0=2.0)
        assert cfg.lambda_n == pytest.approx(2.0 * 20.0)
