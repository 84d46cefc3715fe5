"""Acceptance suite: every criterion at its binding (full-tier) tolerance.

One test per criterion; each prints a PASS/FAIL line (run with ``-s`` to see
them live).  The whole module takes several minutes: it runs the Monte Carlo
ladders at full scale.  Outcomes are deterministic given the seed below.

Known red: ``test_criterion_5_shorth_half_length_law``.  The comparison of
sqrt(n)(r_n - rho) against centered Gaussian draws cannot meet its 0.06
tolerance at n = 64000 because the finite-sample law is shifted by about
-1.6 * n^(-1/6) (selection toward empirically dense intervals).  The test is
kept at the stated tolerance rather than loosened; the failure message
carries the diagnostics (the mean-centered comparison against the derived
limit passes with a wide margin).
"""

import os

from mixedrates import acceptance as acc

SEED = acc.DEFAULT_SEED
TIER = acc.FULL
WORKERS = max(1, min(4, os.cpu_count() or 1))


def report(result):
    print(acc.format_result(result))
    return result


def test_criterion_1_rate_calculus_exactness():
    res = report(acc.check_rate_calculus())
    assert res.passed, res.detail


def test_criterion_2_lasso_exact_zero_collapse():
    res = report(acc.check_lasso_zero_collapse(TIER, SEED, WORKERS))
    assert res.passed, res.detail


def test_criterion_3_lasso_first_component_law():
    res = report(acc.check_lasso_first_component(TIER, SEED, WORKERS))
    assert res.passed, res.detail


def test_criterion_4_shorth_rates():
    res = report(acc.check_shorth_rates(TIER, SEED, WORKERS))
    assert res.passed, res.detail


def test_criterion_5_shorth_half_length_law():
    res = report(acc.check_shorth_r_law(TIER, SEED, WORKERS))
    assert res.passed, (
        "kept red deliberately: this tolerance is unattainable at n = 64000 "
        "because of the n^(-1/6) finite-sample location bias (see the module "
        f"docstring and README). {res.detail}"
    )


def test_criterion_5_shorth_center_law():
    res = report(acc.check_shorth_m_law(TIER, SEED, WORKERS))
    assert res.passed, res.detail


def test_criterion_6_kmeans_rates():
    res = report(acc.check_kmeans_rates(TIER, SEED, WORKERS))
    assert res.passed, res.detail


def test_criterion_7_kmeans_split_choice():
    res = report(acc.check_kmeans_split(TIER, SEED, WORKERS))
    assert res.passed, res.detail


def test_criterion_8_kmeans_limit_laws():
    res = report(acc.check_kmeans_limits(TIER, SEED, WORKERS))
    assert res.passed, res.detail


def test_criterion_9_oracle_shorth_brute_force():
    res = report(acc.check_oracle_shorth(TIER, SEED))
    assert res.passed, res.detail


def test_criterion_9_oracle_lasso_brute_force():
    res = report(acc.check_oracle_lasso(TIER, SEED))
    assert res.passed, res.detail


def test_criterion_9_oracle_kmeans_fast_block():
    res = report(acc.check_oracle_tstar(TIER, SEED))
    assert res.passed, res.detail


def test_criterion_9_oracle_chernoff_scaling():
    res = report(acc.check_oracle_chernoff_scaling(TIER, SEED))
    assert res.passed, res.detail


def test_criterion_9_oracle_score_linearization():
    res = report(acc.check_oracle_linearization(TIER, SEED))
    assert res.passed, res.detail
