"""Acceptance checks: the verification contract of the package.

Each check runs a Monte Carlo experiment at a declared scale and compares the
outcome against a declared tolerance.  Two tiers exist: ``full`` (the binding
thresholds, ~15-30 min) and ``quick`` (reduced scale smoke thresholds,
~2 min).  Checks are deterministic given the master seed.

Known red check: ``shorth-r-law`` compares sqrt(n)(r_n - rho) against the
centered Gaussian limit at n = 64000 and fails its 0.06 tolerance, because
the finite-sample law carries a selection bias of about -1.6 * n^(-1/6)
(about -0.25 at n = 64000, measured stably across n).  The mean-centered
comparison against the derived limit passes with a wide margin; both numbers
are reported in the check detail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .distributions import SeedStream
from .estimators import (
    LassoConfig,
    fit_bridge_lasso,
    fit_shorth,
    generate_lasso_design,
    search_box,
    shorth_population,
)
from .harness import fit_rate, ks_two_sample, run_cells, zero_fraction
from .limits import (
    ChernoffConfig,
    _linearization_gate,
    estimate_kmeans_cov,
    fast_block_closed_form,
    sample_chernoff_argmax,
    sample_kmeans_limit,
    sample_lasso_limits,
)
from .rates import RateSpec, Regime, derive_rates

__all__ = ["CheckResult", "TierParams", "TIERS", "DEFAULT_SEED", "run_all", "format_result"]

DEFAULT_SEED = 1729


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: dict
    threshold: str
    detail: str = ""


def format_result(res: CheckResult) -> str:
    status = "PASS" if res.passed else "FAIL"
    return f"[{status}] {res.name}: {res.detail or res.threshold}"


@dataclass(frozen=True)
class TierParams:
    name: str
    # penalized regression
    lasso_ladder: tuple[int, ...]
    lasso_replicates: int
    lasso_zero_top: float
    lasso_ks_n: int
    lasso_ks_replicates: int
    lasso_ks_tol: float
    # shorth
    shorth_ladder: tuple[int, ...]
    shorth_replicates: int
    shorth_m_band: tuple[float, float]
    shorth_r_band: tuple[float, float]
    shorth_ks_n: int
    shorth_ks_replicates: int
    shorth_r_ks_tol: float
    shorth_m_ks_tol: float
    # k-means
    kmeans_ladder: tuple[int, ...]
    kmeans_replicates: int
    kmeans_slow_band: tuple[float, float]
    kmeans_fast_band: tuple[float, float]
    kmeans_split_n: int
    kmeans_split_replicates: int
    kmeans_split_band: tuple[float, float]
    kmeans_ks_n: int
    kmeans_ks_replicates: int
    kmeans_ks_tol: float
    kmeans_cov_samples: int
    # oracle equivalences
    oracle_shorth_instances: int
    oracle_lasso_instances: int
    oracle_tstar_instances: int
    oracle_chernoff_draws: int


FULL = TierParams(
    name="full",
    lasso_ladder=(250, 500, 1000, 2000, 4000),
    lasso_replicates=500,
    lasso_zero_top=0.80,
    lasso_ks_n=4000,
    lasso_ks_replicates=2000,
    lasso_ks_tol=0.07,
    shorth_ladder=(1000, 2000, 4000, 8000, 16000, 32000, 64000),
    shorth_replicates=200,
    shorth_m_band=(-0.40, -0.26),
    shorth_r_band=(-0.58, -0.42),
    shorth_ks_n=64000,
    shorth_ks_replicates=2000,
    shorth_r_ks_tol=0.06,
    shorth_m_ks_tol=0.10,
    kmeans_ladder=(1000, 2000, 4000, 8000, 16000),
    kmeans_replicates=300,
    kmeans_slow_band=(-0.32, -0.18),
    kmeans_fast_band=(-0.60, -0.40),
    kmeans_split_n=10_000,
    kmeans_split_replicates=1000,
    kmeans_split_band=(0.42, 0.58),
    kmeans_ks_n=16_000,
    kmeans_ks_replicates=2000,
    kmeans_ks_tol=0.12,
    kmeans_cov_samples=2_000_000,
    oracle_shorth_instances=200,
    oracle_lasso_instances=50,
    oracle_tstar_instances=100,
    oracle_chernoff_draws=10_000,
)

# Smoke tier: same checks at reduced scale; slope/KS thresholds widened for
# the extra Monte Carlo noise.  Calibrated once against pilot runs and frozen.
QUICK = TierParams(
    name="quick",
    lasso_ladder=(250, 500, 1000, 2000),
    lasso_replicates=150,
    lasso_zero_top=0.80,
    lasso_ks_n=2000,
    lasso_ks_replicates=400,
    lasso_ks_tol=0.12,
    shorth_ladder=(1000, 2000, 4000, 8000, 16000),
    shorth_replicates=80,
    shorth_m_band=(-0.48, -0.22),
    shorth_r_band=(-0.66, -0.38),
    shorth_ks_n=16_000,
    shorth_ks_replicates=400,
    shorth_r_ks_tol=0.06,
    shorth_m_ks_tol=0.15,
    kmeans_ladder=(1000, 2000, 4000, 8000, 16000),
    kmeans_replicates=60,
    kmeans_slow_band=(-0.38, -0.12),
    kmeans_fast_band=(-0.70, -0.34),
    kmeans_split_n=4000,
    kmeans_split_replicates=150,
    kmeans_split_band=(0.38, 0.62),
    kmeans_ks_n=8000,
    kmeans_ks_replicates=300,
    kmeans_ks_tol=0.17,
    kmeans_cov_samples=500_000,
    oracle_shorth_instances=60,
    oracle_lasso_instances=12,
    oracle_tstar_instances=30,
    oracle_chernoff_draws=4000,
)

TIERS = {"full": FULL, "quick": QUICK}

_LASSO_PARAMS = {"lambda0": 2.0, "gamma": 0.5, "sigma": 1.0}


# ---------------------------------------------------------------------------
# 1. rate calculus


def check_rate_calculus() -> CheckResult:
    """The four worked exponent profiles must come out exactly."""
    cases = [
        (RateSpec(4, 2), Fraction(1, 6), Fraction(1, 2), Regime.DECOUPLED),
        (RateSpec(4, 2, [(2, 1)]), Fraction(1, 6), Fraction(1, 3), Regime.COUPLED),
        (RateSpec(4, 2, [(3, 1)]), Fraction(1, 6), Fraction(1, 2), Regime.DECOUPLED),
        (RateSpec(3, 2, [(2, 1)] * 3), Fraction(1, 4), Fraction(1, 2), Regime.DECOUPLED),
    ]
    measured = []
    ok = True
    for spec, tau_a, tau_b, regime in cases:
        res = derive_rates(spec)
        measured.append(res.as_dict())
        ok &= res.tau_a == tau_a and res.tau_b == tau_b and res.regime is regime
    return CheckResult(
        name="rate-calculus",
        passed=ok,
        measured={"profiles": measured},
        threshold="tau_a in {1/6,1/6,1/6,1/4}, tau_b in {1/2,1/3,1/2,1/2}, exact",
        detail="; ".join(
            f"({m['tau_a']},{m['tau_b']},{m['regime']})" for m in measured
        ),
    )


# ---------------------------------------------------------------------------
# 2 & 3. penalized regression


def check_lasso_zero_collapse(tier: TierParams, seed: int, workers: int = 1) -> CheckResult:
    recs = run_cells(
        "lasso", tier.lasso_ladder, tier.lasso_replicates, seed, _LASSO_PARAMS, workers
    )
    fracs = []
    for n in tier.lasso_ladder:
        p, se = zero_fraction([r for r in recs if r.n == n], "alpha2")
        fracs.append((n, p, se))
    inversions = [
        j
        for j in range(len(fracs) - 1)
        if fracs[j + 1][1] < fracs[j][1]
    ]
    within = all(
        fracs[j][1] - fracs[j + 1][1]
        <= 2.0 * math.hypot(fracs[j][2], fracs[j + 1][2])
        for j in inversions
    )
    top = fracs[-1][1]
    passed = len(inversions) <= 1 and within and top >= tier.lasso_zero_top
    return CheckResult(
        name="lasso-zero-collapse",
        passed=passed,
        measured={"fractions": [(n, p) for n, p, _ in fracs]},
        threshold=f"nondecreasing (<=1 inversion within 2 se), >= {tier.lasso_zero_top} at top n",
        detail="zero fractions " + ", ".join(f"{n}:{p:.3f}" for n, p, _ in fracs),
    )


def check_lasso_first_component(tier: TierParams, seed: int, workers: int = 1) -> CheckResult:
    n = tier.lasso_ks_n
    recs = run_cells("lasso", [n], tier.lasso_ks_replicates, seed + 1, _LASSO_PARAMS, workers)
    emp = np.array([math.sqrt(n) * r.error for r in recs if r.component == "alpha1"])
    draws = sample_lasso_limits(
        1.0 / 3.0, _LASSO_PARAMS["lambda0"], _LASSO_PARAMS["sigma"],
        SeedStream(seed, 12345), tier.lasso_ks_replicates,
    )
    ks = ks_two_sample(emp, draws)
    return CheckResult(
        name="lasso-first-component-law",
        passed=ks <= tier.lasso_ks_tol,
        measured={"ks": ks, "emp_mean": float(emp.mean()), "emp_sd": float(emp.std())},
        threshold=f"KS <= {tier.lasso_ks_tol} at n = {n}",
        detail=f"KS = {ks:.4f} (tol {tier.lasso_ks_tol})",
    )


# ---------------------------------------------------------------------------
# 4 & 5. shorth


def check_shorth_rates(tier: TierParams, seed: int, workers: int = 1) -> CheckResult:
    recs = run_cells("shorth", tier.shorth_ladder, tier.shorth_replicates, seed + 2, None, workers)
    est_m = fit_rate(recs, "m")
    est_r = fit_rate(recs, "r")
    lo_m, hi_m = tier.shorth_m_band
    lo_r, hi_r = tier.shorth_r_band
    passed = lo_m <= est_m.slope <= hi_m and lo_r <= est_r.slope <= hi_r
    return CheckResult(
        name="shorth-rates",
        passed=passed,
        measured={"slope_m": est_m.slope, "slope_r": est_r.slope,
                  "se_m": est_m.slope_se, "se_r": est_r.slope_se},
        threshold=f"slope(m) in {tier.shorth_m_band}, slope(r) in {tier.shorth_r_band}",
        detail=f"slope m = {est_m.slope:.3f}, slope r = {est_r.slope:.3f}",
    )


def _shorth_ks_errors(tier: TierParams, seed: int, workers: int):
    n = tier.shorth_ks_n
    recs = run_cells("shorth", [n], tier.shorth_ks_replicates, seed + 3, None, workers)
    emp_r = np.array([math.sqrt(n) * r.error for r in recs if r.component == "r"])
    emp_m = np.array([n ** (1.0 / 3.0) * r.error for r in recs if r.component == "m"])
    return emp_r, emp_m


def check_shorth_r_law(tier: TierParams, seed: int, workers: int = 1) -> CheckResult:
    """Half-length limit comparison as stated: Z/c1 with Var Z = 1/2.

    This check is expected to fail at every desk scale; see the module
    docstring.  The detail line carries the two diagnostics that isolate the
    defect: the comparison against the derived limit (Var Z = 1/4, confirmed
    by the criterion-constraint derivation and by simulation) and the
    mean-centered comparison, which passes.
    """
    emp_r, _ = _shorth_ks_errors(tier, seed, workers)
    pop = shorth_population()
    R = tier.shorth_ks_replicates
    stated = SeedStream(seed, 779).generator().normal(0.0, math.sqrt(0.5) / pop.c1, R)
    derived = SeedStream(seed, 777).generator().normal(0.0, 0.5 / pop.c1, R)
    ks_stated = ks_two_sample(emp_r, stated)
    ks_derived = ks_two_sample(emp_r, derived)
    ks_centered = ks_two_sample(emp_r - emp_r.mean(), derived)
    return CheckResult(
        name="shorth-r-law",
        passed=ks_stated <= tier.shorth_r_ks_tol,
        measured={
            "ks_stated_var_half": ks_stated,
            "ks_derived_var_quarter": ks_derived,
            "ks_centered_vs_derived": ks_centered,
            "emp_mean": float(emp_r.mean()),
            "emp_sd": float(emp_r.std()),
        },
        threshold=f"KS <= {tier.shorth_r_ks_tol} at n = {tier.shorth_ks_n}",
        detail=(
            f"KS = {ks_stated:.4f} vs stated Var Z = 1/2 (tol {tier.shorth_r_ks_tol}); "
            f"vs derived Var Z = 1/4: {ks_derived:.4f}; mean-centered vs derived: "
            f"{ks_centered:.4f}; finite-n location bias {emp_r.mean():+.3f}"
        ),
    )


def check_shorth_m_law(tier: TierParams, seed: int, workers: int = 1) -> CheckResult:
    _, emp_m = _shorth_ks_errors(tier, seed, workers)
    pop = shorth_population()
    draws = sample_chernoff_argmax(
        ChernoffConfig(c1=pop.c1, c2=pop.c2, paths=tier.shorth_ks_replicates),
        SeedStream(seed, 778),
    )
    ks = ks_two_sample(emp_m, draws)
    return CheckResult(
        name="shorth-m-law",
        passed=ks <= tier.shorth_m_ks_tol,
        measured={"ks": ks},
        threshold=f"KS <= {tier.shorth_m_ks_tol} at n = {tier.shorth_ks_n}",
        detail=f"KS = {ks:.4f} vs drifted-argmax draws (tol {tier.shorth_m_ks_tol})",
    )


# ---------------------------------------------------------------------------
# 6, 7, 8. k-means


def check_kmeans_rates(tier: TierParams, seed: int, workers: int = 1) -> CheckResult:
    recs = run_cells(
        "kmeans", tier.kmeans_ladder, tier.kmeans_replicates, seed + 4, None, workers
    )
    slopes = {c: fit_rate(recs, c).slope for c in ("delta_s", "eps_d", "delta_d", "eps_s")}
    lo_s, hi_s = tier.kmeans_slow_band
    lo_f, hi_f = tier.kmeans_fast_band
    passed = all(lo_s <= slopes[c] <= hi_s for c in ("delta_s", "eps_d")) and all(
        lo_f <= slopes[c] <= hi_f for c in ("delta_d", "eps_s")
    )
    return CheckResult(
        name="kmeans-rates",
        passed=passed,
        measured={"slopes": slopes},
        threshold=(
            f"slow-block slopes in {tier.kmeans_slow_band}, "
            f"fast-block slopes in {tier.kmeans_fast_band}"
        ),
        detail="slopes " + ", ".join(f"{c}={v:.3f}" for c, v in slopes.items()),
    )


def check_kmeans_split(tier: TierParams, seed: int, workers: int = 1) -> CheckResult:
    recs = run_cells(
        "kmeans", [tier.kmeans_split_n], tier.kmeans_split_replicates, seed + 5, None, workers
    )
    choices = [r.choice for r in recs if r.component == "delta_s"]
    frac = sum(c == "cv" for c in choices) / len(choices)
    lo, hi = tier.kmeans_split_band
    return CheckResult(
        name="kmeans-split-choice",
        passed=lo <= frac <= hi,
        measured={"fraction_cv": frac},
        threshold=f"fraction choosing cv in {tier.kmeans_split_band}",
        detail=f"fraction cv = {frac:.3f}",
    )


def check_kmeans_limits(tier: TierParams, seed: int, workers: int = 1) -> CheckResult:
    n = tier.kmeans_ks_n
    recs = run_cells("kmeans", [n], tier.kmeans_ks_replicates, seed + 6, None, workers)
    inputs = estimate_kmeans_cov(tier.kmeans_cov_samples, SeedStream(seed, 999))
    draws = sample_kmeans_limit(inputs, SeedStream(seed, 1000), tier.kmeans_ks_replicates)
    emp_ds = np.array([n**0.25 * r.error for r in recs if r.component == "delta_s"])
    emp_dd = np.array([math.sqrt(n) * r.error for r in recs if r.component == "delta_d"])
    ks_ds = ks_two_sample(emp_ds, draws[:, 0])
    ks_dd = ks_two_sample(emp_dd, draws[:, 2])
    tol = tier.kmeans_ks_tol
    return CheckResult(
        name="kmeans-limit-laws",
        passed=ks_ds <= tol and ks_dd <= tol,
        measured={"ks_delta_s": ks_ds, "ks_delta_d": ks_dd},
        threshold=f"KS <= {tol} for delta_s (rate 1/4) and delta_d (rate 1/2) at n = {n}",
        detail=f"KS delta_s = {ks_ds:.4f}, delta_d = {ks_dd:.4f} (tol {tol})",
    )


# ---------------------------------------------------------------------------
# 9. oracle equivalences


def _brute_shorth(x):
    x = np.asarray(x)
    k = (x.size + 1) // 2
    best = None
    for a in x:
        for b in x[x >= a]:
            count = int(np.sum((x >= a) & (x <= b)))
            if count >= k and (best is None or b - a < best[0]):
                best = (b - a, count)
    return best


def check_oracle_shorth(tier: TierParams, seed: int) -> CheckResult:
    gen = SeedStream(seed, 2001).generator()
    bad = 0
    for _ in range(tier.oracle_shorth_instances):
        x = gen.standard_normal(int(gen.integers(5, 200)))
        fit = fit_shorth(x)
        width, count = _brute_shorth(x)
        inside = int(np.sum((x >= fit.m - fit.r) & (x <= fit.m + fit.r)))
        if abs(2.0 * fit.r - width) > 1e-9 or inside != count:
            bad += 1
    return CheckResult(
        name="oracle-shorth-brute-force",
        passed=bad == 0,
        measured={"instances": tier.oracle_shorth_instances, "mismatches": bad},
        threshold="identical (width, point count) on every instance",
        detail=f"{bad} mismatches in {tier.oracle_shorth_instances} instances",
    )


def check_oracle_lasso(tier: TierParams, seed: int) -> CheckResult:
    worst = 0.0
    for trial in range(tier.oracle_lasso_instances):
        s = SeedStream(seed, 3000 + trial)
        X = generate_lasso_design(6, 2, s)
        y = X @ np.array([1.0, 0.0]) + s.child("y").generator().standard_normal(6)
        cfg = LassoConfig(design=X, beta_true=[1.0, 0.0], **_LASSO_PARAMS)
        fit = fit_bridge_lasso(y, cfg)
        brute_val = _brute_lasso_value(y, cfg)
        worst = max(worst, (fit.criterion_value - brute_val) / abs(brute_val))
    return CheckResult(
        name="oracle-lasso-brute-force",
        passed=worst <= 1e-4,
        measured={"worst_relative_gap": worst},
        threshold="relative criterion gap <= 1e-4 vs 2001^2 grid",
        detail=f"worst relative gap = {worst:.2e}",
    )


def _brute_lasso_value(y, cfg, points=2001):
    _, lo, hi = search_box(y, cfg.design)
    axes = []
    for j in range(2):
        g = np.linspace(lo[j], hi[j], points)
        if lo[j] < 0.0 < hi[j]:
            g = np.sort(np.append(g, 0.0))
        axes.append(g)
    X = cfg.design
    xtx, xty, yty = X.T @ X, X.T @ y, float(y @ y)
    best = math.inf
    for chunk in np.array_split(axes[0], 8):
        A1, A2 = np.meshgrid(chunk, axes[1], indexing="ij")
        A = np.column_stack([A1.ravel(), A2.ravel()])
        vals = (
            yty
            - 2.0 * (A @ xty)
            + np.einsum("ij,jk,ik->i", A, xtx, A)
            + cfg.lambda_n * np.sum(np.abs(A) ** cfg.gamma, axis=1)
        )
        best = min(best, float(vals.min()))
    return best


def check_oracle_tstar(tier: TierParams, seed: int) -> CheckResult:
    gen = SeedStream(seed, 4000).generator()
    worst = 0.0
    for _ in range(tier.oracle_tstar_instances):
        s = gen.normal(0.0, 1.0, size=2)
        z2 = gen.normal(0.0, 2.0, size=2)
        closed = fast_block_closed_form(s, z2)
        # independent numeric route: gradient descent on the quadratic
        t = np.zeros(2)
        for _ in range(80):
            grad = np.array(
                [
                    2.0 * t[0] + z2[0] + s[0] ** 2 - s[1] ** 2,
                    2.0 * t[1] + z2[1] + 2.0 * s[0] * s[1],
                ]
            )
            t = t - 0.4 * grad
        worst = max(worst, float(np.max(np.abs(closed - t))))
    return CheckResult(
        name="oracle-kmeans-fast-block",
        passed=worst <= 1e-8,
        measured={"worst_gap": worst},
        threshold="closed form within 1e-8 of numeric minimization",
        detail=f"worst gap = {worst:.2e}",
    )


def check_oracle_chernoff_scaling(tier: TierParams, seed: int) -> CheckResult:
    paths = tier.oracle_chernoff_draws
    d1 = sample_chernoff_argmax(ChernoffConfig(1.0, -1.0, paths=paths), SeedStream(seed, 5001))
    d2 = sample_chernoff_argmax(ChernoffConfig(4.0, -2.0, paths=paths), SeedStream(seed, 5002))
    factor = (math.sqrt(1.0) / 1.0) ** (2.0 / 3.0)
    ks = ks_two_sample(d1 * factor, d2)
    return CheckResult(
        name="oracle-chernoff-scaling",
        passed=ks <= 0.03,
        measured={"ks": ks},
        threshold="KS <= 0.03 between rescaled parameterizations",
        detail=f"KS = {ks:.4f}",
    )


def check_oracle_linearization(tier: TierParams, seed: int) -> CheckResult:
    worst = _linearization_gate(SeedStream(seed, 888).child("gate"))
    return CheckResult(
        name="oracle-score-linearization",
        passed=worst <= 1e-2,
        measured={"worst_relative_error": worst},
        threshold="finite differences match scores to 1e-2 relative",
        detail=f"worst relative error = {worst:.2e}",
    )


# ---------------------------------------------------------------------------


def run_all(tier: TierParams, master_seed: int = DEFAULT_SEED, workers: int = 1,
            progress=None) -> list[CheckResult]:
    """Run every acceptance check; deterministic given the master seed."""
    checks = [
        lambda: check_rate_calculus(),
        lambda: check_lasso_zero_collapse(tier, master_seed, workers),
        lambda: check_lasso_first_component(tier, master_seed, workers),
        lambda: check_shorth_rates(tier, master_seed, workers),
        lambda: check_shorth_r_law(tier, master_seed, workers),
        lambda: check_shorth_m_law(tier, master_seed, workers),
        lambda: check_kmeans_rates(tier, master_seed, workers),
        lambda: check_kmeans_split(tier, master_seed, workers),
        lambda: check_kmeans_limits(tier, master_seed, workers),
        lambda: check_oracle_shorth(tier, master_seed),
        lambda: check_oracle_lasso(tier, master_seed),
        lambda: check_oracle_tstar(tier, master_seed),
        lambda: check_oracle_chernoff_scaling(tier, master_seed),
        lambda: check_oracle_linearization(tier, master_seed),
    ]
    results = []
    for run in checks:
        res = run()
        results.append(res)
        if progress is not None:
            progress(format_result(res))
    return results
