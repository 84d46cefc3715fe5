"""Command-line front end: rate calculus queries, Monte Carlo experiment
runs, limit-law sampling, and the acceptance suite.

Exit codes: 0 success, 2 usage error, 3 invalid configuration or runtime
failure, 4 verification failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import DEFAULT_SEED, TIERS, run_all
from .distributions import (
    SeedStream,
    derive_stream_index,
    sample_brownian_path,
    sample_laplace,
    sample_two_line,
)
from .estimators import shorth_population
from .harness import (
    EXPERIMENTS,
    HarnessError,
    LadderConfig,
    fit_rate,
    ks_two_sample,
    records_to_csv_lines,
    run_ladder,
    theoretical_rates,
    zero_fraction,
)
from .limits import (
    ChernoffConfig,
    estimate_kmeans_cov,
    sample_chernoff_argmax,
    sample_kmeans_limit,
    sample_lasso_limits,
)
from .rates import RateSpec, RateSpecError, derive_rates, parse_fraction

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_VERIFY = 4

_EPILOG = """\
exit codes:
  0  success
  2  usage error (unknown flags or malformed arguments)
  3  invalid configuration or runtime failure
  4  verification failed (one or more acceptance checks red)
"""


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run bit-for-bit on the same build,
    plus per-check outcomes when the run was a verification."""

    version: str
    command: str
    config: dict
    master_seed: int
    started: str
    finished: str
    checks: list
    outputs: list

    def as_dict(self) -> dict:
        return {
            "version": self.version,
            "command": self.command,
            "config": _jsonable(self.config),
            "master_seed": self.master_seed,
            "started": self.started,
            "finished": self.finished,
            "checks": _jsonable(self.checks),
            "outputs": list(self.outputs),
        }


def _sig6(x: float) -> float:
    """Round for report output; raw CSV keeps full precision."""
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.6g}")


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------------------
# config files: flat "key = value" lines with # comments

_INT_KEYS = {"replicates", "master_seed", "d", "threads"}
_FLOAT_KEYS = {"lambda0", "gamma", "sigma"}
_KNOWN_KEYS = {"experiment", "n_values", "summary", "design_mode"} | _INT_KEYS | _FLOAT_KEYS


def parse_config_file(path: Path) -> dict:
    values: dict = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key == "n_values":
            values[key] = tuple(int(v) for v in val.replace(",", " ").split())
        elif key in _INT_KEYS:
            values[key] = int(val)
        elif key in _FLOAT_KEYS:
            values[key] = float(val)
        else:
            values[key] = val
    return values


# ---------------------------------------------------------------------------
# subcommand: rates


def _cmd_rates(args) -> int:
    try:
        terms = []
        for term in args.term or []:
            g, _, e = term.partition(":")
            if not e:
                raise RateSpecError(f"term {term!r} must look like gamma:eta, e.g. 2:1")
            terms.append((parse_fraction(g), parse_fraction(e)))
        spec = RateSpec(parse_fraction(args.alpha), parse_fraction(args.beta), terms)
    except RateSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = derive_rates(spec)
    out = {"alpha": str(spec.alpha), "beta": str(spec.beta)}
    out.update(result.as_dict())
    print(json.dumps(out, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# subcommand: simulate


def _limit_draws_for(experiment: str, component: str, params, master_seed: int, draws: int):
    """Reference-law draws for the KS comparison of one component, or None."""
    stream = SeedStream(master_seed, derive_stream_index("limit", experiment, component))
    if experiment == "lasso" and component == "alpha1":
        return sample_lasso_limits(1.0 / 3.0, params["lambda0"], params["sigma"], stream, draws)
    if experiment == "shorth":
        pop = shorth_population()
        if component == "r":
            # derived limit: Gaussian with sd (1/2)/c1 (coverage-constraint
            # balance; variance of the half-coverage indicator is 1/4)
            return stream.generator().normal(0.0, 0.5 / pop.c1, draws)
        return sample_chernoff_argmax(
            ChernoffConfig(c1=pop.c1, c2=pop.c2, paths=draws), stream
        )
    if experiment == "kmeans":
        cov_stream = SeedStream(master_seed, derive_stream_index("limit", "kmeans", "cov"))
        inputs = estimate_kmeans_cov(1_000_000, cov_stream)
        cols = {"delta_s": 0, "eps_d": 1, "delta_d": 2, "eps_s": 3}
        return sample_kmeans_limit(inputs, stream, draws)[:, cols[component]]
    return None


def summarize(records, cfg: LadderConfig, summary_kind: str = "median-abs") -> tuple[dict, dict]:
    """Summary statistics plus plot-ready arrays.

    Returns (summary dict, plotdata dict of name -> list of rows).
    """
    top_n = cfg.n_values[-1]
    exponents = theoretical_rates(cfg.experiment)
    summary: dict = {
        "experiment": cfg.experiment,
        "n_values": list(cfg.n_values),
        "replicates": cfg.replicates,
        "master_seed": cfg.master_seed,
        "params": {k: v for k, v in cfg.params.items()},
        "error_summary": summary_kind,
        "rates": {},
        "ks_vs_limit": {},
    }
    plotdata: dict = {}

    collapsed = set()
    if cfg.experiment == "lasso":
        fractions = {}
        for n in cfg.n_values:
            p, se = zero_fraction([r for r in records if r.n == n], "alpha2")
            fractions[str(n)] = [_sig6(p), _sig6(se)]
        summary["zero_fraction_alpha2"] = fractions
        if fractions[str(top_n)][0] > 0.9:
            collapsed.add("alpha2")

    if cfg.experiment == "kmeans":
        choices = [r.choice for r in records if r.n == top_n and r.component == "delta_s"]
        frac = sum(c == "cv" for c in choices) / len(choices)
        summary["split_fraction_cv"] = {
            "n": top_n,
            "fraction": _sig6(frac),
            "se": _sig6(math.sqrt(frac * (1.0 - frac) / len(choices))),
        }

    for comp in cfg.components:
        if comp in collapsed:
            summary["rates"][comp] = {"status": "collapsed to 0"}
        else:
            est = fit_rate(
                records, comp, summary=summary_kind,
                exclude_zero_flagged=(comp == "alpha2"),
            )
            summary["rates"][comp] = {
                "slope": _sig6(est.slope),
                "slope_se": _sig6(est.slope_se),
                "intercept": _sig6(est.intercept),
                "n_range": list(est.n_range),
                "target": str(-exponents[comp]),
            }
            rows = [("log_n", "log_median_abs_error")]
            for n in cfg.n_values:
                errs = [abs(r.error) for r in records if r.n == n and r.component == comp]
                med = float(np.median(errs))
                if med > 0:
                    rows.append((f"{math.log(n)!r}", f"{math.log(med)!r}"))
            plotdata[f"{comp}_loglog"] = rows

        # distributional comparison at the top rung, rescaled by the
        # theoretical rate (never by the fitted slope)
        errs = np.array(
            [r.error for r in records if r.n == top_n and r.component == comp]
        )
        if comp in collapsed or errs.size == 0:
            continue
        scale = float(top_n) ** float(exponents[comp])
        rescaled = scale * errs
        draws = _limit_draws_for(
            cfg.experiment, comp, cfg.params, cfg.master_seed, errs.size
        )
        if draws is None:
            continue
        summary["ks_vs_limit"][comp] = {
            "n": top_n,
            "rescale_exponent": str(exponents[comp]),
            "ks": _sig6(ks_two_sample(rescaled, draws)),
            "empirical": errs.size,
            "limit_draws": int(draws.size),
        }
        rows = [("kind", "value")]
        rows += [("empirical", repr(float(v))) for v in rescaled]
        rows += [("limit", repr(float(v))) for v in draws]
        plotdata[f"{comp}_rescaled_vs_limit"] = rows
    return summary, plotdata


def _write_outputs(out_dir: Path, records, summary, plotdata, manifest) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "records.csv").write_text("\n".join(records_to_csv_lines(records)) + "\n")
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    plot_dir = out_dir / "plotdata"
    plot_dir.mkdir(exist_ok=True)
    for name, rows in plotdata.items():
        lines = [",".join(str(c) for c in row) for row in rows]
        (plot_dir / f"{name}.csv").write_text("\n".join(lines) + "\n")


def _cmd_simulate(args) -> int:
    settings: dict = {}
    if args.config:
        settings.update(parse_config_file(Path(args.config)))
    if args.experiment:
        settings["experiment"] = args.experiment
    if args.n_values:
        settings["n_values"] = tuple(int(v) for v in args.n_values.replace(",", " ").split())
    if args.replicates is not None:
        settings["replicates"] = args.replicates
    if args.seed is not None:
        settings["master_seed"] = args.seed
    for key in ("lambda0", "gamma", "sigma", "design_mode", "summary"):
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val

    experiment = settings.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {experiment!r}")
    params = {
        k: settings[k]
        for k in ("lambda0", "gamma", "sigma", "d", "design_mode")
        if k in settings
    }
    cfg = LadderConfig(
        experiment=experiment,
        n_values=settings.get("n_values", ()),
        replicates=settings.get("replicates", 0),
        master_seed=settings.get("master_seed", DEFAULT_SEED),
        params=params,
    )
    summary_kind = settings.get("summary", "median-abs")
    if summary_kind not in ("median-abs", "rmse"):
        raise ConfigError(f"summary must be 'median-abs' or 'rmse', got {summary_kind!r}")
    if params.get("design_mode", "fresh") not in ("fresh", "fixed"):
        raise ConfigError(f"design_mode must be 'fresh' or 'fixed', got {params['design_mode']!r}")
    threads = args.threads if args.threads is not None else int(settings.get("threads", 1))
    started = _utcnow()
    records = run_ladder(cfg, workers=threads)
    summary, plotdata = summarize(records, cfg, summary_kind)
    manifest = RunManifest(
        version=__version__,
        command="simulate",
        config={
            "experiment": cfg.experiment,
            "n_values": list(cfg.n_values),
            "replicates": cfg.replicates,
            "master_seed": cfg.master_seed,
            "params": dict(cfg.params),
            "summary": summary_kind,
            "threads": threads,
        },
        master_seed=cfg.master_seed,
        started=started,
        finished=_utcnow(),
        checks=[],
        outputs=["records.csv", "summary.json", "plotdata/"],
    ).as_dict()
    out_dir = Path(args.out_dir)
    _write_outputs(out_dir, records, summary, plotdata, manifest)
    print(f"wrote {len(records)} records to {out_dir}/records.csv")
    for comp, entry in summary["rates"].items():
        if "slope" in entry:
            print(f"  {comp}: slope {entry['slope']} (target {entry['target']})")
        else:
            print(f"  {comp}: {entry['status']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# subcommand: limit


def _cmd_limit(args) -> int:
    stream = SeedStream(args.seed, args.stream_index)
    if args.dump_sample:
        rows = _dump_sample_rows(args, stream)
    else:
        rows = _limit_rows(args, stream)
    text = "\n".join(",".join(str(c) for c in row) for row in rows) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(rows) - 1} rows to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _limit_rows(args, stream):
    if args.law == "chernoff":
        cfg = ChernoffConfig(c1=args.c1, c2=args.c2, T=args.horizon, h=args.step,
                             paths=args.draws)
        draws = sample_chernoff_argmax(cfg, stream)
        return [("index", "t")] + [(i, repr(float(v))) for i, v in enumerate(draws)]
    if args.law == "lasso-first":
        draws = sample_lasso_limits(args.c11, args.lambda0, args.sigma, stream, args.draws)
        return [("index", "u")] + [(i, repr(float(v))) for i, v in enumerate(draws)]
    if args.law == "kmeans":
        inputs = estimate_kmeans_cov(args.cov_samples, stream.child("cov"))
        draws = sample_kmeans_limit(inputs, stream, args.draws)
        rows = [("index", "delta_s", "eps_d", "delta_d", "eps_s")]
        rows += [(i, *(repr(float(v)) for v in row)) for i, row in enumerate(draws)]
        return rows
    raise ConfigError(f"unknown law {args.law!r}")


def _dump_sample_rows(args, stream):
    kind = args.dump_sample
    if kind == "laplace":
        vals = sample_laplace(args.draws, stream)
        return [("index", "value")] + [(i, repr(float(v))) for i, v in enumerate(vals)]
    if kind == "two-line":
        pts = sample_two_line(args.draws, stream)
        return [("index", "x", "y")] + [
            (i, repr(float(x)), repr(float(y))) for i, (x, y) in enumerate(pts)
        ]
    if kind == "brownian":
        path = sample_brownian_path(args.horizon or 1.0, args.step or 0.01, stream)
        return [("index", "t", "value")] + [
            (i, repr(float(t)), repr(float(v)))
            for i, (t, v) in enumerate(zip(path.times, path.values))
        ]
    raise ConfigError(f"unknown sample kind {kind!r}")


# ---------------------------------------------------------------------------
# subcommand: verify


def _cmd_verify(args) -> int:
    tier = TIERS["full" if args.full else "quick"]
    started = _utcnow()
    results = run_all(tier, master_seed=args.seed, workers=args.threads, progress=print)
    finished = _utcnow()
    ok = all(r.passed for r in results)
    if args.out_dir:
        manifest = RunManifest(
            version=__version__,
            command="verify",
            config={"tier": tier.name, "master_seed": args.seed, "threads": args.threads},
            master_seed=args.seed,
            started=started,
            finished=finished,
            checks=[
                {
                    "name": r.name,
                    "passed": r.passed,
                    "threshold": r.threshold,
                    "measured": r.measured,
                }
                for r in results
            ],
            outputs=[],
        ).as_dict()
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} checks passed ({tier.name} tier, seed {args.seed})")
    return EXIT_OK if ok else EXIT_VERIFY


def _jsonable(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _sig6(float(obj))
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixedrates",
        description=__doc__.splitlines()[0],
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"mixedrates {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rates = sub.add_parser(
        "rates", help="derive the two-block rate exponents of an exponent profile"
    )
    p_rates.add_argument("--alpha", required=True, help="slow-block degree, e.g. 3 or 7/2")
    p_rates.add_argument("--beta", required=True, help="fast-block degree (1 < beta < alpha)")
    p_rates.add_argument(
        "--term",
        action="append",
        metavar="GAMMA:ETA",
        help="cross-term degrees as fractions, e.g. 2:1 (repeatable)",
    )
    p_rates.set_defaults(func=_cmd_rates)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo ladder and write reports")
    p_sim.add_argument("--config", help="flat 'key = value' config file (# comments allowed)")
    p_sim.add_argument("--experiment", choices=EXPERIMENTS)
    p_sim.add_argument("--n-values", help="comma-separated ladder, e.g. 250,500,1000,2000")
    p_sim.add_argument("--replicates", type=int)
    p_sim.add_argument("--seed", type=int, help="master seed (default %(default)s)")
    p_sim.add_argument("--lambda0", type=float, help="penalty scale (lasso)")
    p_sim.add_argument("--gamma", type=float, help="penalty exponent in (0, 1] (lasso)")
    p_sim.add_argument("--sigma", type=float, help="noise standard deviation (lasso)")
    p_sim.add_argument(
        "--design-mode",
        dest="design_mode",
        choices=("fresh", "fixed"),
        help="lasso design per replicate (fresh) or shared per sample size (fixed)",
    )
    p_sim.add_argument(
        "--summary",
        choices=("median-abs", "rmse"),
        help="error aggregate for rate fits (default median-abs)",
    )
    p_sim.add_argument("--out-dir", default="out", help="output directory (default %(default)s)")
    p_sim.add_argument("--threads", type=int, default=None, help="worker processes (default 1)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_lim = sub.add_parser("limit", help="sample a limiting law (or dump raw source draws)")
    p_lim.add_argument("--law", choices=("chernoff", "lasso-first", "kmeans"))
    p_lim.add_argument(
        "--dump-sample",
        choices=("laplace", "two-line", "brownian"),
        help="debug: emit raw source-distribution draws instead of a limit law",
    )
    p_lim.add_argument("--draws", type=int, default=1000)
    p_lim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_lim.add_argument("--stream-index", type=int, default=0)
    p_lim.add_argument("--out", help="output CSV path (default: stdout)")
    p_lim.add_argument("--c1", type=float, default=1.0, help="squared diffusion scale")
    p_lim.add_argument(
        "--c2",
        type=float,
        default=-1.0,
        help=(
            "concave drift coefficient: the sampled objective is "
            "c2*t^2 + sqrt(c1)*B(t).  (Some treatments print the drift as the "
            "linear c2*t; with c2 < 0 that objective has no finite argmax, so "
            "the quadratic form from the coverage expansion is used here.)"
        ),
    )
    p_lim.add_argument("--horizon", type=float, help="grid horizon T (default: auto)")
    p_lim.add_argument("--step", type=float, help="grid step h (default: T/4000)")
    p_lim.add_argument("--c11", type=float, default=1.0 / 3.0, help="design curvature")
    p_lim.add_argument("--lambda0", type=float, default=2.0)
    p_lim.add_argument("--sigma", type=float, default=1.0)
    p_lim.add_argument("--cov-samples", type=int, default=1_000_000)
    p_lim.set_defaults(func=_cmd_limit)

    p_ver = sub.add_parser("verify", help="run the acceptance checks")
    tier_group = p_ver.add_mutually_exclusive_group()
    tier_group.add_argument("--quick", action="store_true", help="reduced-scale tier (default)")
    tier_group.add_argument(
        "--full", action="store_true",
        help="binding thresholds, ~5-30 min depending on --threads",
    )
    p_ver.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_ver.add_argument("--threads", type=int, default=1)
    p_ver.add_argument("--out-dir", help="write a manifest.json with per-check results")
    p_ver.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "limit" and bool(args.law) == bool(args.dump_sample):
        print("error: pass exactly one of --law or --dump-sample", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, ValueError, HarnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
