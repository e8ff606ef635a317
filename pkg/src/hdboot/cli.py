"""Command-line entry point: ``hdboot <subcommand> ...``.

Exit codes: 0 on success, 2 for usage or configuration errors, 3 for data
errors (unreadable CSV, degenerate coordinates, indefinite matrices, ...).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from .bootstrap import DEFAULT_B, Scheme
from .errors import ConfigError, HDBootError, WrongSchemeError
from .gaussian import RateInputs, rate_delta1, rate_delta2
from .inference import ONE_SIDED, TWO_SIDED, InfluencePanel, cov_compare_test, simultaneous_ci, stepdown
from .io import fmt, read_matrix_csv, write_csv, write_json
from .lasso import HETEROSCEDASTIC, HOMOSCEDASTIC, RegressionData, rlasso_pipeline
from .simulab import ScenarioConfig, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _boot_args(p, alpha):
    p.add_argument("--alpha", type=float, default=alpha)
    p.add_argument("--B", type=int, default=DEFAULT_B, help="bootstrap replicates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")


def cmd_simulate(a) -> int:
    cfg = ScenarioConfig.from_json(a.config, seed=a.seed)
    rep = run(cfg)
    rep.write(_outdir(a.out), timing=a.timing)
    print(f"{cfg.experiment}: estimate={fmt(rep.estimate)} mc_se={fmt(rep.mc_se)} "
          f"({rep.runtime_seconds:.1f}s)", file=sys.stderr)
    return EXIT_OK


def cmd_ci(a) -> int:
    panel = InfluencePanel.from_csv(a.data, a.theta)
    ci = simultaneous_ci(panel, a.alpha, Scheme.parse(a.scheme), a.B, a.seed)
    out = _outdir(a.out)
    write_csv(out / "ci.csv", ["index", "theta_hat", "lower", "upper"],
              [[j, panel.theta_hat[j], ci.lower[j], ci.upper[j]] for j in range(panel.p)])
    write_json(out / "ci.json", {"level": ci.level, "quantile": ci.quantile_used.value, "B": a.B,
                                 "scheme": Scheme.parse(a.scheme).value, "seed": a.seed})
    return EXIT_OK


def cmd_stepdown(a) -> int:
    panel = InfluencePanel.from_csv(a.data, a.theta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = stepdown(panel, a.alpha, a.sides, Scheme.parse(a.scheme), a.B, a.seed)
    if res.warning:
        print("warning: B is too small to resolve the requested level", file=sys.stderr)
    res.to_csv(_outdir(a.out) / "stepdown.csv")
    print(f"{len(res.rejected)} rejection(s): {' '.join(str(j) for j in res.rejected)}")
    return EXIT_OK


def cmd_covcmp(a) -> int:
    _, X = read_matrix_csv(a.x)
    _, Y = read_matrix_csv(a.y)
    res = cov_compare_test(X, Y, a.alpha, a.B, a.seed)
    write_json(_outdir(a.out) / "covcmp.json",
               {"statistic": res.statistic, "critical_value": res.critical_value, "reject": res.reject,
                "pairs_tested": res.pairs_tested, "argmax_pair": list(res.argmax_pair)})
    print("reject" if res.reject else "do not reject")
    return EXIT_OK


def cmd_rlasso(a) -> int:
    d = RegressionData.from_csv(a.data)
    fit = rlasso_pipeline(d, a.alpha, a.mode, a.refinements, a.B, a.seed)
    out = _outdir(a.out)
    write_csv(out / "rlasso.csv", ["index", "beta"], [[j, b] for j, b in enumerate(fit.beta)])
    write_json(out / "rlasso.json", {"lambda": fit.lam, "lambda_trace": fit.lambda_trace,
                                     "active_set": fit.active_set, "objective": fit.objective,
                                     "iterations": fit.iterations})
    return EXIT_OK


def cmd_rates(a) -> int:
    ri = RateInputs(B_n=a.B, q=a.q)
    header = ["n", "p", "delta1"] + (["delta2"] if a.q is not None else [])
    rows = []
    for n in a.n:
        for p in a.p:
            row = [n, p, rate_delta1(ri, n, p)]
            if a.q is not None:
                row.append(rate_delta2(ri, n, p))
            rows.append(row)
    print(",".join(header))
    for r in rows:
        print(",".join(fmt(v) for v in r))
    if a.out is not None:
        write_csv(_outdir(a.out) / "rates.csv", header, rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hdboot", description="High-dimensional bootstrap inference.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--timing", action="store_true", help="add runtime_seconds to report.json")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("ci", help="simultaneous confidence rectangle")
    p.add_argument("--data", required=True, help="CSV of influence values, one row per observation")
    p.add_argument("--theta", help="CSV with one row of estimates (default: column means)")
    p.add_argument("--scheme", default="gaussian")
    _boot_args(p, 0.05)
    p.set_defaults(fn=cmd_ci)

    p = sub.add_parser("stepdown", help="stepdown multiple testing")
    p.add_argument("--data", required=True)
    p.add_argument("--theta")
    p.add_argument("--scheme", default="gaussian")
    side = p.add_mutually_exclusive_group()
    side.add_argument("--one-sided", dest="sides", action="store_const", const=ONE_SIDED)
    side.add_argument("--two-sided", dest="sides", action="store_const", const=TWO_SIDED)
    p.set_defaults(sides=TWO_SIDED)
    _boot_args(p, 0.05)
    p.set_defaults(fn=cmd_stepdown)

    p = sub.add_parser("covcmp", help="two-sample covariance comparison")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    _boot_args(p, 0.05)
    p.set_defaults(fn=cmd_covcmp)

    p = sub.add_parser("rlasso", help="Lasso with a data-driven penalty")
    p.add_argument("--data", required=True, help="CSV whose first column is y")
    p.add_argument("--mode", choices=[HOMOSCEDASTIC, HETEROSCEDASTIC], default=HETEROSCEDASTIC)
    p.add_argument("--refinements", type=int, default=2)
    _boot_args(p, 0.1)
    p.set_defaults(fn=cmd_rlasso)

    p = sub.add_parser("rates", help="tabulate the rate functionals")
    p.add_argument("--B", type=float, default=1.0, help="moment bound B_n")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--p", type=int, nargs="+", required=True)
    p.add_argument("--q", type=float)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_rates)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return a.fn(a)
    except (ConfigError, WrongSchemeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HDBootError, IndexError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # parameter checks in the procedures (alpha range, B_n, ...)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
