"""Monte Carlo experiments and their reports.

Each experiment maps a :class:`ScenarioConfig` to an :class:`MCReport`. The
report is a pure function of the config: replication ``r`` of cell ``(n, p)``
draws its data from :func:`~hdboot.simulab.dgp.data_stream` and its bootstrap
from :func:`~hdboot.simulab.dgp.rep_seed`, replications are mapped in order
and aggregated from integer counts or ordered arrays.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import _rng
from ..bootstrap import Scheme, draws, order_index
from ..core import MAX, MAX_ABS, ks_distance, ks_se, scaled_mean
from ..gaussian import RateInputs, anticoncentration_check, gaussian_draws, rate_delta1
from ..inference import InfluencePanel, cov_compare_test, simultaneous_ci, stepdown
from ..io import write_csv, write_json
from ..lasso import RegressionData, prediction_norm, rlasso_pipeline, sup_score_test
from .config import ScenarioConfig
from .dgp import data_stream, make_dgp, rep_seed

U_GRID = np.round(np.arange(1, 100) / 100.0, 2)


@dataclass
class MCReport:
    """Aggregated Monte Carlo output.

    ``cells`` holds one flat dict per table row (per ``(n, p)`` cell, per grid
    point, ...). ``runtime_seconds`` is measured but only serialized on request,
    so that reruns stay byte-identical.
    """

    experiment: str
    estimate: float
    mc_se: float | None
    cells: list
    extra: dict = field(default_factory=dict)
    runtime_seconds: float = 0.0
    config: dict = field(default_factory=dict)

    def to_dict(self, timing: bool = False) -> dict:
        d = {"experiment": self.experiment, "estimate": self.estimate, "mc_se": self.mc_se,
             "cells": self.cells, "extra": self.extra, "config": self.config}
        if timing:
            d["runtime_seconds"] = self.runtime_seconds
        return d

    def write(self, out_dir, timing: bool = False) -> list[Path]:
        """Write ``report.json`` and ``cells.csv`` into ``out_dir``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "report.json", self.to_dict(timing))
        header = list(self.cells[0]) if self.cells else []
        write_csv(out / "cells.csv", header, [[c[h] for h in header] for c in self.cells])
        return [out / "report.json", out / "cells.csv"]


def proportion_se(hits: int, reps: int) -> float:
    est = hits / reps
    return math.sqrt(est * (1.0 - est) / reps)


def _reps(fn, reps: int) -> list:
    return _rng.pmap(fn, range(reps))


def _noise(rng, n, cfg: ScenarioConfig, X=None) -> np.ndarray:
    if cfg.noise_df is None:
        e = rng.standard_normal(n)
    else:
        e = rng.standard_t(cfg.noise_df, n) / math.sqrt(cfg.noise_df / (cfg.noise_df - 2.0))
    if cfg.hetero and X is not None:
        e = e * np.sqrt(0.5 + 0.5 * X[:, 0] ** 2)
    return e


def _ecdf_at(sorted_vals, t) -> np.ndarray:
    return np.searchsorted(sorted_vals, t, side="right") / len(sorted_vals)


def true_maxabs(cfg: ScenarioConfig, n: int, p: int) -> np.ndarray:
    """``max_j |S_n,j|`` over ``cfg.reps`` fresh datasets."""
    dgp = make_dgp(cfg)
    return np.array(_reps(lambda r: float(np.abs(scaled_mean(dgp.sample(data_stream(cfg.seed, n, p, r), n, p))).max()),
                          cfg.reps))


def held_out(cfg: ScenarioConfig, n: int, p: int) -> np.ndarray:
    """The dataset used for one-sample bootstrap comparisons (index ``reps``)."""
    return make_dgp(cfg).sample(data_stream(cfg.seed, n, p, cfg.reps), n, p)


# -- distributional experiments ---------------------------------------------


def experiment_pp(cfg: ScenarioConfig) -> MCReport:
    """P-P table of ``max_j |S_n,j|`` against three approximations.

    For each ``u`` the true ``u``-quantile ``q_u`` is taken from Monte Carlo
    over fresh datasets and every column reports a CDF evaluated at ``q_u``:
    the Monte Carlo law itself, the Gaussian reference ``N(0, Sigma)``, and the
    multiplier and empirical bootstraps of one held-out dataset.
    """
    dgp = make_dgp(cfg)
    p = cfg.p
    mult = cfg.scheme if cfg.scheme.is_multiplier else Scheme.GAUSSIAN
    cells = []
    gaps = {}
    for n in cfg.n_grid or (cfg.n,):
        true = np.sort(true_maxabs(cfg, n, p))
        X = held_out(cfg, n, p)
        bseed = rep_seed(cfg.seed, n, p, cfg.reps)
        gauss = np.sort(gaussian_draws(dgp.covariance(n, p), cfg.B, rep_seed(cfg.seed, n, p, cfg.reps + 1),
                                       reduce=MAX_ABS))
        fm = np.sort(draws(X, mult, cfg.B, bseed, reduce=MAX_ABS).replicates)
        fe = np.sort(draws(X, Scheme.EMPIRICAL, cfg.B, bseed, reduce=MAX_ABS).replicates)
        gap = 0.0
        for u in U_GRID:
            q = true[order_index(u, len(true)) - 1]
            row = {"n": n, "u": float(u), "F_true": float(_ecdf_at(true, q)), "F_gauss": float(_ecdf_at(gauss, q)),
                   "F_mult": float(_ecdf_at(fm, q)), "F_emp": float(_ecdf_at(fe, q))}
            gap = max(gap, abs(row["F_gauss"] - row["F_true"]))
            cells.append(row)
        gaps[n] = gap
    last = max(gaps)
    return MCReport("pp", gaps[last], ks_se(cfg.reps, cfg.B), cells,
                    {"max_gauss_gap": {str(k): v for k, v in gaps.items()}})


def experiment_rate(cfg: ScenarioConfig) -> MCReport:
    """KS distance between the true law of ``max_j |S_n,j|`` and one dataset's bootstrap, per ``n``."""
    p = cfg.p
    ri = RateInputs(B_n=cfg.B_n)
    cells = []
    for n in cfg.n_grid or (cfg.n,):
        true = true_maxabs(cfg, n, p)
        boot = draws(held_out(cfg, n, p), cfg.scheme, cfg.B, rep_seed(cfg.seed, n, p, cfg.reps),
                     reduce=MAX_ABS).replicates
        cells.append({"n": n, "p": p, "ks": ks_distance(true, boot), "se": ks_se(len(true), len(boot)),
                      "delta1": rate_delta1(ri, n, p)})
    slope = None
    if len(cells) > 1:
        x = np.log([c["n"] for c in cells])
        y = np.log([max(c["ks"], 1e-12) for c in cells])
        slope = float(np.polyfit(x, y, 1)[0])
    return MCReport("rate", cells[-1]["ks"], cells[-1]["se"], cells, {"slope": slope, "scheme": cfg.scheme.value})


def experiment_comparison(cfg: ScenarioConfig) -> MCReport:
    """KS distance between Gaussian maxima under ``Sigma`` and ``Sigma + Delta I``.

    The ``Sigma + Delta I`` draws share one stream across ``Delta`` values, and
    the same-law baseline compares two independent ``N(0, Sigma)`` samples.
    """
    S1 = make_dgp(cfg).covariance(cfg.n, cfg.p)
    a, b, c = (_rng.derive_seed(cfg.seed, _rng.TAG_GAUSS, k) for k in range(3))
    base = gaussian_draws(S1, cfg.B, a, reduce=MAX)
    se = ks_se(cfg.B, cfg.B)
    baseline = ks_distance(base, gaussian_draws(S1, cfg.B, c, reduce=MAX))
    cells = []
    eye = np.eye(cfg.p)
    for d in cfg.deltas or (0.0,):
        other = gaussian_draws(S1 + d * eye, cfg.B, b, reduce=MAX)
        cells.append({"delta": float(d), "ks": ks_distance(base, other), "se": se})
    return MCReport("comparison", cells[-1]["ks"], se, cells, {"baseline": baseline, "baseline_se": se})


def experiment_anticoncentration(cfg: ScenarioConfig) -> MCReport:
    """Mass of ``max_j W_j`` in short intervals against the anticoncentration bound, ``B`` draws."""
    S = make_dgp(cfg).covariance(cfg.n, cfg.p)
    grid = cfg.t_grid or tuple(np.linspace(-3.0, math.sqrt(2.0 * math.log(max(cfg.p, 2))) + 3.0, 97))
    rep = anticoncentration_check(S, cfg.delta, grid, cfg.B, _rng.derive_seed(cfg.seed, _rng.TAG_GAUSS, 0))
    worst = max(rep.rows, key=lambda r: r["mass"])
    return MCReport("anticoncentration", worst["mass"], worst["se"], rep.rows,
                    {"bound": worst["bound"], "ok": rep.ok, "violations": sum(r["violation"] for r in rep.rows)})


# -- inference experiments ---------------------------------------------------


def experiment_coverage(cfg: ScenarioConfig) -> MCReport:
    """Fraction of replications whose simultaneous rectangle contains the true mean (zero)."""
    dgp = make_dgp(cfg)
    n, p = cfg.n, cfg.p

    def one(r):
        X = dgp.sample(data_stream(cfg.seed, n, p, r), n, p)
        ci = simultaneous_ci(InfluencePanel.from_sample(X), cfg.alpha, cfg.scheme, cfg.B, rep_seed(cfg.seed, n, p, r))
        return ci.contains(np.zeros(p))

    hits = sum(_reps(one, cfg.reps))
    est = hits / cfg.reps
    se = proportion_se(hits, cfg.reps)
    return MCReport("coverage", est, se, [{"n": n, "p": p, "reps": cfg.reps, "covered": hits,
                                           "coverage": est, "mc_se": se}])


def experiment_fwer(cfg: ScenarioConfig) -> MCReport:
    """Stepdown FWER under the nulls, plus power on ``n_alternatives`` shifted means.

    The first ``n_alternatives`` coordinates have mean ``signal``; the rest are
    true nulls.
    """
    dgp = make_dgp(cfg)
    n, p, k = cfg.n, cfg.p, cfg.n_alternatives
    theta = np.zeros(p)
    theta[:k] = cfg.signal

    def one(r):
        X = dgp.sample(data_stream(cfg.seed, n, p, r), n, p) + theta
        res = stepdown(InfluencePanel.from_sample(X), cfg.alpha, cfg.sides, cfg.scheme, cfg.B,
                       rep_seed(cfg.seed, n, p, r))
        rej = np.asarray(res.rejected, dtype=int)
        return int(np.any(rej >= k)), int(np.sum(rej < k))

    out = _reps(one, cfg.reps)
    false_hits = sum(f for f, _ in out)
    all_hits = sum(1 for _, t in out if t == k) if k else 0
    total_true = sum(t for _, t in out)
    est = false_hits / cfg.reps
    se = proportion_se(false_hits, cfg.reps)
    cell = {"n": n, "p": p, "reps": cfg.reps, "alternatives": k, "false_rejections": false_hits, "fwer": est,
            "mc_se": se}
    extra = {}
    if k:
        cell["all_alternatives_rejected"] = all_hits
        extra = {"power_all": all_hits / cfg.reps, "power_all_se": proportion_se(all_hits, cfg.reps),
                 "power_avg": total_true / (cfg.reps * k)}
    return MCReport("fwer", est, se, [cell], extra)


def experiment_covcmp(cfg: ScenarioConfig) -> MCReport:
    """Rejection rate of the covariance comparison test on two samples from the same law."""
    dgp = make_dgp(cfg)
    n, p = cfg.n, cfg.p
    m = cfg.m or n

    def one(r):
        X = dgp.sample(data_stream(cfg.seed, n, p, r, 0), n, p)
        Y = dgp.sample(data_stream(cfg.seed, n, p, r, 1), m, p)
        return cov_compare_test(X, Y, cfg.alpha, cfg.B, rep_seed(cfg.seed, n, p, r)).reject

    hits = sum(_reps(one, cfg.reps))
    est = hits / cfg.reps
    se = proportion_se(hits, cfg.reps)
    return MCReport("covcmp", est, se, [{"n": n, "m": m, "p": p, "reps": cfg.reps, "rejections": hits,
                                         "rate": est, "mc_se": se}])


def experiment_supscore(cfg: ScenarioConfig) -> MCReport:
    """Rejection rate of the sup-score test when ``y`` is pure noise."""
    dgp = make_dgp(cfg)
    n, p = cfg.n, cfg.p

    def one(r):
        X = dgp.sample(data_stream(cfg.seed, n, p, r, 0), n, p)
        y = _noise(data_stream(cfg.seed, n, p, r, 1), n, cfg, X)
        return sup_score_test(RegressionData(y, X), cfg.alpha, cfg.B, rep_seed(cfg.seed, n, p, r)).reject

    hits = sum(_reps(one, cfg.reps))
    est = hits / cfg.reps
    se = proportion_se(hits, cfg.reps)
    return MCReport("supscore", est, se, [{"n": n, "p": p, "reps": cfg.reps, "rejections": hits,
                                           "rate": est, "mc_se": se}])


def experiment_lasso_rate(cfg: ScenarioConfig) -> MCReport:
    """Prediction error of the data-driven Lasso relative to ``sqrt(s log p / n)``.

    The first ``s`` coefficients equal ``signal`` and the rest are zero. Per
    cell the median ratio over replications is reported; the estimate is the
    largest median divided by the smallest.
    """
    dgp = make_dgp(cfg)
    cells = []
    for n, p in cfg.cells or ((cfg.n, cfg.p),):
        s = min(cfg.s, p)
        beta = np.zeros(p)
        beta[:s] = cfg.signal
        rate = math.sqrt(s * math.log(p) / n)

        def one(r):
            X = dgp.sample(data_stream(cfg.seed, n, p, r, 0), n, p)
            y = X @ beta + _noise(data_stream(cfg.seed, n, p, r, 1), n, cfg, X)
            fit = rlasso_pipeline(RegressionData(y, X), cfg.alpha, cfg.mode, cfg.refinements, cfg.B,
                                  rep_seed(cfg.seed, n, p, r))
            support = set(np.flatnonzero(fit.beta).tolist())
            return (prediction_norm(X, fit.beta - beta), len(support) == 0,
                    set(range(s)) <= support, len(support))

        out = _reps(one, cfg.reps)
        errs = np.array([o[0] for o in out])
        med = float(np.median(errs))
        cells.append({"n": n, "p": p, "s": s, "reps": cfg.reps, "median_error": med,
                      "median_ratio": med / rate if rate > 0 else None,
                      "zero_fit_rate": sum(o[1] for o in out) / cfg.reps,
                      "support_recovery_rate": sum(o[2] for o in out) / cfg.reps,
                      "mean_selected": float(np.mean([o[3] for o in out]))})
    ratios = [c["median_ratio"] for c in cells if c["median_ratio"] is not None]
    band = max(ratios) / min(ratios) if ratios and min(ratios) > 0 else None
    return MCReport("lasso-rate", band, None, cells, {"band": band})


EXPERIMENTS = {
    "pp": experiment_pp,
    "coverage": experiment_coverage,
    "fwer": experiment_fwer,
    "rate": experiment_rate,
    "covcmp": experiment_covcmp,
    "supscore": experiment_supscore,
    "lasso-rate": experiment_lasso_rate,
    "comparison": experiment_comparison,
    "anticoncentration": experiment_anticoncentration,
}


def run(cfg: ScenarioConfig) -> MCReport:
    """Run the experiment named in ``cfg`` and attach config and timing."""
    t0 = time.perf_counter()
    rep = EXPERIMENTS[cfg.experiment](cfg)
    rep.runtime_seconds = time.perf_counter() - t0
    rep.config = cfg.to_dict()
    return rep
