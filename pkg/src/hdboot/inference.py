"""Inference procedures built on the bootstrap of estimated influence functions.

Every procedure takes an :class:`InfluencePanel`: the ``n x p`` matrix of
estimated influence values ``psi_i`` and the estimate ``theta_hat``, so that
``theta_hat - theta`` is approximately ``n^-1 sum_i psi_i``. Studentization
always uses the ``1/n`` column variances of ``psi``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .bootstrap import (DEFAULT_B, BootstrapDraws, QuantileEstimate, Scheme, conditional_quantile,
                        order_index, sample_weights, studentized_draws)
from .core import MAX, MAX_ABS, as_data_matrix, check_scales, column_variances
from .errors import DegenerateCoordinateError, InvalidDataError
from .io import read_matrix_csv, write_csv

ONE_SIDED = "one-sided"
TWO_SIDED = "two-sided"


def _check_alpha(alpha, name="alpha"):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {alpha}")


@dataclass(frozen=True)
class InfluencePanel:
    psi_hat: np.ndarray
    theta_hat: np.ndarray

    def __post_init__(self):
        psi = as_data_matrix(self.psi_hat, name="psi_hat")
        theta = np.asarray(self.theta_hat, dtype=np.float64).ravel()
        if theta.shape[0] != psi.shape[1]:
            raise InvalidDataError(f"theta_hat has {theta.shape[0]} entries, panel has {psi.shape[1]} columns")
        if not np.all(np.isfinite(theta)):
            raise InvalidDataError("theta_hat has nonfinite entries")
        object.__setattr__(self, "psi_hat", psi)
        object.__setattr__(self, "theta_hat", theta)

    @property
    def n(self) -> int:
        return self.psi_hat.shape[0]

    @property
    def p(self) -> int:
        return self.psi_hat.shape[1]

    @property
    def sigma_diag(self) -> np.ndarray:
        """Column variances of ``psi_hat`` (``1/n`` normalization)."""
        return column_variances(self.psi_hat)

    def std_errors(self) -> np.ndarray:
        """``sqrt(Sigma_jj / n)``; raises if any column is constant."""
        d = check_scales(self.sigma_diag, what="influence column")
        return np.sqrt(d / self.n)

    def tstats(self) -> np.ndarray:
        return self.theta_hat / self.std_errors()

    def subset(self, idx) -> "InfluencePanel":
        idx = np.asarray(idx, dtype=int)
        return InfluencePanel(self.psi_hat[:, idx], self.theta_hat[idx])

    def doubled(self) -> "InfluencePanel":
        """Panel for ``[theta, -theta]``; splits two-sided nulls into one-sided pairs."""
        return InfluencePanel(np.hstack([self.psi_hat, -self.psi_hat]),
                              np.concatenate([self.theta_hat, -self.theta_hat]))

    @classmethod
    def from_sample(cls, X) -> "InfluencePanel":
        """Panel of the sample mean: ``psi_i = X_i`` and ``theta_hat = Xbar``."""
        A = as_data_matrix(X)
        return cls(A, A.mean(axis=0))

    @classmethod
    def from_csv(cls, path, theta_path=None) -> "InfluencePanel":
        """Rows of ``path`` are ``psi_i``. Without ``theta_path`` the column means are used."""
        _, psi = read_matrix_csv(path)
        if theta_path is None:
            return cls(psi, psi.mean(axis=0))
        _, th = read_matrix_csv(theta_path)
        return cls(psi, th[0])


def influence_bootstrap(panel: InfluencePanel, scheme=Scheme.GAUSSIAN, B: int = DEFAULT_B,
                        seed: int = 0, *, reduce: str | None = None) -> BootstrapDraws:
    """Studentized bootstrap draws of ``n^-1/2 sum_i (psi_i - psibar)``."""
    return studentized_draws(panel.psi_hat, scheme, B, seed, reduce=reduce)


@dataclass(frozen=True)
class SimultaneousCI:
    lower: np.ndarray
    upper: np.ndarray
    level: float
    quantile_used: QuantileEstimate | None = None

    def contains(self, theta) -> bool:
        t = np.asarray(theta, dtype=np.float64)
        return bool(np.all((self.lower <= t) & (t <= self.upper)))

    def interval(self, j: int) -> tuple[float, float]:
        return float(self.lower[j]), float(self.upper[j])


def rectangle_from_quantile(theta_hat, sigma_diag, q: float, n: int, level: float = float("nan"),
                            quantile_used: QuantileEstimate | None = None) -> SimultaneousCI:
    """``theta_hat_j +/- Sigma_jj^(1/2) q / sqrt(n)`` for every ``j``."""
    th = np.asarray(theta_hat, dtype=np.float64)
    half = np.sqrt(np.asarray(sigma_diag, dtype=np.float64)) * q / math.sqrt(n)
    return SimultaneousCI(th - half, th + half, level, quantile_used)


def simultaneous_ci(panel: InfluencePanel, alpha: float = 0.05, scheme=Scheme.GAUSSIAN,
                    B: int = DEFAULT_B, seed: int = 0) -> SimultaneousCI:
    """Confidence rectangle with simultaneous level ``1 - alpha``.

    The critical value is the ``(1 - alpha)`` bootstrap quantile of the
    max-abs studentized draw.
    """
    _check_alpha(alpha)
    q = conditional_quantile(influence_bootstrap(panel, scheme, B, seed, reduce=MAX_ABS), 1.0 - alpha)
    return rectangle_from_quantile(panel.theta_hat, panel.sigma_diag, q.value, panel.n, 1.0 - alpha, q)


def post_selection_ci(panel: InfluencePanel, alpha: float, j_hat: int, scheme=Scheme.GAUSSIAN,
                      B: int = DEFAULT_B, seed: int = 0) -> tuple[float, float]:
    """Interval for ``theta[j_hat]`` valid however ``j_hat`` was chosen (0-based)."""
    j = int(j_hat)
    if not 0 <= j < panel.p:
        raise IndexError(f"j_hat={j_hat} outside 0..{panel.p - 1}")
    return simultaneous_ci(panel, alpha, scheme, B, seed).interval(j)


def ate_influence(D, Y, gamma: float) -> InfluencePanel:
    """Panel of inverse-propensity ATE estimates in a randomized trial.

    ``psi_ij = D_i Y_ij / gamma - (1 - D_i) Y_ij / (1 - gamma)``.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("treatment probability gamma must lie in (0, 1)")
    Ym = as_data_matrix(Y, name="Y")
    d = np.asarray(D, dtype=np.float64).ravel()
    if d.shape[0] != Ym.shape[0]:
        raise InvalidDataError("treatment vector length does not match Y")
    if not np.all((d == 0) | (d == 1)):
        raise InvalidDataError("treatment indicators must be 0 or 1")
    psi = d[:, None] * Ym / gamma - (1.0 - d)[:, None] * Ym / (1.0 - gamma)
    return InfluencePanel(psi, psi.mean(axis=0))


# -- stepdown ---------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    active: np.ndarray
    critical_value: float
    rejections: np.ndarray


@dataclass
class StepdownResult:
    rejected: np.ndarray
    steps: list
    adjusted_p: np.ndarray
    statistics: np.ndarray
    B: int
    warning: bool = False
    step_of: np.ndarray = field(default=None)

    def to_csv(self, path) -> None:
        rej = np.zeros(len(self.statistics), dtype=bool)
        rej[self.rejected] = True
        rows = [(j, self.statistics[j], self.adjusted_p[j], rej[j], int(self.step_of[j]) if rej[j] else "")
                for j in range(len(self.statistics))]
        write_csv(path, ["index", "statistic", "adjusted_p", "rejected", "step"], rows)


def stepdown_rule(t, critical_value) -> tuple[np.ndarray, list]:
    """Run the stepdown loop with a caller-supplied critical value function.

    ``critical_value(active)`` returns the cutoff for the index array
    ``active``. At each step every active hypothesis with statistic strictly
    above the cutoff is rejected; the loop stops at the first step that
    rejects nothing. Returns the rejected indices and the step records.
    """
    t = np.asarray(t, dtype=np.float64)
    active = np.arange(t.size)
    steps = []
    rejected = []
    while active.size:
        c = float(critical_value(active))
        rej = active[t[active] > c]
        steps.append(StepRecord(active.copy(), c, rej))
        if rej.size == 0:
            break
        rejected.extend(rej.tolist())
        active = active[t[active] <= c]
    return np.array(sorted(rejected), dtype=int), steps


def adjusted_pvalues(t, draws) -> np.ndarray:
    """Stepdown-adjusted p-values from one shared draw matrix.

    Hypotheses are ordered by statistic. For each one, count replicates whose
    running max over the hypotheses ranked no higher reaches its statistic,
    then take the running max of those counts from the most significant down.
    The p-value is ``(1 + count) / (B + 1)``.
    """
    t = np.asarray(t, dtype=np.float64)
    Dm = np.asarray(draws, dtype=np.float64)
    B = Dm.shape[0]
    order = np.argsort(t, kind="stable")
    running = np.maximum.accumulate(Dm[:, order], axis=1)
    count = (running >= t[order]).sum(axis=0)
    top_down = np.maximum.accumulate(count[::-1])
    pv = np.empty(t.size)
    pv[order[::-1]] = (1.0 + top_down) / (B + 1.0)
    return pv


def stepdown_from_draws(t, draws, alpha: float) -> StepdownResult:
    """Stepdown over one-sided statistics ``t`` with bootstrap draws ``(B, p)``.

    ``c_w`` is the ``(1 - alpha)`` quantile of ``max_{j in w}`` of the draws,
    computed by masking the same draw matrix for every subset.
    """
    _check_alpha(alpha)
    t = np.asarray(t, dtype=np.float64).ravel()
    Dm = np.asarray(draws, dtype=np.float64)
    if Dm.ndim != 2 or Dm.shape[1] != t.size:
        raise InvalidDataError("draws must be a (B, p) matrix matching the statistics")
    B = Dm.shape[0]

    def crit(active):
        return conditional_quantile(Dm[:, active].max(axis=1), 1.0 - alpha).value

    rejected, steps = stepdown_rule(t, crit)
    step_of = np.zeros(t.size, dtype=int)
    for k, s in enumerate(steps, start=1):
        step_of[s.rejections] = k
    top = Dm.max(axis=1)
    warn = order_index(1.0 - alpha, B) == B or bool(np.all(top == top[0]))
    if warn:
        warnings.warn("bootstrap draws are too few to resolve the requested level", RuntimeWarning,
                      stacklevel=2)
    return StepdownResult(rejected, steps, adjusted_pvalues(t, Dm), t, B, warn, step_of)


def stepdown(panel: InfluencePanel, alpha: float = 0.05, sides: str = TWO_SIDED, scheme=Scheme.GAUSSIAN,
             B: int = DEFAULT_B, seed: int = 0) -> StepdownResult:
    """Stepdown multiple testing of ``H_j: theta_j <= 0`` (or ``= 0``) with FWER control.

    Two-sided nulls are split into ``theta_j <= 0`` and ``-theta_j <= 0`` and
    tested jointly; ``H_j`` is rejected when either half is, and its adjusted
    p-value is the smaller of the two.
    """
    if sides not in (ONE_SIDED, TWO_SIDED):
        raise ValueError(f"sides must be {ONE_SIDED!r} or {TWO_SIDED!r}")
    work = panel.doubled() if sides == TWO_SIDED else panel
    t = work.tstats()
    D = influence_bootstrap(work, scheme, B, seed).replicates
    res = stepdown_from_draws(t, D, alpha)
    if sides == ONE_SIDED:
        return res
    p = panel.p
    fold = np.minimum
    adj = fold(res.adjusted_p[:p], res.adjusted_p[p:])
    s1, s2 = res.step_of[:p], res.step_of[p:]
    step_of = np.where((s1 > 0) & (s2 > 0), np.minimum(s1, s2), np.maximum(s1, s2))
    steps = [StepRecord(np.unique(s.active % p), s.critical_value, np.unique(s.rejections % p))
             for s in res.steps]
    return StepdownResult(np.unique(res.rejected % p), steps, adj, t[:p], res.B, res.warning, step_of)


# -- max effects and best policies ------------------------------------------


@dataclass(frozen=True)
class MaxEffectBound:
    value: float
    k_hat: float
    indices: np.ndarray

    @property
    def ci(self) -> tuple[float, float]:
        """One-sided interval ``[value, inf)``."""
        return self.value, math.inf


def precision_corrected(theta_hat, se, k: float) -> float:
    """``max_j (theta_hat_j - k * se_j)`` with ``se_j = Sigma_jj^(1/2) / sqrt(n)``."""
    return float(np.max(np.asarray(theta_hat) - k * np.asarray(se)))


def max_effect_lower(panel: InfluencePanel, alpha: float = 0.05, scheme=Scheme.GAUSSIAN,
                     B: int = DEFAULT_B, seed: int = 0, *, preselect_beta: float | None = None) -> MaxEffectBound:
    """Precision-corrected estimate of ``max_j theta_j``.

    ``k_hat`` is the ``(1 - alpha)`` bootstrap quantile of the one-sided
    (max, not max-abs) studentized draw. With ``preselect_beta`` the max is
    taken only over :func:`best_policy_set` at level ``beta``; this refinement
    is off by default.
    """
    _check_alpha(alpha)
    idx = np.arange(panel.p)
    work = panel
    if preselect_beta is not None:
        idx = best_policy_set(panel, preselect_beta, scheme, B, seed)
        work = panel.subset(idx)
    k = conditional_quantile(influence_bootstrap(work, scheme, B, seed, reduce=MAX), 1.0 - alpha).value
    return MaxEffectBound(precision_corrected(work.theta_hat, work.std_errors(), k), k, idx)


def best_set_from_quantile(theta_hat, se, q: float) -> np.ndarray:
    """Indices whose upper limit reaches the largest lower limit."""
    th = np.asarray(theta_hat, dtype=np.float64)
    s = np.asarray(se, dtype=np.float64)
    return np.flatnonzero(th + q * s >= np.max(th - q * s))


def best_policy_set(panel: InfluencePanel, beta: float = 0.05, scheme=Scheme.GAUSSIAN,
                    B: int = DEFAULT_B, seed: int = 0) -> np.ndarray:
    """Estimated set of best policies; covers the true argmax set w.p. about ``1 - beta``."""
    _check_alpha(beta, "beta")
    q = conditional_quantile(influence_bootstrap(panel, scheme, B, seed, reduce=MAX_ABS), 1.0 - beta).value
    return best_set_from_quantile(panel.theta_hat, panel.std_errors(), q)


# -- covariance comparison ----------------------------------------------------


@dataclass(frozen=True)
class CovCompareResult:
    statistic: float
    critical_value: float
    reject: bool
    pairs_tested: int
    argmax_pair: tuple = (0, 0)


def _pair_moments(A, iu):
    C = A - A.mean(axis=0)
    P = C[:, iu[0]] * C[:, iu[1]]
    s = P.mean(axis=0)
    V = P - s
    return s, V, np.einsum("ij,ij->j", V, V) / A.shape[0]


def cov_compare_test(X, Y, alpha: float = 0.05, B: int = DEFAULT_B, seed: int = 0) -> CovCompareResult:
    """Two-sample max-type test of equal covariance matrices.

    ``t_jk = (s1_jk - s2_jk) / sqrt(v1_jk / n + v2_jk / m)`` over ``j <= k``,
    where ``v`` is the variance of the centred cross-products. The critical
    value is the ``(1 - alpha)`` quantile of the Gaussian-multiplier analogue
    built from one weight vector of length ``n + m`` per replicate.
    """
    _check_alpha(alpha)
    A = as_data_matrix(X, name="X")
    Bm = as_data_matrix(Y, name="Y")
    if A.shape[1] != Bm.shape[1]:
        raise InvalidDataError(f"samples have {A.shape[1]} and {Bm.shape[1]} columns")
    n, m, p = A.shape[0], Bm.shape[0], A.shape[1]
    if max(n, m) / min(n, m) > 4:
        warnings.warn(f"sample sizes {n} and {m} are far apart; the size guarantee assumes comparable sizes",
                      RuntimeWarning, stacklevel=2)
    iu = np.triu_indices(p)
    s1, V1, v1 = _pair_moments(A, iu)
    s2, V2, v2 = _pair_moments(Bm, iu)
    den2 = v1 / n + v2 / m
    bad = np.flatnonzero(~(den2 > 0))
    if bad.size:
        j, k = int(iu[0][bad[0]]), int(iu[1][bad[0]])
        raise DegenerateCoordinateError(f"pair ({j}, {k}) has zero variance in both samples", index=(j, k))
    den = np.sqrt(den2)
    tvals = np.abs(s1 - s2) / den
    a = int(np.argmax(tvals))
    stat = float(tvals[a])

    B = int(B)
    seed = _rng.check_seed(seed)
    V1s = V1 / n
    V2s = V2 / m

    def run(block):
        k, start, stop = block
        W = sample_weights(Scheme.GAUSSIAN, _rng.stream(seed, _rng.TAG_BOOT, k), (stop - start, n + m))
        T = (W[:, :n] @ V1s - W[:, n:] @ V2s) / den
        return np.abs(T).max(axis=1)

    tmax = np.concatenate(_rng.pmap(run, _rng.blocks(B)))
    crit = conditional_quantile(tmax, 1.0 - alpha).value
    return CovCompareResult(stat, crit, bool(stat > crit), len(iu[0]), (int(iu[0][a]), int(iu[1][a])))
