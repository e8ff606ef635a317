"""Coordinate-descent Lasso with bootstrap penalty levels and the sup-score test.

The objective is ``(1/n) ||y - X b||^2 + lam * sum_j w_j |b_j|`` with penalty
loadings ``w_j`` (all one unless given). Penalty levels are conditional
quantiles of the simulated score ``2 max_j |n^-1 sum_i x_ij e_i xi_i|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .bootstrap import DEFAULT_B, Scheme, conditional_quantile, sample_weights
from .core import as_data_matrix
from .errors import DegenerateCoordinateError, InvalidDataError, NonConvergenceError
from .io import read_matrix_csv

HOMOSCEDASTIC = "homoscedastic"
HETEROSCEDASTIC = "heteroscedastic"


@dataclass(frozen=True)
class RegressionData:
    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        X = as_data_matrix(self.X, name="design")
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if y.shape[0] != X.shape[0]:
            raise InvalidDataError(f"y has {y.shape[0]} entries, design has {X.shape[0]} rows")
        if not np.all(np.isfinite(y)):
            raise InvalidDataError("y has nonfinite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def centered(self) -> "RegressionData":
        """Demeaned response and design, for models without an intercept."""
        return RegressionData(self.y - self.y.mean(), self.X - self.X.mean(axis=0))

    @classmethod
    def from_csv(cls, path) -> "RegressionData":
        """First column is ``y``, the rest is the design; header row required."""
        header, A = read_matrix_csv(path)
        if A.shape[1] < 2:
            raise InvalidDataError(f"{path}: need y plus at least one covariate column")
        return cls(A[:, 0], A[:, 1:])


@dataclass
class LassoFit:
    beta: np.ndarray
    lam: float
    active_set: np.ndarray
    objective: float
    iterations: int
    loadings: np.ndarray | None = None
    lambda_trace: list = field(default_factory=list)


def soft_threshold(z, t):
    """``sign(z) * max(|z| - t, 0)``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be nonnegative")
    out = np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def lasso_objective(X, y, beta, lam, loadings=None) -> float:
    r = y - X @ beta
    w = 1.0 if loadings is None else loadings
    return float(r @ r / len(y) + lam * np.sum(w * np.abs(beta)))


def kkt_violation(X, y, beta, lam, loadings=None) -> float:
    """Largest violation of the Lasso optimality conditions at ``beta``.

    Active ``j`` need ``(2/n) x_j'r = lam w_j sign(b_j)``; inactive ``j`` need
    ``|(2/n) x_j'r| <= lam w_j``.
    """
    n = len(y)
    w = np.ones(X.shape[1]) if loadings is None else np.asarray(loadings, dtype=np.float64)
    g = 2.0 * X.T @ (y - X @ beta) / n
    act = beta != 0
    v_act = np.abs(g[act] - lam * w[act] * np.sign(beta[act]))
    v_in = np.maximum(np.abs(g[~act]) - lam * w[~act], 0.0)
    return float(max(v_act.max(initial=0.0), v_in.max(initial=0.0)))


def _sweep(Xf, r, beta, idx, col_sq, thr, n):
    """One cyclic pass over ``idx``; updates ``beta`` and ``r`` in place."""
    biggest = 0.0
    for j in idx:
        xj = Xf[:, j]
        bj = beta[j]
        z = xj @ r / n + col_sq[j] * bj
        if z > thr[j]:
            new = (z - thr[j]) / col_sq[j]
        elif z < -thr[j]:
            new = (z + thr[j]) / col_sq[j]
        else:
            new = 0.0
        if new != bj:
            r -= (new - bj) * xj
            beta[j] = new
            biggest = max(biggest, abs(new - bj))
    return biggest


def lasso_fit(d: RegressionData, lam: float, tol: float = 1e-8, max_iter: int = 10_000, *,
              loadings=None, beta0=None) -> LassoFit:
    """Minimize the Lasso objective by cyclic coordinate descent.

    Each coordinate update is ``soft_threshold(z_j, lam w_j / 2) / c_j`` where
    ``c_j = n^-1 sum_i x_ij^2`` and ``z_j`` is ``n^-1 x_j' r_(-j)``. Sweeps
    alternate between the full coordinate set and the current active set; the
    fit is accepted once a full sweep moves no coefficient by ``tol`` or more.
    ``max_iter`` caps the total number of sweeps.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    X, y = d.X, d.y
    n, p = X.shape
    Xf = np.asfortranarray(X)
    col_sq = np.einsum("ij,ij->j", X, X) / n
    w = np.ones(p) if loadings is None else np.asarray(loadings, dtype=np.float64).ravel()
    if w.shape != (p,) or np.any(w < 0):
        raise InvalidDataError("loadings must be p nonnegative values")
    thr = lam * w / 2.0
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)
    live = np.flatnonzero(col_sq > 0)
    beta[col_sq == 0] = 0.0
    r = y - X @ beta
    full = live.tolist()
    wl = w if loadings is not None else None
    it = 0

    def give_up():
        last = _make_fit(X, y, beta, lam, wl, it)
        return NonConvergenceError(f"lasso did not converge in {max_iter} sweeps", last=last)

    while True:
        if it >= max_iter:
            raise give_up()
        it += 1
        if _sweep(Xf, r, beta, full, col_sq, thr, n) < tol:
            break
        # settle the active set before the next full pass
        while True:
            if it >= max_iter:
                raise give_up()
            it += 1
            act = [j for j in full if beta[j] != 0.0]
            if _sweep(Xf, r, beta, act, col_sq, thr, n) < tol:
                break
    return _make_fit(X, y, beta, lam, wl, it)


def _make_fit(X, y, beta, lam, loadings, it) -> LassoFit:
    beta = beta.copy()
    return LassoFit(beta, float(lam), np.flatnonzero(beta), lasso_objective(X, y, beta, lam, loadings),
                    it, loadings)


def _score_quantile(X, e, alpha, B, seed, scheme=Scheme.GAUSSIAN) -> float:
    X = as_data_matrix(X, name="design")
    e = np.asarray(e, dtype=np.float64).ravel()
    if e.shape[0] != X.shape[0]:
        raise InvalidDataError("residual vector does not match design rows")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    B = int(B)
    if B < 1:
        raise InvalidDataError("B must be >= 1")
    seed = _rng.check_seed(seed)
    n = X.shape[0]
    XE = X * e[:, None]

    def run(block):
        k, start, stop = block
        W = sample_weights(scheme, _rng.stream(seed, _rng.TAG_BOOT, k), (stop - start, n))
        return 2.0 * np.abs(W @ XE / n).max(axis=1)

    vals = np.concatenate(_rng.pmap(run, _rng.blocks(B)))
    return conditional_quantile(vals, 1.0 - alpha).value


def penalty_homoscedastic(X, sigma: float, alpha: float = 0.1, B: int = DEFAULT_B, seed: int = 0) -> float:
    """``(1 - alpha)``-quantile of ``2 sigma max_j |n^-1 sum_i x_ij xi_i|``, Gaussian ``xi``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    n = as_data_matrix(X, name="design").shape[0]
    return _score_quantile(X, np.full(n, float(sigma)), alpha, B, seed)


def penalty_heteroscedastic(X, residuals, alpha: float = 0.1, B: int = DEFAULT_B, seed: int = 0) -> float:
    """Multiplier-bootstrap quantile of ``2 max_j |n^-1 sum_i x_ij e_i xi_i|``."""
    e = np.asarray(residuals, dtype=np.float64).ravel()
    if not np.any(e != 0):
        raise DegenerateCoordinateError("residuals are all zero; the score law is degenerate")
    return _score_quantile(X, e, alpha, B, seed)


def rlasso_pipeline(d: RegressionData, alpha: float = 0.1, mode: str = HETEROSCEDASTIC,
                    refinements: int = 2, B: int = DEFAULT_B, seed: int = 0, *,
                    tol: float = 1e-8, max_iter: int = 10_000) -> LassoFit:
    """Lasso with an iterated, data-driven penalty level.

    Columns are put on the scale ``n^-1 sum_i x_ij^2 = 1`` through penalty
    loadings, so ``beta`` is reported for the original columns. The first
    penalty uses the homoscedastic rule with ``sigma`` set to the standard
    deviation of ``y``; each refinement refits and recomputes the penalty from
    the residuals. The returned fit carries ``lambda_trace``.
    """
    if int(refinements) < 1:
        raise ValueError("refinements must be >= 1")
    if mode not in (HOMOSCEDASTIC, HETEROSCEDASTIC):
        raise ValueError(f"mode must be {HOMOSCEDASTIC!r} or {HETEROSCEDASTIC!r}")
    X, y = d.X, d.y
    n = d.n
    scale = np.sqrt(np.einsum("ij,ij->j", X, X) / n)
    scale[scale == 0] = 1.0
    Xs = X / scale
    sd = float(np.std(y, ddof=1))
    if sd == 0:
        raise DegenerateCoordinateError("response is constant")
    lam = penalty_homoscedastic(Xs, sd, alpha, B, seed)
    trace = [lam]
    beta = None
    for _ in range(int(refinements)):
        fit = lasso_fit(d, lam, tol, max_iter, loadings=scale, beta0=beta)
        beta = fit.beta
        resid = y - X @ beta
        if mode == HOMOSCEDASTIC:
            lam = penalty_homoscedastic(Xs, math.sqrt(float(resid @ resid) / n), alpha, B, seed)
        else:
            lam = penalty_heteroscedastic(Xs, resid, alpha, B, seed)
        trace.append(lam)
    fit = lasso_fit(d, lam, tol, max_iter, loadings=scale, beta0=beta)
    fit.lambda_trace = trace
    return fit


@dataclass(frozen=True)
class SupScoreResult:
    statistic: float
    critical_value: float
    reject: bool


def sup_score_test(d: RegressionData, alpha: float = 0.1, B: int = DEFAULT_B, seed: int = 0) -> SupScoreResult:
    """Joint test of ``beta = 0`` with the sup-score statistic.

    The statistic is ``2 max_j |n^-1 sum_i x_ij y_i|`` and the critical value is
    the heteroscedastic penalty computed with ``y`` as residuals.
    """
    stat = 2.0 * float(np.abs(d.X.T @ d.y / d.n).max())
    if not np.any(d.y != 0):
        crit = 0.0
    else:
        crit = penalty_heteroscedastic(d.X, d.y, alpha, B, seed)
    return SupScoreResult(stat, crit, bool(stat > crit))


def prediction_norm(X, delta) -> float:
    """``sqrt(n^-1 sum_i (x_i' delta)^2)``."""
    v = np.asarray(X) @ np.asarray(delta)
    return math.sqrt(float(v @ v) / len(v))
