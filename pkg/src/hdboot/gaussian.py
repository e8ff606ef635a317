"""Gaussian reference laws, bound functionals and anticoncentration checks."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .core import MAX, MAX_ABS, PSD_RTOL, as_cov_matrix, check_scales
from .errors import IndefiniteMatrixError, InvalidDataError


@dataclass(frozen=True)
class PSDFactor:
    """Root ``L`` (``p x rank``) with ``L @ L.T`` equal to the input covariance."""

    factor: np.ndarray
    rank: int
    pivots: tuple = ()

    @property
    def p(self) -> int:
        return self.factor.shape[0]


def psd_factor(S) -> PSDFactor:
    """Pivoted Cholesky root of a PSD matrix, truncated at tiny pivots.

    Pivots at or below ``1e-10 * max(diag)`` end the factorization, so singular
    matrices get a root with ``rank < p`` and no jitter is added.

    Raises
    ------
    IndefiniteMatrixError
        If a remaining pivot is negative beyond the tolerance or the truncated
        remainder is not negligible. The offending value is on ``.pivot``.
    """
    A = as_cov_matrix(S, check_psd=False)
    p = A.shape[0]
    d = np.diag(A).copy()
    dmax = max(float(d.max(initial=0.0)), 0.0)
    tol = PSD_RTOL * dmax
    L = np.zeros((p, p))
    used = np.zeros(p, dtype=bool)
    pivots = []
    for k in range(p):
        cand = np.where(used, -np.inf, d)
        j = int(np.argmax(cand))
        if cand[j] <= tol:
            break
        col = A[:, j] - L[:, :k] @ L[j, :k]
        col /= math.sqrt(d[j])
        col[used] = 0.0
        col[j] = math.sqrt(d[j])
        L[:, k] = col
        used[j] = True
        pivots.append(j)
        d -= col * col
        d[j] = 0.0
    r = len(pivots)
    L = L[:, :r]

    rest = ~used
    if rest.any():
        worst = float(d[rest].min())
        if worst < -tol or (dmax == 0.0 and worst < 0.0):
            raise IndefiniteMatrixError(f"matrix is indefinite: pivot {worst:.3e}", pivot=worst)
        resid = A[np.ix_(rest, rest)] - L[rest] @ L[rest].T
        if np.max(np.abs(resid)) > max(10.0 * tol, 1e-12 * max(dmax, 1.0)):
            lam = float(np.linalg.eigvalsh((resid + resid.T) / 2.0)[0])
            raise IndefiniteMatrixError(f"matrix is indefinite: residual pivot {lam:.3e}", pivot=lam)
    return PSDFactor(L, r, tuple(pivots))


def equicorrelated(p: int, rho: float, var: float = 1.0) -> np.ndarray:
    """``var * ((1 - rho) I + rho 11^T)``."""
    S = np.full((p, p), rho * var)
    np.fill_diagonal(S, var)
    return S


def gaussian_draws(S, B: int, seed: int, *, reduce: str | None = None,
                   threads: int | None = None) -> np.ndarray:
    """``B`` i.i.d. draws of ``N(0, S)`` (rows), optionally reduced to max/max-abs.

    ``S`` may be a covariance matrix or a precomputed :class:`PSDFactor`.
    Block ``k`` of 256 draws uses the stream ``(seed, 2, k)``.
    """
    F = S if isinstance(S, PSDFactor) else psd_factor(S)
    B = int(B)
    if B < 1:
        raise InvalidDataError("need B >= 1 Gaussian draws")
    if reduce not in (None, MAX, MAX_ABS):
        raise ValueError(f"bad reduce mode {reduce!r}")
    seed = _rng.check_seed(seed)
    Lt = F.factor.T

    def run(block):
        k, start, stop = block
        m = stop - start
        if F.rank == 0:
            W = np.zeros((m, F.p))
        else:
            W = _rng.stream(seed, _rng.TAG_GAUSS, k).standard_normal((m, F.rank)) @ Lt
        if reduce == MAX:
            return W.max(axis=1)
        if reduce == MAX_ABS:
            return np.abs(W).max(axis=1)
        return W

    return np.concatenate(_rng.pmap(run, _rng.blocks(B), threads), axis=0)


def nazarov_bound(p, sigma_lo: float, delta: float) -> float:
    """Anticoncentration bound ``delta * (sqrt(2 log p) + 2) / sigma_lo``.

    Caps the probability that a Gaussian maximum with coordinate variances at
    least ``sigma_lo**2`` lands in any interval of length ``delta``.
    """
    if p < 1 or sigma_lo <= 0 or delta < 0:
        raise ValueError("nazarov_bound needs p >= 1, sigma_lo > 0, delta >= 0")
    return delta * (math.sqrt(2.0 * math.log(p)) + 2.0) / sigma_lo


def comparison_scale(S1, S2, p: float | None = None) -> float:
    """``sqrt(Delta) * log p`` with ``Delta`` the max entrywise gap of two covariances.

    This is the shape of the Gaussian-to-Gaussian rectangle distance bound; its
    constant is not known and is left out. ``p`` defaults to the dimension.
    """
    A = np.asarray(S1, dtype=np.float64)
    Bm = np.asarray(S2, dtype=np.float64)
    if A.shape != Bm.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidDataError(f"covariance shapes differ: {A.shape} vs {Bm.shape}")
    dim = A.shape[0] if p is None else p
    if dim <= 1:
        raise ValueError("comparison_scale needs p > 1")
    delta = float(np.max(np.abs(A - Bm))) if A.size else 0.0
    return math.sqrt(delta) * math.log(dim)


@dataclass(frozen=True)
class RateInputs:
    """Moment constants of the rate functionals."""

    B_n: float = 1.0
    q: float | None = None
    sigma_lo: float = 1.0
    sigma_hi: float = 1.0

    def __post_init__(self):
        if not self.B_n >= 1:
            raise ValueError("B_n must be >= 1")
        if not 0 < self.sigma_lo <= self.sigma_hi:
            raise ValueError("need 0 < sigma_lo <= sigma_hi")
        if self.q is not None and not self.q > 2:
            raise ValueError("q must exceed 2")


def _check_np(n, p):
    if n < 2 or p < 2:
        raise ValueError("rate functionals need n >= 2 and p >= 2")


def rate_delta1(r: RateInputs, n, p) -> float:
    """``(B_n^2 log^5(pn) / n) ** (1/4)``, natural log."""
    _check_np(n, p)
    return (r.B_n ** 2 * math.log(p * n) ** 5 / n) ** 0.25


def rate_delta2(r: RateInputs, n, p) -> float:
    """``sqrt(B_n^2 log(pn)^(3 - 2/q) / n^(1 - 2/q))`` for the polynomial-moment case."""
    _check_np(n, p)
    if r.q is None or not r.q > 2:
        raise ValueError("rate_delta2 needs q > 2")
    q = r.q
    return math.sqrt(r.B_n ** 2 * math.log(p * n) ** (3.0 - 2.0 / q) / n ** (1.0 - 2.0 / q))


@dataclass
class AnticoncentrationReport:
    """Per-interval masses of the Gaussian max next to the anticoncentration bound."""

    p: int
    delta: float
    sigma_lo: float
    B: int
    rows: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(r["violation"] for r in self.rows)

    @property
    def max_mass(self) -> float:
        return max(r["mass"] for r in self.rows)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "mass", "bound", "se", "violation"])
            for r in self.rows:
                w.writerow([repr(r["t"]), repr(r["mass"]), repr(r["bound"]), repr(r["se"]), int(r["violation"])])


def anticoncentration_check(S, delta: float, grid, B: int, seed: int, *, n_se: float = 4.0,
                            threads: int | None = None) -> AnticoncentrationReport:
    """Monte Carlo mass of ``max_j W_j`` in each ``(t, t + delta]`` for ``W ~ N(0, S)``.

    A grid point is flagged when its mass exceeds the bound by more than
    ``n_se`` binomial standard errors.
    """
    A = as_cov_matrix(S)
    sigma_lo = math.sqrt(float(check_scales(np.diag(A), what="coordinate").min()))
    p = A.shape[0]
    wmax = np.sort(gaussian_draws(A, B, seed, reduce=MAX, threads=threads))
    bound = nazarov_bound(p, sigma_lo, delta)
    rep = AnticoncentrationReport(p, float(delta), sigma_lo, int(B))
    for t in np.asarray(grid, dtype=np.float64).ravel():
        cnt = np.searchsorted(wmax, t + delta, side="right") - np.searchsorted(wmax, t, side="right")
        mass = cnt / B
        se = math.sqrt(mass * (1.0 - mass) / B)
        rep.rows.append({"t": float(t), "mass": float(mass), "bound": bound, "se": se,
                         "violation": bool(mass > bound + n_se * se)})
    return rep
