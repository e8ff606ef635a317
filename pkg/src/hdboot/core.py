"""Data validation, moments, studentization and max-statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCoordinateError, IndefiniteMatrixError, InvalidDataError

SYM_RTOL = 1e-12
PSD_RTOL = 1e-10

MAX = "max"
MAX_ABS = "max-abs"


def as_data_matrix(X, *, min_rows: int = 2, name: str = "X") -> np.ndarray:
    """Validate an ``n x p`` observation matrix and return it as float64.

    A 1-D input is read as a single column. Rows are observations. Entries must
    be finite and there must be at least ``min_rows`` rows.
    """
    A = np.asarray(X, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise InvalidDataError(f"{name} must be 2-D, got shape {A.shape}")
    n, p = A.shape
    if n < min_rows:
        raise InvalidDataError(f"{name} needs at least {min_rows} rows, got {n}")
    if p < 1:
        raise InvalidDataError(f"{name} has no columns")
    if not np.all(np.isfinite(A)):
        bad = np.argwhere(~np.isfinite(A))[0]
        raise InvalidDataError(f"{name} has a nonfinite entry at row {bad[0]}, column {bad[1]}")
    return A


def as_cov_matrix(S, *, check_psd: bool = True) -> np.ndarray:
    """Validate a symmetric PSD ``p x p`` matrix.

    Symmetry is checked to ``1e-12`` relative to the largest absolute entry and
    PSD-ness as ``min eigenvalue >= -1e-10 * max diagonal``. Nothing is clipped.
    """
    A = np.asarray(S, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidDataError(f"covariance must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidDataError("covariance has nonfinite entries")
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if np.max(np.abs(A - A.T), initial=0.0) > SYM_RTOL * max(scale, 1.0):
        raise InvalidDataError("covariance is not symmetric")
    if check_psd and A.size:
        dmax = max(float(np.max(np.diag(A))), 0.0)
        lam = float(np.linalg.eigvalsh(A)[0])
        if lam < -PSD_RTOL * dmax or (dmax == 0.0 and lam < 0.0):
            raise IndefiniteMatrixError(f"covariance is not PSD: smallest eigenvalue {lam:.3e}", pivot=lam)
    return A


@dataclass(frozen=True)
class Rectangle:
    """Closed rectangle ``prod_j [lower_j, upper_j]``; infinite ends allowed."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidDataError("rectangle bounds must be vectors of equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise InvalidDataError("rectangle needs lower <= upper in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def max_box(cls, p: int, t: float, absolute: bool = False) -> "Rectangle":
        """``{x : max_j x_j <= t}`` or, with ``absolute``, ``{x : max_j |x_j| <= t}``."""
        hi = np.full(p, float(t))
        lo = -hi if absolute else np.full(p, -np.inf)
        return cls(lo, hi)

    def contains(self, points) -> np.ndarray:
        P = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.all((P >= self.lower) & (P <= self.upper), axis=1)

    def mass(self, points) -> float:
        """Fraction of ``points`` (rows) inside the rectangle."""
        return float(np.mean(self.contains(points)))


def scaled_mean(X) -> np.ndarray:
    """``n**-0.5`` times the column sums of ``X``."""
    A = as_data_matrix(X)
    return A.sum(axis=0) / np.sqrt(A.shape[0])


def empirical_covariance(X) -> np.ndarray:
    """Centered second-moment matrix with ``1/n`` normalization."""
    A = as_data_matrix(X)
    C = A - A.mean(axis=0)
    S = C.T @ C / A.shape[0]
    return (S + S.T) / 2.0


def column_variances(X) -> np.ndarray:
    """Diagonal of :func:`empirical_covariance` without forming the full matrix."""
    A = as_data_matrix(X)
    C = A - A.mean(axis=0)
    return np.einsum("ij,ij->j", C, C) / A.shape[0]


def check_scales(diag, *, what: str = "coordinate") -> np.ndarray:
    d = np.asarray(diag, dtype=np.float64).ravel()
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        j = int(bad[0])
        raise DegenerateCoordinateError(f"{what} {j} has nonpositive variance {d[j]!r}", index=j)
    return d


def studentize(v, diag) -> np.ndarray:
    """Divide each coordinate of ``v`` by ``sqrt(diag_j)``.

    ``v`` may also be a stack of vectors with the coordinate on the last axis.
    """
    d = check_scales(diag)
    x = np.asarray(v, dtype=np.float64)
    if x.shape[-1] != d.size:
        raise InvalidDataError(f"length mismatch: {x.shape[-1]} values, {d.size} variances")
    return x / np.sqrt(d)


def max_stat(v, mode: str = MAX_ABS):
    """Max (``mode="max"``) or max-abs (``mode="max-abs"``) over the last axis."""
    x = np.asarray(v, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise InvalidDataError("max_stat of an empty vector")
    if mode == MAX:
        out = x.max(axis=-1)
    elif mode == MAX_ABS:
        out = np.abs(x).max(axis=-1)
    else:
        raise ValueError(f"unknown max-statistic mode {mode!r}")
    return float(out) if out.ndim == 0 else out


def ks_distance(a, b) -> float:
    """Sup-distance between the right-continuous ECDFs of two samples.

    Evaluated at the pooled sample points, which attains the exact supremum for
    step functions.
    """
    x = np.sort(np.asarray(a, dtype=np.float64).ravel())
    y = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if x.size == 0 or y.size == 0:
        raise InvalidDataError("ks_distance needs two nonempty samples")
    if np.isnan(x).any() or np.isnan(y).any():
        raise InvalidDataError("ks_distance got NaN values")
    pts = np.concatenate([x, y])
    fa = np.searchsorted(x, pts, side="right") / x.size
    fb = np.searchsorted(y, pts, side="right") / y.size
    return float(np.max(np.abs(fa - fb)))


def ks_se(na: int, nb: int) -> float:
    """Conservative Monte Carlo standard error of an ECDF gap at a fixed point.

    ``sqrt(F(1-F)(1/na + 1/nb)) <= 0.5 * sqrt(1/na + 1/nb)``; used as the slack
    unit when comparing KS distances across Monte Carlo cells.
    """
    return 0.5 * float(np.sqrt(1.0 / na + 1.0 / nb))
