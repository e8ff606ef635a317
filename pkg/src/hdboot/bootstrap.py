"""Multiplier and empirical bootstrap replicates of the scaled sample mean.

For data rows ``X_1..X_n`` with mean ``Xbar`` a replicate is

* multiplier: ``n**-0.5 * sum_i xi_i (X_i - Xbar)`` with i.i.d. weights ``xi_i``
  of mean 0 and variance 1 (Gaussian, Rademacher or Mammen's two-point law);
* empirical: ``n**-0.5 * sum_i (X*_i - Xbar)`` where ``X*_1..X*_n`` are drawn
  from the rows with replacement. The resample mean is *not* re-centred.

Replicates are produced in blocks of :data:`hdboot._rng.BLOCK_SIZE`; block
``k`` draws from the stream ``SeedSequence(seed, spawn_key=(1, k))``, so the
output depends only on ``(data, scheme, B, seed)`` and never on threading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _rng
from .core import MAX, MAX_ABS, as_data_matrix, check_scales, column_variances
from .errors import InvalidDataError, WrongSchemeError

DEFAULT_B = 999

_SQRT5 = math.sqrt(5.0)
MAMMEN_LOW = (1.0 - _SQRT5) / 2.0
MAMMEN_HIGH = (1.0 + _SQRT5) / 2.0
MAMMEN_P_LOW = (1.0 + _SQRT5) / (2.0 * _SQRT5)


class Scheme(str, Enum):
    GAUSSIAN = "gaussian-multiplier"
    EMPIRICAL = "empirical"
    MAMMEN = "mammen-multiplier"
    RADEMACHER = "rademacher-multiplier"

    @property
    def is_multiplier(self) -> bool:
        return self is not Scheme.EMPIRICAL

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        aliases = {"gaussian": cls.GAUSSIAN, "multiplier": cls.GAUSSIAN, "mammen": cls.MAMMEN,
                   "rademacher": cls.RADEMACHER}
        v = str(value).strip().lower()
        if v in aliases:
            return aliases[v]
        try:
            return cls(v)
        except ValueError:
            choices = ", ".join(s.value for s in cls)
            raise WrongSchemeError(f"unknown bootstrap scheme {value!r}; choose from {choices}") from None


@dataclass(frozen=True)
class BootstrapDraws:
    """``B`` bootstrap replicates: a ``(B, p)`` array, or ``(B,)`` once reduced."""

    replicates: np.ndarray
    scheme: Scheme
    seed: int
    B: int
    reduced: str | None = None

    def __post_init__(self):
        if self.B < 1 or self.replicates.shape[0] != self.B:
            raise InvalidDataError("replicate count must equal B >= 1")

    def reduce(self, mode: str = MAX_ABS) -> "BootstrapDraws":
        """Collapse vector replicates to their max or max-abs."""
        if self.reduced is not None:
            raise InvalidDataError(f"draws already reduced by {self.reduced}")
        R = self.replicates
        vals = R.max(axis=1) if mode == MAX else np.abs(R).max(axis=1)
        return BootstrapDraws(vals, self.scheme, self.seed, self.B, mode)


@dataclass(frozen=True)
class QuantileEstimate:
    level: float
    value: float
    B: int


def sample_weights(scheme, rng: np.random.Generator, shape) -> np.ndarray:
    """Draw multiplier weights of the given law from ``rng``."""
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.GAUSSIAN:
        return rng.standard_normal(shape)
    if scheme is Scheme.RADEMACHER:
        return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0
    if scheme is Scheme.MAMMEN:
        u = rng.random(shape)
        return np.where(u < MAMMEN_P_LOW, MAMMEN_LOW, MAMMEN_HIGH)
    raise WrongSchemeError("the empirical bootstrap has no multiplier weights")


def gen_weights(scheme, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. multiplier weights for ``scheme`` under ``seed``."""
    if int(n) < 1:
        raise InvalidDataError("need n >= 1 weights")
    return sample_weights(scheme, _rng.stream(seed, _rng.TAG_WEIGHTS), int(n))


def weighted_replicates(X, weights) -> np.ndarray:
    """Replicates ``n**-0.5 * W @ (X - Xbar)`` for explicit weight rows ``W``.

    A single weight vector gives a single replicate. Used for hand-checked
    cases and by callers that manage their own weights.
    """
    A = as_data_matrix(X)
    W = np.asarray(weights, dtype=np.float64)
    if W.shape[-1] != A.shape[0]:
        raise InvalidDataError(f"weights have length {W.shape[-1]}, data has {A.shape[0]} rows")
    return W @ (A - A.mean(axis=0)) / math.sqrt(A.shape[0])


def _check_B(B) -> int:
    B = int(B)
    if B < 1:
        raise InvalidDataError(f"number of bootstrap replicates must be >= 1, got {B}")
    return B


def _resample_counts(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    idx = rng.integers(0, n, size=(m, n))
    flat = (np.arange(m)[:, None] * n + idx).ravel()
    return np.bincount(flat, minlength=m * n).reshape(m, n).astype(np.float64)


def _generate(A, scheme: Scheme, B: int, seed: int, scale, reduce, threads):
    n = A.shape[0]
    Xc = A - A.mean(axis=0)
    root_n = math.sqrt(n)

    def run(block):
        k, start, stop = block
        rng = _rng.stream(seed, _rng.TAG_BOOT, k)
        m = stop - start
        if scheme is Scheme.EMPIRICAL:
            W = _resample_counts(rng, m, n)
        else:
            W = sample_weights(scheme, rng, (m, n))
        R = W @ Xc / root_n
        if scale is not None:
            R /= scale
        if reduce == MAX:
            return R.max(axis=1)
        if reduce == MAX_ABS:
            return np.abs(R).max(axis=1)
        return R

    parts = _rng.pmap(run, _rng.blocks(B), threads)
    return np.concatenate(parts, axis=0)


def _check_reduce(reduce):
    if reduce not in (None, MAX, MAX_ABS):
        raise ValueError(f"reduce must be None, 'max' or 'max-abs', got {reduce!r}")


def multiplier_draws(X, scheme=Scheme.GAUSSIAN, B: int = DEFAULT_B, seed: int = 0, *,
                     reduce: str | None = None, threads: int | None = None) -> BootstrapDraws:
    """Multiplier bootstrap replicates of the scaled sample mean of ``X``."""
    scheme = Scheme.parse(scheme)
    if not scheme.is_multiplier:
        raise WrongSchemeError("multiplier_draws needs a multiplier scheme")
    _check_reduce(reduce)
    A = as_data_matrix(X)
    B = _check_B(B)
    seed = _rng.check_seed(seed)
    R = _generate(A, scheme, B, seed, None, reduce, threads)
    return BootstrapDraws(R, scheme, seed, B, reduce)


def empirical_draws(X, B: int = DEFAULT_B, seed: int = 0, *, reduce: str | None = None,
                    threads: int | None = None) -> BootstrapDraws:
    """Empirical (resampling) bootstrap replicates of the scaled sample mean."""
    _check_reduce(reduce)
    A = as_data_matrix(X)
    B = _check_B(B)
    seed = _rng.check_seed(seed)
    R = _generate(A, Scheme.EMPIRICAL, B, seed, None, reduce, threads)
    return BootstrapDraws(R, Scheme.EMPIRICAL, seed, B, reduce)


def draws(X, scheme=Scheme.GAUSSIAN, B: int = DEFAULT_B, seed: int = 0, *,
          reduce: str | None = None, threads: int | None = None) -> BootstrapDraws:
    """Dispatch to :func:`multiplier_draws` or :func:`empirical_draws`."""
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.EMPIRICAL:
        return empirical_draws(X, B, seed, reduce=reduce, threads=threads)
    return multiplier_draws(X, scheme, B, seed, reduce=reduce, threads=threads)


def studentized_draws(X, scheme=Scheme.GAUSSIAN, B: int = DEFAULT_B, seed: int = 0, *,
                      reduce: str | None = None, threads: int | None = None) -> BootstrapDraws:
    """Replicates divided coordinatewise by the sample standard deviations.

    Raises :class:`~hdboot.errors.DegenerateCoordinateError` naming the first
    column with zero empirical variance.
    """
    scheme = Scheme.parse(scheme)
    _check_reduce(reduce)
    A = as_data_matrix(X)
    B = _check_B(B)
    seed = _rng.check_seed(seed)
    sd = np.sqrt(check_scales(column_variances(A), what="column"))
    R = _generate(A, scheme, B, seed, sd, reduce, threads)
    return BootstrapDraws(R, scheme, seed, B, reduce)


def order_index(level: float, B: int) -> int:
    """1-based order statistic ``ceil(level * B)`` used for quantiles.

    A ``1e-9`` guard absorbs float error in ``level * B`` (e.g. ``0.9 * 10``).
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {level}")
    return min(max(math.ceil(level * B - 1e-9), 1), B)


def conditional_quantile(draws, level: float) -> QuantileEstimate:
    """The ``ceil(level*B)``-th order statistic of scalar replicates.

    This is the generalized inverse ``inf{t : F_B(t) >= level}`` of the
    bootstrap ECDF. Accepts :class:`BootstrapDraws` or a 1-D array.
    """
    vals = draws.replicates if isinstance(draws, BootstrapDraws) else np.asarray(draws, dtype=np.float64)
    if vals.ndim != 1:
        raise InvalidDataError("conditional_quantile needs scalar replicates; reduce with max_stat first")
    B = vals.shape[0]
    if B < 1:
        raise InvalidDataError("no replicates")
    k = order_index(level, B)
    value = float(np.partition(vals, k - 1)[k - 1])
    return QuantileEstimate(float(level), value, B)
