"""Data-generating processes for the Monte Carlo experiments.

Every process draws mean-zero ``n x p`` matrices from a generator handed in by
the caller and knows the covariance of its scaled sample mean, which is what
the Gaussian reference needs.
"""

from __future__ import annotations

import math

import numpy as np

from .. import _rng
from ..errors import ConfigError
from ..gaussian import equicorrelated
from .config import DGPSpec, ScenarioConfig


class DGP:
    name = ""

    def sample(self, rng: np.random.Generator, n: int, p: int) -> np.ndarray:
        raise NotImplementedError

    def covariance(self, n: int, p: int) -> np.ndarray:
        """Covariance of ``n^-1/2 sum_i X_i``."""
        raise NotImplementedError


class Figure1Regression(DGP):
    """``X_ij = z_ij eps_i`` with a fixed design ``z ~ U[0, 1]`` and ``eps = Exp(1) - 1``.

    The design is drawn once per ``(seed, n, p)`` and reused by every
    replication; only the errors are fresh.
    """

    name = "figure1-regression"

    def __init__(self, seed: int):
        self.seed = _rng.check_seed(seed)
        self._z = {}

    def design(self, n: int, p: int) -> np.ndarray:
        key = (n, p)
        if key not in self._z:
            self._z[key] = _rng.stream(self.seed, _rng.TAG_DESIGN, n, p).random((n, p))
        return self._z[key]

    def from_errors(self, eps, p: int) -> np.ndarray:
        eps = np.asarray(eps, dtype=np.float64).ravel()
        return self.design(len(eps), p) * eps[:, None]

    def sample(self, rng, n, p):
        return self.from_errors(rng.standard_exponential(n) - 1.0, p)

    def covariance(self, n, p):
        z = self.design(n, p)
        return z.T @ z / n


class GaussianEquicorrelated(DGP):
    name = "gaussian-equicorrelated"

    def __init__(self, rho: float):
        self.rho = float(rho)

    def sample(self, rng, n, p):
        common = rng.standard_normal((n, 1))
        return math.sqrt(self.rho) * common + math.sqrt(1.0 - self.rho) * rng.standard_normal((n, p))

    def covariance(self, n, p):
        return equicorrelated(p, self.rho)


class HeavyTailT(DGP):
    """Independent Student-t coordinates rescaled to unit variance."""

    name = "heavy-tail-t"

    def __init__(self, df: float):
        self.df = float(df)

    def sample(self, rng, n, p):
        return rng.standard_t(self.df, (n, p)) / math.sqrt(self.df / (self.df - 2.0))

    def covariance(self, n, p):
        return np.eye(p)


class DuplicatedCoordinates(DGP):
    """``X_ij = G_i,(j mod k)`` for standard Gaussian ``G``; singular once ``p > k``."""

    name = "duplicated-coordinates"

    def __init__(self, k: int):
        self.k = int(k)

    def sample(self, rng, n, p):
        G = rng.standard_normal((n, min(self.k, p)))
        return G[:, np.arange(p) % self.k]

    def covariance(self, n, p):
        j = np.arange(p) % self.k
        return (j[:, None] == j[None, :]).astype(np.float64)


class VarianceDecay(DGP):
    """Independent Gaussian coordinates with ``Var(X_j) = j^-a`` (``j`` from 1)."""

    name = "variance-decay"

    def __init__(self, a: float):
        self.a = float(a)

    def scales(self, p):
        return np.arange(1, p + 1, dtype=np.float64) ** (-self.a / 2.0)

    def sample(self, rng, n, p):
        return rng.standard_normal((n, p)) * self.scales(p)

    def covariance(self, n, p):
        return np.diag(self.scales(p) ** 2)


def make_dgp(cfg: ScenarioConfig | DGPSpec, seed: int | None = None) -> DGP:
    """Build the process named in ``cfg`` (a config or a bare :class:`DGPSpec`)."""
    if isinstance(cfg, ScenarioConfig):
        spec, seed = cfg.dgp, cfg.seed if seed is None else seed
    else:
        spec = DGPSpec.parse(cfg)
    seed = 0 if seed is None else seed
    prm = spec.params
    if spec.name == "figure1-regression":
        return Figure1Regression(seed)
    if spec.name == "gaussian-equicorrelated":
        return GaussianEquicorrelated(prm["rho"])
    if spec.name == "heavy-tail-t":
        return HeavyTailT(prm["df"])
    if spec.name == "duplicated-coordinates":
        return DuplicatedCoordinates(prm["k"])
    if spec.name == "variance-decay":
        return VarianceDecay(prm["a"])
    raise ConfigError(f"unknown dgp {spec.name!r}")


def data_stream(seed: int, n: int, p: int, rep: int, part: int = 0) -> np.random.Generator:
    """Generator for replication ``rep`` of cell ``(n, p)``; ``part`` separates samples."""
    return _rng.stream(seed, _rng.TAG_DATA, n, p, rep, part)


def rep_seed(seed: int, n: int, p: int, rep: int) -> int:
    """Bootstrap master seed for replication ``rep`` of cell ``(n, p)``."""
    return _rng.derive_seed(seed, _rng.TAG_REP, n, p, rep)
