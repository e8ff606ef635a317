"""Declarative scenario configuration with strict JSON parsing."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from ..bootstrap import Scheme
from ..errors import ConfigError, HDBootError

EXPERIMENTS = ("pp", "coverage", "fwer", "rate", "covcmp", "supscore", "lasso-rate", "comparison",
               "anticoncentration")

DGP_PARAMS = {
    "figure1-regression": {},
    "gaussian-equicorrelated": {"rho": 0.0},
    "heavy-tail-t": {"df": 5.0},
    "duplicated-coordinates": {"k": None},
    "variance-decay": {"a": 1.0},
}


@dataclass(frozen=True)
class DGPSpec:
    name: str
    params: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, raw) -> "DGPSpec":
        if isinstance(raw, DGPSpec):
            return raw
        if isinstance(raw, str):
            raw = {"name": raw}
        if not isinstance(raw, dict) or "name" not in raw:
            raise ConfigError("dgp must be a name or an object with a 'name' key")
        name = raw["name"]
        if name not in DGP_PARAMS:
            raise ConfigError(f"unknown dgp {name!r}; choose from {', '.join(DGP_PARAMS)}")
        allowed = DGP_PARAMS[name]
        extra = set(raw) - {"name"} - set(allowed)
        if extra:
            raise ConfigError(f"unknown parameter(s) for dgp {name!r}: {', '.join(sorted(extra))}")
        params = {}
        for key, default in allowed.items():
            val = raw.get(key, default)
            if val is None:
                raise ConfigError(f"dgp {name!r} needs parameter {key!r}")
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise ConfigError(f"dgp parameter {key!r} must be a number")
            params[key] = val
        _check_dgp(name, params)
        return cls(name, params)

    def to_dict(self) -> dict:
        return {"name": self.name, **self.params}


def _check_dgp(name, params):
    if name == "gaussian-equicorrelated" and not 0.0 <= params["rho"] < 1.0:
        raise ConfigError("rho must lie in [0, 1)")
    if name == "heavy-tail-t" and not params["df"] > 2:
        raise ConfigError("df must exceed 2 so the variance exists")
    if name == "duplicated-coordinates" and (int(params["k"]) != params["k"] or params["k"] < 1):
        raise ConfigError("k must be a positive integer")
    if name == "variance-decay" and not params["a"] >= 0:
        raise ConfigError("a must be nonnegative")


@dataclass(frozen=True)
class ScenarioConfig:
    """One Monte Carlo experiment.

    Required keys: ``experiment``, ``dgp``, ``n``, ``p``, ``reps``, ``B``,
    ``alpha``, ``scheme``. ``seed`` may come from the file or the command line.
    The remaining fields only matter to some experiments; see the README.
    """

    experiment: str
    dgp: DGPSpec
    n: int
    p: int
    reps: int
    B: int
    alpha: float
    scheme: Scheme
    seed: int = 0
    n_grid: tuple = ()
    cells: tuple = ()
    m: int | None = None
    sides: str = "two-sided"
    n_alternatives: int = 0
    signal: float = 1.0
    s: int = 5
    mode: str = "heteroscedastic"
    refinements: int = 2
    noise_df: float | None = None
    hetero: bool = False
    B_n: float = 1.0
    deltas: tuple = ()
    delta: float = 0.05
    t_grid: tuple = ()
    gaussian_draws: int = 0

    @classmethod
    def from_dict(cls, raw: dict, seed: int | None = None) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in fields(cls)}
        extra = set(raw) - names
        if extra:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(extra))}")
        required = ("experiment", "dgp", "n", "p", "reps", "B", "alpha", "scheme")
        missing = [k for k in required if k not in raw]
        if missing:
            raise ConfigError(f"missing config key(s): {', '.join(missing)}")
        kw = dict(raw)
        if seed is not None:
            kw["seed"] = seed
        try:
            kw["dgp"] = DGPSpec.parse(kw["dgp"])
            kw["scheme"] = Scheme.parse(kw["scheme"])
        except HDBootError as exc:
            raise ConfigError(str(exc)) from exc
        for key in ("n_grid", "deltas", "t_grid"):
            if key in kw:
                kw[key] = tuple(kw[key])
        if "cells" in kw:
            kw["cells"] = tuple(tuple(c) for c in kw["cells"])
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path, seed: int | None = None) -> "ScenarioConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw, seed)

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        def is_int(v):
            return isinstance(v, int) and not isinstance(v, bool)

        need(self.experiment in EXPERIMENTS, f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        for key in ("n", "p", "reps", "B"):
            need(is_int(getattr(self, key)) and getattr(self, key) >= 1, f"{key} must be a positive integer")
        need(self.n >= 2, "n must be at least 2")
        need(isinstance(self.alpha, (int, float)) and 0 < self.alpha < 1, "alpha must lie in (0, 1)")
        need(is_int(self.seed) and 0 <= self.seed < 2 ** 64, "seed must be a 64-bit unsigned integer")
        need(all(is_int(v) and v >= 2 for v in self.n_grid), "n_grid entries must be integers >= 2")
        need(all(len(c) == 2 and all(is_int(v) and v >= 2 for v in c) for c in self.cells),
             "cells must be [n, p] integer pairs")
        need(self.m is None or (is_int(self.m) and self.m >= 2), "m must be an integer >= 2")
        need(self.sides in ("one-sided", "two-sided"), "sides must be 'one-sided' or 'two-sided'")
        need(is_int(self.n_alternatives) and 0 <= self.n_alternatives <= self.p, "n_alternatives must lie in [0, p]")
        need(is_int(self.s) and self.s >= 0, "s must be a nonnegative integer")
        need(self.mode in ("homoscedastic", "heteroscedastic"), "mode must be homoscedastic or heteroscedastic")
        need(is_int(self.refinements) and self.refinements >= 1, "refinements must be >= 1")
        need(self.noise_df is None or self.noise_df > 2, "noise_df must exceed 2")
        need(isinstance(self.hetero, bool), "hetero must be true or false")
        need(self.B_n >= 1, "B_n must be >= 1")
        need(all(d >= 0 for d in self.deltas), "deltas must be nonnegative")
        need(self.delta > 0, "delta must be positive")
        need(is_int(self.gaussian_draws) and self.gaussian_draws >= 0, "gaussian_draws must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dgp"] = self.dgp.to_dict()
        d["scheme"] = self.scheme.value
        for key in ("n_grid", "deltas", "t_grid"):
            d[key] = list(d[key])
        d["cells"] = [list(c) for c in self.cells]
        return d

    def replace(self, **kw) -> "ScenarioConfig":
        d = self.to_dict()
        d.update(kw)
        return ScenarioConfig.from_dict(d)
