"""Scenario configs, data-generating processes and Monte Carlo experiments."""

from .config import DGPSpec, ScenarioConfig
from .dgp import make_dgp
from .experiments import EXPERIMENTS, MCReport, run

__all__ = ["DGPSpec", "ScenarioConfig", "make_dgp", "EXPERIMENTS", "MCReport", "run"]
