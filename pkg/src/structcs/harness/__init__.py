"""Experiment harness: configs, runners, result tables, plot data and the CLI."""

from .config import ConfigError, ExperimentConfig
from .experiments import run
from .table import ResultTable

__all__ = ["ConfigError", "ExperimentConfig", "ResultTable", "run"]
