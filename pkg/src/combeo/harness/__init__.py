"""Experiment harness: config parsing, parallel execution, result files and plots."""
from .config import ConfigError, ExperimentConfig, parse_config, parse_config_dict
from .io import read_trace, write_results
from .runner import RunResult, SummaryRow, run_experiment

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunResult",
    "SummaryRow",
    "parse_config",
    "parse_config_dict",
    "read_trace",
    "run_experiment",
    "write_results",
]
