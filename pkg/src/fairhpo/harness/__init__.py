"""Experiment configs, multi-seed runs, trial logs and analytics."""
from .analysis import emit_plot_data, frontier_trials, replay_selection, rung_pareto_density
from .config import OUTPUT_ENV, ConfigError, ExperimentConfig, load_config, parse_config
from .experiment import compare_runs, read_log, read_summary, run_experiment, write_log

__all__ = [
    "OUTPUT_ENV",
    "ConfigError",
    "ExperimentConfig",
    "compare_runs",
    "emit_plot_data",
    "frontier_trials",
    "load_config",
    "parse_config",
    "read_log",
    "read_summary",
    "replay_selection",
    "run_experiment",
    "rung_pareto_density",
    "write_log",
]
