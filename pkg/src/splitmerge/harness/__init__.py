"""Monte Carlo experiment harness: configs, runners, CSV/SVG emitters, CLI."""

from .config import (
    DEFAULT_S_FOR_BOUNDS,
    ConfigError,
    ContaminationSchedule,
    ExperimentConfig,
    StrategySpec,
    load_config,
)
from .emit import CSV_FIELDS, emit_csv, emit_svg, render_csv, render_svg
from .experiment import ResultRow, ResultTable, coverage_table, run_experiment, sweep_k

__all__ = [
    "DEFAULT_S_FOR_BOUNDS",
    "ConfigError",
    "ContaminationSchedule",
    "ExperimentConfig",
    "StrategySpec",
    "load_config",
    "CSV_FIELDS",
    "emit_csv",
    "emit_svg",
    "render_csv",
    "render_svg",
    "ResultRow",
    "ResultTable",
    "coverage_table",
    "run_experiment",
    "sweep_k",
]
