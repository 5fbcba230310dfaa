"""Experiment harness: sweeps, extrapolation, self-checks and the command-line entry point."""

from .config import CSV_COLUMNS, ConfigError, ExperimentConfig, ResultRow, derive_seed, rows_to_csv, rows_to_json
from .runners import (
    CheckResult,
    evaluate,
    fit_exponential,
    fit_spline,
    load_expectations,
    lower_bound_samples,
    run,
    run_entangled_qpt,
    run_moment_checks,
    run_qpt_sweep,
    run_qst_sweep,
    run_zne,
    zne_report,
)

__all__ = [
    "CSV_COLUMNS",
    "CheckResult",
    "ConfigError",
    "ExperimentConfig",
    "ResultRow",
    "derive_seed",
    "evaluate",
    "fit_exponential",
    "fit_spline",
    "load_expectations",
    "lower_bound_samples",
    "rows_to_csv",
    "rows_to_json",
    "run",
    "run_entangled_qpt",
    "run_moment_checks",
    "run_qpt_sweep",
    "run_qst_sweep",
    "run_zne",
    "zne_report",
]
