"""Experiment harness: configs, validation, suites, metrics, reports."""

from .config import ExperimentConfig, Variant, build_env, build_runner, build_spec, load_config
from .metrics import RunRecord, SummaryRow, SummaryTable, aggregate, bootstrap_ci
from .suite import overhead_report, report_from_runs, run_single, run_suite
from .validate import ValidationReport, validate_safe_set

__all__ = [
    "ExperimentConfig", "RunRecord", "SummaryRow", "SummaryTable",
    "ValidationReport", "Variant", "aggregate", "bootstrap_ci", "build_env",
    "build_runner", "build_spec", "load_config", "overhead_report",
    "report_from_runs", "run_single", "run_suite", "validate_safe_set",
]
