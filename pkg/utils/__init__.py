"""Shared runtime utilities for the experiment CLI."""

from .runtime_config import (
    ExperimentOptions,
    add_parameter_args,
    add_runtime_args,
    experiment_options_from_args,
    format_value,
    load_config_file,
    parse_grid,
)
from .trace_logger import TrialTraceLogger
from .run_store import RunStore

__all__ = [
    "ExperimentOptions",
    "add_parameter_args",
    "add_runtime_args",
    "experiment_options_from_args",
    "format_value",
    "load_config_file",
    "parse_grid",
    "TrialTraceLogger",
    "RunStore",
]
