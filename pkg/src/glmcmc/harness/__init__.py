"""Config-driven experiment runner, verifiers, scaling sweeps and reports."""

from .config import DEFAULT_CONFIG, Cell, cells, default_config, load_config
from .report import make_report
from .runner import RUN_COLUMNS, run_experiment, run_one, write_trace
from .sweep import fit_slope, sweep_scaling
from .verify import VERIFY_COLUMNS, run_verify

__all__ = [
    "DEFAULT_CONFIG", "RUN_COLUMNS", "VERIFY_COLUMNS", "Cell", "cells", "default_config",
    "fit_slope", "load_config", "make_report", "run_experiment", "run_one", "run_verify",
    "sweep_scaling", "write_trace",
]
