from harness.config import (
    BASELINE_VARIANT,
    VARIANTS,
    ExperimentConfig,
    HeadConfig,
    PlateauConfig,
    apply_overrides,
    load_experiment_config,
    variant_configs,
    with_variant,
)
from harness.metrics import RunMetrics, load_run_metrics, moving_average, plateau_episode
from harness.report import ComparisonReport, ReportError, compare_report, plateau_percentage, write_report
from harness.runner import run_batch, run_experiment, run_lr_sweep, run_single
from harness.store import RunStore
from harness.validators import ConfigValidationError, validate_experiment_config

__all__ = [
    "BASELINE_VARIANT",
    "VARIANTS",
    "ExperimentConfig",
    "HeadConfig",
    "PlateauConfig",
    "apply_overrides",
    "load_experiment_config",
    "variant_configs",
    "with_variant",
    "RunMetrics",
    "load_run_metrics",
    "moving_average",
    "plateau_episode",
    "ComparisonReport",
    "ReportError",
    "compare_report",
    "plateau_percentage",
    "write_report",
    "run_batch",
    "run_experiment",
    "run_lr_sweep",
    "run_single",
    "RunStore",
    "ConfigValidationError",
    "validate_experiment_config",
]
