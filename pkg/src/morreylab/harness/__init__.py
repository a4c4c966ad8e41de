"""Experiment orchestration: config, probes, reporting and the CLI."""

from .config import ConfigError, parse_tagged, read_config
from .experiment import (
    ExperimentResult,
    ExperimentSpec,
    boundedness_probe,
    condition_probe,
    eval_probe,
    refinement_study,
    run_probe,
    sharpness_probe,
    spec_from_config,
    trajectory_stats,
    weights_probe,
)
from .cli import run_cli

__all__ = [
    "ConfigError",
    "ExperimentResult",
    "ExperimentSpec",
    "boundedness_probe",
    "condition_probe",
    "eval_probe",
    "parse_tagged",
    "read_config",
    "refinement_study",
    "run_cli",
    "run_probe",
    "sharpness_probe",
    "spec_from_config",
    "trajectory_stats",
    "weights_probe",
]
