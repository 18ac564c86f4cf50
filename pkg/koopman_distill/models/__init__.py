"""Data models for koopman-distill"""

from koopman_distill.models.config import (
    DatasetConfig,
    DistillConfig,
    ExperimentConfig,
    OptimizerConfig,
    OutputConfig,
    StudentConfig,
    TeacherConfig,
)
from koopman_distill.models.context import CliContext
from koopman_distill.models.report import EpochLog, ExperimentReport, MethodSummary, SeedResult
from koopman_distill.models.result import CommandResult

__all__ = [
    'CliContext',
    'CommandResult',
    'DatasetConfig',
    'DistillConfig',
    'EpochLog',
    'ExperimentConfig',
    'ExperimentReport',
    'MethodSummary',
    'OptimizerConfig',
    'OutputConfig',
    'SeedResult',
    'StudentConfig',
    'TeacherConfig',
]
