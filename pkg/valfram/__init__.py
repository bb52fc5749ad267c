"""
VALFRAM validation toolkit
Statistical comparison of activity-based transport model output against
travel diaries and O-D matrices.
"""

from valfram.orchestrator import ValidationOrchestrator, run_all
from valfram.report import ValidationReport, write_grid, write_report
from valfram.steps import MetricRecord, StepConfig

__all__ = [
    "MetricRecord",
    "StepConfig",
    "ValidationOrchestrator",
    "ValidationReport",
    "run_all",
    "write_grid",
    "write_report",
]
