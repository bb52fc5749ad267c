"""
Validation reports and heat-map grids on disk
JSON/CSV report serialization, grid CSV/PGM emission and side-by-side
comparison of several models' reports.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

# Import our config
import sys
sys.path.append(str(Path(__file__).parent.parent))
from config import OUTPUT_CONFIG, TOOL_VERSION

from valfram.errors import InvalidConfig
from valfram.stat_kernels import DensityGrid, EcdfGrid
from valfram.steps import STATUS_FAILED, STATUS_OK, MetricRecord, StepConfig

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Grid = Union[EcdfGrid, DensityGrid]

REPORT_CSV_COLUMNS = [
    "step", "statistic", "activity_type", "mode", "hour_bin_start", "hour_bin_end",
    "status", "value", "n_model", "n_validation", "reason", "diagnostics",
]
CONTEXT_COLUMNS = ["step", "statistic", "activity_type", "mode", "hour_bin"]


@dataclass(frozen=True)
class ValidationReport:
    tool_version: str = TOOL_VERSION
    config: StepConfig = field(default_factory=StepConfig)
    dataset_summaries: Dict[str, Any] = field(default_factory=dict)
    records: Tuple[MetricRecord, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def failed(self) -> List[MetricRecord]:
        return [r for r in self.records if r.status == STATUS_FAILED]

    def for_step(self, step: str) -> List[MetricRecord]:
        return [r for r in self.records if r.step == step]


def report_to_dict(report: ValidationReport) -> Dict[str, Any]:
    return {
        "tool_version": report.tool_version,
        "config": report.config.to_dict(),
        "dataset_summaries": report.dataset_summaries,
        "records": [record.to_dict() for record in report.records],
    }


def report_from_dict(data: Dict[str, Any]) -> ValidationReport:
    return ValidationReport(
        tool_version=data["tool_version"],
        config=StepConfig.from_dict(data["config"]),
        dataset_summaries=data.get("dataset_summaries", {}),
        records=tuple(MetricRecord.from_dict(r) for r in data.get("records", [])),
    )


def _json_text(data: Any) -> str:
    # Python floats serialize as the shortest round-trip decimal
    return json.dumps(
        data, sort_keys=True, indent=OUTPUT_CONFIG["json_indent"],
        ensure_ascii=False, allow_nan=False,
    ) + "\n"


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return repr(float(value))
    return str(value)


def _report_frame(report: ValidationReport) -> pd.DataFrame:
    rows = []
    for record in report.records:
        start, end = record.hour_bin if record.hour_bin else (None, None)
        rows.append([_cell(v) for v in (
            record.step, record.statistic, record.activity_type, record.mode, start, end,
            record.status, record.value, record.n_model, record.n_validation, record.reason,
        )] + [json.dumps(record.diagnostics, sort_keys=True, ensure_ascii=False) if record.diagnostics else ""])
    return pd.DataFrame(rows, columns=REPORT_CSV_COLUMNS, dtype=str)


def report_text(report: ValidationReport, format: str = "json") -> str:
    """The report as one JSON object or as one CSV row per record"""
    if format not in OUTPUT_CONFIG["report_formats"]:
        raise InvalidConfig(f"unknown report format {format!r}")
    if format == "json":
        return _json_text(report_to_dict(report))
    return _report_frame(report).to_csv(index=False, lineterminator="\n")


def write_report(report: ValidationReport, path: PathLike, format: str = "json") -> None:
    text = report_text(report, format)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.info("💾 Report written to %s (%s, %d records)", path, format, len(report.records))


def read_report(path: PathLike) -> ValidationReport:
    """Load a JSON report written by write_report"""
    with open(path, "r", encoding="utf-8") as f:
        return report_from_dict(json.load(f))


# ---------------------------------------------------------------------------
# Grids

def grid_csv_text(grid: Grid) -> str:
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in grid.values)


def grid_pgm_text(grid: Grid) -> str:
    """Plain P2 image, grid minimum -> 0 and maximum -> maxval"""
    maxval = OUTPUT_CONFIG["pgm_maxval"]
    values = np.asarray(grid.values, dtype=float)
    low, high = values.min(), values.max()
    if high > low:
        pixels = np.rint((values - low) / (high - low) * maxval).astype(int)
    else:
        pixels = np.zeros(values.shape, dtype=int)
    header = f"P2\n{grid.cols} {grid.rows}\n{maxval}\n"
    return header + "".join(" ".join(str(p) for p in row) + "\n" for row in pixels)


def write_grid(grid: Grid, path: PathLike, format: str = "csv") -> None:
    if format == "csv":
        text = grid_csv_text(grid)
    elif format == "pgm":
        text = grid_pgm_text(grid)
    else:
        raise InvalidConfig(f"unknown grid format {format!r}")
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(text)


def write_grids(outcome, directory: PathLike) -> List[Path]:
    """
    Emit every A2 grid of a run in every grid format

    Files are named A2_<type>_<model|validation>_<ecdf|kde>.<format>.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    grids: Dict[str, Grid] = {}
    for activity_type, (model_grid, validation_grid) in outcome.ecdf_grids.items():
        grids[f"A2_{activity_type}_model_ecdf"] = model_grid
        grids[f"A2_{activity_type}_validation_ecdf"] = validation_grid
    for (activity_type, side), density in outcome.density_grids.items():
        grids[f"A2_{activity_type}_{side}_kde"] = density

    written = []
    for stem in sorted(grids):
        for fmt in OUTPUT_CONFIG["grid_formats"]:
            path = directory / f"{stem}.{fmt}"
            write_grid(grids[stem], path, fmt)
            written.append(path)
    logger.info("🗺️  Wrote %d grid files to %s", len(written), directory)
    return written


def read_grid_csv(path: PathLike) -> np.ndarray:
    return pd.read_csv(path, header=None, dtype=float).to_numpy()


# ---------------------------------------------------------------------------
# Comparison of several models against one validation set

def _context(record: MetricRecord) -> tuple:
    hour_bin = f"{record.hour_bin[0]}-{record.hour_bin[1]}" if record.hour_bin else ""
    return (record.step, record.statistic, record.activity_type or "", record.mode or "", hour_bin)


def compare_reports(reports: Sequence[Tuple[str, ValidationReport]]) -> pd.DataFrame:
    """
    Side-by-side table, one row per record context and one value column per label

    `best` names the label with the lowest ok value; ties go to the earliest
    label and rows without any ok value have an empty `best`.
    """
    labels = [label for label, _ in reports]
    if len(set(labels)) != len(labels):
        raise InvalidConfig("report labels must be unique")
    reserved = set(labels) & set(CONTEXT_COLUMNS + ["best", "context"])
    if reserved:
        raise InvalidConfig(f"reserved report labels: {', '.join(sorted(reserved))}")

    values: Dict[tuple, Dict[str, Any]] = {}
    for label, report in reports:
        for record in report.records:
            row = values.setdefault(record.sort_key(), {"context": _context(record)})
            row[label] = record.value if record.status == STATUS_OK else None

    rows = []
    for key in sorted(values):
        row = dict(zip(CONTEXT_COLUMNS, values[key]["context"]))
        best, best_value = "", None
        for label in labels:
            value = values[key].get(label)
            row[label] = value
            if value is not None and (best_value is None or value < best_value):
                best, best_value = label, value
        row["best"] = best
        rows.append(row)
    return pd.DataFrame(rows, columns=CONTEXT_COLUMNS + labels + ["best"])


def write_comparison(table: pd.DataFrame, path: PathLike) -> None:
    text = table.apply(lambda column: column.map(_cell)).to_csv(index=False, lineterminator="\n")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.info("💾 Comparison of %d rows written to %s", len(table), path)
