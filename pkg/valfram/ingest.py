"""
Input formats: travel diary CSV, long-form O-D CSV, zones CSV and JSON configs
Every parse error names the file and the 1-based line (header is line 1).
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from valfram.errors import (
    InvalidConfig,
    InvalidSpec,
    InvariantViolation,
    NegativeCount,
    ParseError,
    SourceLocation,
    UnknownZone,
)
from valfram.od_compare import ODMatrix, Zone
from valfram.schedule_model import (
    ActivityInstance,
    ActivitySchedule,
    DiaryDataset,
    Trip,
    build_dataset,
)
from valfram.steps import StepConfig
from valfram.synthgen import GeneratorSpec

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DIARY_COLUMNS = [
    "person_id", "seq", "activity_type", "start_s", "duration_s", "x", "y",
    "arr_mode", "arr_trip_duration_s", "arr_depart_s",
]
OD_COLUMNS = ["origin_id", "dest_id", "count"]
ZONE_COLUMNS = ["zone_id", "x", "y"]
ARRIVAL_COLUMNS = ["arr_mode", "arr_trip_duration_s", "arr_depart_s"]


def _read_table(path: Path, required: Sequence[str]) -> List[Tuple[SourceLocation, Dict[str, str]]]:
    """Rows of a headed CSV as strings, paired with their source location; blank lines are dropped"""
    try:
        # index_col=False keeps a trailing delimiter from turning the first column into an index
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, skip_blank_lines=False,
            index_col=False, encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        raise ParseError(SourceLocation(str(path), 1), "file is empty, a header is required")
    except pd.errors.ParserError as exc:
        raise ParseError(SourceLocation(str(path), 1), f"malformed CSV: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError(SourceLocation(str(path), 1), f"not UTF-8: {exc}") from exc

    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise ParseError(SourceLocation(str(path), 1), f"missing columns: {', '.join(missing)}")

    # Quoted fields may span lines, so a record's first line is counted from
    # the newlines held by every field before it; short rows leave NaN behind
    frame = frame.fillna("")
    spans = np.ones(len(frame), dtype=int)
    for column in frame.columns:
        spans += frame[column].str.count("\n").to_numpy(dtype=int)
    header_lines = 1 + sum(str(name).count("\n") for name in frame.columns)
    first_lines = header_lines + 1 + np.concatenate([[0], np.cumsum(spans)[:-1]]).astype(int)

    # Unknown columns are ignored
    rows = []
    for line, record in zip(first_lines, frame[list(required)].to_dict("records")):
        if all(value.strip() == "" for value in record.values()):
            continue
        rows.append((SourceLocation(str(path), int(line)), {k: v.strip() for k, v in record.items()}))
    return rows


def _int(row: Dict[str, str], column: str, location: SourceLocation) -> int:
    try:
        return int(row[column])
    except ValueError:
        raise ParseError(location, f"{column}={row[column]!r} is not an integer")


def _float(row: Dict[str, str], column: str, location: SourceLocation) -> float:
    try:
        value = float(row[column])
    except ValueError:
        raise ParseError(location, f"{column}={row[column]!r} is not a number")
    if not math.isfinite(value):
        raise ParseError(location, f"{column}={row[column]!r} is not finite")
    return value


def _number_text(value: float) -> str:
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def _write_frame(rows: List[List[str]], columns: Sequence[str], path: PathLike) -> None:
    pd.DataFrame(rows, columns=list(columns), dtype=str).to_csv(
        path, index=False, lineterminator="\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# Travel diaries

def _parse_activity(row: Dict[str, str], location: SourceLocation) -> ActivityInstance:
    if (row["x"] == "") != (row["y"] == ""):
        raise ParseError(location, "x and y must both be given or both be empty")
    point = None
    if row["x"] != "":
        point = (_float(row, "x", location), _float(row, "y", location))
    try:
        return ActivityInstance(
            activity_type=row["activity_type"],
            start_s=_int(row, "start_s", location),
            duration_s=_int(row, "duration_s", location),
            location=point,
        )
    except InvariantViolation as exc:
        raise ParseError(location, exc.reason) from exc


def _parse_arrival(row: Dict[str, str], seq: int, location: SourceLocation) -> Optional[Trip]:
    given = [row[column] != "" for column in ARRIVAL_COLUMNS]
    if seq == 0:
        if any(given):
            raise ParseError(location, "arr_* columns must be empty for the first activity (seq 0)")
        return None
    if not all(given):
        raise ParseError(location, f"arr_* columns are required for seq {seq}")
    try:
        return Trip(
            mode=row["arr_mode"],
            travel_time_s=_int(row, "arr_trip_duration_s", location),
            depart_s=_int(row, "arr_depart_s", location),
        )
    except InvariantViolation as exc:
        raise ParseError(location, exc.reason) from exc


def parse_diary(path: PathLike) -> DiaryDataset:
    """
    Parse a travel diary CSV into a dataset

    Rows are grouped into schedules by person_id (in order of first
    appearance) and ordered by seq, which must run 0, 1, 2, ... per person.

    Raises:
        ParseError: malformed rows, out-of-range values, gaps in seq
        InvariantViolation: a schedule whose start times decrease
        MixedLocationPresence: only some rows carry coordinates
    """
    path = Path(path)
    persons: Dict[str, List[Tuple[int, SourceLocation, Dict[str, str]]]] = {}
    for location, row in _read_table(path, DIARY_COLUMNS):
        if row["person_id"] == "":
            raise ParseError(location, "person_id is empty")
        seq = _int(row, "seq", location)
        persons.setdefault(row["person_id"], []).append((seq, location, row))

    schedules = []
    for person_id, rows in persons.items():
        rows.sort(key=lambda item: (item[0], item[1].line))
        activities, trips = [], []
        for expected, (seq, location, row) in enumerate(rows):
            if seq != expected:
                reason = "duplicate" if seq < expected else "non-contiguous"
                raise ParseError(location, f"{reason} seq {seq} for person {person_id!r}, expected {expected}")
            activities.append(_parse_activity(row, location))
            trip = _parse_arrival(row, seq, location)
            if trip is not None:
                trips.append(trip)
        try:
            schedules.append(ActivitySchedule(person_id, activities, trips))
        except InvariantViolation as exc:
            raise InvariantViolation(exc.reason, rows[0][1]) from exc

    dataset = build_dataset(schedules)
    logger.info("📥 Parsed %s: %d schedules", path, len(dataset.schedules))
    return dataset


def write_diary(dataset: DiaryDataset, path: PathLike) -> None:
    """Write a dataset in the diary CSV format read by parse_diary"""
    rows = []
    for schedule in dataset.schedules:
        arrivals = [None] + list(schedule.trips)
        for seq, (activity, trip) in enumerate(zip(schedule.activities, arrivals)):
            x, y = (repr(float(c)) for c in activity.location) if activity.location else ("", "")
            rows.append([
                schedule.person_id, str(seq), activity.activity_type,
                str(activity.start_s), str(activity.duration_s), x, y,
                trip.mode if trip else "",
                str(trip.travel_time_s) if trip else "",
                str(trip.depart_s) if trip else "",
            ])
    _write_frame(rows, DIARY_COLUMNS, path)


# ---------------------------------------------------------------------------
# Zones and O-D matrices

def parse_zones(path: PathLike) -> List[Zone]:
    path = Path(path)
    zones, seen = [], set()
    for location, row in _read_table(path, ZONE_COLUMNS):
        zone_id = row["zone_id"]
        if zone_id == "":
            raise ParseError(location, "zone_id is empty")
        if zone_id in seen:
            raise ParseError(location, f"duplicate zone id {zone_id!r}")
        seen.add(zone_id)
        zones.append(Zone(zone_id, _float(row, "x", location), _float(row, "y", location)))
    if not zones:
        raise ParseError(SourceLocation(str(path), 1), "no zones listed")
    return zones


def parse_od(trips_path: PathLike, zones_path: PathLike) -> ODMatrix:
    """
    Assemble long-form (origin_id, dest_id, count) rows into a square matrix

    The matrix is indexed by the zones file's order; absent pairs are 0 and
    duplicate pairs are summed.
    """
    zones = parse_zones(zones_path)
    index = {zone.zone_id: i for i, zone in enumerate(zones)}
    counts = np.zeros((len(zones), len(zones)))

    for location, row in _read_table(Path(trips_path), OD_COLUMNS):
        for column in ("origin_id", "dest_id"):
            if row[column] not in index:
                raise UnknownZone(location, f"{column} {row[column]!r} is not in {zones_path}")
        count = _float(row, "count", location)
        if count < 0:
            raise NegativeCount(location, f"count {count} is negative")
        counts[index[row["origin_id"]], index[row["dest_id"]]] += count

    matrix = ODMatrix(zones, counts)
    logger.info("📥 Parsed O-D %s: %d zones, %s trips", trips_path, len(zones), _number_text(matrix.total))
    return matrix


def write_zones(zones: Sequence[Zone], path: PathLike) -> None:
    _write_frame([[z.zone_id, repr(float(z.x)), repr(float(z.y))] for z in zones], ZONE_COLUMNS, path)


def write_od(matrix: ODMatrix, path: PathLike) -> None:
    """Non-zero cells in row-major zone order"""
    rows = [
        [matrix.zones[i].zone_id, matrix.zones[j].zone_id, _number_text(matrix.counts[i, j])]
        for i, j in zip(*np.nonzero(matrix.counts))
    ]
    _write_frame(rows, OD_COLUMNS, path)


# ---------------------------------------------------------------------------
# JSON configuration files

def _load_json(path: PathLike, error) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise error(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise error(f"{path}: expected a JSON object")
    return data


def load_step_config(path: PathLike) -> StepConfig:
    """Load a StepConfig from a JSON object using its field names"""
    return StepConfig.from_dict(_load_json(path, InvalidConfig))


def load_generator_spec(path: PathLike) -> GeneratorSpec:
    return GeneratorSpec.from_dict(_load_json(path, InvalidSpec))
