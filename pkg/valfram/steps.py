"""
VALFRAM validation steps A1-B3
Each step maps a pair of datasets (or O-D matrices) through the statistical
kernels into MetricRecords.
"""

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

# Import our config
import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))
from config import DEFAULT_STEP_CONFIG, OUTPUT_CONFIG, VALFRAM_STEPS

from valfram.errors import (
    InvalidConfig,
    MetricError,
    MissingLocations,
    NoCommonVocabulary,
    NonFiniteValue,
)
from valfram.od_compare import ODMatrix, Zone, od_distance, od_normalize, od_project
from valfram.schedule_model import SECONDS_PER_DAY, DiaryDataset, activity_sequence
from valfram.stat_kernels import (
    Bounds,
    CountVector,
    DensityGrid,
    EcdfGrid,
    ecdf_grid,
    ecdf_rmse,
    kde_grid,
    ks_statistic,
    ngram_discrepancies,
    ngram_profile,
    profile_chi_square,
    scaled_chi_square,
)

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_SKIPPED = "skipped"
STATUS_FAILED = "failed"

# Statistics bounded by 1
UNIT_INTERVAL_STATISTICS = {"ks_start", "ks_duration", "ks_travel_time", "ecdf_rmse", "d_od"}

# Meters; a type whose instances share one x or y (a single office) still gets a grid
MIN_GRID_EXTENT = 1.0

HourBin = Tuple[int, int]


@dataclass(frozen=True)
class StepConfig:
    grid_rows: int = DEFAULT_STEP_CONFIG["grid_rows"]
    grid_cols: int = DEFAULT_STEP_CONFIG["grid_cols"]
    ngram_k: int = DEFAULT_STEP_CONFIG["ngram_k"]
    ngram_P: float = DEFAULT_STEP_CONFIG["ngram_P"]
    hour_bins: Tuple[HourBin, ...] = tuple(tuple(b) for b in DEFAULT_STEP_CONFIG["hour_bins"])
    min_samples: int = DEFAULT_STEP_CONFIG["min_samples"]
    kde_bandwidth: Optional[Tuple[float, float]] = DEFAULT_STEP_CONFIG["kde_bandwidth"]

    def __post_init__(self):
        try:
            object.__setattr__(self, "hour_bins", tuple((int(s), int(e)) for s, e in self.hour_bins))
            object.__setattr__(self, "ngram_P", float(self.ngram_P))
            if self.kde_bandwidth is not None:
                h_x, h_y = self.kde_bandwidth
                object.__setattr__(self, "kde_bandwidth", (float(h_x), float(h_y)))
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(f"malformed hour_bins, ngram_P or kde_bandwidth: {exc}") from exc

        for name in ("grid_rows", "grid_cols", "ngram_k", "min_samples"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise InvalidConfig(f"{name} must be an integer >= 1, got {value!r}")
        if not 0 < self.ngram_P <= 1:
            raise InvalidConfig(f"ngram_P must be in (0, 1], got {self.ngram_P}")
        if self.kde_bandwidth is not None and not all(h > 0 for h in self.kde_bandwidth):
            raise InvalidConfig(f"kde_bandwidth must be positive, got {self.kde_bandwidth}")

        previous_end = None
        for start, end in sorted(self.hour_bins):
            if not 0 <= start < end <= SECONDS_PER_DAY:
                raise InvalidConfig(f"hour bin [{start}, {end}) is not inside the day")
            if previous_end is not None and start < previous_end:
                raise InvalidConfig(f"hour bin [{start}, {end}) overlaps its predecessor")
            previous_end = end

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StepConfig":
        unknown = set(data) - set(DEFAULT_STEP_CONFIG)
        if unknown:
            raise InvalidConfig(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grid_rows": self.grid_rows,
            "grid_cols": self.grid_cols,
            "ngram_k": self.ngram_k,
            "ngram_P": self.ngram_P,
            "hour_bins": [list(b) for b in self.hour_bins],
            "min_samples": self.min_samples,
            "kde_bandwidth": list(self.kde_bandwidth) if self.kde_bandwidth else None,
        }


@dataclass(frozen=True)
class MetricRecord:
    step: str
    statistic: str
    status: str = STATUS_OK
    value: Optional[float] = None
    activity_type: Optional[str] = None
    mode: Optional[str] = None
    hour_bin: Optional[HourBin] = None
    n_model: int = 0
    n_validation: int = 0
    reason: Optional[str] = None
    diagnostics: Optional[Dict[str, Any]] = None

    def __post_init__(self):
        if self.hour_bin is not None:
            object.__setattr__(self, "hour_bin", tuple(self.hour_bin))
        if self.status == STATUS_OK:
            if self.value is None or not math.isfinite(self.value) or self.value < 0:
                raise NonFiniteValue(f"{self.step}/{self.statistic}: invalid value {self.value}")
            if self.statistic in UNIT_INTERVAL_STATISTICS and self.value > 1:
                raise NonFiniteValue(f"{self.step}/{self.statistic}: value {self.value} exceeds 1")

    def sort_key(self) -> tuple:
        return (
            self.step,
            self.statistic,
            self.activity_type or "",
            self.mode or "",
            self.hour_bin or (),
        )

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "step": self.step,
            "statistic": self.statistic,
            "status": self.status,
            "n_model": self.n_model,
            "n_validation": self.n_validation,
        }
        optional = {
            "value": self.value,
            "activity_type": self.activity_type,
            "mode": self.mode,
            "hour_bin": list(self.hour_bin) if self.hour_bin else None,
            "reason": self.reason,
            "diagnostics": self.diagnostics,
        }
        data.update({key: value for key, value in optional.items() if value is not None})
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricRecord":
        hour_bin = data.get("hour_bin")
        return cls(
            step=data["step"],
            statistic=data["statistic"],
            status=data["status"],
            value=data.get("value"),
            activity_type=data.get("activity_type"),
            mode=data.get("mode"),
            hour_bin=tuple(hour_bin) if hour_bin else None,
            n_model=data.get("n_model", 0),
            n_validation=data.get("n_validation", 0),
            reason=data.get("reason"),
            diagnostics=data.get("diagnostics"),
        )


def step_records(step: str, status: str, reason: str) -> List[MetricRecord]:
    """One skipped/failed record per statistic of a step"""
    return [
        MetricRecord(step=step, statistic=statistic, status=status, reason=reason)
        for statistic in VALFRAM_STEPS[step]["statistics"]
    ]


def _guarded(
    step: str,
    statistic: str,
    compute: Callable[[], Tuple[float, Optional[Dict[str, Any]]]],
    n_model: int,
    n_validation: int,
    **context,
) -> MetricRecord:
    """Run one metric; a MetricError becomes a Failed record for this context only"""
    try:
        value, diagnostics = compute()
        return MetricRecord(
            step=step, statistic=statistic, value=value,
            n_model=n_model, n_validation=n_validation,
            diagnostics=diagnostics, **context,
        )
    except MetricError as exc:
        logger.warning("❌ %s %s %s failed: %s", step, statistic, context, exc)
        return MetricRecord(
            step=step, statistic=statistic, status=STATUS_FAILED, reason=str(exc),
            n_model=n_model, n_validation=n_validation, **context,
        )


def _skipped(step: str, statistic: str, reason: str, n_model: int, n_validation: int, **context) -> MetricRecord:
    return MetricRecord(
        step=step, statistic=statistic, status=STATUS_SKIPPED, reason=reason,
        n_model=n_model, n_validation=n_validation, **context,
    )


def _group(items: Iterable, key: Callable, value: Callable) -> Dict[Any, list]:
    groups = defaultdict(list)
    for item in items:
        groups[key(item)].append(value(item))
    return groups


def _common(model_vocab: frozenset, validation_vocab: frozenset, what: str) -> List[str]:
    common = sorted(model_vocab & validation_vocab)
    if not common:
        raise NoCommonVocabulary(f"model and validation share no {what}")
    return common


def _chi_square(model_counts: Counter, validation_counts: Counter):
    def compute():
        result = scaled_chi_square(
            CountVector.from_counts(model_counts), CountVector.from_counts(validation_counts)
        )
        return result.chi2, {"dropped_model_mass": result.dropped_model_mass}
    return compute


# ---------------------------------------------------------------------------
# A. Activities

def step_a1(model: DiaryDataset, validation: DiaryDataset, cfg: StepConfig) -> List[MetricRecord]:
    """KS distance of start times and durations per shared activity type"""
    common = _common(model.activity_vocab, validation.activity_vocab, "activity type")
    unmatched = sorted(model.activity_vocab ^ validation.activity_vocab)
    diagnostics = {"unmatched_types": unmatched} if unmatched else None

    def by_type(dataset, attr):
        return _group(dataset.activities(), lambda a: a.activity_type, lambda a: getattr(a, attr))

    records = []
    for statistic, attr in (("ks_start", "start_s"), ("ks_duration", "duration_s")):
        model_values = by_type(model, attr)
        validation_values = by_type(validation, attr)
        for activity_type in common:
            m, v = model_values[activity_type], validation_values[activity_type]
            records.append(_guarded(
                "A1", statistic,
                lambda m=m, v=v: (ks_statistic(m, v), diagnostics),
                len(m), len(v), activity_type=activity_type,
            ))
    return records


@dataclass
class A2Result:
    records: List[MetricRecord]
    ecdf_grids: Dict[str, Tuple[EcdfGrid, EcdfGrid]] = field(default_factory=dict)
    # keyed by (activity_type, "model" | "validation")
    density_grids: Dict[Tuple[str, str], DensityGrid] = field(default_factory=dict)


def _locations(dataset: DiaryDataset) -> Dict[str, np.ndarray]:
    groups = _group(dataset.activities(), lambda a: a.activity_type, lambda a: a.location)
    return {activity_type: np.array(points, dtype=float) for activity_type, points in groups.items()}


def step_a2(model: DiaryDataset, validation: DiaryDataset, cfg: StepConfig) -> A2Result:
    """Sampled bivariate ECDF RMSE per activity type, plus KDE heat-map grids"""
    if not (model.has_locations and validation.has_locations):
        raise MissingLocations("step A2 needs activity locations in both datasets")
    common = _common(model.activity_vocab, validation.activity_vocab, "activity type")
    model_points = _locations(model)
    validation_points = _locations(validation)

    result = A2Result(records=[])
    for activity_type in common:
        m, v = model_points[activity_type], validation_points[activity_type]
        grids = {}

        def compute(m=m, v=v, grids=grids):
            bounds = Bounds.union(m, v, min_extent=MIN_GRID_EXTENT)
            grids["bounds"] = bounds
            grids["ecdf"] = (
                ecdf_grid(m, cfg.grid_rows, cfg.grid_cols, bounds),
                ecdf_grid(v, cfg.grid_rows, cfg.grid_cols, bounds),
            )
            return ecdf_rmse(*grids["ecdf"]), None

        record = _guarded("A2", "ecdf_rmse", compute, len(m), len(v), activity_type=activity_type)
        result.records.append(record)
        if record.status != STATUS_OK:
            continue
        result.ecdf_grids[activity_type] = grids["ecdf"]

        for side, points in (("model", m), ("validation", v)):
            try:
                result.density_grids[(activity_type, side)] = kde_grid(
                    points, cfg.grid_rows, cfg.grid_cols, grids["bounds"], cfg.kde_bandwidth
                )
            except MetricError as exc:
                logger.warning("⚠️  No %s heat map for %s: %s", side, activity_type, exc)
    return result


def step_a3(model: DiaryDataset, validation: DiaryDataset, cfg: StepConfig) -> List[MetricRecord]:
    """Chi-square of per-schedule activity counts and of n-gram profiles"""
    common = _common(model.activity_vocab, validation.activity_vocab, "activity type")
    model_sequences = [activity_sequence(s) for s in model.schedules]
    validation_sequences = [activity_sequence(s) for s in validation.schedules]

    records = []
    for activity_type in common:
        model_counts = Counter(seq.count(activity_type) for seq in model_sequences)
        validation_counts = Counter(seq.count(activity_type) for seq in validation_sequences)
        records.append(_guarded(
            "A3", "chi2_count", _chi_square(model_counts, validation_counts),
            len(model_sequences), len(validation_sequences), activity_type=activity_type,
        ))

    # NoOverlap here fails the whole step
    model_profile = ngram_profile(model_sequences, cfg.ngram_k, cfg.ngram_P)
    validation_profile = ngram_profile(validation_sequences, cfg.ngram_k, cfg.ngram_P)
    profile = profile_chi_square(model_profile, validation_profile)
    top = ngram_discrepancies(model_profile, validation_profile, OUTPUT_CONFIG["top_ngram_discrepancies"])
    records.append(MetricRecord(
        step="A3", statistic="chi2_ngram", value=profile.chi2,
        n_model=len(model_sequences), n_validation=len(validation_sequences),
        diagnostics={
            "matched": profile.matched,
            "model_only": profile.model_only,
            "validation_only": profile.validation_only,
            "top_discrepancies": [
                {
                    "ngram": " ".join(row.ngram),
                    "model_count": row.model_count,
                    "expected_count": row.expected_count,
                    "contribution": row.contribution,
                }
                for row in top
            ],
        },
    ))
    return records


# ---------------------------------------------------------------------------
# B. Trips

def step_b1(model: DiaryDataset, validation: DiaryDataset, cfg: StepConfig) -> List[MetricRecord]:
    """Mode chi-square per departure-hour bin and travel-time KS per mode"""
    common = _common(model.mode_vocab, validation.mode_vocab, "mode")
    model_trips = list(model.trips())
    validation_trips = list(validation.trips())

    records = []
    for start, end in cfg.hour_bins:
        model_counts = Counter(t.mode for t in model_trips if start <= t.depart_s < end)
        validation_counts = Counter(t.mode for t in validation_trips if start <= t.depart_s < end)
        n_m, n_v = sum(model_counts.values()), sum(validation_counts.values())
        context = {"hour_bin": (start, end)}
        if n_m < cfg.min_samples or n_v < cfg.min_samples:
            records.append(_skipped(
                "B1", "chi2_mode_hour",
                f"too few trips in bin (model {n_m}, validation {n_v}, need {cfg.min_samples})",
                n_m, n_v, **context,
            ))
            continue
        records.append(_guarded(
            "B1", "chi2_mode_hour", _chi_square(model_counts, validation_counts), n_m, n_v, **context
        ))

    model_times = _group(model_trips, lambda t: t.mode, lambda t: t.travel_time_s)
    validation_times = _group(validation_trips, lambda t: t.mode, lambda t: t.travel_time_s)
    for mode in common:
        m, v = model_times[mode], validation_times[mode]
        records.append(_guarded(
            "B1", "ks_travel_time", lambda m=m, v=v: (ks_statistic(m, v), None),
            len(m), len(v), mode=mode,
        ))
    return records


def step_b2(
    model_od: ODMatrix,
    validation_od: ODMatrix,
    zones: Optional[Sequence[Zone]] = None,
) -> MetricRecord:
    """
    O-D distance after projecting the model onto the validation zones

    With an explicit zone set both matrices are projected onto it instead.
    """
    target = tuple(zones) if zones is not None else validation_od.zones
    model_projected = od_project(model_od, target)
    validation_projected = validation_od if zones is None else od_project(validation_od, target)

    value = od_distance(od_normalize(model_projected), od_normalize(validation_projected))
    return MetricRecord(
        step="B2", statistic="d_od", value=value,
        n_model=int(round(model_od.total)), n_validation=int(round(validation_od.total)),
        diagnostics={"zones": len(target), "model_zones": len(model_od.zones)},
    )


def step_b3(model: DiaryDataset, validation: DiaryDataset, cfg: StepConfig) -> List[MetricRecord]:
    """Chi-square of arriving-trip modes per target activity type"""
    common = _common(model.activity_vocab, validation.activity_vocab, "activity type")
    _common(model.mode_vocab, validation.mode_vocab, "mode")

    model_modes = _group(model.arrivals(), lambda pair: pair[1].activity_type, lambda pair: pair[0].mode)
    validation_modes = _group(validation.arrivals(), lambda pair: pair[1].activity_type, lambda pair: pair[0].mode)

    records = []
    for activity_type in common:
        model_counts = Counter(model_modes.get(activity_type, []))
        validation_counts = Counter(validation_modes.get(activity_type, []))
        n_m, n_v = sum(model_counts.values()), sum(validation_counts.values())
        if n_m < cfg.min_samples or n_v < cfg.min_samples:
            records.append(_skipped(
                "B3", "chi2_mode_target",
                f"too few arriving trips (model {n_m}, validation {n_v}, need {cfg.min_samples})",
                n_m, n_v, activity_type=activity_type,
            ))
            continue
        records.append(_guarded(
            "B3", "chi2_mode_target", _chi_square(model_counts, validation_counts),
            n_m, n_v, activity_type=activity_type,
        ))
    return records
