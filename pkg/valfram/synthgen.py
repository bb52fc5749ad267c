"""
Synthetic Population Generator
Seedable activity-schedule generator used to exercise every validation step,
plus controlled perturbations of its parameters.

All random draws are made in a fixed order whose length depends only on the
sampled activity chains, so two specs that differ in anything but the chain
share their random numbers and differ only through the changed parameter.
"""

import copy
import logging
import math
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from scipy.stats import truncnorm

# Import our config
import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))
from config import DEFAULT_GENERATOR_SPEC

from valfram.errors import (
    InvalidSpec,
    InvariantViolation,
    MissingLocations,
    UnknownKind,
)
from valfram.od_compare import ODMatrix, Zone, od_from_flows
from valfram.schedule_model import (
    NONE_ACTIVITY,
    SECONDS_PER_DAY,
    ActivityInstance,
    ActivitySchedule,
    DiaryDataset,
    Trip,
    build_dataset,
    validate_token,
)

logger = logging.getLogger(__name__)

# Longest schedule observed in survey data
MAX_ACTIVITIES = 11
PROBABILITY_TOLERANCE = 1e-9
LAST_SECOND = SECONDS_PER_DAY - 1

PERTURB_KINDS = ("shift_start", "swap_modes", "relocate", "reorder")

MixtureComponent = Tuple[float, Tuple[float, float], float]


def _check_distribution(row: Dict[str, float], what: str) -> None:
    if not row:
        raise InvalidSpec(f"{what} is empty")
    if any(not math.isfinite(p) or p < 0 for p in row.values()):
        raise InvalidSpec(f"{what} has negative or non-finite probabilities")
    if abs(sum(row.values()) - 1.0) > PROBABILITY_TOLERANCE:
        raise InvalidSpec(f"{what} sums to {sum(row.values())}, not 1")


def _check_spread(params: Dict[str, Tuple[float, float]], what: str) -> None:
    for name, (center, spread) in params.items():
        if not (math.isfinite(center) and math.isfinite(spread)) or spread <= 0:
            raise InvalidSpec(f"{what} of {name!r} needs a finite center and a positive spread")


@dataclass(frozen=True)
class GeneratorSpec:
    """
    Parameters of a synthetic population

    chain maps a state to its successor distribution; the `none` row is the
    initial distribution and a transition into `none` ends the schedule.
    An empty location_mixture produces a dataset without locations.
    """
    seed: int
    population: int
    chain: Dict[str, Dict[str, float]]
    start_time: Dict[str, Tuple[float, float]]
    duration: Dict[str, Tuple[float, float]]
    mode_choice: Dict[str, Dict[str, float]]
    location_mixture: Dict[str, Tuple[MixtureComponent, ...]]
    travel_time: Dict[str, Tuple[float, float]]

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise InvalidSpec(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if isinstance(self.population, bool) or not isinstance(self.population, int) or self.population < 1:
            raise InvalidSpec(f"population must be an integer >= 1, got {self.population!r}")

        try:
            for name in list(self.chain) + list(self.travel_time):
                if name != NONE_ACTIVITY:
                    validate_token(name, "state")
        except InvariantViolation as exc:
            raise InvalidSpec(str(exc)) from exc

        if NONE_ACTIVITY not in self.chain:
            raise InvalidSpec(f"chain needs a '{NONE_ACTIVITY}' row with the initial distribution")
        types = set(self.activity_types)
        if not types:
            raise InvalidSpec("chain names no activity types")
        for state, row in self.chain.items():
            _check_distribution(row, f"chain row {state!r}")
            unknown = set(row) - types - {NONE_ACTIVITY}
            if unknown:
                raise InvalidSpec(f"chain row {state!r} leads to unknown states {sorted(unknown)}")
        if self.chain[NONE_ACTIVITY].get(NONE_ACTIVITY, 0) > 0:
            raise InvalidSpec("the initial distribution may not end the schedule immediately")

        for what, table in (("start_time", self.start_time), ("duration", self.duration),
                            ("mode_choice", self.mode_choice)):
            missing = types - set(table)
            if missing:
                raise InvalidSpec(f"{what} lacks activity types {sorted(missing)}")
        _check_spread(self.start_time, "start_time")
        _check_spread(self.duration, "duration")
        _check_spread(self.travel_time, "travel_time")

        modes = set(self.travel_time)
        for activity_type, row in self.mode_choice.items():
            _check_distribution(row, f"mode_choice of {activity_type!r}")
            if set(row) - modes:
                raise InvalidSpec(f"mode_choice of {activity_type!r} uses modes without travel_time")

        if self.location_mixture:
            missing = types - set(self.location_mixture)
            if missing:
                raise InvalidSpec(f"location_mixture lacks activity types {sorted(missing)}")
            for activity_type, components in self.location_mixture.items():
                if not components:
                    raise InvalidSpec(f"location_mixture of {activity_type!r} is empty")
                _check_distribution(
                    {str(i): w for i, (w, _, _) in enumerate(components)},
                    f"location_mixture weights of {activity_type!r}",
                )
                for _, (x, y), sd in components:
                    if not all(math.isfinite(v) for v in (x, y, sd)) or sd <= 0:
                        raise InvalidSpec(f"location_mixture of {activity_type!r} has a bad component")

    @property
    def activity_types(self) -> List[str]:
        return sorted(state for state in self.chain if state != NONE_ACTIVITY)

    @property
    def modes(self) -> List[str]:
        return sorted(self.travel_time)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GeneratorSpec":
        try:
            return cls(
                seed=data["seed"],
                population=data["population"],
                chain={s: {t: float(p) for t, p in row.items()} for s, row in data["chain"].items()},
                start_time={t: (float(m), float(sd)) for t, (m, sd) in data["start_time"].items()},
                duration={t: (float(m), float(sd)) for t, (m, sd) in data["duration"].items()},
                mode_choice={t: {m: float(p) for m, p in row.items()} for t, row in data["mode_choice"].items()},
                location_mixture={
                    t: tuple((float(w), (float(c[0]), float(c[1])), float(sd)) for w, c, sd in components)
                    for t, components in data.get("location_mixture", {}).items()
                },
                travel_time={m: (float(a), float(b)) for m, (a, b) in data["travel_time"].items()},
            )
        except KeyError as exc:
            raise InvalidSpec(f"generator spec lacks {exc}") from exc
        except (TypeError, ValueError, AttributeError) as exc:
            raise InvalidSpec(f"malformed generator spec: {exc}") from exc

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "population": self.population,
            "chain": copy.deepcopy(self.chain),
            "start_time": {t: list(v) for t, v in self.start_time.items()},
            "duration": {t: list(v) for t, v in self.duration.items()},
            "mode_choice": copy.deepcopy(self.mode_choice),
            "location_mixture": {
                t: [[w, list(c), sd] for w, c, sd in components]
                for t, components in self.location_mixture.items()
            },
            "travel_time": {m: list(v) for m, v in self.travel_time.items()},
        }


def default_spec() -> GeneratorSpec:
    return GeneratorSpec.from_dict(DEFAULT_GENERATOR_SPEC)


def _categorical(row: Dict[str, float], u) -> np.ndarray:
    """Inverse-CDF draw over the sorted labels of a distribution, one per uniform in u"""
    labels = sorted(row)
    cumulative = np.cumsum([row[label] for label in labels])
    index = np.minimum(np.searchsorted(cumulative, np.asarray(u) * cumulative[-1], side="right"), len(labels) - 1)
    return np.array(labels, dtype=object)[index]


def _sample_chain(spec: GeneratorSpec, rng: np.random.Generator) -> List[str]:
    chain = []
    state = NONE_ACTIVITY
    while len(chain) < MAX_ACTIVITIES:
        state = str(_categorical(spec.chain[state], rng.random()))
        if state == NONE_ACTIVITY:
            break
        chain.append(state)
    return chain


def _truncated_start(u: np.ndarray, lower: np.ndarray, mean: np.ndarray, sd: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw of N(mean, sd) truncated to [lower, LAST_SECOND], in whole seconds"""
    a = (lower - mean) / sd
    b = (LAST_SECOND - mean) / sd
    with np.errstate(invalid="ignore"):
        drawn = truncnorm.ppf(u, a, b, loc=mean, scale=sd)
    # an empty interval (lower == LAST_SECOND) yields NaN
    drawn = np.where(np.isfinite(drawn), drawn, lower)
    return np.clip(np.rint(drawn), lower, LAST_SECOND).astype(int)


def generate(spec: GeneratorSpec) -> DiaryDataset:
    """
    Sample spec.population schedules

    Start times follow each type's normal truncated to the rest of the day:
    the first activity draws on [0, 86399], every later one on [previous
    start, 86399], so starts never decrease and stay tied to their type.
    Trips depart when the previous activity ends (clamped to the
    day) and take the mode chosen for the arriving activity type.
    """
    rng = np.random.default_rng(spec.seed)
    chains = [_sample_chain(spec, rng) for _ in range(spec.population)]

    types = np.array([t for chain in chains for t in chain])
    lengths = np.array([len(chain) for chain in chains])
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    n_activities = int(offsets[-1])
    first = np.zeros(n_activities, dtype=bool)
    first[offsets[:-1]] = True
    n_trips = n_activities - spec.population

    # Fixed draw order
    start_u = rng.random(n_activities)
    duration_z = rng.standard_normal(n_activities)
    component_u = rng.random(n_activities)
    location_z = rng.standard_normal((n_activities, 2))
    mode_u = rng.random(n_trips)
    travel_z = rng.standard_normal(n_trips)

    durations = np.zeros(n_activities)
    locations = np.zeros((n_activities, 2))
    for activity_type in spec.activity_types:
        mask = types == activity_type
        log_mean, log_sd = spec.duration[activity_type]
        durations[mask] = np.exp(log_mean + log_sd * duration_z[mask])
        if spec.location_mixture:
            components = spec.location_mixture[activity_type]
            weights = np.cumsum([w for w, _, _ in components])
            pick = np.minimum(
                np.searchsorted(weights, component_u[mask] * weights[-1], side="right"),
                len(components) - 1,
            )
            centers = np.array([c for _, c, _ in components])[pick]
            sds = np.array([sd for _, _, sd in components])[pick]
            locations[mask] = centers + sds[:, None] * location_z[mask]

    # Position k of every schedule is drawn after position k - 1, bounded below by it
    means = np.array([spec.start_time[t][0] for t in types], dtype=float)
    spreads = np.array([spec.start_time[t][1] for t in types], dtype=float)
    position = np.arange(n_activities) - np.repeat(offsets[:-1], lengths)
    starts = np.zeros(n_activities, dtype=int)
    for k in range(MAX_ACTIVITIES):
        at = np.flatnonzero(position == k)
        if at.size == 0:
            break
        lower = starts[at - 1] if k else np.zeros(at.size, dtype=int)
        starts[at] = _truncated_start(start_u[at], lower, means[at], spreads[at])
    durations = np.maximum(np.rint(durations), 1).astype(int)

    # A trip arrives at every non-first activity
    targets = types[~first]
    trip_modes = np.empty(n_trips, dtype=object)
    for activity_type in spec.activity_types:
        mask = targets == activity_type
        trip_modes[mask] = _categorical(spec.mode_choice[activity_type], mode_u[mask])
    travel = np.zeros(n_trips)
    for mode in spec.modes:
        mask = trip_modes == mode
        log_mean, log_sd = spec.travel_time[mode]
        travel[mask] = np.exp(log_mean + log_sd * travel_z[mask])
    travel = np.maximum(np.rint(travel), 0).astype(int)
    trip_of = np.cumsum(~first) - 1

    schedules = []
    for person, chain in enumerate(chains):
        activities, trips = [], []
        for i in range(offsets[person], offsets[person + 1]):
            if not first[i]:
                depart = min(int(starts[i - 1] + durations[i - 1]), LAST_SECOND)
                t = trip_of[i]
                trips.append(Trip(str(trip_modes[t]), int(travel[t]), depart))
            point = (float(locations[i, 0]), float(locations[i, 1])) if spec.location_mixture else None
            activities.append(ActivityInstance(str(types[i]), int(starts[i]), int(durations[i]), point))
        schedules.append(ActivitySchedule(f"p{person:06d}", activities, trips))

    dataset = build_dataset(schedules)
    logger.info("🎲 Generated %d schedules, %d activities (seed %d)", spec.population, n_activities, spec.seed)
    return dataset


def _unit_magnitude(kind: str, magnitude: float) -> None:
    if magnitude > 1:
        raise InvalidSpec(f"{kind} magnitude must be in [0, 1], got {magnitude}")


def perturb(spec: GeneratorSpec, kind: str, magnitude: float) -> GeneratorSpec:
    """
    Spec differing from the input only in the named aspect

    shift_start   every start mean + magnitude seconds
    swap_modes    mode distributions blended toward their reversal over sorted modes
    relocate      every mixture center moved by (magnitude, 0) meters
    reorder       each chain row's activity mass blended toward uniform, end mass kept
    """
    if kind not in PERTURB_KINDS:
        raise UnknownKind(f"unknown perturbation {kind!r}; expected one of {', '.join(PERTURB_KINDS)}")
    if not math.isfinite(magnitude) or magnitude < 0:
        raise InvalidSpec(f"perturbation magnitude must be >= 0, got {magnitude}")
    if magnitude == 0:
        return spec

    if kind == "shift_start":
        return replace(spec, start_time={
            t: (mean + magnitude, sd) for t, (mean, sd) in spec.start_time.items()
        })

    if kind == "relocate":
        return replace(spec, location_mixture={
            t: tuple((w, (x + magnitude, y), sd) for w, (x, y), sd in components)
            for t, components in spec.location_mixture.items()
        })

    _unit_magnitude(kind, magnitude)
    if kind == "swap_modes":
        modes = spec.modes
        mode_choice = {}
        for activity_type, row in spec.mode_choice.items():
            p = np.array([row.get(m, 0.0) for m in modes])
            blended = (1 - magnitude) * p + magnitude * p[::-1]
            mode_choice[activity_type] = {m: float(q) for m, q in zip(modes, blended) if q > 0}
        return replace(spec, mode_choice=mode_choice)

    types = spec.activity_types
    chain = {}
    for state, row in spec.chain.items():
        end = row.get(NONE_ACTIVITY, 0.0)
        uniform = (1 - end) / len(types)
        blended = {t: (1 - magnitude) * row.get(t, 0.0) + magnitude * uniform for t in types}
        if end > 0:
            blended[NONE_ACTIVITY] = end
        chain[state] = {t: p for t, p in blended.items() if p > 0}
    return replace(spec, chain=chain)


def derive_od(dataset: DiaryDataset, zones: Sequence[Zone]) -> ODMatrix:
    """O-D matrix of consecutive-activity location pairs snapped to zones"""
    if not dataset.has_locations:
        raise MissingLocations("deriving an O-D matrix needs activity locations")
    origins, destinations = [], []
    for schedule in dataset.schedules:
        for previous, current in zip(schedule.activities, schedule.activities[1:]):
            origins.append(previous.location)
            destinations.append(current.location)
    return od_from_flows(origins, destinations, zones)
