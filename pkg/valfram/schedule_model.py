"""
Schedule Model - activity schedules and travel diary datasets
In-memory representation of agent-days with structural validation
"""

import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from valfram.errors import EmptyDataset, InvariantViolation, MixedLocationPresence

SECONDS_PER_DAY = 86400

# Boundary sentinel added around activity sequences by n-gram profiling
NONE_ACTIVITY = "none"

Location = Tuple[float, float]


def validate_token(name: str, kind: str) -> str:
    """Check an activity type or mode name: non-empty, no whitespace, no comma"""
    if not isinstance(name, str) or not name:
        raise InvariantViolation(f"{kind} name must be a non-empty string")
    if "," in name or any(ch.isspace() for ch in name):
        raise InvariantViolation(f"{kind} name {name!r} contains whitespace or a comma")
    return name


def _check_time_of_day(value: int, field: str) -> None:
    if not 0 <= value < SECONDS_PER_DAY:
        raise InvariantViolation(f"{field}={value} outside [0, {SECONDS_PER_DAY})")


@dataclass(frozen=True)
class ActivityInstance:
    activity_type: str
    start_s: int
    duration_s: int
    location: Optional[Location] = None

    def __post_init__(self):
        validate_token(self.activity_type, "activity type")
        if self.activity_type == NONE_ACTIVITY:
            raise InvariantViolation(f"'{NONE_ACTIVITY}' is reserved for sequence boundaries")
        _check_time_of_day(self.start_s, "start_s")
        if self.duration_s < 1:
            raise InvariantViolation(f"duration_s={self.duration_s} must be >= 1")
        if self.location is not None:
            x, y = self.location
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InvariantViolation(f"location {self.location} is not finite")

    @property
    def end_s(self) -> int:
        # May pass midnight for the last activity of the day
        return self.start_s + self.duration_s


@dataclass(frozen=True)
class Trip:
    mode: str
    travel_time_s: int
    depart_s: int

    def __post_init__(self):
        validate_token(self.mode, "mode")
        if self.travel_time_s < 0:
            raise InvariantViolation(f"travel_time_s={self.travel_time_s} must be >= 0")
        _check_time_of_day(self.depart_s, "depart_s")


@dataclass(frozen=True)
class ActivitySchedule:
    """
    One agent-day: activities joined by trips, trip k leads from
    activity k to activity k+1
    """
    person_id: str
    activities: Tuple[ActivityInstance, ...]
    trips: Tuple[Trip, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "activities", tuple(self.activities))
        object.__setattr__(self, "trips", tuple(self.trips))
        if not self.activities:
            raise InvariantViolation(f"schedule {self.person_id!r} has no activities")
        if len(self.trips) != len(self.activities) - 1:
            raise InvariantViolation(
                f"schedule {self.person_id!r} has {len(self.trips)} trips "
                f"for {len(self.activities)} activities"
            )
        for previous, current in zip(self.activities, self.activities[1:]):
            if current.start_s < previous.start_s:
                raise InvariantViolation(
                    f"schedule {self.person_id!r}: start times decrease "
                    f"({previous.start_s} -> {current.start_s})"
                )

    def arrivals(self) -> Iterator[Tuple[Trip, ActivityInstance]]:
        """Pairs of (trip, activity the trip arrives at)"""
        return zip(self.trips, self.activities[1:])


def activity_sequence(schedule: ActivitySchedule) -> List[str]:
    """Ordered activity types of a schedule, without boundary sentinels"""
    return [activity.activity_type for activity in schedule.activities]


@dataclass(frozen=True)
class DiaryDataset:
    schedules: Tuple[ActivitySchedule, ...]
    activity_vocab: frozenset
    mode_vocab: frozenset
    has_locations: bool

    def activities(self) -> Iterator[ActivityInstance]:
        for schedule in self.schedules:
            yield from schedule.activities

    def trips(self) -> Iterator[Trip]:
        for schedule in self.schedules:
            yield from schedule.trips

    def arrivals(self) -> Iterator[Tuple[Trip, ActivityInstance]]:
        for schedule in self.schedules:
            yield from schedule.arrivals()

    def summary(self) -> Dict[str, object]:
        """Counts and vocabularies as reported in a ValidationReport"""
        return {
            "schedules": len(self.schedules),
            "activities": sum(len(s.activities) for s in self.schedules),
            "trips": sum(len(s.trips) for s in self.schedules),
            "activity_types": sorted(self.activity_vocab),
            "modes": sorted(self.mode_vocab),
            "has_locations": self.has_locations,
        }


def build_dataset(schedules: Sequence[ActivitySchedule]) -> DiaryDataset:
    """
    Assemble a dataset from individually valid schedules

    Raises:
        EmptyDataset: no schedules given
        MixedLocationPresence: only some activities carry a location
    """
    schedules = tuple(schedules)
    if not schedules:
        raise EmptyDataset("a dataset needs at least one schedule")

    activity_vocab = set()
    mode_vocab = set()
    located = 0
    total = 0
    for schedule in schedules:
        for activity in schedule.activities:
            activity_vocab.add(activity.activity_type)
            total += 1
            if activity.location is not None:
                located += 1
        for trip in schedule.trips:
            mode_vocab.add(trip.mode)

    if 0 < located < total:
        raise MixedLocationPresence(
            f"{located} of {total} activities carry a location; locations are all-or-nothing"
        )

    return DiaryDataset(
        schedules=schedules,
        activity_vocab=frozenset(activity_vocab),
        mode_vocab=frozenset(mode_vocab),
        has_locations=located == total,
    )
