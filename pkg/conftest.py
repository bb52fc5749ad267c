"""
Shared fixtures for the VALFRAM test suite
"""

import sys
from pathlib import Path

import pytest

# Add project root to path
sys.path.append(str(Path(__file__).parent))

from config import DEFAULT_GENERATOR_SPEC
from valfram.od_compare import ODMatrix, Zone
from valfram.schedule_model import ActivityInstance, ActivitySchedule, Trip, build_dataset
from valfram.synthgen import GeneratorSpec


def make_schedule(person_id, activities, modes=None, located=False):
    """
    Build a schedule from (type, start_s, duration_s[, (x, y)]) tuples

    Trips depart when the previous activity ends and take 600 s; modes
    default to car.
    """
    instances = []
    for item in activities:
        activity_type, start, duration = item[:3]
        location = item[3] if len(item) > 3 else ((float(start), 0.0) if located else None)
        instances.append(ActivityInstance(activity_type, start, duration, location))
    modes = modes or ["car"] * (len(instances) - 1)
    trips = [
        Trip(mode, 600, min(previous.end_s, 86399))
        for mode, previous in zip(modes, instances)
    ]
    return ActivitySchedule(person_id, instances, trips)


@pytest.fixture
def home_work_dataset():
    """Three small sleep/work/leisure schedules without locations"""
    return build_dataset([
        make_schedule("p1", [("sleep", 0, 25200), ("work", 28800, 28800), ("sleep", 61200, 30000)],
                      ["car", "car"]),
        make_schedule("p2", [("sleep", 0, 27000), ("work", 30600, 25200), ("leisure", 57600, 7200),
                             ("sleep", 66600, 25000)], ["public_transport", "car", "car"]),
        make_schedule("p3", [("sleep", 0, 30000)]),
    ])


@pytest.fixture
def located_dataset():
    """Located copy of a small population, enough points per type for KDE"""
    schedules = []
    for i in range(12):
        schedules.append(make_schedule(
            f"p{i}",
            [
                ("sleep", 0, 25000, (1000.0 + 37 * i, 2000.0 + 11 * i)),
                ("work", 27000 + 60 * i, 28800, (5000.0 - 23 * i, 5000.0 + 41 * i)),
                ("sleep", 64000 + 30 * i, 22000, (1000.0 + 37 * i, 2000.0 + 11 * i)),
            ],
            ["car" if i % 3 else "public_transport", "car" if i % 2 else "public_transport"],
        ))
    return build_dataset(schedules)


@pytest.fixture
def two_zones():
    return [Zone("a", 0.0, 0.0), Zone("b", 1000.0, 0.0)]


@pytest.fixture
def od_pair(two_zones):
    """The hand example M=[[0,1],[1,0]] and V=[[0,1],[3,0]], d_OD = 0.25"""
    return (
        ODMatrix(two_zones, [[0, 1], [1, 0]]),
        ODMatrix(two_zones, [[0, 1], [3, 0]]),
    )


@pytest.fixture
def small_spec():
    """Built-in synthetic population cut down to 300 schedules"""
    data = dict(DEFAULT_GENERATOR_SPEC)
    data["population"] = 300
    data["seed"] = 7
    return GeneratorSpec.from_dict(data)


@pytest.fixture
def write_text(tmp_path):
    """Write a text file into the test's temp directory and return its path"""
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write
