"""
Tests for O-D matrix projection, normalization and distance
"""

import numpy as np
import pytest

from valfram.errors import EmptyTargetZones, NonFiniteValue, ShapeMismatch, ZeroMatrix, ZoneMismatch
from valfram.od_compare import (
    ODMatrix,
    Zone,
    nearest_zone_indices,
    od_distance,
    od_from_flows,
    od_normalize,
    od_project,
    zone_grid,
)
from valfram.stat_kernels import Bounds


class TestODMatrix:
    def test_must_be_square(self, two_zones):
        with pytest.raises(ShapeMismatch):
            ODMatrix(two_zones, [[1, 2, 3], [4, 5, 6]])

    def test_negative_counts(self, two_zones):
        with pytest.raises(NonFiniteValue):
            ODMatrix(two_zones, [[0, -1], [1, 0]])

    def test_no_trips(self, two_zones):
        with pytest.raises(ZeroMatrix):
            ODMatrix(two_zones, [[0, 0], [0, 0]])

    def test_duplicate_zone_ids(self):
        with pytest.raises(ShapeMismatch):
            ODMatrix([Zone("a", 0, 0), Zone("a", 1, 1)], [[1, 0], [0, 1]])


class TestProjection:
    def test_identity(self, od_pair, two_zones):
        model, _ = od_pair
        projected = od_project(model, two_zones)
        np.testing.assert_array_equal(projected.counts, model.counts)

    def test_merging_zones(self):
        model = ODMatrix([Zone("a", 0.0, 0.0), Zone("b", 0.1, 0.0)], [[0, 5], [0, 0]])
        projected = od_project(model, [Zone("t", 0.0, 0.0)])
        assert projected.counts.tolist() == [[5.0]]

    def test_ties_go_to_smallest_id(self):
        targets = [Zone("v", 1.0, 0.0), Zone("u", -1.0, 0.0)]
        assert nearest_zone_indices(np.array([0.0, 0.0]), np.array([5.0, -5.0]), targets).tolist() == [1, 1]

    def test_conserves_total(self):
        rng = np.random.default_rng(4)
        zones = [Zone(f"m{i}", *rng.uniform(0, 100, size=2)) for i in range(30)]
        targets = [Zone(f"t{i}", *rng.uniform(0, 100, size=2)) for i in range(7)]
        model = ODMatrix(zones, rng.integers(0, 9, size=(30, 30)))
        projected = od_project(model, targets)
        assert projected.total == model.total
        again = od_project(projected, targets)
        np.testing.assert_array_equal(again.counts, projected.counts)

    def test_empty_targets(self, od_pair):
        with pytest.raises(EmptyTargetZones):
            od_project(od_pair[0], [])


class TestDistance:
    def test_normalize(self, od_pair):
        assert od_normalize(od_pair[1]).shares.tolist() == [[0.0, 0.25], [0.75, 0.0]]

    def test_hand_example(self, od_pair):
        model, validation = od_pair
        d = od_distance(od_normalize(model), od_normalize(validation))
        assert d == pytest.approx(0.25, abs=1e-9)
        assert od_distance(od_normalize(validation), od_normalize(model)) == d

    @pytest.mark.parametrize("c", [0.001, 10.0, 12345.678])
    def test_scale_invariance(self, od_pair, two_zones, c):
        model, validation = od_pair
        scaled = ODMatrix(two_zones, validation.counts * c)
        d = od_distance(od_normalize(model), od_normalize(scaled))
        assert d == pytest.approx(0.25, abs=1e-12)

    def test_identical(self, od_pair):
        shares = od_normalize(od_pair[0])
        assert od_distance(shares, shares) == 0.0

    def test_zone_mismatch(self, od_pair):
        other = ODMatrix([Zone("x", 0, 0), Zone("y", 1, 0)], [[0, 1], [1, 0]])
        with pytest.raises(ZoneMismatch):
            od_distance(od_normalize(od_pair[0]), od_normalize(other))


class TestFlows:
    def test_od_from_flows(self, two_zones):
        matrix = od_from_flows([(10.0, 5.0), (990.0, 0.0)], [(900.0, 0.0), (0.0, -3.0)], two_zones)
        assert matrix.counts.tolist() == [[0.0, 1.0], [1.0, 0.0]]

    def test_zone_grid(self):
        zones = zone_grid(Bounds(0.0, 10.0, 0.0, 20.0), 2, 3)
        assert [(z.zone_id, z.x, z.y) for z in zones] == [
            ("z000_000", 0.0, 0.0), ("z000_001", 5.0, 0.0), ("z000_002", 10.0, 0.0),
            ("z001_000", 0.0, 20.0), ("z001_001", 5.0, 20.0), ("z001_002", 10.0, 20.0),
        ]
