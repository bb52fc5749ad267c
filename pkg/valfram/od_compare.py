"""
Origin-destination matrix comparison
Projection onto a common zone set, normalization to shares, and the
RMSE distance over the union of non-zero cells.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from valfram.errors import (
    EmptySupport,
    EmptyTargetZones,
    NonFiniteValue,
    ShapeMismatch,
    ZeroMatrix,
    ZoneMismatch,
)
from valfram.stat_kernels import Bounds, lattice

# Points per block when searching nearest zones
NEAREST_CHUNK = 4096


@dataclass(frozen=True)
class Zone:
    zone_id: str
    x: float
    y: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise NonFiniteValue(f"zone {self.zone_id!r} has non-finite coordinates")


def _check_unique(zones: Sequence[Zone]) -> None:
    ids = [zone.zone_id for zone in zones]
    if len(set(ids)) != len(ids):
        raise ShapeMismatch("zone ids are not unique")


def _zone_ids(zones: Sequence[Zone]) -> Tuple[str, ...]:
    return tuple(zone.zone_id for zone in zones)


@dataclass(frozen=True, eq=False)
class ODMatrix:
    zones: Tuple[Zone, ...]
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "zones", tuple(self.zones))
        counts = np.asarray(self.counts, dtype=float)
        object.__setattr__(self, "counts", counts)
        size = len(self.zones)
        _check_unique(self.zones)
        if counts.shape != (size, size):
            raise ShapeMismatch(f"counts shape {counts.shape} does not match {size} zones")
        if not np.all(np.isfinite(counts)) or np.any(counts < 0):
            raise NonFiniteValue("O-D counts must be finite and non-negative")
        if not np.any(counts > 0):
            raise ZeroMatrix("O-D matrix has no trips")

    @property
    def total(self) -> float:
        return float(self.counts.sum())


@dataclass(frozen=True, eq=False)
class NormalizedOD:
    zones: Tuple[Zone, ...]
    shares: np.ndarray


def nearest_zone_indices(xs: np.ndarray, ys: np.ndarray, zones: Sequence[Zone]) -> np.ndarray:
    """
    Index of the nearest zone for every point

    Squared Euclidean distance; equidistant zones resolve to the
    lexicographically smallest zone id.
    """
    if not zones:
        raise EmptyTargetZones("no target zones to project onto")
    order = np.array(sorted(range(len(zones)), key=lambda i: zones[i].zone_id))
    zx = np.array([zones[i].x for i in order], dtype=float)
    zy = np.array([zones[i].y for i in order], dtype=float)

    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    result = np.empty(xs.shape[0], dtype=int)
    for start in range(0, xs.shape[0], NEAREST_CHUNK):
        stop = start + NEAREST_CHUNK
        d2 = (xs[start:stop, None] - zx[None, :]) ** 2 + (ys[start:stop, None] - zy[None, :]) ** 2
        # argmin returns the first minimum, i.e. the smallest id in sorted order
        result[start:stop] = order[np.argmin(d2, axis=1)]
    return result


def od_project(model: ODMatrix, target_zones: Sequence[Zone]) -> ODMatrix:
    """Re-index a matrix onto target zones, summing rows/columns that merge"""
    target_zones = tuple(target_zones)
    if not target_zones:
        raise EmptyTargetZones("no target zones to project onto")
    _check_unique(target_zones)

    xs = np.array([zone.x for zone in model.zones])
    ys = np.array([zone.y for zone in model.zones])
    assign = nearest_zone_indices(xs, ys, target_zones)

    projected = np.zeros((len(target_zones), len(target_zones)))
    np.add.at(projected, (assign[:, None], assign[None, :]), model.counts)
    return ODMatrix(target_zones, projected)


def od_normalize(m: ODMatrix) -> NormalizedOD:
    total = m.counts.sum()
    if total <= 0:
        raise ZeroMatrix("cannot normalize an O-D matrix without trips")
    return NormalizedOD(m.zones, m.counts / total)


def od_distance(model: NormalizedOD, validation: NormalizedOD) -> float:
    """RMSE over cells that are non-zero in at least one matrix"""
    if _zone_ids(model.zones) != _zone_ids(validation.zones):
        raise ZoneMismatch("matrices are indexed by different zone lists")
    support = (model.shares > 0) | (validation.shares > 0)
    cells = int(support.sum())
    if cells == 0:
        raise EmptySupport("both matrices are zero everywhere")
    diff = model.shares[support] - validation.shares[support]
    return float(np.sqrt(np.sum(diff ** 2) / cells))


def od_from_flows(origins, destinations, zones: Sequence[Zone]) -> ODMatrix:
    """Count trips between the nearest zones of origin and destination coordinates"""
    zones = tuple(zones)
    origins = np.asarray(origins, dtype=float).reshape(-1, 2)
    destinations = np.asarray(destinations, dtype=float).reshape(-1, 2)
    if origins.shape != destinations.shape:
        raise ShapeMismatch("origins and destinations differ in length")
    o = nearest_zone_indices(origins[:, 0], origins[:, 1], zones)
    d = nearest_zone_indices(destinations[:, 0], destinations[:, 1], zones)
    counts = np.zeros((len(zones), len(zones)))
    np.add.at(counts, (o, d), 1.0)
    return ODMatrix(zones, counts)


def zone_grid(bounds: Bounds, rows: int, cols: int) -> List[Zone]:
    """Regular lattice of zone centers spanning the bounds"""
    xs, ys = lattice(bounds, rows, cols)
    return [
        Zone(f"z{i:03d}_{j:03d}", float(x), float(y))
        for i, y in enumerate(ys)
        for j, x in enumerate(xs)
    ]
