"""
Statistical kernels for model validation
Two-sample KS, scaled chi-square, bivariate ECDF grids, Gaussian KDE grids
and n-gram profiles. All functions are pure.
"""

from collections import Counter
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from valfram.errors import (
    DegenerateBounds,
    DegenerateModel,
    DegenerateValidation,
    EmptyInput,
    EmptyPoints,
    EmptySample,
    NoOverlap,
    NonFiniteValue,
    ShapeMismatch,
    TooFewPoints,
)
from valfram.schedule_model import NONE_ACTIVITY

NGram = Tuple[str, ...]


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov

def _as_sample(values: Iterable[float], name: str) -> np.ndarray:
    sample = np.asarray(values if isinstance(values, np.ndarray) else list(values), dtype=float)
    if sample.size == 0:
        raise EmptySample(f"{name} sample is empty")
    if not np.all(np.isfinite(sample)):
        raise NonFiniteValue(f"{name} sample contains non-finite values")
    return np.sort(sample.ravel())


def ks_statistic(model: Iterable[float], validation: Iterable[float]) -> float:
    """
    Two-sample Kolmogorov-Smirnov distance sup_x |F_M(x) - F_V(x)|

    Both ECDFs are evaluated right-continuously at every pooled sample point
    and through their left limits there, so ties and steps are exact.
    """
    a = _as_sample(model, "model")
    b = _as_sample(validation, "validation")
    pooled = np.unique(np.concatenate([a, b]))

    right = np.abs(
        np.searchsorted(a, pooled, side="right") / a.size
        - np.searchsorted(b, pooled, side="right") / b.size
    )
    left = np.abs(
        np.searchsorted(a, pooled, side="left") / a.size
        - np.searchsorted(b, pooled, side="left") / b.size
    )
    return float(max(right.max(), left.max()))


# ---------------------------------------------------------------------------
# Chi-square over category counts

@dataclass(frozen=True)
class CountVector:
    labels: Tuple[Hashable, ...]
    counts: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "counts", tuple(float(c) for c in self.counts))
        if len(self.labels) != len(self.counts):
            raise ShapeMismatch("labels and counts differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise ShapeMismatch("count vector labels are not unique")
        if any(not np.isfinite(c) or c < 0 for c in self.counts):
            raise NonFiniteValue("counts must be finite and non-negative")

    @classmethod
    def from_counts(cls, counts: Dict[Hashable, float]) -> "CountVector":
        labels = sorted(counts)
        return cls(labels, [counts[label] for label in labels])

    @property
    def total(self) -> float:
        return float(sum(self.counts))

    def as_dict(self) -> Dict[Hashable, float]:
        return dict(zip(self.labels, self.counts))


class ChiSquareResult(NamedTuple):
    chi2: float
    dropped_model_mass: float


def _scaled_expected(model: Dict, validation: Dict, labels: Sequence) -> Tuple[np.ndarray, np.ndarray]:
    """Model frequencies and validation frequencies scaled to the model total over `labels`"""
    f_m = np.array([model.get(label, 0.0) for label in labels], dtype=float)
    f_v = np.array([validation[label] for label in labels], dtype=float)
    # multiply before dividing: integer counts with equal proportions scale exactly
    s_v = f_v * f_m.sum() / f_v.sum()
    return f_m, s_v


def scaled_chi_square(model: CountVector, validation: CountVector) -> ChiSquareResult:
    """
    Pearson chi-square with validation frequencies scaled to the model total

    Only labels with a positive validation count take part. Model mass on
    the other labels is reported as dropped_model_mass, not folded in.
    """
    v = validation.as_dict()
    m = model.as_dict()
    if validation.total <= 0:
        raise DegenerateValidation("all validation counts are zero")
    model_total = model.total
    if model_total <= 0:
        raise DegenerateModel("model counts sum to zero")

    kept = [label for label in validation.labels if v[label] > 0]
    f_m, s_v = _scaled_expected(m, v, kept)
    kept_mass = f_m.sum()
    if kept_mass <= 0:
        raise DegenerateModel("model has no mass on categories present in validation")

    chi2 = float(np.sum((f_m - s_v) ** 2 / s_v))
    return ChiSquareResult(chi2, float((model_total - kept_mass) / model_total))


# ---------------------------------------------------------------------------
# Spatial grids

@dataclass(frozen=True)
class Bounds:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not all(np.isfinite([self.x_min, self.x_max, self.y_min, self.y_max])):
            raise DegenerateBounds("bounds must be finite")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise DegenerateBounds(
                f"degenerate bounds x=[{self.x_min}, {self.x_max}] y=[{self.y_min}, {self.y_max}]"
            )

    @classmethod
    def union(cls, *point_sets: np.ndarray, min_extent: float = 0.0) -> "Bounds":
        """
        Tight bounding box over every given point set

        An axis narrower than min_extent is widened symmetrically to
        min_extent; with the default of 0 a zero-extent axis stays degenerate.
        """
        stacked = [np.asarray(p, dtype=float).reshape(-1, 2) for p in point_sets if len(p)]
        if not stacked:
            raise EmptyPoints("no points to bound")
        points = np.vstack(stacked)
        low, high = points.min(axis=0), points.max(axis=0)
        pad = np.maximum(min_extent - (high - low), 0.0) / 2
        low, high = low - pad, high + pad
        return cls(float(low[0]), float(high[0]), float(low[1]), float(high[1]))

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)


@dataclass(frozen=True, eq=False)
class EcdfGrid:
    """values[i, j] = F(x_j, y_i); row 0 is the minimal y"""
    values: np.ndarray
    bounds: Bounds

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class DensityGrid:
    values: np.ndarray
    bounds: Bounds
    bandwidth: Tuple[float, float]

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def lattice(bounds: Bounds, rows: int, cols: int) -> Tuple[np.ndarray, np.ndarray]:
    """Inclusive regular sample coordinates; a single sample sits at the maximum"""
    if rows < 1 or cols < 1:
        raise ShapeMismatch(f"grid must be at least 1x1, got {rows}x{cols}")
    xs = np.linspace(bounds.x_min, bounds.x_max, cols) if cols > 1 else np.array([bounds.x_max])
    ys = np.linspace(bounds.y_min, bounds.y_max, rows) if rows > 1 else np.array([bounds.y_max])
    return xs, ys


def _as_points(points) -> np.ndarray:
    array = np.asarray(points, dtype=float).reshape(-1, 2)
    if array.shape[0] == 0:
        raise EmptyPoints("no points given")
    if not np.all(np.isfinite(array)):
        raise NonFiniteValue("points contain non-finite coordinates")
    return array


def ecdf_grid(points, rows: int, cols: int, bounds: Bounds) -> EcdfGrid:
    """
    Sample the bivariate ECDF on an inclusive rows x cols lattice

    Each point is binned at the first lattice column/row at or beyond it;
    cumulative sums over both axes then give the count of points with
    x <= x_j and y <= y_i.
    """
    pts = _as_points(points)
    xs, ys = lattice(bounds, rows, cols)

    col = np.searchsorted(xs, pts[:, 0], side="left")
    row = np.searchsorted(ys, pts[:, 1], side="left")
    inside = (col < cols) & (row < rows)
    hist = np.bincount(row[inside] * cols + col[inside], minlength=rows * cols).reshape(rows, cols)
    counts = hist.cumsum(axis=0).cumsum(axis=1)
    return EcdfGrid(counts / pts.shape[0], bounds)


def ecdf_rmse(a: EcdfGrid, b: EcdfGrid) -> float:
    """Root mean squared difference of two ECDF grids sampled on the same lattice"""
    if a.values.shape != b.values.shape or a.bounds != b.bounds:
        raise ShapeMismatch(
            f"grids differ: {a.values.shape} {a.bounds.as_tuple()} vs "
            f"{b.values.shape} {b.bounds.as_tuple()}"
        )
    return float(np.sqrt(np.mean((a.values - b.values) ** 2)))


def scott_bandwidth(points) -> Tuple[float, float]:
    """Per-axis Scott's rule for 2D data: sd * n^(-1/6)"""
    pts = _as_points(points)
    n = pts.shape[0]
    if n < 2:
        raise TooFewPoints("automatic bandwidth needs at least two points")
    sd = pts.std(axis=0, ddof=1)
    if np.any(sd <= 0):
        raise TooFewPoints("automatic bandwidth needs non-zero spread on both axes")
    factor = n ** (-1.0 / 6.0)
    return float(sd[0] * factor), float(sd[1] * factor)


def kde_grid(
    points,
    rows: int,
    cols: int,
    bounds: Bounds,
    bandwidth: Optional[Tuple[float, float]] = None,
) -> DensityGrid:
    """Product-Gaussian kernel density estimate evaluated on the lattice"""
    pts = _as_points(points)
    h_x, h_y = bandwidth if bandwidth is not None else scott_bandwidth(pts)
    if not (h_x > 0 and h_y > 0):
        raise TooFewPoints(f"bandwidth must be positive, got ({h_x}, {h_y})")
    xs, ys = lattice(bounds, rows, cols)

    kx = norm.pdf((xs[None, :] - pts[:, 0:1]) / h_x) / h_x  # (N, cols)
    ky = norm.pdf((ys[None, :] - pts[:, 1:2]) / h_y) / h_y  # (N, rows)
    values = ky.T @ kx / pts.shape[0]
    return DensityGrid(values, bounds, (float(h_x), float(h_y)))


# ---------------------------------------------------------------------------
# N-gram profiles

@dataclass(frozen=True)
class NGramProfile:
    k: int
    retained_fraction: float
    entries: Tuple[Tuple[NGram, int], ...]
    total_count: int

    def counts(self) -> Dict[NGram, int]:
        return dict(self.entries)


def ngram_profile(sequences: Sequence[Sequence[str]], k: int, P: float) -> NGramProfile:
    """
    Rank all 1..k-grams of sentinel-wrapped sequences and keep the top ones

    Ranking is count-descending with lexicographic ties (a prefix sorts
    before its extensions). The first M n-grams are kept where M is the
    largest value with a retained count sum <= P * total.
    """
    if k < 1:
        raise ShapeMismatch(f"k must be >= 1, got {k}")
    if not 0 < P <= 1:
        raise ShapeMismatch(f"P must be in (0, 1], got {P}")
    if not sequences:
        raise EmptyInput("no sequences to profile")

    counter: Counter = Counter()
    for sequence in sequences:
        if not sequence:
            raise EmptyInput("cannot profile an empty sequence")
        wrapped = (NONE_ACTIVITY, *sequence, NONE_ACTIVITY)
        for n in range(1, k + 1):
            for i in range(len(wrapped) - n + 1):
                counter[wrapped[i:i + n]] += 1

    ranked = sorted(counter.items(), key=lambda item: (-item[1], item[0]))
    total = sum(counter.values())
    limit = P * total

    kept: List[Tuple[NGram, int]] = []
    running = 0
    for ngram, count in ranked:
        if running + count > limit:
            break
        running += count
        kept.append((ngram, count))

    return NGramProfile(k=k, retained_fraction=P, entries=tuple(kept), total_count=total)


class ProfileChiSquare(NamedTuple):
    chi2: float
    matched: int
    model_only: int
    validation_only: int


def _matched(model: NGramProfile, validation: NGramProfile) -> Tuple[Dict, Dict, List[NGram]]:
    if model.k != validation.k or model.retained_fraction != validation.retained_fraction:
        raise ShapeMismatch(
            f"profiles built differently: k={model.k}/{validation.k}, "
            f"P={model.retained_fraction}/{validation.retained_fraction}"
        )
    m = model.counts()
    v = validation.counts()
    common = sorted(set(m) & set(v))
    if not common:
        raise NoOverlap("model and validation profiles share no n-gram")
    return m, v, common


def profile_chi_square(model: NGramProfile, validation: NGramProfile) -> ProfileChiSquare:
    """Scaled chi-square over the n-grams present in both profiles"""
    m, v, common = _matched(model, validation)
    result = scaled_chi_square(
        CountVector(common, [m[g] for g in common]),
        CountVector(common, [v[g] for g in common]),
    )
    return ProfileChiSquare(
        chi2=result.chi2,
        matched=len(common),
        model_only=len(m) - len(common),
        validation_only=len(v) - len(common),
    )


class NGramDiscrepancy(NamedTuple):
    ngram: NGram
    model_count: int
    expected_count: float
    contribution: float


def ngram_discrepancies(model: NGramProfile, validation: NGramProfile, top: int = 10) -> List[NGramDiscrepancy]:
    """Matched n-grams ordered by their share of the profile chi-square"""
    m, v, common = _matched(model, validation)
    f_m, s_v = _scaled_expected(m, v, common)
    contributions = (f_m - s_v) ** 2 / s_v

    rows = [
        NGramDiscrepancy(ngram, int(m[ngram]), float(expected), float(contribution))
        for ngram, expected, contribution in zip(common, s_v, contributions)
    ]
    rows.sort(key=lambda row: (-row.contribution, row.ngram))
    return rows[:top]
