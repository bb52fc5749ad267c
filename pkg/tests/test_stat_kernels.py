"""
Tests for the statistical kernels: KS, scaled chi-square, ECDF/KDE grids, n-grams
"""

import numpy as np
import pytest

from valfram.errors import (
    DegenerateBounds,
    DegenerateModel,
    DegenerateValidation,
    EmptyInput,
    EmptyPoints,
    EmptySample,
    NonFiniteValue,
    NoOverlap,
    ShapeMismatch,
    TooFewPoints,
)
from valfram.stat_kernels import (
    Bounds,
    CountVector,
    NGramProfile,
    ecdf_grid,
    ecdf_rmse,
    kde_grid,
    ks_statistic,
    ngram_discrepancies,
    ngram_profile,
    profile_chi_square,
    scaled_chi_square,
    scott_bandwidth,
)

UNIT = Bounds(0.0, 1.0, 0.0, 1.0)


def brute_force_ks(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    best = 0.0
    for x in np.concatenate([a, b]):
        right = abs(np.count_nonzero(a <= x) / a.size - np.count_nonzero(b <= x) / b.size)
        left = abs(np.count_nonzero(a < x) / a.size - np.count_nonzero(b < x) / b.size)
        best = max(best, right, left)
    return best


class TestKolmogorovSmirnov:
    def test_identical_samples(self):
        assert ks_statistic([1, 2, 3], [1, 2, 3]) == 0.0

    def test_disjoint_supports(self):
        assert ks_statistic([0, 1], [10, 11]) == 1.0

    def test_partial_overlap(self):
        assert ks_statistic([1, 2, 3, 4], [3, 4, 5, 6]) == 0.5

    def test_ties_are_exact(self):
        assert ks_statistic([1, 1, 2], [1, 2, 2]) == pytest.approx(1 / 3, abs=1e-15)

    def test_symmetric(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=50), rng.normal(0.3, size=70)
        assert ks_statistic(a, b) == ks_statistic(b, a)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            a = rng.integers(0, 15, size=rng.integers(1, 40))
            b = rng.integers(0, 15, size=rng.integers(1, 40))
            assert ks_statistic(a, b) == brute_force_ks(a, b)

    def test_matches_brute_force_at_scale(self):
        rng = np.random.default_rng(2016)
        for trial in range(1000):
            n, m = rng.integers(1, 201, size=2)
            if trial % 2:
                # rounded floats keep plenty of ties across and within samples
                a, b = np.round(rng.normal(0, 1, n), 1), np.round(rng.normal(0.2, 1.3, m), 1)
            else:
                a, b = rng.uniform(-3, 3, n), rng.integers(-3, 4, m).astype(float)
            assert ks_statistic(a, b) == brute_force_ks(a, b), trial

    def test_empty_sample(self):
        with pytest.raises(EmptySample):
            ks_statistic([], [1.0])

    def test_non_finite(self):
        with pytest.raises(NonFiniteValue):
            ks_statistic([1.0, float("inf")], [1.0])


class TestScaledChiSquare:
    def test_identical_proportions(self):
        result = scaled_chi_square(CountVector(["a", "b"], [30, 70]), CountVector(["a", "b"], [3, 7]))
        assert result.chi2 == 0.0
        assert result.dropped_model_mass == 0.0

    def test_hand_example(self):
        result = scaled_chi_square(CountVector(["a", "b"], [10, 10]), CountVector(["a", "b"], [1, 3]))
        assert result.chi2 == pytest.approx(25 / 5 + 25 / 15, abs=1e-9)
        assert result.dropped_model_mass == 0.0

    def test_labels_missing_from_validation_are_dropped(self):
        result = scaled_chi_square(CountVector(["a", "b"], [8, 2]), CountVector(["a"], [4]))
        assert result.chi2 == 0.0
        assert result.dropped_model_mass == pytest.approx(0.2, abs=1e-15)

    def test_zero_validation_counts_are_not_kept(self):
        result = scaled_chi_square(CountVector(["a", "b"], [5, 5]), CountVector(["a", "b"], [2, 0]))
        assert result.chi2 == 0.0
        assert result.dropped_model_mass == 0.5

    def test_validation_replication_invariance(self):
        model = CountVector(["a", "b", "c"], [12, 30, 7])
        base = scaled_chi_square(model, CountVector(["a", "b", "c"], [4, 5, 9])).chi2
        for r in (2, 3, 17):
            replicated = scaled_chi_square(model, CountVector(["a", "b", "c"], [4 * r, 5 * r, 9 * r])).chi2
            assert replicated == pytest.approx(base, abs=1e-9)

    def test_model_replication_linearity(self):
        validation = CountVector(["a", "b", "c"], [4, 5, 9])
        base = scaled_chi_square(CountVector(["a", "b", "c"], [12, 30, 7]), validation).chi2
        for r in (2, 5):
            scaled = scaled_chi_square(CountVector(["a", "b", "c"], [12 * r, 30 * r, 7 * r]), validation).chi2
            assert scaled == pytest.approx(r * base, abs=1e-9)

    def test_degenerate_validation(self):
        with pytest.raises(DegenerateValidation):
            scaled_chi_square(CountVector(["a"], [1]), CountVector(["a"], [0]))

    def test_degenerate_model(self):
        with pytest.raises(DegenerateModel):
            scaled_chi_square(CountVector(["a"], [0]), CountVector(["a"], [1]))

    def test_model_mass_only_outside_validation(self):
        with pytest.raises(DegenerateModel):
            scaled_chi_square(CountVector(["b"], [4]), CountVector(["a"], [1]))

    def test_count_vector_rejects_duplicates(self):
        with pytest.raises(ShapeMismatch):
            CountVector(["a", "a"], [1, 2])


class TestEcdfGrid:
    def test_point_at_minimal_corner(self):
        grid = ecdf_grid([(0.0, 0.0)], 2, 2, UNIT)
        assert grid.values.tolist() == [[1.0, 1.0], [1.0, 1.0]]

    def test_point_at_maximal_corner(self):
        grid = ecdf_grid([(1.0, 1.0)], 2, 2, UNIT)
        assert grid.values.tolist() == [[0.0, 0.0], [0.0, 1.0]]

    def test_single_point_rmse(self):
        a = ecdf_grid([(0.0, 0.0)], 2, 2, UNIT)
        b = ecdf_grid([(1.0, 1.0)], 2, 2, UNIT)
        assert ecdf_rmse(a, b) == pytest.approx(np.sqrt(3 / 4), abs=1e-9)
        assert ecdf_rmse(b, a) == ecdf_rmse(a, b)

    def test_monotone_and_complete(self):
        rng = np.random.default_rng(5)
        points = rng.uniform(-3, 9, size=(400, 2))
        bounds = Bounds.union(points)
        grid = ecdf_grid(points, 18, 31, bounds)
        assert grid.values.shape == (18, 31)
        assert np.all(np.diff(grid.values, axis=0) >= 0)
        assert np.all(np.diff(grid.values, axis=1) >= 0)
        assert grid.values[-1, -1] == 1.0
        assert grid.values.min() >= 0.0

    def test_counts_points_on_lattice_lines(self):
        # x <= x_j is inclusive
        grid = ecdf_grid([(0.5, 0.5)], 3, 3, UNIT)
        assert grid.values.tolist() == [[0.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.0, 1.0, 1.0]]

    def test_single_column_sits_at_maximum(self):
        grid = ecdf_grid([(0.2, 0.9), (0.7, 0.1)], 1, 1, UNIT)
        assert grid.values.tolist() == [[1.0]]

    def test_triangle_bound(self):
        rng = np.random.default_rng(9)
        sets = [rng.normal(i, 1.0, size=(100, 2)) for i in range(3)]
        bounds = Bounds.union(*sets)
        a, b, c = (ecdf_grid(s, 10, 10, bounds) for s in sets)
        assert ecdf_rmse(a, c) <= ecdf_rmse(a, b) + ecdf_rmse(b, c) + 1e-15

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            ecdf_rmse(ecdf_grid([(0.5, 0.5)], 2, 2, UNIT), ecdf_grid([(0.5, 0.5)], 2, 3, UNIT))

    def test_bounds_mismatch(self):
        other = Bounds(0.0, 2.0, 0.0, 1.0)
        with pytest.raises(ShapeMismatch):
            ecdf_rmse(ecdf_grid([(0.5, 0.5)], 2, 2, UNIT), ecdf_grid([(0.5, 0.5)], 2, 2, other))

    def test_empty_points(self):
        with pytest.raises(EmptyPoints):
            ecdf_grid([], 2, 2, UNIT)


class TestBounds:
    def test_union(self):
        assert Bounds.union([(0.0, 5.0)], [(3.0, -1.0), (1.0, 1.0)]).as_tuple() == (0.0, 3.0, -1.0, 5.0)

    def test_degenerate(self):
        with pytest.raises(DegenerateBounds):
            Bounds.union([(1.0, 1.0)], [(1.0, 4.0)])

    def test_min_extent_pads_flat_axes(self):
        bounds = Bounds.union([(5000.0, 5000.0)], [(5000.0, 7000.0)], min_extent=1.0)
        assert bounds.as_tuple() == (4999.5, 5000.5, 5000.0, 7000.0)
        assert Bounds.union([(0.0, 0.0), (3.0, 4.0)], min_extent=1.0).as_tuple() == (0.0, 3.0, 0.0, 4.0)

    def test_reversed(self):
        with pytest.raises(DegenerateBounds):
            Bounds(1.0, 0.0, 0.0, 1.0)


class TestKdeGrid:
    def test_peaks_at_data(self):
        grid = kde_grid([(0.0, 0.0), (10.0, 10.0)], 11, 11, Bounds(0.0, 10.0, 0.0, 10.0), (1.0, 1.0))
        assert np.unravel_index(np.argmax(grid.values), grid.values.shape) in {(0, 0), (10, 10)}
        assert grid.values[10, 10] == pytest.approx(grid.values[0, 0], rel=1e-12)

    def test_symmetric_under_column_reversal(self):
        points = [(2.0, 3.0), (8.0, 3.0), (4.0, 6.0), (6.0, 6.0)]
        grid = kde_grid(points, 9, 11, Bounds(0.0, 10.0, 0.0, 10.0))
        np.testing.assert_allclose(grid.values, grid.values[:, ::-1], atol=1e-9)

    def test_integrates_to_one(self):
        rng = np.random.default_rng(21)
        points = rng.normal(0.0, 1.0, size=(1000, 2))
        grid = kde_grid(points, 101, 101, Bounds(-10.0, 10.0, -10.0, 10.0))
        cell_area = (20 / 100) ** 2
        assert grid.values.sum() * cell_area == pytest.approx(1.0, abs=0.05)
        assert np.all(grid.values >= 0)

    def test_scott_rule(self):
        points = np.array([(0.0, 0.0), (2.0, 4.0)])
        h_x, h_y = scott_bandwidth(points)
        assert h_x == pytest.approx(np.sqrt(2) * 2 ** (-1 / 6))
        assert h_y == pytest.approx(2 * np.sqrt(2) * 2 ** (-1 / 6))

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            kde_grid([(1.0, 1.0)], 4, 4, UNIT)

    def test_zero_spread(self):
        with pytest.raises(TooFewPoints):
            kde_grid([(0.5, 0.1), (0.5, 0.9)], 4, 4, UNIT)


class TestNGramProfile:
    SEQUENCE = ["sleep", "work", "leisure", "sleep"]

    def test_bigrams_of_example_schedule(self):
        profile = ngram_profile([self.SEQUENCE], 2, 1.0)
        bigrams = {ngram for ngram, _ in profile.entries if len(ngram) == 2}
        assert bigrams == {
            ("none", "sleep"), ("sleep", "work"), ("work", "leisure"),
            ("leisure", "sleep"), ("sleep", "none"),
        }

    def test_unigram_counts_and_order(self):
        profile = ngram_profile([self.SEQUENCE], 1, 1.0)
        assert profile.entries == (
            (("none",), 2), (("sleep",), 2), (("leisure",), 1), (("work",), 1),
        )
        assert profile.total_count == 6

    def test_no_truncation_at_full_fraction(self):
        profile = ngram_profile([self.SEQUENCE, ["sleep"]], 3, 1.0)
        assert sum(count for _, count in profile.entries) == profile.total_count

    def test_truncation_rule(self):
        # none:2, a:1 out of 3
        assert ngram_profile([["a"]], 1, 0.5).entries == ()
        assert ngram_profile([["a"]], 1, 0.7).entries == ((("none",), 2),)

    def test_prefix_sorts_first_on_ties(self):
        profile = ngram_profile([["a", "b"]], 2, 1.0)
        ngrams = [ngram for ngram, _ in profile.entries]
        assert ngrams.index(("a",)) < ngrams.index(("a", "b"))

    def test_sorted_and_bounded(self):
        rng = np.random.default_rng(2)
        sequences = [list(rng.choice(["a", "b", "c"], size=rng.integers(1, 6))) for _ in range(40)]
        profile = ngram_profile(sequences, 4, 0.8)
        keys = [(-count, ngram) for ngram, count in profile.entries]
        assert keys == sorted(keys)
        assert sum(count for _, count in profile.entries) <= 0.8 * profile.total_count
        assert all(1 <= len(ngram) <= 4 for ngram, _ in profile.entries)

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            ngram_profile([], 2, 1.0)
        with pytest.raises(EmptyInput):
            ngram_profile([[]], 2, 1.0)


def _profile(counts):
    entries = tuple(sorted(((tuple(k), v) for k, v in counts.items()), key=lambda e: (-e[1], e[0])))
    return NGramProfile(k=1, retained_fraction=1.0, entries=entries, total_count=sum(counts.values()))


class TestProfileChiSquare:
    def test_hand_example(self):
        result = profile_chi_square(_profile({"a": 10, "b": 10}), _profile({"a": 1, "b": 3}))
        assert result.chi2 == pytest.approx(6.6667, abs=1e-4)
        assert (result.matched, result.model_only, result.validation_only) == (2, 0, 0)

    def test_against_itself(self):
        profile = ngram_profile([["sleep", "work", "sleep"], ["sleep"]], 3, 0.9)
        result = profile_chi_square(profile, profile)
        assert result.chi2 == 0.0
        assert result.model_only == result.validation_only == 0

    def test_unmatched_counts(self):
        result = profile_chi_square(_profile({"a": 4, "b": 2}), _profile({"a": 2, "c": 5}))
        assert (result.matched, result.model_only, result.validation_only) == (1, 1, 1)
        assert result.chi2 == 0.0

    def test_disjoint(self):
        with pytest.raises(NoOverlap):
            profile_chi_square(_profile({"a": 1}), _profile({"b": 1}))

    def test_profiles_built_differently(self):
        with pytest.raises(ShapeMismatch):
            profile_chi_square(ngram_profile([["a"]], 1, 1.0), ngram_profile([["a"]], 2, 1.0))

    def test_discrepancies_ranked_by_contribution(self):
        rows = ngram_discrepancies(_profile({"a": 10, "b": 10}), _profile({"a": 1, "b": 3}), top=1)
        assert len(rows) == 1
        assert rows[0].ngram == ("a",)
        assert rows[0].expected_count == 5.0
        assert rows[0].contribution == pytest.approx(5.0)
