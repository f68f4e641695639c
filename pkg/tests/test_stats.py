"""Pearson statistics: predictive power, split-half reliability, silhouette."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psyman.errors import AlignmentError, DegenerateInput, ShapeError
from psyman.rng import Xoshiro256StarStar
from psyman.stats import (
    CorrMatrix,
    PowerTable,
    correlation_matrix,
    pearson,
    predictive_power,
    silhouette,
    split_half_reliability,
    write_power_csv,
)
from psyman.tensor_io import RatingsTable


def pearson_oracle(x, y):
    """Direct covariance-formula evaluation, no clamping, float64."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    return float(np.sum(dx * dy) / np.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))


class TestPearson:
    def test_perfect_linear(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == 1.0

    def test_perfect_anti_linear(self):
        assert pearson([1, 2, 3], [3, 2, 1]) == -1.0

    def test_hand_value(self):
        """cov-sum 4, both variance-sums 5, so r = 4/5."""
        assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            pearson([1, 2, 3], [1, 2])

    def test_too_short(self):
        with pytest.raises(ShapeError):
            pearson([1.0], [2.0])

    def test_zero_variance(self):
        with pytest.raises(DegenerateInput):
            pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(DegenerateInput):
            pearson([1, 2, 3], [5, 5, 5])

    def test_matches_oracle_on_random_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            n = int(rng.integers(2, 65))
            x = rng.normal(size=n)
            y = rng.normal(size=n)
            assert pearson(x, y) == pytest.approx(pearson_oracle(x, y), abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=20)
        y = rng.normal(size=20)
        assert pearson(x, y) == pytest.approx(pearson(y, x), abs=1e-15)

    @given(
        st.integers(0, 2**32 - 1),
        st.floats(0.1, 50.0),
        st.floats(-100.0, 100.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_positive_affine_invariance(self, seed, a, b):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=12)
        y = rng.normal(size=12)
        assert pearson(a * x + b, y) == pytest.approx(pearson(x, y), abs=1e-12)

    def test_clamped_to_unit_interval(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            x = rng.normal(size=3)
            r = pearson(x, 2.0 * x + 1.0)
            assert -1.0 <= r <= 1.0


def make_table(values, ids=None, names=None):
    values = np.asarray(values, dtype=np.float64)
    ids = ids or tuple(f"img{i}" for i in range(values.shape[0]))
    names = names or tuple(f"attr{j}" for j in range(values.shape[1]))
    return RatingsTable(tuple(ids), tuple(names), values)


class TestPredictivePower:
    def test_identity_gives_ones(self):
        t = make_table([[1, 5], [2, 7], [3, 6], [4, 9]])
        table = predictive_power(t, t)
        np.testing.assert_array_equal(table.coefficients, [1.0, 1.0])

    def test_affine_reversal_gives_minus_ones(self):
        truth = make_table([[1, 5], [2, 7], [3, 6], [4, 9]])
        pred = make_table(10.0 - truth.values)
        np.testing.assert_array_equal(
            predictive_power(pred, truth).coefficients, [-1.0, -1.0]
        )

    def test_columnwise_oracle(self):
        pred = make_table([[1, 9], [4, 2], [2, 5], [8, 7]])
        truth = make_table([[2, 8], [3, 3], [1, 4], [9, 9]])
        got = predictive_power(pred, truth).coefficients
        for j in range(2):
            assert got[j] == pytest.approx(
                pearson(pred.values[:, j], truth.values[:, j]), abs=1e-15
            )

    def test_misaligned_ids_names_first_mismatch(self):
        a = make_table([[1, 2], [3, 4]], ids=("x", "y"))
        b = make_table([[1, 2], [3, 4]], ids=("x", "z"))
        with pytest.raises(AlignmentError, match="'y' != 'z'"):
            predictive_power(a, b)
        c = make_table([[1, 2], [3, 4]], names=("calm", "bold"))
        d = make_table([[1, 2], [3, 4]], names=("calm", "warm"))
        with pytest.raises(AlignmentError, match="'bold' != 'warm'"):
            predictive_power(c, d)

    def test_power_csv_format(self):
        table = PowerTable(("happy", "sad"), np.array([0.9123456, -0.25]))
        buf = io.StringIO()
        write_power_csv(table, buf)
        assert buf.getvalue() == "attribute,pearson_r\nhappy,0.912346\nsad,-0.250000\n"


class TestSplitHalf:
    def test_identical_raters_exactly_one(self):
        scores = np.tile([1.0, 5.0, 3.0, 2.0], (6, 1))
        assert split_half_reliability(scores, repeats=10, seed=42) == 1.0

    def test_two_raters_single_split_oracle(self):
        r1 = np.array([1.0, 2.0, 3.0, 4.0])
        r2 = r1[::-1].copy()
        got = split_half_reliability(np.stack([r1, r2]), repeats=7, seed=5)
        assert got == pytest.approx(pearson(r1, r2), abs=1e-15)

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        scores = rng.normal(size=(9, 6))
        a = split_half_reliability(scores, repeats=50, seed=123)
        b = split_half_reliability(scores, repeats=50, seed=123)
        assert a == b

    def test_odd_count_extra_rater_in_first_half(self):
        """Replicate the documented split protocol draw by draw."""
        rng_local = np.random.default_rng(1)
        scores = rng_local.normal(size=(5, 4))
        seed, repeats = 77, 3
        rng = Xoshiro256StarStar(seed)
        total = 0.0
        for _ in range(repeats):
            order = list(range(5))
            rng.shuffle(order)
            first = scores[order[:3]].mean(axis=0)
            second = scores[order[3:]].mean(axis=0)
            total += pearson(first, second)
        expected = total / repeats
        assert split_half_reliability(scores, repeats, seed) == pytest.approx(
            expected, abs=1e-15
        )

    def test_all_degenerate_splits_raise(self):
        scores = np.ones((4, 3))
        with pytest.raises(DegenerateInput):
            split_half_reliability(scores, repeats=5, seed=1)

    def test_shape_and_repeat_validation(self):
        with pytest.raises(ShapeError):
            split_half_reliability(np.ones((1, 4)), repeats=1, seed=0)
        with pytest.raises(ShapeError):
            split_half_reliability(np.ones((4, 1)), repeats=1, seed=0)
        with pytest.raises(ShapeError):
            split_half_reliability(np.random.default_rng(0).normal(size=(4, 4)), repeats=0, seed=0)


class TestCorrelationMatrix:
    def test_identical_columns(self):
        t = make_table([[1, 1], [2, 2], [3, 3]])
        m = correlation_matrix(t)
        assert m.values[0, 1] == 1.0

    def test_negated_column(self):
        t = make_table([[1, -1], [2, -2], [5, -5]])
        assert correlation_matrix(t).values[0, 1] == -1.0

    def test_hand_table_matches_pairwise_oracle(self):
        vals = np.array(
            [[1.0, 4.0, 2.0], [2.0, 3.0, 9.0], [3.0, 8.0, 4.0], [4.0, 5.0, 7.0]]
        )
        m = correlation_matrix(make_table(vals))
        for i in range(3):
            for j in range(3):
                want = 1.0 if i == j else pearson_oracle(vals[:, i], vals[:, j])
                assert m.values[i, j] == pytest.approx(want, abs=1e-12)

    def test_constant_column_names_attribute(self):
        t = make_table([[1, 7], [2, 7], [3, 7]], names=("ok", "flat"))
        with pytest.raises(DegenerateInput, match="flat"):
            correlation_matrix(t)

    def test_needs_two_attributes(self):
        with pytest.raises(ShapeError):
            correlation_matrix(make_table([[1.0], [2.0]]))

    def test_output_passes_type_invariants(self):
        rng = np.random.default_rng(5)
        t = make_table(rng.normal(size=(10, 4)))
        m = correlation_matrix(t)
        CorrMatrix(m.names, m.values)
        assert np.all(np.abs(m.values) <= 1.0 + 1e-15)


def silhouette_oracle(points, labels):
    pts = np.asarray(points, dtype=np.float64)
    labs = np.asarray(labels)
    n = len(pts)
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
    total = 0.0
    for i in range(n):
        own = [j for j in range(n) if labs[j] == labs[i] and j != i]
        if not own:
            continue
        a = np.mean([dist[i, j] for j in own])
        b = min(
            np.mean([dist[i, j] for j in range(n) if labs[j] == u])
            for u in set(labs.tolist())
            if u != labs[i]
        )
        if max(a, b) > 0:
            total += (b - a) / max(a, b)
    return total / n


class TestSilhouette:
    def test_tight_far_clusters_score_high(self):
        eps = 1e-3
        pts = np.array([[0, 0], [0, eps], [10, 10], [10, 10 + eps]])
        assert silhouette(pts, [0, 0, 1, 1]) > 0.9

    def test_all_identical_points(self):
        pts = np.zeros((4, 2))
        assert silhouette(pts, [0, 0, 1, 1]) == 0.0

    def test_planted_points_match_bruteforce(self):
        pts = np.array(
            [[0.0, 0.0], [1.0, 0.5], [0.5, 1.0], [5.0, 5.0], [6.0, 5.5], [5.5, 6.5]]
        )
        labs = [0, 0, 0, 1, 1, 1]
        assert silhouette(pts, labs) == pytest.approx(
            silhouette_oracle(pts, labs), abs=1e-12
        )

    def test_singleton_cluster_contributes_zero(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]])
        labs = [0, 0, 1]
        assert silhouette(pts, labs) == pytest.approx(
            silhouette_oracle(pts, labs), abs=1e-12
        )

    def test_single_cluster_raises(self):
        with pytest.raises(DegenerateInput):
            silhouette(np.random.default_rng(0).normal(size=(5, 2)), [1] * 5)

    def test_shape_validation(self):
        with pytest.raises(ShapeError):
            silhouette(np.zeros((2, 2)), [0, 1])
        with pytest.raises(ShapeError):
            silhouette(np.zeros((4, 2)), [0, 1, 0])
