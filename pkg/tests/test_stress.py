"""Squared-stress embedding: pair sets, objective, gradient, descent."""

import numpy as np
import pytest

from psyman.errors import ConfigError, DataError, ShapeError
from psyman.stress import (
    PairSet,
    StressConfig,
    build_pairs,
    run_stress,
    stress,
    stress_gradient,
)


def stress_oracle(pairs, coords):
    total = 0.0
    for i, j, dh in zip(pairs.ii, pairs.jj, pairs.d_high):
        dl = float(np.sqrt(np.sum((coords[i] - coords[j]) ** 2)))
        total += (dh - dl) ** 2
    return total


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            StressConfig(out_dims=1)
        with pytest.raises(ConfigError):
            StressConfig(iterations=0)
        with pytest.raises(ConfigError):
            StressConfig(learning_rate=-0.1)
        with pytest.raises(ConfigError):
            StressConfig(neighbor_k=0)


class TestPairSet:
    def test_ordering_enforced(self):
        with pytest.raises(DataError):
            PairSet(np.array([1]), np.array([1]), np.array([2.0]))
        with pytest.raises(DataError):
            PairSet(np.array([-1]), np.array([0]), np.array([2.0]))

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            PairSet(np.array([], dtype=int), np.array([], dtype=int), np.array([]))

    def test_distances_validated(self):
        with pytest.raises(DataError):
            PairSet(np.array([0]), np.array([1]), np.array([-1.0]))
        with pytest.raises(DataError):
            PairSet(np.array([0]), np.array([1]), np.array([np.inf]))


class TestBuildPairs:
    def test_all_pairs_count_and_distances(self):
        pts = np.array([[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]])
        pairs = build_pairs(pts)
        assert len(pairs) == 3
        got = dict(zip(zip(pairs.ii.tolist(), pairs.jj.tolist()), pairs.d_high))
        assert got[(0, 1)] == pytest.approx(5.0, abs=1e-12)
        assert got[(0, 2)] == pytest.approx(10.0, abs=1e-12)
        assert got[(1, 2)] == pytest.approx(5.0, abs=1e-12)

    def test_knn_restriction_symmetrized(self):
        # Chain 0-1-2-3 on a line; k=1 keeps each point's nearest neighbor,
        # then symmetrization keeps (i, j) if either side nominated it.
        pts = np.array([[0.0], [1.0], [2.1], [3.3]])
        pairs = build_pairs(pts, neighbor_k=1)
        kept = set(zip(pairs.ii.tolist(), pairs.jj.tolist()))
        assert kept == {(0, 1), (1, 2), (2, 3)}

    def test_knn_range_validation(self):
        pts = np.zeros((4, 2))
        with pytest.raises(ConfigError):
            build_pairs(pts, neighbor_k=4)

    def test_knn_at_max_equals_all_pairs(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(6, 3))
        full = build_pairs(pts)
        knn = build_pairs(pts, neighbor_k=5)
        assert len(full) == len(knn) == 15
        np.testing.assert_array_equal(full.ii, knn.ii)
        np.testing.assert_allclose(full.d_high, knn.d_high, atol=1e-12)


class TestStressValue:
    def test_exact_embedding_is_zero(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
        pairs = build_pairs(pts)
        assert stress(pairs, pts) == 0.0

    def test_two_point_hand_value(self):
        pairs = PairSet(np.array([0]), np.array([1]), np.array([3.0]))
        coords = np.array([[0.0, 0.0], [1.0, 0.0]])
        assert stress(pairs, coords) == pytest.approx(4.0, abs=1e-12)

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(9)
        pts = rng.normal(size=(5, 6))
        pairs = build_pairs(pts)
        coords = rng.normal(size=(5, 2))
        assert stress(pairs, coords) == pytest.approx(
            stress_oracle(pairs, coords), abs=1e-10
        )

    def test_nonnegative(self):
        rng = np.random.default_rng(10)
        pairs = build_pairs(rng.normal(size=(6, 4)))
        for _ in range(10):
            assert stress(pairs, rng.normal(size=(6, 2))) >= 0.0


class TestStressGradient:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(11)
        pts = rng.normal(size=(4, 5))
        pairs = build_pairs(pts)
        coords = rng.normal(size=(4, 2))
        grad = stress_gradient(pairs, coords)
        h = 1e-5
        fd = np.zeros_like(coords)
        for i in range(4):
            for d in range(2):
                up = coords.copy()
                up[i, d] += h
                down = coords.copy()
                down[i, d] -= h
                fd[i, d] = (stress(pairs, up) - stress(pairs, down)) / (2 * h)
        rel = np.linalg.norm(grad - fd) / np.linalg.norm(fd)
        assert rel <= 1e-4

    def test_zero_distance_pair_skipped(self):
        pairs = PairSet(np.array([0]), np.array([1]), np.array([2.0]))
        coords = np.zeros((2, 2))
        np.testing.assert_array_equal(stress_gradient(pairs, coords), np.zeros((2, 2)))

    def test_zero_at_exact_embedding(self):
        pts = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 1.5]])
        pairs = build_pairs(pts)
        np.testing.assert_allclose(stress_gradient(pairs, pts), 0.0, atol=1e-12)


class TestRunStress:
    def test_identity_fixed_point(self):
        """Embedding 2-D data into 2-D starting from itself must not move."""
        rng = np.random.default_rng(13)
        pts = rng.normal(size=(5, 2))
        cfg = StressConfig(iterations=50, learning_rate=0.01)
        emb = run_stress(pts, cfg, init=pts)
        assert emb.final_objective == 0.0
        np.testing.assert_array_equal(emb.coords, pts)

    def test_collinear_points_embed_exactly(self):
        pts = np.zeros((3, 5))
        pts[1, 0] = 1.0
        pts[2, 0] = 2.0
        cfg = StressConfig(iterations=5000, learning_rate=0.01, seed=7)
        emb = run_stress(pts, cfg)
        assert emb.final_objective <= 1e-4

    def test_deterministic(self):
        rng = np.random.default_rng(15)
        pts = rng.normal(size=(6, 4))
        cfg = StressConfig(iterations=100, learning_rate=0.005, seed=3)
        a = run_stress(pts, cfg)
        b = run_stress(pts, cfg)
        assert a.coords.tobytes() == b.coords.tobytes()
        assert a.objective_trace == b.objective_trace

    def test_trace_non_increasing_at_small_rate(self):
        rng = np.random.default_rng(16)
        pts = rng.normal(size=(8, 5))
        cfg = StressConfig(iterations=300, learning_rate=0.01, seed=1)
        emb = run_stress(pts, cfg)
        values = [v for _, v in emb.objective_trace]
        assert all(values[i + 1] <= values[i] + 1e-12 for i in range(len(values) - 1))

    def test_rigid_motion_leaves_stress_unchanged(self):
        rng = np.random.default_rng(17)
        pts = rng.normal(size=(6, 4))
        pairs = build_pairs(pts)
        cfg = StressConfig(iterations=200, learning_rate=0.01, seed=2)
        emb = run_stress(pts, cfg)
        theta = 1.1
        rot = np.array(
            [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
        )
        moved = emb.coords @ rot.T + np.array([3.0, -7.0])
        assert abs(stress(pairs, moved) - emb.final_objective) < 1e-9

    def test_input_validation(self):
        cfg = StressConfig(iterations=10)
        with pytest.raises(ShapeError):
            run_stress(np.zeros((2, 3)), cfg)
        with pytest.raises(DataError):
            run_stress(np.array([[0.0, np.nan], [1.0, 1.0], [2.0, 2.0]]), cfg)
        with pytest.raises(ShapeError):
            run_stress(np.random.default_rng(0).normal(size=(4, 3)), cfg,
                       init=np.zeros((4, 3)))

    def test_trace_covers_every_iteration(self):
        pts = np.random.default_rng(18).normal(size=(4, 3))
        cfg = StressConfig(iterations=25, learning_rate=0.01)
        emb = run_stress(pts, cfg)
        assert [it for it, _ in emb.objective_trace] == list(range(26))
        assert emb.objective_trace[-1][1] == emb.final_objective
