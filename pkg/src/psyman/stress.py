"""Distance-preserving embedding by squared-stress minimization.

The objective is the sum over a tracked pair set of squared differences
between high-dimensional and embedded Euclidean distances. Gradient descent
on that sum reproduces global geometry directly; an optional symmetrized
k-nearest-neighbor pair restriction shifts the emphasis toward local
structure. Pairs whose embedded distance is exactly zero contribute no
gradient that iteration (the direction is undefined there).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import K
from .embedding import Embedding
from .errors import ConfigError, DataError, OptimizationError, ShapeError
from .rng import Xoshiro256StarStar

__all__ = [
    "StressConfig",
    "PairSet",
    "build_pairs",
    "stress",
    "stress_gradient",
    "run_stress",
]

_INIT_STD = 1e-2


@dataclass(frozen=True)
class StressConfig:
    """Settings for run_stress. neighbor_k = None tracks all point pairs."""

    out_dims: int = 2
    iterations: int = 500
    learning_rate: float = 0.01
    neighbor_k: int | None = None
    seed: int = 42

    def __post_init__(self):
        if self.out_dims not in (2, 3):
            raise ConfigError(f"out_dims must be 2 or 3, got {self.out_dims}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if not (self.learning_rate > 0.0):
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.neighbor_k is not None and self.neighbor_k < 1:
            raise ConfigError(f"neighbor_k must be >= 1, got {self.neighbor_k}")


@dataclass(frozen=True)
class PairSet:
    """Point-index pairs (i < j) with their high-dimensional distances."""

    ii: np.ndarray = field(repr=False)
    jj: np.ndarray = field(repr=False)
    d_high: np.ndarray = field(repr=False)

    def __post_init__(self):
        ii = np.ascontiguousarray(self.ii, dtype=np.int64)
        jj = np.ascontiguousarray(self.jj, dtype=np.int64)
        d = np.ascontiguousarray(self.d_high, dtype=np.float64)
        if not (ii.ndim == jj.ndim == d.ndim == 1) or not (
            ii.shape == jj.shape == d.shape
        ):
            raise ShapeError("ii, jj, and d_high must be 1-D arrays of equal length")
        if ii.shape[0] == 0:
            raise DataError("pair set must be nonempty")
        if np.any(ii >= jj) or np.any(ii < 0):
            raise DataError("pairs must satisfy 0 <= i < j")
        if np.any(d < 0.0) or not np.all(np.isfinite(d)):
            raise DataError("high-dimensional distances must be finite and >= 0")
        for arr, name in ((ii, "ii"), (jj, "jj"), (d, "d_high")):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.ii.shape[0])


def build_pairs(data, neighbor_k: int | None = None) -> PairSet:
    """Euclidean distances for all i < j pairs, or for the symmetrized
    k-nearest-neighbor edge set when neighbor_k is given.

    Symmetrized means the pair (i, j) is kept when j is among i's k nearest
    neighbors or i is among j's. Neighbor ties break toward the smaller
    point index.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ShapeError(f"data must be (n >= 2, D), got {x.shape}")
    n = x.shape[0]
    dist = np.sqrt(np.maximum(K.pairwise_sq_dists(x), 0.0))
    if neighbor_k is None:
        ii, jj = np.triu_indices(n, k=1)
        return PairSet(ii, jj, dist[ii, jj])
    if not 1 <= neighbor_k <= n - 1:
        raise ConfigError(f"neighbor_k must be in [1, {n - 1}], got {neighbor_k}")
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")
        nearest = order[order != i][:neighbor_k]
        adj[i, nearest] = True
    adj |= adj.T
    ii, jj = np.nonzero(np.triu(adj, k=1))
    return PairSet(ii, jj, dist[ii, jj])


def stress(pairs: PairSet, low_coords) -> float:
    """Sum of (d_high - d_low)^2 over the pair set."""
    y = _check_coords(pairs, low_coords)
    diff = y[pairs.ii] - y[pairs.jj]
    d_low = np.sqrt(np.einsum("md,md->m", diff, diff))
    return float(np.sum((pairs.d_high - d_low) ** 2))


def stress_gradient(pairs: PairSet, low_coords) -> np.ndarray:
    """Analytic stress gradient; zero-distance pairs are skipped."""
    y = _check_coords(pairs, low_coords)
    grad, _ = K.stress_forces(pairs.ii, pairs.jj, pairs.d_high, y)
    return grad


def _check_coords(pairs: PairSet, low_coords) -> np.ndarray:
    y = np.ascontiguousarray(low_coords, dtype=np.float64)
    if y.ndim != 2:
        raise ShapeError(f"low_coords must be 2-D, got {y.shape}")
    if int(pairs.jj.max()) >= y.shape[0]:
        raise ShapeError(
            f"pair index {int(pairs.jj.max())} out of range for {y.shape[0]} points"
        )
    return y


def run_stress(data, cfg: StressConfig, init=None) -> Embedding:
    """Embed rows of `data` by plain gradient descent on the stress sum.

    Coordinates start from a seeded Gaussian (std 1e-2) unless `init`
    supplies an explicit (n, out_dims) starting layout. The objective at
    every iteration is recorded in the returned Embedding's trace.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 3:
        raise ShapeError(f"data must be (n >= 3, D), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("data must be finite")
    n = x.shape[0]
    pairs = build_pairs(x, cfg.neighbor_k)
    if init is not None:
        coords = np.array(init, dtype=np.float64)
        if coords.shape != (n, cfg.out_dims):
            raise ShapeError(
                f"init must have shape {(n, cfg.out_dims)}, got {coords.shape}"
            )
    else:
        rng = Xoshiro256StarStar(cfg.seed)
        coords = _INIT_STD * rng.normals(n * cfg.out_dims).reshape(n, cfg.out_dims)
    trace: list[tuple[int, float]] = []
    for it in range(cfg.iterations):
        grad, objective = K.stress_forces(pairs.ii, pairs.jj, pairs.d_high, coords)
        trace.append((it, objective))
        coords -= cfg.learning_rate * grad
        if not np.all(np.isfinite(coords)):
            raise OptimizationError("stress descent produced non-finite coordinates", it)
    final = stress(pairs, coords)
    trace.append((cfg.iterations, final))
    return Embedding(coords, final, tuple(trace))
