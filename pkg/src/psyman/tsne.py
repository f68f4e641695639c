"""Exact t-SNE (van der Maaten & Hinton, 2008 variant).

Pipeline: per-point Gaussian bandwidths calibrated by binary search so the
conditional distribution's perplexity (2 to the Shannon entropy) hits the
target, symmetrized joint probabilities P, Student-t low-dimensional
affinities Q, and gradient descent on KL(P||Q) with momentum, early
exaggeration, and per-iteration centering. Affinities are dense O(n^2);
fine for a few thousand points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import K
from .embedding import Embedding
from .errors import ConfigError, DataError, DegenerateInput, OptimizationError, ShapeError
from .rng import Xoshiro256StarStar

_PERPLEXITY_TOL = 1e-4
_MAX_BISECTIONS = 100
_MAX_BRACKET_DOUBLINGS = 64
_Q_FLOOR = 1e-12
_MOMENTUM_SWITCH_ITER = 250


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    out_dims: int = 2
    iterations: int = 1000
    learning_rate: float = 200.0
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    exaggeration_factor: float = 12.0
    exaggeration_iters: int = 250
    seed: int = 42

    def __post_init__(self):
        if self.perplexity <= 1.0:
            raise ConfigError(f"perplexity must exceed 1, got {self.perplexity}")
        if self.out_dims not in (2, 3):
            raise ConfigError(f"out_dims must be 2 or 3, got {self.out_dims}")
        if self.learning_rate <= 0.0:
            raise ConfigError("learning_rate must be positive")
        if self.exaggeration_factor < 1.0:
            raise ConfigError("exaggeration_factor must be >= 1")
        if not 0 <= self.exaggeration_iters < self.iterations:
            raise ConfigError("need 0 <= exaggeration_iters < iterations")


@dataclass(frozen=True)
class Affinities:
    """Symmetric joint probabilities: zero diagonal, nonnegative, unit sum."""

    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.ascontiguousarray(self.p, dtype=np.float64)
        n = p.shape[0]
        if p.ndim != 2 or p.shape != (n, n):
            raise ShapeError(f"affinities must be square, got {p.shape}")
        if np.max(np.abs(p - p.T), initial=0.0) > 1e-12:
            raise ShapeError("affinities must be symmetric")
        if np.max(np.abs(np.diag(p)), initial=0.0) != 0.0:
            raise ShapeError("affinity diagonal must be zero")
        if np.any(p < 0.0):
            raise DataError("affinities must be nonnegative")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise DataError(f"affinities must sum to 1, got {float(p.sum())}")
        p.flags.writeable = False
        object.__setattr__(self, "p", p)


def _row_probs_entropy(sq_row: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    # Gaussian row with precision beta = 1/(2 sigma^2); shift by the row min
    # for exp stability (cancels after normalization).
    shifted = sq_row - sq_row.min()
    w = np.exp(-beta * shifted)
    p = w / w.sum()
    nz = p > 0.0
    entropy_bits = float(-np.sum(p[nz] * np.log2(p[nz])))
    return p, entropy_bits


def conditional_probs(sq_dists, perplexity: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-row Gaussian neighbor probabilities calibrated to a perplexity.

    Returns (p, sigmas) where row i of p sums to 1 with zero diagonal and
    2**H(p_i) matches the target within 1e-4 wherever that is achievable.
    """
    d = np.asarray(sq_dists, dtype=np.float64)
    n = d.shape[0]
    if d.ndim != 2 or d.shape != (n, n):
        raise ShapeError(f"squared distances must be square, got {d.shape}")
    if perplexity >= n:
        raise ConfigError(f"perplexity {perplexity} must be < n = {n}")
    target_bits = np.log2(perplexity)
    p = np.zeros((n, n))
    sigmas = np.empty(n)
    idx = np.arange(n)
    for i in range(n):
        row = d[i, idx != i]
        if not np.all(np.isfinite(row)):
            raise DegenerateInput(f"row {i} contains non-finite distances")

        def entropy_at(beta: float) -> float:
            return _row_probs_entropy(row, beta)[1]

        # Entropy decreases in beta; expand a bracket around the target
        # before bisecting. Rows that cannot reach the target (for example
        # all-equidistant rows, whose entropy is constant in beta) fall
        # through with the closest achievable distribution.
        beta = 1.0
        if entropy_at(beta) > target_bits:
            lo = beta
            for _ in range(_MAX_BRACKET_DOUBLINGS):
                beta *= 2.0
                if entropy_at(beta) <= target_bits:
                    break
                lo = beta
            hi = beta
        else:
            hi = beta
            for _ in range(_MAX_BRACKET_DOUBLINGS):
                beta *= 0.5
                if entropy_at(beta) > target_bits:
                    break
                hi = beta
            lo = beta
        for _ in range(_MAX_BISECTIONS):
            beta = 0.5 * (lo + hi)
            h = entropy_at(beta)
            if abs(2.0**h - perplexity) <= _PERPLEXITY_TOL:
                break
            if h > target_bits:
                lo = beta
            else:
                hi = beta
        probs, _ = _row_probs_entropy(row, beta)
        p[i, idx != i] = probs
        sigmas[i] = np.sqrt(0.5 / beta)
    return p, sigmas


def joint_probs(cond: np.ndarray) -> Affinities:
    """Symmetrize conditionals into joint probabilities (p_ji + p_ij) / (2n)."""
    c = np.asarray(cond, dtype=np.float64)
    n = c.shape[0]
    if c.ndim != 2 or c.shape != (n, n):
        raise ShapeError(f"conditional matrix must be square, got {c.shape}")
    if np.max(np.abs(np.diag(c)), initial=0.0) != 0.0:
        raise DataError("conditional diagonal must be zero")
    if np.max(np.abs(c.sum(axis=1) - 1.0), initial=0.0) > 1e-6:
        raise DataError("each conditional row must sum to 1")
    return Affinities((c + c.T) / (2.0 * n))


def low_dim_affinities(coords) -> np.ndarray:
    """Student-t (1 degree of freedom) affinities q_ij of the embedding."""
    y = np.asarray(coords, dtype=np.float64)
    if y.ndim != 2 or y.shape[0] < 2:
        raise ShapeError(f"coords must be (n >= 2, d), got {y.shape}")
    w = 1.0 / (1.0 + K.pairwise_sq_dists(y))
    np.fill_diagonal(w, 0.0)
    return w / w.sum()


def kl_divergence(p, q) -> float:
    """KL(P||Q) over off-diagonal entries; p_ij = 0 terms contribute zero.

    q entries are floored at 1e-12 for log stability; an exact q = 0 where
    p > 0 is a DataError.
    """
    p_arr = p.p if isinstance(p, Affinities) else np.asarray(p, dtype=np.float64)
    q_arr = np.asarray(q, dtype=np.float64)
    if p_arr.shape != q_arr.shape:
        raise ShapeError(f"shape mismatch: {p_arr.shape} vs {q_arr.shape}")
    mask = p_arr > 0.0
    np.fill_diagonal(mask, False)
    if np.any(q_arr[mask] <= 0.0):
        raise DataError("q is zero where p is positive")
    qv = np.maximum(q_arr[mask], _Q_FLOOR)
    return float(np.sum(p_arr[mask] * np.log(p_arr[mask] / qv)))


def kl_gradient(p, coords) -> np.ndarray:
    """Analytic gradient of KL(P||Q) with respect to the coordinates."""
    p_arr = p.p if isinstance(p, Affinities) else np.asarray(p, dtype=np.float64)
    grad, _ = K.tsne_forces(p_arr, np.asarray(coords, dtype=np.float64), False)
    return grad


def run_tsne(data, cfg: TsneConfig) -> Embedding:
    """Embed rows of `data` by minimizing KL(P||Q).

    Coordinates start from a seeded Gaussian (std 1e-4), P is multiplied by
    the exaggeration factor for the first exaggeration_iters iterations, and
    momentum switches from early to late at iteration 250. Coordinates are
    re-centered every iteration. The returned final objective is the KL
    against the unexaggerated P.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 4:
        raise ShapeError(f"data must be (n >= 4, D), got {x.shape}")
    n = x.shape[0]
    if cfg.perplexity >= n:
        raise ConfigError(f"perplexity {cfg.perplexity} must be < n = {n}")

    cond, _ = conditional_probs(K.pairwise_sq_dists(x), cfg.perplexity)
    p = joint_probs(cond).p

    rng = Xoshiro256StarStar(cfg.seed)
    coords = np.array(rng.normals(n * cfg.out_dims, sigma=1e-4)).reshape(n, cfg.out_dims)
    velocity = np.zeros_like(coords)
    trace: list[tuple[int, float]] = []
    for it in range(cfg.iterations):
        exaggerating = it < cfg.exaggeration_iters
        p_eff = p * cfg.exaggeration_factor if exaggerating else p
        want_kl = it == cfg.exaggeration_iters or it == cfg.iterations - 1
        grad, _ = K.tsne_forces(p_eff, coords, False)
        momentum = cfg.momentum_early if it < _MOMENTUM_SWITCH_ITER else cfg.momentum_late
        velocity = momentum * velocity - cfg.learning_rate * grad
        coords = coords + velocity
        coords = coords - coords.mean(axis=0)
        if not np.all(np.isfinite(coords)):
            raise OptimizationError("coordinates overflowed", iteration=it)
        if want_kl:
            _, kl = K.tsne_forces(p, coords, True)
            trace.append((it, kl))
    final_kl = trace[-1][1]
    return Embedding(coords, final_kl, tuple(trace))
