"""Pearson correlation machinery.

Covers per-attribute predictive power (model vs. human scores), split-half
rater reliability, full attribute correlation matrices, and the silhouette
score used to quantify cluster separation in embeddings. All accumulation
is float64 regardless of input storage width.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .backend import K
from .errors import AlignmentError, DegenerateInput, ShapeError
from .rng import Xoshiro256StarStar
from .tensor_io import RatingsTable


@dataclass(frozen=True)
class CorrMatrix:
    """Symmetric attribute-by-attribute Pearson matrix with unit diagonal."""

    names: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        m = len(self.names)
        if vals.shape != (m, m):
            raise ShapeError(f"matrix shape {vals.shape} does not match {m} names")
        if np.max(np.abs(vals - vals.T), initial=0.0) > 1e-12:
            raise ShapeError("correlation matrix is not symmetric")
        if np.max(np.abs(np.diag(vals) - 1.0), initial=0.0) > 1e-12:
            raise ShapeError("correlation matrix diagonal deviates from 1")
        vals.flags.writeable = False
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class PowerTable:
    """One predictive-power coefficient per attribute."""

    attribute_names: tuple[str, ...]
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        coefs = np.ascontiguousarray(self.coefficients, dtype=np.float64)
        if coefs.shape != (len(self.attribute_names),):
            raise ShapeError("one coefficient per attribute required")
        if not np.all(np.isfinite(coefs)):
            raise ShapeError("coefficients must be finite")
        coefs.flags.writeable = False
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))
        object.__setattr__(self, "coefficients", coefs)


def write_power_csv(table: PowerTable, sink) -> None:
    """CSV form: header ``attribute,pearson_r``, 6 decimal places."""
    if isinstance(sink, str):
        with open(sink, "w", encoding="utf-8", newline="") as fh:
            write_power_csv(table, fh)
            return
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(("attribute", "pearson_r"))
    for name, r in zip(table.attribute_names, table.coefficients):
        writer.writerow((name, f"{r:.6f}"))


def pearson(x, y) -> float:
    """Pearson correlation coefficient, clamped to [-1, 1].

    Raises ShapeError on length mismatch or fewer than two samples and
    DegenerateInput when either argument has zero variance.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ShapeError(f"pearson needs equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ShapeError("pearson needs at least 2 samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sum(dx * dx))
    sy = float(np.sum(dy * dy))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateInput("zero variance input to pearson")
    r = float(np.sum(dx * dy)) / np.sqrt(sx * sy)
    return min(1.0, max(-1.0, r))


def predictive_power(pred: RatingsTable, truth: RatingsTable) -> PowerTable:
    """Per-attribute Pearson between predicted and ground-truth columns."""
    for label, a, b in (
        ("image ids", pred.image_ids, truth.image_ids),
        ("attribute names", pred.attribute_names, truth.attribute_names),
    ):
        if a != b:
            first = next(
                (f"{x!r} != {y!r} at index {i}" for i, (x, y) in enumerate(zip(a, b)) if x != y),
                f"lengths {len(a)} != {len(b)}",
            )
            raise AlignmentError(f"misaligned {label}: {first}")
    coefs = np.empty(len(pred.attribute_names))
    for j in range(len(pred.attribute_names)):
        coefs[j] = pearson(pred.values[:, j], truth.values[:, j])
    return PowerTable(pred.attribute_names, coefs)


def split_half_reliability(rater_scores, repeats: int, seed: int) -> float:
    """Mean Pearson between item means of two random rater halves.

    Raters are split by a seeded Fisher-Yates shuffle each repeat; an odd
    rater joins the first half. Repeats whose half-means are degenerate
    (zero variance) are skipped; the mean is over surviving repeats. The
    reported value is the plain mean, without Spearman-Brown correction.
    """
    scores = np.asarray(rater_scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] < 2 or scores.shape[1] < 2:
        raise ShapeError(f"need at least 2 raters x 2 items, got {scores.shape}")
    if repeats < 1:
        raise ShapeError("repeats must be >= 1")
    n_raters = scores.shape[0]
    half = (n_raters + 1) // 2
    rng = Xoshiro256StarStar(seed)
    total = 0.0
    kept = 0
    for _ in range(repeats):
        order = list(range(n_raters))
        rng.shuffle(order)
        first = scores[order[:half]].mean(axis=0)
        second = scores[order[half:]].mean(axis=0)
        try:
            total += pearson(first, second)
        except DegenerateInput:
            continue
        kept += 1
    if kept == 0:
        raise DegenerateInput("every split produced zero-variance half means")
    return total / kept


def correlation_matrix(table: RatingsTable) -> CorrMatrix:
    """Pairwise Pearson over attribute columns; DegenerateInput names any constant column."""
    m = len(table.attribute_names)
    if m < 2:
        raise ShapeError("correlation matrix needs at least 2 attributes")
    cols = table.values
    for j, name in enumerate(table.attribute_names):
        if np.ptp(cols[:, j]) == 0.0:
            raise DegenerateInput(f"attribute {name!r} has zero variance")
    out = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            r = pearson(cols[:, i], cols[:, j])
            out[i, j] = r
            out[j, i] = r
    return CorrMatrix(table.attribute_names, out)


def silhouette(points, labels) -> float:
    """Mean silhouette score over points; singleton clusters score 0.

    For each point, a is the mean distance to its own cluster's other
    members and b the smallest mean distance to any other cluster; the
    per-point score is (b - a) / max(a, b), or 0 when both vanish.
    """
    pts = np.asarray(points, dtype=np.float64)
    labs = np.asarray(labels)
    if pts.ndim != 2 or labs.shape != (pts.shape[0],):
        raise ShapeError("points must be (n, d) with one label per row")
    n = pts.shape[0]
    if n < 3:
        raise ShapeError("silhouette needs at least 3 points")
    uniq = np.unique(labs)
    if uniq.size < 2:
        raise DegenerateInput("silhouette needs at least 2 clusters")
    dist = np.sqrt(K.pairwise_sq_dists(pts))
    members = {u: np.flatnonzero(labs == u) for u in uniq}
    total = 0.0
    for i in range(n):
        own = members[labs[i]]
        if own.size == 1:
            continue
        a = dist[i, own].sum() / (own.size - 1)
        b = min(dist[i, members[u]].mean() for u in uniq if u != labs[i])
        denom = max(a, b)
        if denom > 0.0:
            total += (b - a) / denom
    return total / n
