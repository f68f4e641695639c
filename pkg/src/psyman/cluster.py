"""Ward-linkage agglomerative clustering and dendrogram leaf ordering.

The merge loop runs on a dissimilarity matrix via the Lance-Williams Ward
update; correlation matrices are first converted with d = 1 - r. Leaves are
numbered 0..n-1 and internal nodes n..2n-2 in merge order. Single-threaded:
at heatmap scale (tens of attributes) the O(n^3) loop is instant.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ShapeError
from .stats import CorrMatrix


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Sequence of agglomerative merges; heights are nondecreasing."""

    n_leaves: int
    merges: tuple[Merge, ...]

    def __post_init__(self):
        n = self.n_leaves
        if len(self.merges) != n - 1:
            raise ShapeError(f"{n} leaves require {n - 1} merges, got {len(self.merges)}")
        seen: set[int] = set()
        prev = -np.inf
        for k, m in enumerate(self.merges):
            for child in (m.left, m.right):
                if not (0 <= child < n + k) or child in seen:
                    raise ShapeError(f"merge {k}: invalid or reused child {child}")
                seen.add(child)
            if m.height < prev:
                raise DataError(f"merge {k}: height {m.height} decreases below {prev}")
            prev = m.height
        if self.merges and self.merges[-1].size != n:
            raise ShapeError("final merge must cover all leaves")


def correlation_to_dissimilarity(corr: CorrMatrix) -> np.ndarray:
    """d = 1 - r, mapping correlations in [-1, 1] onto distances in [0, 2]."""
    d = 1.0 - corr.values
    d = np.ascontiguousarray(d)
    np.fill_diagonal(d, 0.0)
    return d


def ward_linkage(dissimilarity) -> Dendrogram:
    """Agglomerate by the Lance-Williams Ward criterion.

    At each step the active pair with the smallest current distance merges;
    ties break toward the smallest (left id, right id) pair. The new
    cluster's distance to any other cluster c follows

        d(u, c) = sqrt(((n_a + n_c) d(a,c)^2 + (n_b + n_c) d(b,c)^2
                        - n_c d(a,b)^2) / (n_a + n_b + n_c))

    which keeps heights monotone for any valid input.
    """
    d0 = np.asarray(dissimilarity, dtype=np.float64)
    n = d0.shape[0]
    if d0.ndim != 2 or d0.shape != (n, n) or n < 2:
        raise ShapeError(f"dissimilarity must be square with n >= 2, got {d0.shape}")
    if np.max(np.abs(d0 - d0.T), initial=0.0) > 0.0:
        raise ShapeError("dissimilarity matrix is not symmetric")
    if np.any(d0 < 0.0):
        raise DataError("dissimilarity entries must be nonnegative")
    if np.max(np.abs(np.diag(d0)), initial=0.0) > 0.0:
        raise DataError("dissimilarity diagonal must be zero")

    # dist is indexed by node id (leaves then internal); rows for ids not yet
    # created or already merged away are ignored via the active list.
    total = 2 * n - 1
    dist = np.full((total, total), np.inf)
    dist[:n, :n] = d0
    sizes = np.ones(total, dtype=np.int64)
    active: list[int] = list(range(n))
    merges: list[Merge] = []
    prev_height = 0.0
    for step in range(n - 1):
        best = np.inf
        bi = bj = -1
        for ai in range(len(active)):
            a = active[ai]
            for aj in range(ai + 1, len(active)):
                b = active[aj]
                if dist[a, b] < best:
                    best = dist[a, b]
                    bi, bj = a, b
        u = n + step
        na, nb = sizes[bi], sizes[bj]
        height = max(best, prev_height)  # guards fp rounding; Ward is monotone
        prev_height = height
        merges.append(Merge(bi, bj, float(height), int(na + nb)))
        sizes[u] = na + nb
        dab2 = best * best
        for c in active:
            if c == bi or c == bj:
                continue
            nc = sizes[c]
            dac2 = dist[bi, c] * dist[bi, c]
            dbc2 = dist[bj, c] * dist[bj, c]
            duc = np.sqrt(((na + nc) * dac2 + (nb + nc) * dbc2 - nc * dab2) / (na + nb + nc))
            dist[u, c] = duc
            dist[c, u] = duc
        active.remove(bi)
        active.remove(bj)
        active.append(u)
    return Dendrogram(n, tuple(merges))


def leaf_order(dendrogram: Dendrogram) -> list[int]:
    """Left-to-right in-order traversal of the merge tree."""
    n = dendrogram.n_leaves
    order: list[int] = []
    stack = [n + len(dendrogram.merges) - 1]
    while stack:
        node = stack.pop()
        if node < n:
            order.append(node)
        else:
            m = dendrogram.merges[node - n]
            stack.append(m.right)
            stack.append(m.left)
    return order


def reorder(matrix: CorrMatrix, perm) -> CorrMatrix:
    """Apply one permutation to rows, columns, and names together."""
    p = list(perm)
    m = matrix.size
    if sorted(p) != list(range(m)):
        raise ShapeError(f"not a permutation of 0..{m - 1}: {p}")
    idx = np.asarray(p)
    values = matrix.values[np.ix_(idx, idx)]
    names = tuple(matrix.names[i] for i in p)
    return CorrMatrix(names, values)


def write_dendrogram_csv(dendrogram: Dendrogram, sink) -> None:
    """CSV form: one ``left,right,height,size`` row per merge."""
    if isinstance(sink, str):
        with open(sink, "w", encoding="utf-8", newline="") as fh:
            write_dendrogram_csv(dendrogram, fh)
            return
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(("left", "right", "height", "size"))
    for m in dendrogram.merges:
        writer.writerow((m.left, m.right, repr(float(m.height)), m.size))
