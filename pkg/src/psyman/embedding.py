"""Low-dimensional embedding container shared by the t-SNE and stress optimizers."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ShapeError


@dataclass(frozen=True)
class Embedding:
    """n x d coordinates (d in {2, 3}) plus the optimizer's final objective.

    ``objective_trace`` holds (iteration, objective) checkpoints recorded by
    the producing optimizer: stress logs every iteration, t-SNE logs the end
    of the exaggeration phase and the final iteration.
    """

    coords: np.ndarray = field(repr=False)
    final_objective: float
    objective_trace: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] not in (2, 3):
            raise ShapeError(f"coords must be (n, 2) or (n, 3), got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise DataError("embedding coordinates must be finite")
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)

    @property
    def final_kl(self) -> float:
        """t-SNE-facing name for the final objective value."""
        return self.final_objective


def write_embedding_csv(embedding: Embedding, image_ids, label_values, sink) -> None:
    """CSV form: ``image_id,x,y[,z],label_value`` with 6-decimal coordinates."""
    if isinstance(sink, str):
        with open(sink, "w", encoding="utf-8", newline="") as fh:
            write_embedding_csv(embedding, image_ids, label_values, fh)
            return
    coords = embedding.coords
    ids = list(image_ids)
    labels = np.asarray(label_values, dtype=np.float64)
    if len(ids) != coords.shape[0] or labels.shape != (coords.shape[0],):
        raise ShapeError("ids, labels, and coordinates must have matching lengths")
    writer = csv.writer(sink, lineterminator="\n")
    axes = ("x", "y", "z")[: coords.shape[1]]
    writer.writerow(("image_id",) + axes + ("label_value",))
    for i, image_id in enumerate(ids):
        writer.writerow(
            [image_id] + [f"{v:.6f}" for v in coords[i]] + [f"{labels[i]:.6f}"]
        )
