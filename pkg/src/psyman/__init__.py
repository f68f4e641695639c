"""Explanation toolkit for facial-attribute models.

Predictive-power statistics, Ward-clustered correlation heatmaps, class
activation mapping, and two manifold embeddings (t-SNE and metric stress),
all verified against a built-in miniature CNN with exact backpropagation.
"""

from . import (
    backend,
    cluster,
    embedding,
    errors,
    gradcam,
    manifest,
    mininet,
    rng,
    stats,
    stress,
    svg,
    tensor_io,
    tsne,
)
from ._version import VERSION as __version__
from .backend import BACKEND_NAME

__all__ = [
    "__version__",
    "BACKEND_NAME",
    "backend",
    "cluster",
    "embedding",
    "errors",
    "gradcam",
    "manifest",
    "mininet",
    "rng",
    "stats",
    "stress",
    "svg",
    "tensor_io",
    "tsne",
]
