"""Export paths: prediction tables and attribution input triplets.

Everything written here is meant to be consumed by the ``psyman``
command-line tools, so the outputs follow its file contracts exactly:
ratings-schema CSV (``image_id`` plus attribute columns, ``repr``
float cells) and .pst float32 tensors.  Each export directory gains an
``export.manifest.json`` recording the model, preprocessing, training
history, and an FNV-1a 64 digest per written file.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .model import Preprocess, load_image
from .pst import write_pst

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64_hex(data: bytes) -> str:
    """FNV-1a 64-bit digest as 16 lowercase hex characters."""
    acc = _FNV_OFFSET
    for byte in data:
        acc = ((acc ^ byte) * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return f"{acc:016x}"


def file_digest(path: str) -> str:
    with open(path, "rb") as fh:
        return fnv1a64_hex(fh.read())


@dataclass
class ExportManifest:
    """Provenance sidecar for one export run."""

    model_id: str
    layer: str | None = None
    attribute: str | None = None
    images: list[str] = field(default_factory=list)
    preprocessing: dict = field(default_factory=dict)
    training: dict | None = None
    files: dict = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)

    def add_file(self, path: str) -> None:
        self.files[os.path.basename(path)] = file_digest(path)

    def write(self, path: str) -> None:
        payload = {
            "model_id": self.model_id,
            "layer": self.layer,
            "attribute": self.attribute,
            "images": self.images,
            "preprocessing": self.preprocessing,
            "training": self.training,
            "files": self.files,
            "skipped": self.skipped,
        }
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def conv_feature_layers(model: nn.Module) -> list[str]:
    """Names of hookable convolutional-stack layers (Conv2d and ReLU)."""
    names = []
    for idx, layer in enumerate(model.features):
        if isinstance(layer, (nn.Conv2d, nn.ReLU)):
            names.append(f"features.{idx}")
    return names


def _format_row(image_id: str, values: np.ndarray) -> str:
    cells = ",".join(repr(float(v)) for v in values)
    return f"{image_id},{cells}\n"


def export_predictions(
    model: nn.Module,
    image_paths: list[str],
    attributes: list[str],
    out_csv: str,
    pre: Preprocess,
    model_id: str,
) -> ExportManifest:
    """Run the rating head over images and write a ratings-schema CSV.

    Unreadable images are skipped with a warning and listed in the
    manifest rather than aborting the batch.
    """
    manifest = ExportManifest(model_id=model_id, preprocessing=pre.describe())
    rows = []
    model.eval()
    for path in image_paths:
        try:
            image = load_image(path)
        except OSError as exc:
            warnings.warn(f"skipping {path}: {exc}", stacklevel=2)
            manifest.skipped.append(os.path.basename(path))
            continue
        with torch.inference_mode():
            scores = model(pre.apply(image).unsqueeze(0))[0]
        image_id = os.path.splitext(os.path.basename(path))[0]
        rows.append((image_id, scores.numpy().astype(np.float64)))
        manifest.images.append(os.path.basename(path))
    with open(out_csv, "w", encoding="utf-8", newline="") as fh:
        fh.write("image_id," + ",".join(attributes) + "\n")
        for image_id, values in rows:
            if values.shape[0] != len(attributes):
                raise ValueError(
                    f"model produced {values.shape[0]} scores for {len(attributes)} attributes"
                )
            fh.write(_format_row(image_id, values))
    manifest.add_file(out_csv)
    manifest.write(out_csv + ".export.manifest.json")
    return manifest


def export_cam_inputs(
    model: nn.Module,
    image: np.ndarray,
    attribute: str,
    attributes: list[str],
    layer: str,
    out_dir: str,
    pre: Preprocess,
    model_id: str,
) -> ExportManifest:
    """Write the activation/gradient/image triplet for one attribution.

    ``layer`` names a convolutional-stack module (``features.N``); its
    forward output is captured, the chosen attribute's score is
    differentiated with respect to it, and all three tensors land as
    .pst files: ``activations.pst`` and ``gradients.pst`` as (K, H, W)
    and ``image.pst`` as the resized grayscale original in [0, 1].
    """
    available = conv_feature_layers(model)
    if layer not in available:
        raise ValueError(f"unknown layer {layer!r}; available: {', '.join(available)}")
    if attribute not in attributes:
        raise ValueError(f"unknown attribute {attribute!r}; available: {', '.join(attributes)}")
    index = int(layer.split(".")[1])

    captured: list[torch.Tensor] = []

    def hook(_module, _inputs, output):
        captured.append(output)
        return None

    handle = model.features[index].register_forward_hook(hook)
    try:
        model.eval()
        tensor = pre.apply(image).unsqueeze(0).requires_grad_(True)
        scores = model(tensor)
    finally:
        handle.remove()
    acts = captured[0]
    score = scores[0, attributes.index(attribute)]
    (grads,) = torch.autograd.grad(score, acts, allow_unused=True)
    if grads is None:
        grads = torch.zeros_like(acts)

    std = torch.tensor(pre.std).view(3, 1, 1)
    mean = torch.tensor(pre.mean).view(3, 1, 1)
    rgb = tensor.detach()[0] * std + mean
    gray = rgb.mean(dim=0).clamp(0.0, 1.0)

    os.makedirs(out_dir, exist_ok=True)
    manifest = ExportManifest(
        model_id=model_id,
        layer=layer,
        attribute=attribute,
        preprocessing=pre.describe(),
    )
    outputs = {
        "activations.pst": acts.detach()[0].numpy(),
        "gradients.pst": grads.detach()[0].numpy(),
        "image.pst": gray.numpy(),
    }
    for name, array in outputs.items():
        path = os.path.join(out_dir, name)
        write_pst(path, array)
        manifest.add_file(path)
    manifest.write(os.path.join(out_dir, "export.manifest.json"))
    return manifest
