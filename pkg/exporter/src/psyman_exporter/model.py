"""VGG16 rating model: construction, preprocessing, and head fine-tuning.

The backbone is torchvision's VGG16.  Its final classifier layer is
replaced with a linear rating head producing one score per attribute.
Only that head is trained here; the convolutional stack keeps its
initial weights so that attribution inputs stay comparable across
training runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torchvision.transforms.functional as TF
from PIL import Image
from torch import nn
from torchvision.models import vgg16

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass(frozen=True)
class Preprocess:
    """Resize + per-channel normalization applied before the network.

    The identity normalization (zero mean, unit std) is the default:
    with a freshly seeded backbone there is no dataset statistic the
    inputs should be matched to, and shifting a black background away
    from zero would smear activations over regions that carry no
    signal.  The ImageNet constants are for genuinely pretrained
    weights.
    """

    size: int = 224
    mean: tuple[float, float, float] = (0.0, 0.0, 0.0)
    std: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def describe(self) -> dict:
        return {"size": self.size, "mean": list(self.mean), "std": list(self.std)}

    def apply(self, image: np.ndarray) -> torch.Tensor:
        """Map an H x W or H x W x 3 float image in [0, 1] to a (3, size, size) tensor."""
        arr = np.asarray(image, dtype=np.float32)
        if arr.ndim == 2:
            arr = np.stack([arr, arr, arr], axis=-1)
        if arr.ndim != 3 or arr.shape[-1] != 3:
            raise ValueError(f"image must be HxW or HxWx3, got shape {arr.shape}")
        tensor = torch.from_numpy(np.ascontiguousarray(arr.transpose(2, 0, 1)))
        tensor = TF.resize(tensor, [self.size, self.size], antialias=True)
        return TF.normalize(tensor, list(self.mean), list(self.std))


def load_image(path: str) -> np.ndarray:
    """Load an image file as H x W x 3 float32 in [0, 1]."""
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        return np.asarray(rgb, dtype=np.float32) / 255.0


def build_model(n_attributes: int, seed: int = 42, weights_path: str | None = None) -> nn.Module:
    """Construct a VGG16 with an ``n_attributes``-wide rating head.

    Without ``weights_path`` the network keeps torchvision's seeded
    default initialization, which is deterministic for a given seed.
    """
    if n_attributes < 1:
        raise ValueError("n_attributes must be at least 1")
    torch.manual_seed(seed)
    model = vgg16(weights=None)
    model.classifier[6] = nn.Linear(model.classifier[6].in_features, n_attributes)
    if weights_path is not None:
        state = torch.load(weights_path, map_location="cpu", weights_only=True)
        model.load_state_dict(state)
    model.eval()
    return model


def default_preprocess(weights_path: str | None = None) -> Preprocess:
    """Identity normalization for seeded models, ImageNet stats for loaded weights."""
    if weights_path is None:
        return Preprocess()
    return Preprocess(mean=IMAGENET_MEAN, std=IMAGENET_STD)


@dataclass
class TrainingRecord:
    """What fine-tuning did, for the export manifest."""

    epochs: int
    batch_size: int
    learning_rate: float
    seed: int
    augment: bool
    losses: list[float] = field(default_factory=list)

    def describe(self) -> dict:
        return {
            "trained": "classifier.6",
            "optimizer": "adam",
            "loss": "mse",
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
            "augment": self.augment,
            "final_loss": self.losses[-1] if self.losses else None,
        }


def _augment(batch: torch.Tensor, gen: torch.Generator) -> torch.Tensor:
    """Random horizontal flip plus a uniform rotation in [-15, 15] degrees."""
    out = []
    for img in batch:
        if torch.rand((), generator=gen).item() < 0.5:
            img = TF.hflip(img)
        angle = (torch.rand((), generator=gen).item() * 2.0 - 1.0) * 15.0
        out.append(TF.rotate(img, angle))
    return torch.stack(out)


def fine_tune_head(
    model: nn.Module,
    images: torch.Tensor,
    targets: torch.Tensor,
    *,
    epochs: int = 3,
    batch_size: int = 24,
    lr: float = 5e-4,
    seed: int = 0,
    augment: bool = True,
) -> TrainingRecord:
    """Fit the rating head to attribute targets, leaving the backbone fixed.

    ``images`` is (N, 3, H, W) after preprocessing and ``targets`` is
    (N, n_attributes).  Features come from the frozen stack under
    ``no_grad``; only ``classifier[6]`` receives gradient updates, so
    the optimizer state stays small and the convolutional layers are
    byte-identical before and after.
    """
    if images.shape[0] != targets.shape[0]:
        raise ValueError(
            f"{images.shape[0]} images vs {targets.shape[0]} target rows"
        )
    head = model.classifier[6]
    optimizer = torch.optim.Adam(head.parameters(), lr=lr)
    loss_fn = nn.MSELoss()
    gen = torch.Generator().manual_seed(seed)
    record = TrainingRecord(
        epochs=epochs, batch_size=batch_size, learning_rate=lr, seed=seed, augment=augment
    )

    model.eval()
    n = images.shape[0]
    for _ in range(epochs):
        order = torch.randperm(n, generator=gen)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            batch = images[idx]
            if augment:
                batch = _augment(batch, gen)
            with torch.no_grad():
                feats = model.features(batch)
                feats = model.avgpool(feats)
                feats = torch.flatten(feats, 1)
                for layer in model.classifier[:6]:
                    feats = layer(feats)
            pred = head(feats)
            loss = loss_fn(pred, targets[idx])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            record.losses.append(float(loss.item()))
    return record
