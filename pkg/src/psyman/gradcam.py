"""Grad-CAM attribution maps and their overlay rendering.

Given the feature maps of a convolutional layer and the gradients of a
target score with respect to them, channel weights are the spatial mean of
each gradient map and the localization map is the rectified weighted sum of
the feature maps (Selvaraju et al., 2017). Display helpers upsample the
coarse map to image resolution and blend it over the grayscale input with a
fixed five-stop colormap, emitted as binary PPM.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .tensor_io import Tensor

# Piecewise-linear colormap stops: position -> (r, g, b), channels in [0, 1].
COLORMAP_STOPS = (
    (0.00, (0.0, 0.0, 0.5)),
    (0.25, (0.0, 0.5, 1.0)),
    (0.50, (0.0, 1.0, 0.0)),
    (0.75, (1.0, 1.0, 0.0)),
    (1.00, (1.0, 0.0, 0.0)),
)


@dataclass(frozen=True)
class CamInput:
    """Feature maps, matching gradients, and the target concept's name."""

    activations: Tensor
    gradients: Tensor
    class_name: str

    def __post_init__(self):
        if len(self.activations.dims) != 3:
            raise ShapeError(f"activations must be (K, H, W), got {self.activations.dims}")
        if self.activations.dims != self.gradients.dims:
            raise ShapeError(
                f"activation dims {self.activations.dims} != gradient dims {self.gradients.dims}"
            )


@dataclass(frozen=True)
class Cam:
    """Single-channel nonnegative localization map."""

    map: Tensor

    def __post_init__(self):
        if len(self.map.dims) != 2:
            raise ShapeError(f"cam must be (H, W), got {self.map.dims}")
        if np.any(self.map.array < 0.0):
            raise ShapeError("cam entries must be nonnegative")


def channel_weights(cam_input: CamInput) -> np.ndarray:
    """Spatial mean of each channel's gradient map, float64."""
    grads = cam_input.gradients.array.astype(np.float64)
    return grads.mean(axis=(1, 2))


def compute_cam(cam_input: CamInput) -> Cam:
    """Rectified channel-weighted sum of the feature maps."""
    alpha = channel_weights(cam_input)
    acts = cam_input.activations.array.astype(np.float64)
    raw = np.einsum("k,khw->hw", alpha, acts)
    return Cam(Tensor(np.maximum(raw, 0.0)))


def upsample_bilinear(cam: Cam, out_h: int, out_w: int) -> Cam:
    """Align-corners bilinear resize; identity when sizes already match."""
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"target size must be positive, got {out_h}x{out_w}")
    src = cam.map.array.astype(np.float64)
    in_h, in_w = src.shape
    if (in_h, in_w) == (out_h, out_w):
        return Cam(Tensor(src))

    def grid(out_n: int, in_n: int) -> np.ndarray:
        if out_n == 1 or in_n == 1:
            return np.zeros(out_n)
        return np.arange(out_n) * ((in_n - 1) / (out_n - 1))

    ys = grid(out_h, in_h)
    xs = grid(out_w, in_w)
    y0 = np.clip(np.floor(ys).astype(int), 0, in_h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    out = (
        src[np.ix_(y0, x0)] * (1 - wy) * (1 - wx)
        + src[np.ix_(y0, x1)] * (1 - wy) * wx
        + src[np.ix_(y1, x0)] * wy * (1 - wx)
        + src[np.ix_(y1, x1)] * wy * wx
    )
    # Convex interpolation cannot exceed the input range; clip the rounding dust.
    out = np.clip(out, src.min(), src.max())
    return Cam(Tensor(out))


def apply_colormap(values: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] through the five-stop colormap; returns (..., 3)."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    out = np.empty(v.shape + (3,))
    positions = np.array([s[0] for s in COLORMAP_STOPS])
    colors = np.array([s[1] for s in COLORMAP_STOPS])
    for ch in range(3):
        out[..., ch] = np.interp(v, positions, colors[:, ch])
    return out


def overlay(base_gray: Tensor, cam: Cam, alpha: float) -> Tensor:
    """Blend the colormapped cam over a grayscale image.

    The cam is normalized by its maximum (an all-zero map stays zero) and
    each pixel becomes (1 - alpha) * gray + alpha * colormap(cam).
    """
    if len(base_gray.dims) != 2:
        raise ShapeError(f"base image must be (H, W), got {base_gray.dims}")
    if base_gray.dims != cam.map.dims:
        raise ShapeError(f"image dims {base_gray.dims} != cam dims {cam.map.dims}")
    if not 0.0 <= alpha <= 1.0:
        raise ShapeError(f"alpha must be in [0, 1], got {alpha}")
    cam_arr = cam.map.array.astype(np.float64)
    peak = cam_arr.max()
    if peak > 0.0:
        cam_arr = cam_arr / peak
    colored = apply_colormap(cam_arr)
    gray = base_gray.array.astype(np.float64)[..., None]
    blended = (1.0 - alpha) * gray + alpha * colored
    return Tensor(np.clip(blended, 0.0, 1.0).transpose(2, 0, 1))


def write_ppm(image: Tensor, sink) -> None:
    """Binary PPM (P6, maxval 255); floats map to bytes as round(255 * v)."""
    if len(image.dims) != 3 or image.dims[0] != 3:
        raise ShapeError(f"ppm image must be (3, H, W), got {image.dims}")
    if isinstance(sink, str):
        with open(sink, "wb") as fh:
            write_ppm(image, fh)
            return
    _, h, w = image.dims
    rgb = image.array.astype(np.float64).transpose(1, 2, 0)
    bytes_ = np.floor(np.clip(rgb, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    sink.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
    sink.write(bytes_.tobytes())
