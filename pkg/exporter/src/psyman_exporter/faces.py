"""Synthetic face images with controllable expression, for demos and tests.

Each face is an ellipse on a black background with two eyes and a
mouth whose curvature tracks a happiness value: 1.0 curves up, 0.0
curves down, 0.5 is flat.  The black background matters; with
zero-mean inputs the untrained convolutional stack produces exactly
zero activations outside the face, which keeps attribution maps
anchored to it.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

FACE_COLOR = (0.85, 0.70, 0.60)
EYE_COLOR = (0.15, 0.15, 0.30)
MOUTH_COLOR = (0.55, 0.15, 0.20)


def synthetic_face(size: int = 224, happy: float = 0.5, width: float = 1.0) -> np.ndarray:
    """Render one face as an H x W x 3 float32 image in [0, 1].

    ``happy`` in [0, 1] sets the mouth curvature; ``width`` scales the
    face ellipse horizontally around its default proportions.
    """
    img = np.zeros((size, size, 3), dtype=np.float32)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    cy = cx = size / 2.0
    ry = 0.18 * size
    rx = 0.16 * size * width

    face = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0
    img[face] = FACE_COLOR

    eye_r = 0.06 * size / 2.0
    for ex in (cx - 0.45 * rx, cx + 0.45 * rx):
        eye = (xx - ex) ** 2 + (yy - (cy - 0.35 * ry)) ** 2 <= eye_r**2
        img[eye] = EYE_COLOR

    curve = (happy - 0.5) * 2.0
    mx = (xx - cx) / rx
    mouth_y = cy + 0.45 * ry - curve * 8.0 * (mx**2 - 0.25)
    mouth = (np.abs(yy - mouth_y) <= 2.5) & (np.abs(mx) <= 0.55)
    img[mouth] = MOUTH_COLOR
    return img


def face_dataset(n: int, seed: int = 0, size: int = 224):
    """Generate ``n`` faces with varied expression and width.

    Returns ``(images, attribute_names, ratings)`` where ``images`` is
    a list of H x W x 3 arrays, attributes are ``happy`` and
    ``narrow``, and ratings lie on a 1..9 scale.
    """
    rng = np.random.default_rng(seed)
    images = []
    ratings = np.empty((n, 2), dtype=np.float64)
    for i in range(n):
        happy = rng.uniform(0.0, 1.0)
        width = rng.uniform(0.75, 1.15)
        images.append(synthetic_face(size=size, happy=happy, width=width))
        narrow = (1.15 - width) / 0.40
        ratings[i, 0] = 1.0 + 8.0 * happy
        ratings[i, 1] = 1.0 + 8.0 * narrow
    return images, ["happy", "narrow"], ratings


def save_png(path: str, image: np.ndarray) -> None:
    """Write an H x W x 3 float image in [0, 1] as an 8-bit PNG."""
    arr = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    Image.fromarray((arr * 255.0 + 0.5).astype(np.uint8), mode="RGB").save(path)
