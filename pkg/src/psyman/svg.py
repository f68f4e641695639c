"""Dependency-free SVG builders for correlation heatmaps and embedding scatters.

Output is deterministic: fixed float formatting, fixed element order, no
timestamps. Mark elements are exactly one ``rect class="cell"`` per matrix
cell and one ``circle class="point"`` per embedded point, so tests can
parse the XML and count marks.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .errors import ShapeError
from .gradcam import apply_colormap

__all__ = ["color_hex", "project_orthographic", "heatmap_svg", "scatter_svg"]

_CELL = 26
_MARGIN = 140
_PLOT = 640
_PAD = 40
_POINT_RADIUS = 4.0


def color_hex(rgb) -> str:
    """'#rrggbb' with the same round-half-up byte mapping the PPM writer uses."""
    r, g, b = (int(math.floor(float(c) * 255.0 + 0.5)) for c in rgb)
    return f"#{r:02x}{g:02x}{b:02x}"


def _esc(text: str) -> str:
    return escape(str(text), {'"': "&quot;"})


def project_orthographic(coords, azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    """Project (n, 3) points onto a viewing plane.

    The camera first spins by the azimuth about the vertical (z) axis, then
    tilts by the elevation; u is the horizontal screen axis, v the vertical.
    """
    p = np.asarray(coords, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 3:
        raise ShapeError(f"expected (n, 3) coordinates, got {p.shape}")
    a = math.radians(azimuth_deg)
    e = math.radians(elevation_deg)
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    u = x * math.cos(a) - y * math.sin(a)
    depth = x * math.sin(a) + y * math.cos(a)
    v = z * math.cos(e) - depth * math.sin(e)
    return np.column_stack([u, v])


def _axis_scale(values: np.ndarray, lo_px: float, hi_px: float) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        return np.full(values.shape, 0.5 * (lo_px + hi_px))
    return lo_px + (values - lo) / (hi - lo) * (hi_px - lo_px)


def heatmap_svg(values, labels) -> str:
    """Square grid of colored cells; the colormap spans values -1 .. 1.

    Row labels sit left of each row, column labels run vertically above
    each column, both in the given order.
    """
    v = np.asarray(values, dtype=np.float64)
    names = [str(x) for x in labels]
    m = len(names)
    if v.shape != (m, m) or m == 0:
        raise ShapeError(f"values must be ({m}, {m}) to match labels, got {v.shape}")
    colors = apply_colormap((np.clip(v, -1.0, 1.0) + 1.0) / 2.0)
    width = _MARGIN + m * _CELL + 20
    height = _MARGIN + m * _CELL + 20
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
    ]
    for i in range(m):
        for j in range(m):
            x = _MARGIN + j * _CELL
            y = _MARGIN + i * _CELL
            parts.append(
                f'<rect class="cell" x="{x}" y="{y}" width="{_CELL}" '
                f'height="{_CELL}" fill="{color_hex(colors[i, j])}"/>'
            )
    for i, name in enumerate(names):
        y = _MARGIN + i * _CELL + 0.7 * _CELL
        parts.append(
            f'<text class="row-label" x="{_MARGIN - 6}" y="{y:.2f}" '
            f'text-anchor="end" font-family="monospace" font-size="12">'
            f"{_esc(name)}</text>"
        )
    for j, name in enumerate(names):
        cx = _MARGIN + j * _CELL + 0.7 * _CELL
        cy = _MARGIN - 6
        parts.append(
            f'<text class="col-label" x="{cx:.2f}" y="{cy}" text-anchor="start" '
            f'font-family="monospace" font-size="12" '
            f'transform="rotate(-90 {cx:.2f} {cy})">{_esc(name)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter_svg(coords, color_values, view: tuple[float, float] | None = None) -> str:
    """Circle per point, colored by its value on the five-stop colormap.

    2-D coordinates plot directly; 3-D coordinates require `view`
    (azimuth, elevation in degrees) and are projected orthographically.
    """
    p = np.asarray(coords, dtype=np.float64)
    c = np.asarray(color_values, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] not in (2, 3):
        raise ShapeError(f"coords must be (n, 2) or (n, 3), got {p.shape}")
    if c.shape != (p.shape[0],):
        raise ShapeError(f"need one color value per point, got {c.shape}")
    if p.shape[1] == 3:
        if view is None:
            raise ShapeError("3-D coordinates require a (azimuth, elevation) view")
        p = project_orthographic(p, view[0], view[1])
    lo, hi = float(c.min()), float(c.max())
    t = np.full(c.shape, 0.5) if hi == lo else (c - lo) / (hi - lo)
    rgb = apply_colormap(t)
    size = _PLOT + 2 * _PAD
    xs = _axis_scale(p[:, 0], _PAD, _PAD + _PLOT)
    # SVG y grows downward; flip so larger v plots higher.
    ys = _axis_scale(-p[:, 1], _PAD, _PAD + _PLOT)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
    ]
    for i in range(p.shape[0]):
        parts.append(
            f'<circle class="point" cx="{xs[i]:.2f}" cy="{ys[i]:.2f}" '
            f'r="{_POINT_RADIUS:.1f}" fill="{color_hex(rgb[i])}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
