"""SVG builders: parseable output, one mark per datum, stable geometry."""

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from psyman.errors import ShapeError
from psyman.svg import color_hex, heatmap_svg, project_orthographic, scatter_svg

SVG_NS = "{http://www.w3.org/2000/svg}"


def parse(svg_text):
    return ET.fromstring(svg_text)


def marks(root, tag, cls):
    return [
        el
        for el in root.iter(f"{SVG_NS}{tag}")
        if el.attrib.get("class") == cls
    ]


class TestColorHex:
    def test_known_colors(self):
        assert color_hex((0.0, 0.0, 0.5)) == "#000080"
        assert color_hex((1.0, 1.0, 1.0)) == "#ffffff"
        assert color_hex((0.0, 0.0, 0.0)) == "#000000"

    def test_round_half_up(self):
        # 0.5 * 255 + 0.5 = 128.0 exactly
        assert color_hex((0.5, 0.5, 0.5)) == "#808080"


class TestProjection:
    def test_head_on_view_keeps_x_and_z(self):
        pts = np.array([[1.0, 2.0, 3.0]])
        np.testing.assert_allclose(
            project_orthographic(pts, 0.0, 0.0), [[1.0, 3.0]], atol=1e-12
        )

    def test_quarter_turn_azimuth(self):
        pts = np.array([[1.0, 2.0, 3.0]])
        np.testing.assert_allclose(
            project_orthographic(pts, 90.0, 0.0), [[-2.0, 3.0]], atol=1e-12
        )

    def test_quarter_turn_elevation(self):
        pts = np.array([[1.0, 2.0, 3.0]])
        np.testing.assert_allclose(
            project_orthographic(pts, 0.0, 90.0), [[1.0, -2.0]], atol=1e-12
        )

    def test_distances_preserved_in_plane(self):
        rng = np.random.default_rng(2)
        pts = rng.normal(size=(8, 3))
        proj = project_orthographic(pts, 30.0, 45.0)
        # Orthographic projection never increases pairwise distances.
        for i in range(8):
            for j in range(i + 1, 8):
                d3 = np.linalg.norm(pts[i] - pts[j])
                d2 = np.linalg.norm(proj[i] - proj[j])
                assert d2 <= d3 + 1e-12

    def test_shape_validation(self):
        with pytest.raises(ShapeError):
            project_orthographic(np.zeros((3, 2)), 0.0, 0.0)


class TestHeatmap:
    def matrix(self):
        return np.array([[1.0, 0.0, -1.0], [0.0, 1.0, 0.5], [-1.0, 0.5, 1.0]])

    def test_valid_xml_with_cell_per_entry(self):
        root = parse(heatmap_svg(self.matrix(), ["a", "b", "c"]))
        assert len(marks(root, "rect", "cell")) == 9

    def test_label_order_and_count(self):
        root = parse(heatmap_svg(self.matrix(), ["bold", "calm", "warm"]))
        rows = [el.text for el in marks(root, "text", "row-label")]
        cols = [el.text for el in marks(root, "text", "col-label")]
        assert rows == ["bold", "calm", "warm"]
        assert cols == ["bold", "calm", "warm"]

    def test_colormap_endpoints(self):
        svg = heatmap_svg(self.matrix(), ["a", "b", "c"])
        root = parse(svg)
        cells = marks(root, "rect", "cell")
        fills = [c.attrib["fill"] for c in cells]
        assert fills[0] == "#ff0000"  # r = +1 -> top stop
        assert fills[2] == "#000080"  # r = -1 -> bottom stop
        assert fills[1] == "#00ff00"  # r = 0 -> middle stop

    def test_deterministic(self):
        a = heatmap_svg(self.matrix(), ["a", "b", "c"])
        b = heatmap_svg(self.matrix(), ["a", "b", "c"])
        assert a == b

    def test_labels_escaped(self):
        root = parse(heatmap_svg(np.eye(2), ["a<b>&", "ok"]))
        rows = [el.text for el in marks(root, "text", "row-label")]
        assert rows[0] == "a<b>&"

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            heatmap_svg(np.eye(3), ["a", "b"])
        with pytest.raises(ShapeError):
            heatmap_svg(np.zeros((0, 0)), [])


class TestScatter:
    def test_circle_per_point(self):
        coords = np.array([[0.0, 0.0], [1.0, 2.0], [3.0, -1.0]])
        root = parse(scatter_svg(coords, [0.0, 0.5, 1.0]))
        assert len(marks(root, "circle", "point")) == 3

    def test_y_axis_flipped(self):
        coords = np.array([[0.0, 0.0], [0.0, 10.0], [1.0, 5.0]])
        root = parse(scatter_svg(coords, [0.0, 1.0, 0.5]))
        pts = marks(root, "circle", "point")
        cy = [float(p.attrib["cy"]) for p in pts]
        assert cy[1] < cy[0]  # larger data y plots higher on screen

    def test_constant_colors_use_midpoint(self):
        coords = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]])
        root = parse(scatter_svg(coords, [7.0, 7.0, 7.0]))
        fills = {p.attrib["fill"] for p in marks(root, "circle", "point")}
        assert fills == {"#00ff00"}

    def test_color_range_normalized(self):
        coords = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]])
        root = parse(scatter_svg(coords, [5.0, 10.0, 7.5]))
        fills = [p.attrib["fill"] for p in marks(root, "circle", "point")]
        assert fills == ["#000080", "#ff0000", "#00ff00"]

    def test_three_d_requires_view(self):
        coords = np.zeros((3, 3))
        with pytest.raises(ShapeError, match="view"):
            scatter_svg(coords, [0.0, 0.5, 1.0])

    def test_three_d_projects_with_view(self):
        rng = np.random.default_rng(1)
        coords = rng.normal(size=(5, 3))
        root = parse(scatter_svg(coords, rng.random(5), view=(30.0, 20.0)))
        assert len(marks(root, "circle", "point")) == 5

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            scatter_svg(np.zeros((3, 2)), [0.0, 1.0])

    def test_deterministic(self):
        coords = np.array([[0.0, 0.0], [1.0, 2.0], [-1.0, 0.5]])
        assert scatter_svg(coords, [0.0, 0.5, 1.0]) == scatter_svg(
            coords, [0.0, 0.5, 1.0]
        )
