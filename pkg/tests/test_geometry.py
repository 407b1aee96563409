import math
from dataclasses import dataclass

import numpy as np
import pytest

from obbkit import (ConvexPolygon, GeometryError, OrientedBoxLE,
                    canonicalize_le, clip_convex, le_to_corners,
                    normalize_angle_le, polygon_area, rotated_nms, skew_iou)

from conftest import mc_iou, random_box

OCTAGON_AREA = 2 * (math.sqrt(2) - 1)

UNIT_SQUARE = ConvexPolygon(((0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5)))


@dataclass(frozen=True)
class Scored:
    box: OrientedBoxLE
    score: float
    class_id: int = 0


class TestPolygonArea:
    def test_unit_square(self):
        assert polygon_area(UNIT_SQUARE) == 1.0

    def test_triangle(self):
        tri = ConvexPolygon(((0, 0), (2, 0), (0, 2)))
        assert polygon_area(tri) == 2.0

    def test_octagon_from_clip(self):
        rotated = le_to_corners(OrientedBoxLE(0, 0, 1, 1, math.pi / 4 - math.pi / 2))
        octagon = clip_convex(UNIT_SQUARE, rotated)
        assert len(octagon.vertices) == 8
        assert polygon_area(octagon) == pytest.approx(OCTAGON_AREA, abs=1e-12)

    def test_polygon_validation(self):
        with pytest.raises(GeometryError):
            ConvexPolygon(((0, 0), (1, 0)))
        with pytest.raises(GeometryError):
            # clockwise ring
            ConvexPolygon(((0, 0), (0, 1), (1, 1), (1, 0)))
        with pytest.raises(GeometryError):
            # reflex vertex
            ConvexPolygon(((0, 0), (2, 0), (2, 2), (1, 0.5), (0, 2)))


class TestClipConvex:
    def test_self_clip_keeps_area(self):
        out = clip_convex(UNIT_SQUARE, UNIT_SQUARE)
        assert polygon_area(out) == polygon_area(UNIT_SQUARE)

    def test_offset_squares(self):
        shifted = ConvexPolygon(tuple((x + 0.5, y) for x, y in UNIT_SQUARE.vertices))
        out = clip_convex(UNIT_SQUARE, shifted)
        assert polygon_area(out) == pytest.approx(0.5, abs=1e-12)

    def test_disjoint_is_empty(self):
        far = ConvexPolygon(tuple((x + 10, y) for x, y in UNIT_SQUARE.vertices))
        assert clip_convex(UNIT_SQUARE, far) is None

    def test_contained(self):
        small = ConvexPolygon(tuple((0.25 * x, 0.25 * y)
                                    for x, y in UNIT_SQUARE.vertices))
        out = clip_convex(UNIT_SQUARE, small)
        assert polygon_area(out) == pytest.approx(1 / 16, abs=1e-15)


class TestSkewIou:
    def test_identical(self):
        box = OrientedBoxLE(3, 4, 2, 5, 0.7)
        assert skew_iou(box, box) == 1.0

    def test_disjoint(self):
        a = OrientedBoxLE(0, 0, 1, 2, 0.3)
        b = OrientedBoxLE(100, 0, 1, 2, -0.8)
        assert skew_iou(a, b) == 0.0

    def test_rotated_unit_squares(self):
        a = canonicalize_le(0, 0, 1, 1, 0.0)
        b = canonicalize_le(0, 0, 1, 1, math.pi / 4)
        assert skew_iou(a, b) == pytest.approx(math.sqrt(2) / 2, abs=1e-9)

    def test_nested_axis_aligned_is_exact(self):
        outer = OrientedBoxLE(0, 0, 10, 20, 0.0)
        inner = OrientedBoxLE(0, 0, 8, 18, 0.0)
        assert skew_iou(outer, inner) == 0.72

    def test_symmetric_exactly(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            a = random_box(rng, center_range=(0, 20), dim_range=(1, 10))
            b = random_box(rng, center_range=(0, 20), dim_range=(1, 10))
            assert skew_iou(a, b) == skew_iou(b, a)

    def test_range(self):
        rng = np.random.default_rng(13)
        for _ in range(300):
            a = random_box(rng, center_range=(0, 10), dim_range=(0.5, 8))
            b = random_box(rng, center_range=(0, 10), dim_range=(0.5, 8))
            assert 0.0 <= skew_iou(a, b) <= 1.0

    def test_rigid_motion_invariance(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            a = random_box(rng, center_range=(0, 20), dim_range=(1, 10))
            b = random_box(rng, center_range=(0, 20), dim_range=(1, 10))
            base = skew_iou(a, b)
            phi = rng.uniform(-math.pi, math.pi)
            tx, ty = rng.uniform(-50, 50, size=2)
            c, s = math.cos(phi), math.sin(phi)

            def move(box):
                cx = c * box.cx - s * box.cy + tx
                cy = s * box.cx + c * box.cy + ty
                return OrientedBoxLE(cx, cy, box.w, box.h,
                                     normalize_angle_le(box.theta + phi))

            assert abs(skew_iou(move(a), move(b)) - base) < 1e-9

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            a = random_box(rng, center_range=(0, 15), dim_range=(1, 10))
            b = random_box(rng, center_range=(0, 15), dim_range=(1, 10))
            est = mc_iou(a, b, 10 ** 5, rng)
            assert abs(skew_iou(a, b) - est) < 0.03


class TestRotatedNms:
    def test_single_kept(self):
        dets = [Scored(OrientedBoxLE(0, 0, 1, 2, 0.1), 0.7)]
        assert rotated_nms(dets, 0.5) == [0]

    def test_duplicate_suppressed(self):
        box = OrientedBoxLE(0, 0, 1, 2, 0.1)
        dets = [Scored(box, 0.9), Scored(box, 0.8)]
        assert rotated_nms(dets, 0.5) == [0]

    def test_disjoint_kept(self):
        dets = [Scored(OrientedBoxLE(0, 0, 1, 2, 0.1), 0.9),
                Scored(OrientedBoxLE(50, 50, 1, 2, 0.1), 0.8)]
        assert rotated_nms(dets, 0.5) == [0, 1]

    def test_ordered_by_score_not_input(self):
        dets = [Scored(OrientedBoxLE(50, 50, 1, 2, 0.1), 0.5),
                Scored(OrientedBoxLE(0, 0, 1, 2, 0.1), 0.9)]
        assert rotated_nms(dets, 0.5) == [1, 0]

    def test_score_ties_keep_input_order(self):
        box = OrientedBoxLE(0, 0, 1, 2, 0.1)
        dets = [Scored(box, 0.5), Scored(box, 0.5)]
        assert rotated_nms(dets, 0.5) == [0]

    def test_class_awareness(self):
        box = OrientedBoxLE(0, 0, 1, 2, 0.1)
        dets = [Scored(box, 0.9, class_id=0), Scored(box, 0.8, class_id=1)]
        assert rotated_nms(dets, 0.5) == [0, 1]
        assert rotated_nms(dets, 0.5, class_aware=False) == [0]

    def test_kept_pairs_below_threshold(self):
        rng = np.random.default_rng(16)
        dets = [Scored(random_box(rng, center_range=(0, 8), dim_range=(1, 6)),
                       float(rng.uniform(0, 1)), class_id=int(rng.integers(0, 2)))
                for _ in range(60)]
        for thresh in (0.2, 0.5, 0.9):
            kept = rotated_nms(dets, thresh)
            scores = [dets[i].score for i in kept]
            assert scores == sorted(scores, reverse=True)
            for i in kept:
                for j in kept:
                    if i < j and dets[i].class_id == dets[j].class_id:
                        assert skew_iou(dets[i].box, dets[j].box) < thresh

    def test_bad_threshold(self):
        with pytest.raises(GeometryError):
            rotated_nms([], 0.0)
        with pytest.raises(GeometryError):
            rotated_nms([], 1.5)
