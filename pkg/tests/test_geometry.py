import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trafficwarn.errors import ConfigError
from trafficwarn.geometry import (
    BoundingBox,
    center_penalty,
    diou,
    diou_loss,
    diou_nms,
    giou_loss,
    iou,
    iou_matrix,
)

from oracles import enclosing_diag2_exact, rect_iou_exact

coord = st.floats(-200, 200, allow_nan=False)
size = st.floats(0.01, 150, allow_nan=False)
boxes = st.builds(BoundingBox, coord, coord, size, size)


def corners(x1, y1, x2, y2, conf=1.0):
    return BoundingBox.from_corners(x1, y1, x2, y2, conf)


class TestBoundingBox:
    @pytest.mark.parametrize("w,h", [(0, 1), (1, 0), (-1, 2), (2, -0.5)])
    def test_rejects_nonpositive_size(self, w, h):
        with pytest.raises(ValueError):
            BoundingBox(0, 0, w, h)

    @pytest.mark.parametrize("conf", [-0.01, 1.01])
    def test_rejects_confidence_outside_unit_interval(self, conf):
        with pytest.raises(ValueError):
            BoundingBox(0, 0, 1, 1, conf)

    def test_corner_roundtrip(self):
        b = corners(1.0, 2.0, 4.0, 8.0)
        assert (b.cx, b.cy, b.w, b.h) == (2.5, 5.0, 3.0, 6.0)
        assert b.corners() == (1.0, 2.0, 4.0, 8.0)


class TestIoU:
    def test_identical_unit_boxes(self):
        assert iou(corners(0, 0, 1, 1), corners(0, 0, 1, 1)) == 1.0

    def test_disjoint(self):
        assert iou(corners(0, 0, 1, 1), corners(5, 5, 6, 6)) == 0.0

    def test_half_overlap_worked_example(self):
        a, b = corners(0, 0, 2, 2), corners(1, 0, 3, 2)
        assert iou(a, b) == pytest.approx(float(rect_iou_exact((0, 0, 2, 2), (1, 0, 3, 2))), abs=1e-12)
        assert iou(a, b) == pytest.approx(1 / 3, abs=1e-12)

    def test_touching_edges_have_zero_overlap(self):
        assert iou(corners(0, 0, 1, 1), corners(1, 0, 2, 1)) == 0.0

    @given(boxes, boxes)
    def test_matches_exact_rational_oracle(self, a, b):
        assert iou(a, b) == pytest.approx(float(rect_iou_exact(a.corners(), b.corners())), abs=1e-12)

    @given(boxes, boxes)
    def test_symmetric_and_bounded(self, a, b):
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0

    @given(boxes)
    def test_self_overlap_is_exactly_one(self, a):
        assert iou(a, a) == 1.0

    def test_matrix_agrees_with_scalar(self):
        rng = np.random.default_rng(0)
        A = np.column_stack([rng.uniform(0, 50, (7, 2)), rng.uniform(1, 20, (7, 2))])
        B = np.column_stack([rng.uniform(0, 50, (5, 2)), rng.uniform(1, 20, (5, 2))])
        M = iou_matrix(A, B)
        for i in range(7):
            for j in range(5):
                assert M[i, j] == pytest.approx(iou(BoundingBox(*A[i]), BoundingBox(*B[j])), abs=1e-12)
        assert iou_matrix(A[:0], B).shape == (0, 5)


class TestGIoU:
    def test_identical(self):
        assert giou_loss(corners(0, 0, 1, 1), corners(0, 0, 1, 1)) == 0.0

    def test_adjacent_unit_boxes_worked_example(self):
        # enclosing box equals the union: 1 - 0 + (2 - 2)/2
        assert giou_loss(corners(0, 0, 1, 1), corners(1, 0, 2, 1)) == pytest.approx(1.0, abs=1e-12)

    def test_approaches_two_with_separation(self):
        vals = [giou_loss(corners(0, 0, 1, 1), corners(d, 0, d + 1, 1)) for d in (10, 100, 1000, 10000)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        assert 2.0 - vals[-1] < 1e-3
        assert all(v < 2.0 for v in vals)

    def test_nearly_identical_thin_boxes_not_negative(self):
        a = BoundingBox(0.0, 0.010000000000000002, 13.0, 0.010000000000000002)
        b = BoundingBox(0.0, 0.010000000000000002, 13.0, 0.01)
        assert giou_loss(a, b) >= 0.0

    @given(boxes, boxes)
    def test_bounds(self, a, b):
        v = giou_loss(a, b)
        assert 0.0 <= v < 2.0
        assert v >= 1.0 - iou(a, b) - 1e-12


class TestDIoU:
    def test_identical(self):
        assert diou_loss(corners(0, 0, 1, 1), corners(0, 0, 1, 1)) == 0.0

    def test_adjacent_unit_boxes_worked_example(self):
        # centers (0.5,0.5), (1.5,0.5): rho^2 = 1, enclosing [0,2]x[0,1] so c^2 = 5
        a, b = corners(0, 0, 1, 1), corners(1, 0, 2, 1)
        expected = 1 - float(rect_iou_exact(a.corners(), b.corners())) + 1 / float(
            enclosing_diag2_exact(a.corners(), b.corners()))
        assert diou_loss(a, b) == pytest.approx(expected, abs=1e-12)
        assert diou_loss(a, b) == pytest.approx(1.2, abs=1e-12)

    def test_concentric_worked_example(self):
        a, b = BoundingBox(0, 0, 2, 2), BoundingBox(0, 0, 4, 4)
        assert diou_loss(a, b) == pytest.approx(1 - float(rect_iou_exact(a.corners(), b.corners())), abs=1e-12)
        assert diou_loss(a, b) == pytest.approx(0.75, abs=1e-12)

    @given(boxes, boxes)
    def test_bounds_and_center_term(self, a, b):
        v = diou_loss(a, b)
        assert 0.0 <= v < 2.0
        assert v >= 1.0 - iou(a, b) - 1e-12
        # offsets below ~1e-154 square to zero in float64; identical corners are the same box
        if math.hypot(a.cx - b.cx, a.cy - b.cy) > 1e-150 and a.corners() != b.corners():
            assert center_penalty(a, b) > 0.0

    @given(boxes, size, size)
    def test_concentric_boxes_have_no_center_term(self, a, w, h):
        b = BoundingBox(a.cx, a.cy, w, h)
        assert diou_loss(a, b) == pytest.approx(1.0 - iou(a, b), abs=1e-12)

    @given(boxes, boxes)
    def test_zero_loss_iff_identical(self, a, b):
        same = a.corners() == b.corners()
        assert (diou_loss(a, b) == 0.0) == same
        assert (giou_loss(a, b) == 0.0) == same

    def test_diou_score_negative_for_far_boxes(self):
        assert diou(corners(0, 0, 1, 1), corners(100, 100, 101, 101)) < 0


class TestDIoUNMS:
    def test_empty(self):
        assert diou_nms([]) == []

    def test_single_box(self):
        b = BoundingBox(5, 5, 2, 2, 0.9)
        assert diou_nms([b]) == [b]

    def test_identical_boxes_keep_higher_confidence(self):
        lo, hi = BoundingBox(5, 5, 2, 2, 0.8), BoundingBox(5, 5, 2, 2, 0.9)
        assert diou_nms([lo, hi], 0.5, 0.3) == [hi]

    def test_far_boxes_both_kept(self):
        a, b = BoundingBox(0, 0, 2, 2, 0.9), BoundingBox(500, 500, 2, 2, 0.9)
        assert diou(a, b) < 0.3
        assert diou_nms([a, b], 0.5, 0.3) == [a, b]

    def test_confidence_threshold(self):
        a, b = BoundingBox(0, 0, 2, 2, 0.4), BoundingBox(50, 0, 2, 2, 0.6)
        assert diou_nms([a, b], 0.5, 0.3) == [b]

    def test_tie_broken_by_input_order(self):
        a, b = BoundingBox(0, 0, 2, 2, 0.7), BoundingBox(0.1, 0, 2, 2, 0.7)
        assert diou_nms([a, b]) == [a]
        assert diou_nms([b, a]) == [b]

    def test_center_distance_keeps_overlapping_offset_box(self):
        # IoU alone would suppress, the center penalty lifts the pair below threshold
        a, b = BoundingBox(0, 0, 10, 10, 0.9), BoundingBox(4, 0, 10, 10, 0.8)
        assert iou(a, b) > 0.4
        assert diou(a, b) < 0.45
        assert diou_nms([a, b], 0.5, 0.45) == [a, b]

    @pytest.mark.parametrize("bad", [-0.1, 1.5])
    def test_threshold_validation(self, bad):
        with pytest.raises(ConfigError):
            diou_nms([], conf_threshold=bad)
        with pytest.raises(ConfigError):
            diou_nms([], nms_threshold=bad)

    @given(st.lists(st.builds(BoundingBox, coord, coord, size, size, st.floats(0, 1)), max_size=15),
           st.floats(0, 1), st.floats(0, 1))
    def test_subset_sorted_and_above_threshold(self, bs, conf_t, nms_t):
        out = diou_nms(bs, conf_t, nms_t)
        assert len(out) <= len(bs)
        assert all(any(o is b for b in bs) for o in out)
        assert all(o.confidence >= conf_t for o in out)
        assert all(a.confidence >= b.confidence for a, b in zip(out, out[1:]))
        for i, a in enumerate(out):
            for b in out[i + 1:]:
                assert diou(a, b) <= nms_t
