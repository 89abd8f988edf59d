"""
Bounding-box algebra.

Boxes are stored in center format (cx, cy, w, h), pixel units. Corner
conversion is internal. All arithmetic is double precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class BoundingBox:
    cx: float
    cy: float
    w: float
    h: float
    confidence: float = 1.0
    class_id: int = 0

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box width/height must be positive, got w={self.w}, h={self.h}")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")

    @classmethod
    def from_corners(cls, x1, y1, x2, y2, confidence=1.0, class_id=0) -> "BoundingBox":
        return cls((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1, confidence, class_id)

    def corners(self) -> tuple[float, float, float, float]:
        hw, hh = self.w / 2.0, self.h / 2.0
        return self.cx - hw, self.cy - hh, self.cx + hw, self.cy + hh

    @property
    def area(self) -> float:
        return self.w * self.h


def _overlap_terms(a: BoundingBox, b: BoundingBox):
    ax1, ay1, ax2, ay2 = a.corners()
    bx1, by1, bx2, by2 = b.corners()
    iw = max(0.0, min(ax2, bx2) - max(ax1, bx1))
    ih = max(0.0, min(ay2, by2) - max(ay1, by1))
    inter = iw * ih
    # areas from the same corner values as the overlap, so rounding stays consistent
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    # smallest enclosing box
    cw = max(ax2, bx2) - min(ax1, bx1)
    ch = max(ay2, by2) - min(ay1, by1)
    return inter, union, cw, ch


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    if a.corners() == b.corners():
        return 1.0
    inter, union, _, _ = _overlap_terms(a, b)
    if inter <= 0.0:
        return 0.0
    return inter / union


def giou_loss(pred: BoundingBox, gt: BoundingBox) -> float:
    """1 - IoU + |C \\ (A u B)| / |C| with C the smallest enclosing box."""
    if pred.corners() == gt.corners():
        return 0.0
    inter, union, cw, ch = _overlap_terms(pred, gt)
    enclosing = cw * ch
    # C contains A u B, so a negative gap is rounding only
    return 1.0 - inter / union + max(enclosing - union, 0.0) / enclosing


def center_penalty(a: BoundingBox, b: BoundingBox) -> float:
    """Squared center distance over squared enclosing-box diagonal."""
    if a.corners() == b.corners():
        # same extents; stored centers may still differ in the last bits
        return 0.0
    _, _, cw, ch = _overlap_terms(a, b)
    diag2 = cw * cw + ch * ch
    if diag2 == 0.0:
        return 0.0
    dx, dy = a.cx - b.cx, a.cy - b.cy
    return (dx * dx + dy * dy) / diag2


def diou_loss(pred: BoundingBox, gt: BoundingBox) -> float:
    """1 - IoU + rho^2(b, b_gt) / c^2."""
    return 1.0 - iou(pred, gt) + center_penalty(pred, gt)


def diou(a: BoundingBox, b: BoundingBox) -> float:
    """DIoU overlap score IoU - rho^2/c^2, in (-1, 1]."""
    return iou(a, b) - center_penalty(a, b)


def diou_nms(
    boxes: Sequence[BoundingBox],
    conf_threshold: float = 0.5,
    nms_threshold: float = 0.3,
) -> list[BoundingBox]:
    """Greedy non-maximum suppression using the DIoU overlap score.

    Boxes below ``conf_threshold`` are dropped. Remaining boxes are visited in
    descending confidence (ties: lower input index first); a box is suppressed
    when its DIoU score with an already kept box exceeds ``nms_threshold``.
    """
    for name, t in (("conf_threshold", conf_threshold), ("nms_threshold", nms_threshold)):
        if not 0.0 <= t <= 1.0:
            raise ConfigError(f"{name} must lie in [0, 1], got {t}")
    order = sorted(
        (i for i, b in enumerate(boxes) if b.confidence >= conf_threshold),
        key=lambda i: (-boxes[i].confidence, i),
    )
    kept: list[BoundingBox] = []
    for i in order:
        cand = boxes[i]
        if all(diou(k, cand) <= nms_threshold for k in kept):
            kept.append(cand)
    return kept


def to_xyxy(boxes: np.ndarray) -> np.ndarray:
    """(N, 4) center-format array -> corner format."""
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 4)
    half = boxes[:, 2:] / 2.0
    return np.concatenate([boxes[:, :2] - half, boxes[:, :2] + half], axis=1)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between (N, 4) and (M, 4) center-format arrays."""
    a, b = to_xyxy(a), to_xyxy(b)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    lt = np.maximum(a[:, None, :2], b[None, :, :2])
    rb = np.minimum(a[:, None, 2:], b[None, :, 2:])
    wh = np.clip(rb - lt, 0.0, None)
    inter = wh[..., 0] * wh[..., 1]
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    return inter / (area_a[:, None] + area_b[None, :] - inter)
