"""Tracking-by-detection: SORT (IoU cost) and motion+appearance fused cost."""

from __future__ import annotations

import enum
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError
from ..geometry import BoundingBox, iou_matrix
from .assignment import hungarian_assign
from .kalman import (
    CHI2_95,
    BoxKalman,
    BoxNoise,
    TrackState,
    box_to_measurement,
    measurement_to_wh,
)

log = logging.getLogger(__name__)


@dataclass
class Detection:
    box: BoundingBox
    embedding: Optional[np.ndarray] = None
    id_hint: Optional[int] = None  # ground-truth identity; never read by the tracker

    def __post_init__(self):
        if self.embedding is not None:
            e = np.asarray(self.embedding, dtype=float).reshape(-1)
            norm = np.linalg.norm(e)
            if abs(norm - 1.0) > 1e-6:
                raise ValueError(f"embedding must be unit-norm, got norm {norm:.9f}")
            self.embedding = e


class TrackStatus(str, enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DELETED = "deleted"


@dataclass
class Track:
    id: int
    state: TrackState
    gallery: deque
    hits: int = 1
    misses: int = 0
    status: TrackStatus = TrackStatus.TENTATIVE
    class_id: int = 0
    confidence: float = 1.0

    def box(self) -> BoundingBox:
        w, h = measurement_to_wh(self.state.x[:4])
        return BoundingBox(float(self.state.x[0]), float(self.state.x[1]), w, h,
                           min(max(self.confidence, 0.0), 1.0), self.class_id)

    def mark_deleted(self):
        self.status = TrackStatus.DELETED


@dataclass
class TrackerConfig:
    mode: str = "fused"  # "fused" (motion + appearance) or "sort" (IoU only)
    lam: float = 0.7
    min_hits: int = 3
    max_misses: int = 30
    iou_threshold: float = 0.3  # SORT: pairs below this IoU are forbidden
    max_cost: float = np.inf  # fused: pairs above this cost are forbidden
    gallery_size: int = 100
    noise: BoxNoise = field(default_factory=BoxNoise)

    def __post_init__(self):
        if self.mode not in ("fused", "sort"):
            raise ConfigError(f"tracker mode must be 'fused' or 'sort', got {self.mode!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lam must lie in [0, 1], got {self.lam}")
        if self.min_hits < 1 or self.max_misses < 0 or self.gallery_size < 1:
            raise ConfigError("min_hits >= 1, max_misses >= 0 and gallery_size >= 1 are required")

    @classmethod
    def sort_baseline(cls, **overrides) -> "TrackerConfig":
        """Settings of the original SORT tracker: IoU cost, tracks die after one missed frame."""
        kw = dict(mode="sort", max_misses=1)
        kw.update(overrides)
        return cls(**kw)


@dataclass(frozen=True)
class TrackRecord:
    frame: int
    track_id: int
    cx: float
    cy: float
    w: float
    h: float
    status: str


@dataclass
class FrameEvents:
    frame: int
    births: list[int] = field(default_factory=list)
    deaths: list[int] = field(default_factory=list)
    matches: list[tuple[int, int]] = field(default_factory=list)  # (track id, detection index)


def cosine_distance(gallery: Sequence[np.ndarray], embedding: np.ndarray) -> float:
    """Smallest 1 - <g, e> over the gallery; in [0, 2] for unit vectors."""
    if len(gallery) == 0:
        raise ValueError("gallery is empty")
    G = np.asarray(gallery, dtype=float)
    return float(np.min(1.0 - G @ np.asarray(embedding, dtype=float)))


def squash_mahalanobis(d2: float, dim: int = 4) -> float:
    """Map a squared Mahalanobis distance to [0, 1] via the 95% chi-square gate."""
    return min(d2 / CHI2_95[dim], 1.0)


def fused_cost(h1: float, h2: float, lam: float = 0.7) -> float:
    """Convex combination lam*h1 + (1-lam)*h2 of motion and appearance costs."""
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lam must lie in [0, 1], got {lam}")
    return lam * h1 + (1.0 - lam) * h2


class Tracker:
    """Stateful multi-object tracker; call :meth:`step` once per frame."""

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.kf = BoxKalman(self.config.noise)
        self.tracks: list[Track] = []
        self.frame = -1
        self._next_id = 1
        self._warned_no_embedding = False

    # -- cost construction -----------------------------------------------------

    def _iou_cost(self, tracks: list[Track], dets: Sequence[Detection]) -> tuple[np.ndarray, float]:
        tb = np.array([[t.state.x[0], t.state.x[1], *measurement_to_wh(t.state.x[:4])] for t in tracks])
        db = np.array([[d.box.cx, d.box.cy, d.box.w, d.box.h] for d in dets])
        return 1.0 - iou_matrix(tb, db), 1.0 - self.config.iou_threshold

    def _fused_cost(self, tracks: list[Track], dets: Sequence[Detection]) -> tuple[np.ndarray, float]:
        cfg = self.config
        Z = np.array([box_to_measurement(d.box) for d in dets])
        has_emb = np.array([d.embedding is not None for d in dets])
        if not has_emb.all() and not self._warned_no_embedding:
            log.warning("detections carry no appearance embedding; using motion-only cost")
            self._warned_no_embedding = True
        E = np.array([d.embedding for d in dets if d.embedding is not None])
        cost = np.full((len(tracks), len(dets)), np.inf)
        for i, t in enumerate(tracks):
            motion = np.minimum(self.kf.gating_distance(t.state, Z) / CHI2_95[4], 1.0)
            row = motion.copy()
            if t.gallery and len(E):
                appearance = np.min(1.0 - np.asarray(t.gallery) @ E.T, axis=0)
                row[has_emb] = cfg.lam * motion[has_emb] + (1.0 - cfg.lam) * appearance
            # outside the chi-square gate
            row[motion >= 1.0] = np.inf
            cost[i] = row
        return cost, cfg.max_cost

    # -- lifecycle --------------------------------------------------------------

    def _spawn(self, det: Detection, events: FrameEvents):
        cfg = self.config
        gallery = deque(maxlen=cfg.gallery_size)
        if det.embedding is not None:
            gallery.append(det.embedding)
        t = Track(self._next_id, self.kf.initiate(box_to_measurement(det.box)), gallery,
                  class_id=det.box.class_id, confidence=det.box.confidence)
        if cfg.min_hits <= 1:
            t.status = TrackStatus.CONFIRMED
        self._next_id += 1
        self.tracks.append(t)
        events.births.append(t.id)

    def step(self, detections: Sequence[Detection]) -> tuple[list[Track], FrameEvents]:
        """Advance one frame: predict, associate, update, manage lifecycle."""
        cfg = self.config
        self.frame += 1
        events = FrameEvents(self.frame)
        for t in self.tracks:
            t.state = self.kf.predict(t.state)

        if self.tracks and detections:
            if cfg.mode == "sort":
                cost, gate = self._iou_cost(self.tracks, detections)
            else:
                cost, gate = self._fused_cost(self.tracks, detections)
            pairs = hungarian_assign(cost, gate)
        else:
            pairs = []

        matched_t = {i for i, _ in pairs}
        matched_d = {j for _, j in pairs}
        for i, j in pairs:
            t, d = self.tracks[i], detections[j]
            t.state = self.kf.update(t.state, box_to_measurement(d.box))
            if d.embedding is not None:
                t.gallery.append(d.embedding)
            t.hits += 1
            t.misses = 0
            t.confidence = d.box.confidence
            if t.status is TrackStatus.TENTATIVE and t.hits >= cfg.min_hits:
                t.status = TrackStatus.CONFIRMED
            events.matches.append((t.id, j))

        for i, t in enumerate(self.tracks):
            if i in matched_t:
                continue
            t.misses += 1
            t.hits = 0
            if t.status is TrackStatus.TENTATIVE or t.misses > cfg.max_misses:
                t.mark_deleted()
                events.deaths.append(t.id)

        self.tracks = [t for t in self.tracks if t.status is not TrackStatus.DELETED]
        for j, d in enumerate(detections):
            if j not in matched_d:
                self._spawn(d, events)
        return self.tracks, events

    def records(self) -> list[TrackRecord]:
        """Confirmed tracks that were matched in the current frame."""
        out = []
        for t in self.tracks:
            if t.status is TrackStatus.CONFIRMED and t.misses == 0:
                b = t.box()
                out.append(TrackRecord(self.frame, t.id, b.cx, b.cy, b.w, b.h, t.status.value))
        return out


def track_step(tracker: Tracker, detections: Sequence[Detection]):
    """Functional alias for :meth:`Tracker.step`."""
    return tracker.step(detections)


def run_tracker(frames: Sequence[Sequence[Detection]], config: TrackerConfig | None = None) -> list[TrackRecord]:
    """Track a whole sequence (index = frame number) and return the per-frame records."""
    tracker = Tracker(config)
    out: list[TrackRecord] = []
    for dets in frames:
        tracker.step(dets)
        out.extend(tracker.records())
    return out
