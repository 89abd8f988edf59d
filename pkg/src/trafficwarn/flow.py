"""
Traffic-flow parameters from tracked trajectories.

Flow is counted with a pair of virtual detection lines, density is a count
over a road length, and speed comes from a fundamental-diagram model
(Greenshields at low density, Greenberg at high density).
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DomainError

log = logging.getLogger(__name__)

Point = tuple[float, float]
Line = tuple[Point, Point]


@dataclass(frozen=True)
class DetectionLinePair:
    line_a: Line
    line_b: Line

    def __post_init__(self):
        for name in ("line_a", "line_b"):
            (x1, y1), (x2, y2) = getattr(self, name)
            if (x1, y1) == (x2, y2):
                raise ConfigError(f"{name} endpoints must be distinct")

    @classmethod
    def vertical(cls, x: float, y_top: float, y_bottom: float, separation: float = 50.0) -> "DetectionLinePair":
        """Two vertical lines ``separation`` pixels apart, the first at ``x``."""
        return cls(((x, y_top), (x, y_bottom)), ((x + separation, y_top), (x + separation, y_bottom)))


@dataclass(frozen=True)
class SegmentGeometry:
    length: float  # km
    lanes: int = 2
    upstream_point: str = ""
    downstream_point: str = ""

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigError(f"segment length must be positive, got {self.length}")
        if self.lanes < 1:
            raise ConfigError(f"lanes must be >= 1, got {self.lanes}")


@dataclass(frozen=True)
class SpeedModelParams:
    model: str = "greenberg"
    v_f: float = 35.0  # km/h
    k_j: float = 180.0  # veh/km
    density_switch_threshold: float = 10.0  # veh/km; greenberg at or above
    fallback_speed: float = 120.0  # km/h, used where the log model is undefined (k <= 0)

    def __post_init__(self):
        if self.model not in ("greenshields", "greenberg"):
            raise ConfigError(f"speed model must be 'greenshields' or 'greenberg', got {self.model!r}")
        if not (self.v_f > 0 and self.k_j > 0):
            raise ConfigError("v_f and k_j must be positive")


@dataclass(frozen=True)
class ParameterSample:
    frame: int
    flow: float
    density: float
    speed: float


@dataclass(frozen=True)
class CrossingEvent:
    track_id: int
    frame: int
    direction: int  # +1: line_a then line_b, -1: line_b then line_a


def side_of_line(point: Point, line: Line) -> float:
    """Signed 2-D cross product; positive on the left of the directed line, 0 on it."""
    (x1, y1), (x2, y2) = line
    x, y = point
    return (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


def detect_crossing(
    positions: Sequence[tuple[int, float, float]],
    lines: DetectionLinePair,
    track_id: int = 0,
    max_gap_frames: int = 75,
) -> list[CrossingEvent]:
    """Crossing events for one track given its (frame, x, y) centroids in frame order.

    A vehicle is counted when its centroid changes side of one line and then
    of the other line within ``max_gap_frames``. Points lying exactly on a
    line keep the previous side. Each track is counted at most once.
    """
    events: list[CrossingEvent] = []
    prev = [0, 0]
    armed: tuple[int, int] | None = None  # (line index crossed first, frame)
    for frame, x, y in positions:
        sides = [_sign(side_of_line((x, y), lines.line_a)), _sign(side_of_line((x, y), lines.line_b))]
        crossed = [prev[k] != 0 and sides[k] != 0 and sides[k] != prev[k] for k in (0, 1)]
        for k in (0, 1):
            if sides[k] != 0:
                prev[k] = sides[k]
        if armed is not None and frame - armed[1] > max_gap_frames:
            armed = None
        if crossed[0] and crossed[1]:
            # jumped over both lines between samples
            events.append(CrossingEvent(track_id, frame, +1 if _a_before_b(lines, x, y) else -1))
            break
        for k in (0, 1):
            if not crossed[k]:
                continue
            if armed is not None and armed[0] != k:
                events.append(CrossingEvent(track_id, frame, +1 if armed[0] == 0 else -1))
                break
            armed = (k, frame)
        if events:
            break
    return events


def _a_before_b(lines: DetectionLinePair, x: float, y: float) -> bool:
    # the line farther from the current position was crossed first
    da = abs(side_of_line((x, y), lines.line_a))
    db = abs(side_of_line((x, y), lines.line_b))
    return da >= db


def count_crossings(records: Iterable, lines: DetectionLinePair, max_gap_frames: int = 75) -> list[CrossingEvent]:
    """Crossing events for all tracks in a record stream (frame, track_id, cx, cy, ...)."""
    by_track: dict[int, list[tuple[int, float, float]]] = defaultdict(list)
    for r in records:
        by_track[r.track_id].append((r.frame, r.cx, r.cy))
    events = []
    for tid in sorted(by_track):
        pts = sorted(by_track[tid])
        events.extend(detect_crossing(pts, lines, tid, max_gap_frames))
    return sorted(events, key=lambda e: (e.frame, e.track_id))


def flow_series(
    event_times: Sequence[float],
    window: float = 1.0,
    duration: float | None = None,
    unit: str = "second",
) -> np.ndarray:
    """Vehicles per unit time in tumbling windows of ``window`` seconds.

    ``event_times`` are in seconds from the start of the record. The result
    has one entry per window; ``unit`` is ``"second"`` or ``"minute"``.
    """
    if window <= 0:
        raise ConfigError("window must be positive")
    scale = {"second": 1.0, "minute": 60.0}.get(unit)
    if scale is None:
        raise ConfigError(f"flow unit must be 'second' or 'minute', got {unit!r}")
    t = np.asarray(event_times, dtype=float)
    if duration is None:
        duration = float(t.max()) + window if t.size else window
    n = max(int(math.ceil(duration / window - 1e-12)), 1)
    idx = np.clip(np.floor(t / window).astype(int), 0, n - 1)
    counts = np.bincount(idx, minlength=n).astype(float)
    return counts / window * scale


def density(vehicle_count: float, segment: SegmentGeometry) -> float:
    """Vehicles per km over the segment."""
    return vehicle_count / segment.length


def greenshields_speed(k: float, p: SpeedModelParams) -> float:
    """Linear model v_f (1 - k/k_j); densities beyond jam give 0."""
    if k < 0:
        raise DomainError(f"density must be non-negative, got {k}")
    if k > p.k_j:
        log.warning("density %.3f exceeds jam density %.3f; speed clamped to 0", k, p.k_j)
        return 0.0
    return p.v_f * (1.0 - k / p.k_j)


def greenberg_speed(k: float, p: SpeedModelParams) -> float:
    """Logarithmic model v_f ln(k_j / k)."""
    if k <= 0:
        raise DomainError(f"Greenberg speed is undefined for density {k} <= 0")
    return p.v_f * math.log(p.k_j / k)


def select_speed_model(k: float, p: SpeedModelParams) -> str:
    return "greenberg" if k >= p.density_switch_threshold else "greenshields"


def model_speed(k: float, p: SpeedModelParams) -> float:
    """Speed for density ``k`` using the model chosen for that density."""
    if select_speed_model(k, p) == "greenberg":
        try:
            return max(greenberg_speed(k, p), 0.0)
        except DomainError:
            return p.fallback_speed
    return greenshields_speed(k, p)


def displacement_speed(
    positions: Sequence[tuple[int, float, float]], fps: float, meters_per_pixel: float
) -> float:
    """Mean centroid speed (km/h) of one track; a diagnostic cross-check only."""
    if len(positions) < 2:
        return float("nan")
    pts = np.asarray(sorted(positions), dtype=float)
    dist_px = np.hypot(np.diff(pts[:, 1]), np.diff(pts[:, 2])).sum()
    dt = (pts[-1, 0] - pts[0, 0]) / fps
    return dist_px * meters_per_pixel / dt * 3.6


def parameter_series(
    records: Sequence,
    lines: DetectionLinePair,
    segment: SegmentGeometry,
    speed_params: SpeedModelParams,
    n_frames: int,
    fps: float = 25.0,
    sample_every: int = 25,
    flow_unit: str = "second",
) -> list[ParameterSample]:
    """One ParameterSample per ``sample_every`` frames from tracker records.

    Flow counts crossings in the preceding sampling interval; density counts
    the confirmed tracks visible at the sample frame.
    """
    if sample_every < 1:
        raise ConfigError("sample_every must be >= 1")
    window = sample_every / fps
    events = count_crossings(records, lines, max_gap_frames=3 * sample_every)
    flows = flow_series([e.frame / fps for e in events], window, n_frames / fps, flow_unit)
    live = defaultdict(int)
    for r in records:
        live[r.frame] += 1
    out = []
    for i, q in enumerate(flows):
        frame = min((i + 1) * sample_every - 1, n_frames - 1)
        k = density(live.get(frame, 0), segment)
        out.append(ParameterSample(frame, float(q), k, model_speed(k, speed_params)))
    return out
