"""
Seeded synthetic data with ground truth.

Trajectory scenarios stand in for camera footage: vehicles drive along
horizontal lanes, nearer lanes are lower in the image and draw bigger boxes,
and a vehicle overtaken in a nearer lane is hidden for a few frames.
Congestion scenarios produce per-second flow/density/speed series whose
speed follows the Greenberg relation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .congestion import CongestionConfig, congestion_index, episode_flags, sustained_congestion
from .errors import ConfigError
from .flow import ParameterSample, SpeedModelParams, greenberg_speed
from .geometry import BoundingBox
from .tracking.tracker import Detection


@dataclass(frozen=True)
class Lane:
    y: float  # box center row, pixels
    box_w: float
    box_h: float
    speed: tuple[float, float]  # px/frame range for vehicles starting in this lane


DEFAULT_LANES = (
    Lane(y=500.0, box_w=90.0, box_h=50.0, speed=(3.5, 4.5)),
    Lane(y=528.0, box_w=100.0, box_h=60.0, speed=(7.5, 8.5)),
)


@dataclass(frozen=True)
class Occlusion:
    occluder: int
    occluded: int
    start: int  # first hidden frame
    end: int  # last hidden frame (inclusive)


@dataclass(frozen=True)
class LaneChange:
    vehicle: int
    start: int
    duration: int
    to_lane: int


@dataclass
class TrajectoryScenario:
    n_vehicles: int = 20
    frame_count: int = 300
    fps: float = 25.0
    image_width: float = 1920.0
    image_height: float = 1080.0
    lanes: Sequence[Lane] = DEFAULT_LANES
    occlusions: Optional[list[Occlusion]] = None  # None: derive from overtakes
    occlusion_frames: int = 5
    occlusion_mode: str = "suppress"  # or "merge"
    lane_changes: list[LaneChange] = field(default_factory=list)
    noise_px: float = 0.0
    dropout: float = 0.0
    embedding_dim: int = 128
    embedding_noise: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.occlusion_mode not in ("suppress", "merge"):
            raise ConfigError(f"occlusion_mode must be 'suppress' or 'merge', got {self.occlusion_mode!r}")
        if not 0.0 <= self.dropout <= 1.0:
            raise ConfigError("dropout must lie in [0, 1]")
        if self.n_vehicles < 0 or self.frame_count < 1:
            raise ConfigError("n_vehicles >= 0 and frame_count >= 1 are required")


def _vehicle_paths(s: TrajectoryScenario, rng: np.random.Generator) -> np.ndarray:
    """(n_vehicles, frame_count, 4) exact center-format boxes."""
    n, T = s.n_vehicles, s.frame_count
    lanes = list(s.lanes)
    lane_of = np.arange(n) % len(lanes)
    paths = np.zeros((n, T, 4))
    frames = np.arange(T)
    for li, lane in enumerate(lanes):
        members = np.flatnonzero(lane_of == li)
        if members.size == 0:
            continue
        # one speed per lane keeps same-lane gaps constant
        speed = rng.uniform(*lane.speed)
        # spread start positions over the visible width plus the lane's travel
        span = s.image_width + lane.speed[1] * T
        gap = span / members.size
        x0 = s.image_width - (np.arange(members.size) + rng.uniform(0.2, 0.8, size=members.size)) * gap
        for k, v in enumerate(members):
            paths[v, :, 0] = x0[k] + speed * frames
            paths[v, :, 1] = lane.y
            paths[v, :, 2] = lane.box_w
            paths[v, :, 3] = lane.box_h
    for lc in s.lane_changes:
        v = lc.vehicle - 1
        target = lanes[lc.to_lane]
        a = np.clip((frames - lc.start) / max(lc.duration, 1), 0.0, 1.0)
        for col, end in ((1, target.y), (2, target.box_w), (3, target.box_h)):
            paths[v, :, col] = paths[v, 0, col] + a * (end - paths[v, 0, col])
    return paths


def _visible(paths: np.ndarray, width: float) -> np.ndarray:
    left = paths[..., 0] - paths[..., 2] / 2
    right = paths[..., 0] + paths[..., 2] / 2
    return (left >= 0) & (right <= width)


def derive_occlusions(paths: np.ndarray, visible: np.ndarray, length: int) -> list[Occlusion]:
    """One occlusion per pair of boxes that come into horizontal alignment.

    The vehicle drawn higher in the image (farther away) is hidden for
    ``length`` frames centred on the frame of closest alignment.
    """
    n, T, _ = paths.shape
    out = []
    for a in range(n):
        for b in range(a + 1, n):
            both = visible[a] & visible[b]
            dy = np.abs(paths[a, :, 1] - paths[b, :, 1])
            hh = (paths[a, :, 3] + paths[b, :, 3]) / 2
            dx = np.abs(paths[a, :, 0] - paths[b, :, 0])
            near = both & (dy < hh) & (dy > 0) & (dx < (paths[a, :, 2] + paths[b, :, 2]) / 4)
            if not near.any():
                continue
            cand = np.flatnonzero(near)
            center = int(cand[np.argmin(dx[cand])])
            far, front = (a, b) if paths[a, center, 1] < paths[b, center, 1] else (b, a)
            start = max(center - length // 2, 0)
            end = min(start + length - 1, T - 1)
            out.append(Occlusion(front + 1, far + 1, start, end))
    return sorted(out, key=lambda o: (o.start, o.occluded))


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def generate_trajectories(s: TrajectoryScenario):
    """Ground truth and detections for a trajectory scenario.

    Returns ``(ground_truth, detections, occlusions)`` where ground truth maps
    frame -> [(vehicle id, BoundingBox)] and detections is a per-frame list of
    :class:`Detection` carrying ``id_hint``.
    """
    rng = np.random.default_rng(s.seed)
    paths = _vehicle_paths(s, rng)
    visible = _visible(paths, s.image_width)
    occlusions = s.occlusions if s.occlusions is not None else derive_occlusions(paths, visible, s.occlusion_frames)
    identities = _unit(rng.normal(size=(s.n_vehicles, s.embedding_dim)))

    hidden = np.zeros_like(visible)
    merged_into: dict[tuple[int, int], int] = {}  # (frame, occluder idx) -> occluded idx
    for o in occlusions:
        hidden[o.occluded - 1, o.start : o.end + 1] = True
        if s.occlusion_mode == "merge":
            for f in range(o.start, o.end + 1):
                merged_into[(f, o.occluder - 1)] = o.occluded - 1

    ground_truth: dict[int, list[tuple[int, BoundingBox]]] = {}
    detections: list[list[Detection]] = []
    for f in range(s.frame_count):
        gt_f = []
        det_f = []
        for v in range(s.n_vehicles):
            if not visible[v, f]:
                continue
            cx, cy, w, h = paths[v, f]
            gt_f.append((v + 1, BoundingBox(cx, cy, w, h)))
            # draws happen for every visible vehicle so the random stream does not
            # depend on occlusion or dropout outcomes
            noise = rng.normal(scale=s.noise_px, size=4) if s.noise_px > 0 else np.zeros(4)
            conf = rng.uniform(0.6, 1.0)
            emb_noise = rng.normal(scale=s.embedding_noise, size=s.embedding_dim)
            drop = rng.random() < s.dropout
            if hidden[v, f] or drop:
                continue
            box = np.array([cx, cy, w, h]) + noise
            other = merged_into.get((f, v))
            if other is not None and visible[other, f]:
                ox, oy, ow, oh = paths[other, f]
                x1 = min(box[0] - box[2] / 2, ox - ow / 2)
                y1 = min(box[1] - box[3] / 2, oy - oh / 2)
                x2 = max(box[0] + box[2] / 2, ox + ow / 2)
                y2 = max(box[1] + box[3] / 2, oy + oh / 2)
                box = np.array([(x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1])
            box[2:] = np.maximum(box[2:], 1.0)
            emb = _unit(identities[v] + emb_noise) if s.embedding_dim else None
            det_f.append(Detection(BoundingBox(*map(float, box), confidence=float(conf)), emb, v + 1))
        ground_truth[f] = gt_f
        detections.append(det_f)
    return ground_truth, detections, occlusions


# --- parameter series -------------------------------------------------------


@dataclass(frozen=True)
class CongestionEvent:
    onset: float  # minutes: density starts rising
    ramp: float  # minutes from base to peak
    peak_density: float  # veh/km
    hold: float  # minutes at peak
    recovery: float  # minutes back to base


@dataclass
class CongestionScenario:
    duration: float = 90.0  # minutes
    base_density: float = 12.0
    base_density_end: Optional[float] = None  # linear drift of the base level
    events: list[CongestionEvent] = field(default_factory=list)
    noise: tuple[float, float, float] = (0.01, 0.3, 1.0)  # flow, density, speed sigma
    sample_period: float = 1.0  # seconds
    fps: float = 25.0
    speed_model: SpeedModelParams = field(default_factory=SpeedModelParams)
    congestion: CongestionConfig = field(default_factory=CongestionConfig)
    seed: int = 0

    def __post_init__(self):
        if not self.duration > 0 or not self.sample_period > 0:
            raise ConfigError("duration and sample_period must be positive")
        for ev in self.events:
            if not 0 < ev.peak_density < self.speed_model.k_j:
                raise ConfigError(f"event peak density {ev.peak_density} must lie in (0, k_j)")


def density_profile(s: CongestionScenario) -> np.ndarray:
    """Noiseless density per sample."""
    n = int(round(s.duration * 60.0 / s.sample_period))
    t = np.arange(n) * s.sample_period / 60.0
    end = s.base_density if s.base_density_end is None else s.base_density_end
    base = s.base_density + (end - s.base_density) * t / max(s.duration, 1e-12)
    k = base.copy()
    for ev in s.events:
        rise = np.clip((t - ev.onset) / max(ev.ramp, 1e-12), 0.0, 1.0)
        t_fall = ev.onset + ev.ramp + ev.hold
        fall = np.clip((t - t_fall) / max(ev.recovery, 1e-12), 0.0, 1.0)
        bump = (ev.peak_density - base) * rise * (1.0 - fall)
        k = np.maximum(k, base + bump)
    return np.clip(k, 1e-3, s.speed_model.k_j - 1e-3)


def generate_parameter_series(s: CongestionScenario) -> tuple[list[ParameterSample], np.ndarray]:
    """Per-sample (flow, density, speed) and ground-truth episode flags.

    Speed follows the Greenberg relation of the noiseless density, flow is
    density x speed (veh/s), and labels mark samples inside sustained
    congestion episodes of the noiseless congestion index.
    """
    rng = np.random.default_rng(s.seed)
    k = density_profile(s)
    v = np.array([greenberg_speed(ki, s.speed_model) for ki in k])
    q = k * v / 3600.0
    rho = congestion_index(k, v, s.congestion)
    episodes = sustained_congestion(rho, s.congestion, s.sample_period)
    labels = episode_flags(episodes, len(k), s.sample_period)
    sq, sk, sv = s.noise
    n = len(k)
    qn = np.maximum(q + rng.normal(scale=sq, size=n), 0.0)
    kn = np.clip(k + rng.normal(scale=sk, size=n), 1e-3, s.speed_model.k_j)
    vn = np.maximum(v + rng.normal(scale=sv, size=n), 0.0)
    step = int(round(s.fps * s.sample_period))
    samples = [ParameterSample(i * step, float(qn[i]), float(kn[i]), float(vn[i])) for i in range(n)]
    return samples, labels


def noiseless_series(s: CongestionScenario) -> np.ndarray:
    """(N, 3) flow/density/speed without measurement noise."""
    k = density_profile(s)
    v = np.array([greenberg_speed(ki, s.speed_model) for ki in k])
    return np.column_stack([k * v / 3600.0, k, v])
