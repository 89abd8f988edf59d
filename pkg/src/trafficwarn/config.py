"""Site configuration: observation points, segments, model settings, simulation.

The configuration is a YAML document validated against the models below.
Every validation problem is reported with its field path, for example
``points.2.segment_length_km: Input should be greater than 0``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .congestion import CongestionConfig
from .errors import ConfigError
from .flow import DetectionLinePair, SegmentGeometry, SpeedModelParams
from .neural.training import TrainConfig
from .preprocess import CleaningBounds
from .tracking.kalman import BoxNoise
from .tracking.tracker import TrackerConfig


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LinesConfig(_Section):
    """Two directed detection lines in image coordinates, ``[[x1, y1], [x2, y2]]`` each."""

    line_a: tuple[tuple[float, float], tuple[float, float]]
    line_b: tuple[tuple[float, float], tuple[float, float]]

    @model_validator(mode="after")
    def _distinct(self):
        for name in ("line_a", "line_b"):
            a, b = getattr(self, name)
            if a == b:
                raise ValueError(f"{name} endpoints must be distinct")
        return self


class PointInputs(_Section):
    detections: Optional[str] = None
    ground_truth: Optional[str] = None
    parameters: Optional[str] = None


class PointConfig(_Section):
    id: str = Field(min_length=1)
    lines: LinesConfig
    segment_length_km: float = Field(gt=0)  # road length over which density is counted
    lanes: int = Field(default=2, ge=1)
    inputs: PointInputs = PointInputs()


class SegmentConfig(_Section):
    upstream: str
    downstream: str
    length_km: float = Field(gt=0)


class SplitConfig(_Section):
    train: list[str] = Field(min_length=1)
    test: list[str] = Field(min_length=1)
    train_fraction: float = Field(default=0.7, gt=0, lt=1)


class SpeedModelSection(_Section):
    model: Literal["greenshields", "greenberg"] = "greenberg"
    v_f: float = Field(default=35.0, gt=0)
    k_j: float = Field(default=180.0, gt=0)
    density_switch_threshold: float = Field(default=10.0, ge=0)
    fallback_speed: float = Field(default=120.0, gt=0)


class CongestionSection(_Section):
    k_c: float = Field(default=2200.0, gt=0)
    v_f_free: float = Field(default=120.0, gt=0)
    rho_threshold: float = Field(default=0.016, gt=0)
    sustained_fraction: float = Field(default=0.8, gt=0, le=1)
    sustained_window: float = Field(default=30.0, gt=0)
    warning_lead: float = Field(default=10.0, gt=0)
    match_tolerance: float = Field(default=1.0, ge=0)
    debounce_samples: int = Field(default=3, ge=1)


class CleaningSection(_Section):
    # Congested traffic drives speeds far below 60 km/h, so the pipeline keeps them.
    speed_min: float = 0.0
    speed_max: float = 140.0
    n_sigma: float = Field(default=3.0, gt=0)
    max_iter: int = Field(default=10, ge=1)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.speed_min < self.speed_max:
            raise ValueError("speed_min must be below speed_max")
        return self


class WindowSection(_Section):
    seq_len: int = Field(default=10, ge=1)
    horizon_minutes: float = Field(default=30.0, gt=0)
    sample_period: float = Field(default=1.0, gt=0)  # seconds between parameter samples


class TrackerSection(_Section):
    mode: Literal["fused", "sort"] = "fused"
    lam: float = Field(default=0.7, ge=0, le=1)
    min_hits: int = Field(default=3, ge=1)
    max_misses: int = Field(default=30, ge=0)
    iou_threshold: float = Field(default=0.3, ge=0, le=1)
    gallery_size: int = Field(default=100, ge=1)


class TrainingSection(_Section):
    models: list[Literal["gru_attention", "gru", "logistic"]] = ["gru_attention", "gru", "logistic"]
    warning_model: Literal["gru_attention", "gru"] = "gru_attention"
    hidden_dim: int = Field(default=16, ge=1)
    epochs: int = Field(default=60, ge=1)
    batch_size: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=3e-3, gt=0)
    weight_decay: float = Field(default=1e-5, ge=0)
    early_stop_patience: int = Field(default=10, ge=0)
    threshold: float = Field(default=0.5, gt=0, lt=1)


class TrajectorySimSection(_Section):
    n_vehicles: int = Field(default=20, ge=0)
    frame_count: int = Field(default=300, ge=1)
    noise_px: float = Field(default=1.0, ge=0)
    dropout: float = Field(default=0.0, ge=0, le=1)
    embedding_dim: int = Field(default=32, ge=0)


class EventSim(_Section):
    onset: float = Field(ge=0)  # minutes, density starts rising
    ramp: float = Field(default=41.0, gt=0)
    peak_density: float = Field(default=70.0, gt=0)
    hold: float = Field(default=15.0, ge=0)
    recovery: float = Field(default=3.0, gt=0)


class SimulationSection(_Section):
    duration_minutes: float = Field(default=200.0, gt=0)
    base_density: float = Field(default=12.0, gt=0)
    events: list[EventSim] = [EventSim(onset=5.0), EventSim(onset=72.0), EventSim(onset=142.0)]
    onset_jitter_minutes: float = Field(default=2.0, ge=0)
    peak_jitter: float = Field(default=4.0, ge=0)
    noise_scale: float = Field(default=1.0, ge=0)
    trajectories: TrajectorySimSection = TrajectorySimSection()


class SiteConfig(_Section):
    seed: int = 0
    fps: float = Field(default=25.0, gt=0)
    points: list[PointConfig] = Field(min_length=1)
    segments: list[SegmentConfig] = []
    split: SplitConfig
    speed_model: SpeedModelSection = SpeedModelSection()
    congestion: CongestionSection = CongestionSection()
    cleaning: CleaningSection = CleaningSection()
    window: WindowSection = WindowSection()
    tracker: TrackerSection = TrackerSection()
    training: TrainingSection = TrainingSection()
    simulation: SimulationSection = SimulationSection()

    @model_validator(mode="after")
    def _references(self):
        ids = [p.id for p in self.points]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise ValueError(f"duplicate point ids {dupes}")
        known = set(ids)
        for i, s in enumerate(self.segments):
            for end in ("upstream", "downstream"):
                if getattr(s, end) not in known:
                    raise ValueError(f"segments.{i}.{end}: unknown point {getattr(s, end)!r}")
        for part in ("train", "test"):
            for i, pid in enumerate(getattr(self.split, part)):
                if pid not in known:
                    raise ValueError(f"split.{part}.{i}: unknown point {pid!r}")
        overlap = set(self.split.train) & set(self.split.test)
        if overlap:
            raise ValueError(f"split: points {sorted(overlap)} are in both train and test")
        return self

    # -- conversions to library types --

    def point(self, pid: str) -> PointConfig:
        for p in self.points:
            if p.id == pid:
                return p
        raise ConfigError(f"unknown point {pid!r}")

    def lines(self, pid: str) -> DetectionLinePair:
        p = self.point(pid).lines
        return DetectionLinePair(p.line_a, p.line_b)

    def segment_geometry(self, pid: str) -> SegmentGeometry:
        p = self.point(pid)
        return SegmentGeometry(p.segment_length_km, p.lanes, p.id, p.id)

    def speed_params(self) -> SpeedModelParams:
        return SpeedModelParams(**self.speed_model.model_dump())

    def congestion_config(self) -> CongestionConfig:
        return CongestionConfig(**self.congestion.model_dump())

    def cleaning_bounds(self) -> CleaningBounds:
        return CleaningBounds(**self.cleaning.model_dump())

    def tracker_config(self) -> TrackerConfig:
        return TrackerConfig(**self.tracker.model_dump(), noise=BoxNoise())

    def train_config(self, seed: int) -> TrainConfig:
        t = self.training
        return TrainConfig(epochs=t.epochs, batch_size=t.batch_size, learning_rate=t.learning_rate,
                           weight_decay=t.weight_decay, early_stop_patience=t.early_stop_patience, seed=seed)

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        msg = err["msg"].removeprefix("Value error, ")
        lines.append(f"{loc}: {msg}")
    return "\n".join(lines)


def parse_config(data: dict, seed: int | None = None) -> SiteConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>: config must be a mapping")
    if seed is not None:
        data = {**data, "seed": seed}
    try:
        return SiteConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def load_config(path, seed: int | None = None) -> SiteConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"{path}: config file not found") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"{path}: {where}{getattr(exc, 'problem', exc)}") from None
    return parse_config(data or {}, seed)


def dump_config(cfg: SiteConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
    return path


def default_config(seed: int = 0) -> SiteConfig:
    """Four observation points on one carriageway, three for training and one for testing."""
    ids = ["32.31.250.103", "32.31.250.105", "32.31.250.107", "32.31.250.108"]
    lines = {"line_a": [[900.0, 440.0], [900.0, 600.0]], "line_b": [[950.0, 440.0], [950.0, 600.0]]}
    return parse_config({
        "seed": seed,
        "points": [{"id": i, "lines": lines, "segment_length_km": 0.2} for i in ids],
        "segments": [
            {"upstream": ids[0], "downstream": ids[1], "length_km": 2.0},
            {"upstream": ids[1], "downstream": ids[2], "length_km": 2.0},
            {"upstream": ids[2], "downstream": ids[3], "length_km": 3.0},
        ],
        "split": {"train": ids[:3], "test": ids[3:]},
    })
