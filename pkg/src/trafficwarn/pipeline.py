"""
End-to-end orchestration.

Stages run in a fixed order and each one persists its outputs under the
output directory together with a manifest of input and output hashes:

    simulate  synthetic inputs for points that have none configured
    track     detections -> confirmed track records
    params    track records (or supplied parameter series) -> flow/density/speed
    clean     outlier removal, gap filling, congestion episodes
    window    normalisation and supervised windows per split
    train     sequence classifiers and the logistic baseline
    predict   test-set probabilities
    warn      early-warning times
    evaluate  tracking, classification and warning metrics
    report    RunReport JSON and plot data

A stage is skipped when its manifest matches the current config and the
hashes of its inputs and outputs, so interrupted runs resume where they
stopped. Timings go to ``run_log.json``; every other file is a
deterministic function of config, inputs and seed.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import io
from .config import SiteConfig
from .congestion import CongestionEpisode, congestion_index, emit_warnings, episode_flags, evaluate_warnings, \
    sustained_congestion
from .errors import ConfigError, DataError, TrafficWarnError, UndefinedMetricError
from .flow import ParameterSample, parameter_series
from .neural import (
    LogisticParams,
    classification_metrics,
    init_model,
    load_checkpoint,
    logistic_fit,
    logistic_predict,
    model_forward,
    save_checkpoint,
    train,
)
from .preprocess import FEATURES, clean, fit_normalizer, interpolate, window
from .scenario import CongestionEvent, CongestionScenario, TrajectoryScenario, generate_parameter_series, \
    generate_trajectories
from .tracking import evaluate_tracking, run_tracker, records_to_trajectories

log = logging.getLogger(__name__)

STAGES = ("simulate", "track", "params", "clean", "window", "train", "predict", "warn", "evaluate", "report")
SPLITS = ("train", "val", "test")
RUN_LOG = "run_log.json"


class PipelineError(TrafficWarnError):
    """A stage failed; ``cause`` is the original exception."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def stage_seed(seed: int, stage: str, *keys: int) -> int:
    """Independent 32-bit seed for one (stage, key...) cell of the run."""
    ss = np.random.SeedSequence(seed, spawn_key=(STAGES.index(stage), *keys))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def output_hashes(out_dir, exclude: Sequence[str] = (RUN_LOG,)) -> dict[str, str]:
    """sha256 of every file under ``out_dir`` keyed by relative path."""
    root = Path(out_dir)
    return {p.relative_to(root).as_posix(): file_hash(p) for p in sorted(root.rglob("*"))
            if p.is_file() and p.relative_to(root).as_posix() not in exclude}


def _config_digest(cfg: SiteConfig) -> str:
    return hashlib.sha256(json.dumps(cfg.to_dict(), sort_keys=True).encode()).hexdigest()


@dataclass
class RunReport:
    timings: dict[str, float] = field(default_factory=dict)
    stages_run: list[str] = field(default_factory=list)
    stages_reused: list[str] = field(default_factory=list)
    data_quality: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)

    def to_dict(self, with_timings: bool = True) -> dict:
        d = {"data_quality": self.data_quality, "metrics": self.metrics, "artifacts": self.artifacts}
        if with_timings:
            d.update(timings=self.timings, stages_run=self.stages_run, stages_reused=self.stages_reused)
        return d


class StageContext:
    """Records the files a stage reads and writes, relative to the output directory."""

    def __init__(self, root: Path, stage: str, cfg: SiteConfig, inputs: Mapping[str, Mapping[str, str]]):
        self.root = root
        self.stage = stage
        self.cfg = cfg
        self.overrides = inputs
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []

    def rel(self, path) -> str:
        p = Path(path)
        try:
            return p.resolve().relative_to(self.root.resolve()).as_posix()
        except ValueError:
            return str(p.resolve())

    def read(self, rel) -> Path:
        p = self.root / rel if not Path(rel).is_absolute() else Path(rel)
        if not p.exists():
            raise DataError(f"{p}: required input is missing (run the upstream stage first)")
        self.inputs[self.rel(p)] = file_hash(p)
        return p

    def write(self, rel) -> Path:
        p = self.root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        if rel not in self.outputs:
            self.outputs.append(rel)
        return p

    def seed(self, *keys: int) -> int:
        return stage_seed(self.cfg.seed, self.stage, *keys)

    # -- input discovery --

    def point_input(self, pid: str, kind: str) -> Optional[Path]:
        """Configured input file for a point, else the simulated one if present."""
        explicit = self.overrides.get(pid, {}).get(kind) or getattr(self.cfg.point(pid).inputs, kind)
        if explicit:
            p = Path(explicit)
            if not p.exists():
                raise DataError(f"{p}: configured {kind} input for point {pid} does not exist")
            return p
        p = self.root / "inputs" / pid / f"{kind}.csv"
        return p if p.exists() else None

    def has_explicit_inputs(self, pid: str) -> bool:
        ov = self.overrides.get(pid, {})
        pi = self.cfg.point(pid).inputs
        return any(ov.get(k) or getattr(pi, k) for k in ("detections", "ground_truth", "parameters"))


# --- stages ---------------------------------------------------------------------


def _simulate(ctx: StageContext):
    cfg, sim = ctx.cfg, ctx.cfg.simulation
    for i, p in enumerate(cfg.points):
        if ctx.has_explicit_inputs(p.id):
            continue
        rng = np.random.default_rng(ctx.seed(i, 0))
        traj = TrajectoryScenario(
            n_vehicles=sim.trajectories.n_vehicles, frame_count=sim.trajectories.frame_count, fps=cfg.fps,
            noise_px=sim.trajectories.noise_px, dropout=sim.trajectories.dropout,
            embedding_dim=sim.trajectories.embedding_dim, seed=ctx.seed(i, 1),
        )
        gt, dets, _ = generate_trajectories(traj)
        io.write_detections(ctx.write(f"inputs/{p.id}/detections.csv"), dets)
        io.write_ground_truth(ctx.write(f"inputs/{p.id}/ground_truth.csv"), gt)
        events = []
        for ev in sim.events:
            onset = max(ev.onset + rng.uniform(-1.0, 1.0) * sim.onset_jitter_minutes, 0.0)
            peak = ev.peak_density + rng.uniform(-1.0, 1.0) * sim.peak_jitter
            events.append(CongestionEvent(onset, ev.ramp, peak, ev.hold, ev.recovery))
        ns = sim.noise_scale
        scen = CongestionScenario(
            duration=sim.duration_minutes, base_density=sim.base_density, events=events,
            noise=(0.01 * ns, 0.3 * ns, 1.0 * ns), sample_period=cfg.window.sample_period, fps=cfg.fps,
            speed_model=cfg.speed_params(), congestion=cfg.congestion_config(), seed=ctx.seed(i, 2),
        )
        samples, _ = generate_parameter_series(scen)
        io.write_parameters(ctx.write(f"inputs/{p.id}/parameters.csv"), samples)


def _track(ctx: StageContext):
    for p in ctx.cfg.points:
        src = ctx.point_input(p.id, "detections")
        if src is None:
            continue
        frames, report = io.ingest_detections(ctx.read(src))
        records = run_tracker(frames, ctx.cfg.tracker_config())
        io.write_tracks(ctx.write(f"tracks/{p.id}.csv"), records)
        io.write_json(ctx.write(f"tracks/{p.id}.ingest.json"), {"frames": len(frames), **report.to_dict()})


def _params(ctx: StageContext):
    cfg = ctx.cfg
    sample_every = max(int(round(cfg.fps * cfg.window.sample_period)), 1)
    for p in cfg.points:
        tracked = None
        track_file = ctx.root / "tracks" / f"{p.id}.csv"
        if track_file.exists():
            records = io.read_tracks(ctx.read(f"tracks/{p.id}.csv"))
            n_frames = io.read_json(ctx.read(f"tracks/{p.id}.ingest.json"))["frames"]
            tracked = parameter_series(records, cfg.lines(p.id), cfg.segment_geometry(p.id), cfg.speed_params(),
                                       n_frames, fps=cfg.fps, sample_every=sample_every)
            io.write_parameters(ctx.write(f"parameters/{p.id}.tracked.csv"), tracked)
        src = ctx.point_input(p.id, "parameters")
        if src is not None:
            samples = io.read_parameters(ctx.read(src))
        elif tracked is not None:
            samples = tracked
        else:
            raise DataError(f"point {p.id}: no parameter series and no detections to derive one from")
        io.write_parameters(ctx.write(f"parameters/{p.id}.csv"), samples)


def _clean(ctx: StageContext):
    cfg = ctx.cfg
    sp = cfg.window.sample_period
    for p in cfg.points:
        samples = io.read_parameters(ctx.read(f"parameters/{p.id}.csv"))
        if not samples:
            raise DataError(f"point {p.id}: parameter series is empty")
        raw = io.samples_to_array(samples)
        missing_before = int(np.isnan(raw).sum())
        x, report = clean(raw, cfg.cleaning_bounds())
        gaps = int(np.isnan(x).sum())
        x = interpolate(x)
        io.write_parameters(ctx.write(f"clean/{p.id}.csv"),
                            [ParameterSample(s.frame, *map(float, row)) for s, row in zip(samples, x)])
        rho = congestion_index(x[:, 1], x[:, 2], cfg.congestion_config())
        episodes = sustained_congestion(np.atleast_1d(rho), cfg.congestion_config(), sp)
        io.write_json(ctx.write(f"clean/{p.id}.episodes.json"),
                      [{"start": e.start, "end": e.end, "peak_rho": e.peak_rho} for e in episodes])
        io.write_json(ctx.write(f"clean/{p.id}.report.json"), {
            "samples": len(samples), "hard_bound": report.count("hard_bound"), "sigma": report.count("sigma"),
            "missing_in_input": missing_before, "gaps_filled": gaps, "removed": report.to_dict()["removed"],
        })


def _load_clean(ctx: StageContext, pid: str) -> tuple[np.ndarray, list[CongestionEpisode]]:
    x = io.samples_to_array(io.read_parameters(ctx.read(f"clean/{pid}.csv")))
    eps = [CongestionEpisode(**e) for e in io.read_json(ctx.read(f"clean/{pid}.episodes.json"))]
    return x, eps


def _save_arrays(ctx: StageContext, prefix: str, **arrays):
    for name, a in arrays.items():
        np.save(ctx.write(f"{prefix}/{name}.npy"), np.ascontiguousarray(a))


def _load_arrays(ctx: StageContext, prefix: str, *names) -> list[np.ndarray]:
    return [np.load(ctx.read(f"{prefix}/{n}.npy")) for n in names]


def _window(ctx: StageContext):
    cfg = ctx.cfg
    sp, seq_len = cfg.window.sample_period, cfg.window.seq_len
    horizon = int(round(cfg.window.horizon_minutes * 60.0 / sp))
    warn_horizon = int(round(cfg.congestion.warning_lead * 60.0 / sp))
    series = {p.id: _load_clean(ctx, p.id) for p in cfg.points}

    train_parts = []
    cuts = {}
    for pid in cfg.split.train:
        x = series[pid][0]
        cuts[pid] = int(round(len(x) * cfg.split.train_fraction))
        train_parts.append(x[: cuts[pid]])
    norm = fit_normalizer(np.concatenate(train_parts))
    norm.save(ctx.write("windows/normalizer.json"))

    def build(pid: str, keep):
        x, eps = series[pid]
        flags = episode_flags(eps, len(x), sp)
        w = window(norm.apply(x), flags, seq_len, horizon)
        y_warn = window(x[:, :1], flags, seq_len, warn_horizon).y
        idx = np.flatnonzero(keep(w.end_index)) if len(w) else np.zeros(0, dtype=int)
        point = np.full(len(idx), [p.id for p in cfg.points].index(pid))
        return w.X[idx], w.y[idx], y_warn[idx], w.end_index[idx], point

    parts: dict[str, list] = {s: [] for s in SPLITS}
    for pid in cfg.split.train:
        cut = cuts[pid]
        # training windows must not look past the cut, even through their label horizon
        parts["train"].append(build(pid, lambda e, c=cut: e + max(horizon, warn_horizon) < c))
        parts["val"].append(build(pid, lambda e, c=cut: e - seq_len + 1 >= c))
    for pid in cfg.split.test:
        parts["test"].append(build(pid, lambda e: np.ones(len(e), dtype=bool)))

    summary = {}
    for split, ps in parts.items():
        X, y, y_warn, end, point = (np.concatenate([p[k] for p in ps]) for k in range(5))
        X = X.reshape(-1, seq_len, len(FEATURES))
        _save_arrays(ctx, f"windows/{split}", X=X, y=y.astype(np.int64), y_warn=y_warn.astype(np.int64),
                     end=end.astype(np.int64), point=point.astype(np.int64))
        summary[split] = {"windows": int(len(y)), "positive_fraction": float(y.mean()) if len(y) else 0.0}
        if len(y) == 0:
            raise DataError(f"{split} split has no windows (series shorter than seq_len or cut too close)")
    io.write_json(ctx.write("windows/summary.json"), {"horizon_samples": horizon,
                                                       "warning_horizon_samples": warn_horizon, **summary})


def _train(ctx: StageContext):
    cfg = ctx.cfg
    Xtr, ytr, ywtr = _load_arrays(ctx, "windows/train", "X", "y", "y_warn")
    Xva, yva, ywva = _load_arrays(ctx, "windows/val", "X", "y", "y_warn")
    ctx.read("windows/normalizer.json")
    kinds = list(cfg.training.models)
    for j, kind in enumerate(kinds):
        if kind == "logistic":
            params = logistic_fit(Xtr[:, -1, :], ytr)
            io.write_json(ctx.write("models/logistic.json"), params.to_dict())
            continue
        _fit_sequence_model(ctx, kind, Xtr, ytr, Xva, yva, j, f"models/{kind}.json", "y")
    # the warning model predicts onsets within the warning lead rather than the full horizon
    _fit_sequence_model(ctx, cfg.training.warning_model, Xtr, ywtr, Xva, ywva, len(kinds), "models/warning.json",
                        "y_warn")


def _fit_sequence_model(ctx, kind, Xtr, ytr, Xva, yva, key, rel, target):
    t = ctx.cfg.training
    model = init_model(kind, hidden_dim=t.hidden_dim, input_dim=Xtr.shape[-1], rng=ctx.seed(key, 0))
    tc = ctx.cfg.train_config(ctx.seed(key, 1))
    best, tlog = train(model, Xtr, ytr, Xva, yva, tc)
    save_checkpoint(ctx.write(rel), best, {"kind": kind, "target": target, **tc.to_dict()},
                    "windows/normalizer.json", tlog)


def _predict(ctx: StageContext):
    cfg = ctx.cfg
    X, y, y_warn, end, point = _load_arrays(ctx, "windows/test", "X", "y", "y_warn", "end", "point")
    ids = [p.id for p in cfg.points]
    probs = {}
    for kind in cfg.training.models:
        if kind == "logistic":
            params = LogisticParams.from_dict(io.read_json(ctx.read("models/logistic.json")))
            probs[kind] = logistic_predict(params, X[:, -1, :])
        else:
            model, _ = load_checkpoint(ctx.read(f"models/{kind}.json"))
            probs[kind] = model_forward(model, X)
    warn_model, _ = load_checkpoint(ctx.read("models/warning.json"))
    probs["warning"] = model_forward(warn_model, X)
    sp = cfg.window.sample_period
    for pi in np.unique(point):
        pid = ids[int(pi)]
        sel = point == pi
        for name, pr in probs.items():
            labels = y_warn if name == "warning" else y
            rows = zip(end[sel].tolist(), (end[sel] * sp).tolist(), labels[sel].tolist(), pr[sel].tolist())
            io.write_rows(ctx.write(f"predictions/{pid}.{name}.csv"), ("index", "time", "label", "probability"),
                           rows)


def _read_predictions(ctx: StageContext, pid: str, name: str) -> dict[str, np.ndarray]:
    cols = {"index": [], "time": [], "label": [], "probability": []}
    for line, row in io.read_rows(ctx.read(f"predictions/{pid}.{name}.csv"), tuple(cols)):
        if line == 1:
            continue
        for k, v in zip(cols, row):
            cols[k].append(float(v))
    return {k: np.array(v) for k, v in cols.items()}


def _warn(ctx: StageContext):
    cfg = ctx.cfg
    for pid in cfg.split.test:
        pr = _read_predictions(ctx, pid, "warning")
        times = emit_warnings(pr["probability"], pr["time"], cfg.congestion_config(), cfg.training.threshold)
        io.write_rows(ctx.write(f"warnings/{pid}.csv"), ("warning_time",), ([t] for t in times))


def _read_warning_times(ctx: StageContext, pid: str) -> list[float]:
    return [float(r[0]) for line, r in io.read_rows(ctx.read(f"warnings/{pid}.csv"), ("warning_time",)) if line > 1]


def _evaluate(ctx: StageContext):
    cfg = ctx.cfg
    tracking = {}
    for p in cfg.points:
        gt_src = ctx.point_input(p.id, "ground_truth")
        if gt_src is None or not (ctx.root / "tracks" / f"{p.id}.csv").exists():
            continue
        n_frames = io.read_json(ctx.read(f"tracks/{p.id}.ingest.json"))["frames"]
        gt = io.read_ground_truth(ctx.read(gt_src), n_frames)
        hyp = records_to_trajectories(io.read_tracks(ctx.read(f"tracks/{p.id}.csv")))
        tracking[p.id] = evaluate_tracking(gt, hyp)
    io.write_json(ctx.write("evaluation/tracking.json"), tracking)

    classification = {}
    for pid in cfg.split.test:
        for kind in cfg.training.models:
            pr = _read_predictions(ctx, pid, kind)
            try:
                m = classification_metrics(pr["probability"], pr["label"], cfg.training.threshold)
            except UndefinedMetricError as exc:
                m = {"undefined": str(exc)}
            classification.setdefault(pid, {})[kind] = m
    io.write_json(ctx.write("evaluation/classification.json"), classification)

    cc = cfg.congestion_config()
    warnings = {}
    for pid in cfg.split.test:
        _, episodes = _load_clean(ctx, pid)
        res = evaluate_warnings(_read_warning_times(ctx, pid), episodes, cc)
        io.write_warnings(ctx.write(f"evaluation/warnings_{pid}.csv"), res.pop("events"))
        warnings[pid] = res
    io.write_json(ctx.write("evaluation/warnings.json"), warnings)


def _report(ctx: StageContext):
    cfg = ctx.cfg
    sp = cfg.window.sample_period
    quality = {}
    for p in cfg.points:
        q = {k: v for k, v in io.read_json(ctx.read(f"clean/{p.id}.report.json")).items() if k != "removed"}
        ingest = ctx.root / "tracks" / f"{p.id}.ingest.json"
        if ingest.exists():
            q["detection_rows_rejected"] = len(io.read_json(ctx.read(f"tracks/{p.id}.ingest.json"))["rejected"])
        quality[p.id] = q
    metrics = {name: io.read_json(ctx.read(f"evaluation/{name}.json"))
               for name in ("tracking", "classification", "warnings")}
    metrics["windows"] = io.read_json(ctx.read("windows/summary.json"))

    cc = cfg.congestion_config()
    for p in cfg.points:
        x, _ = _load_clean(ctx, p.id)
        t = (np.arange(len(x)) * sp / 60.0).tolist()
        io.emit_plot_data(ctx.write(f"plots/trend_{p.id}.csv"), {"speed": (t, x[:, 2]), "density": (t, x[:, 1])},
                          "speed_density_trend", {"x_unit": "minutes", "point": p.id})
        ctx.write(f"plots/trend_{p.id}.meta.json")
        rho = np.atleast_1d(congestion_index(x[:, 1], x[:, 2], cc))
        io.emit_plot_data(ctx.write(f"plots/rho_{p.id}.csv"), {"rho": (t, rho)}, "congestion_index",
                          {"x_unit": "minutes", "point": p.id, "threshold": cc.rho_threshold})
        ctx.write(f"plots/rho_{p.id}.meta.json")
    for pid in cfg.split.test:
        series = {}
        for kind in cfg.training.models:
            pr = _read_predictions(ctx, pid, kind)
            series.setdefault("true", ((pr["time"] / 60.0).tolist(), pr["label"].tolist()))
            series[kind] = ((pr["time"] / 60.0).tolist(), pr["probability"].tolist())
        io.emit_plot_data(ctx.write(f"plots/prediction_{pid}.csv"), series, "prediction_curve",
                          {"x_unit": "minutes", "point": pid, "threshold": cfg.training.threshold})
        ctx.write(f"plots/prediction_{pid}.meta.json")

    artifacts = sorted(set(_all_outputs(ctx.root)) | set(ctx.outputs) | {"report.json"})
    doc = {"data_quality": quality, "metrics": metrics, "artifacts": artifacts}
    io.write_json(ctx.write("report.json"), doc)


def _all_outputs(root: Path) -> list[str]:
    out = []
    for m in sorted((root / "manifests").glob("*.json")):
        out.extend(json.loads(m.read_text())["outputs"])
    return out


STAGE_FUNCS: dict[str, Callable[[StageContext], None]] = {
    "simulate": _simulate, "track": _track, "params": _params, "clean": _clean, "window": _window,
    "train": _train, "predict": _predict, "warn": _warn, "evaluate": _evaluate, "report": _report,
}


# --- driver ---------------------------------------------------------------------


def parse_stages(selection: str | Sequence[str] | None) -> list[str]:
    """Stage names in pipeline order; accepts a comma list and ``a-b`` ranges."""
    if selection is None:
        return list(STAGES)
    items = selection.split(",") if isinstance(selection, str) else list(selection)
    chosen = set()
    for item in (i.strip() for i in items):
        if not item:
            continue
        if "-" in item:
            a, b = item.split("-", 1)
            for name in (a, b):
                if name not in STAGES:
                    raise ConfigError(f"stages: unknown stage {name!r} (known: {', '.join(STAGES)})")
            chosen.update(STAGES[STAGES.index(a): STAGES.index(b) + 1])
        elif item in STAGES:
            chosen.add(item)
        else:
            raise ConfigError(f"stages: unknown stage {item!r} (known: {', '.join(STAGES)})")
    return [s for s in STAGES if s in chosen]


def _manifest_path(root: Path, stage: str) -> Path:
    return root / "manifests" / f"{stage}.json"


def _reusable(root: Path, stage: str, digest: str) -> bool:
    path = _manifest_path(root, stage)
    if not path.exists():
        return False
    m = json.loads(path.read_text())
    if m.get("config") != digest:
        return False
    for rel, h in list(m["inputs"].items()) + list(m["output_hashes"].items()):
        p = Path(rel) if Path(rel).is_absolute() else root / rel
        if not p.exists() or file_hash(p) != h:
            return False
    return True


def run_pipeline(cfg: SiteConfig, out_dir, stages: str | Sequence[str] | None = None,
                 inputs: Mapping[str, Mapping[str, str]] | None = None, force: bool = False) -> RunReport:
    """Run the selected stages in order and return the run report.

    ``inputs`` maps a point id to ``{"detections"|"ground_truth"|"parameters": path}``
    and overrides the config. With ``force`` every selected stage reruns.
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    digest = _config_digest(cfg)
    report = RunReport()
    for stage in parse_stages(stages):
        t0 = time.perf_counter()
        if not force and _reusable(root, stage, digest):
            log.info("stage %s: outputs up to date, reusing", stage)
            report.stages_reused.append(stage)
        else:
            ctx = StageContext(root, stage, cfg, inputs or {})
            log.info("stage %s: running", stage)
            try:
                STAGE_FUNCS[stage](ctx)
            except Exception as exc:
                raise PipelineError(stage, exc) from exc
            manifest = {
                "stage": stage,
                "config": digest,
                "inputs": dict(sorted(ctx.inputs.items())),
                "outputs": ctx.outputs,
                "output_hashes": {rel: file_hash(root / rel) for rel in ctx.outputs},
            }
            io.write_json(_manifest_path(root, stage), manifest)
            report.stages_run.append(stage)
        report.timings[stage] = time.perf_counter() - t0

    report_file = root / "report.json"
    if report_file.exists():
        doc = json.loads(report_file.read_text())
        report.data_quality, report.metrics, report.artifacts = doc["data_quality"], doc["metrics"], doc["artifacts"]
    else:
        report.artifacts = sorted(set(_all_outputs(root)))
    io.write_json(root / RUN_LOG, {"timings_seconds": report.timings, "stages_run": report.stages_run,
                                   "stages_reused": report.stages_reused})
    return report
