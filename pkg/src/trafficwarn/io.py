"""CSV and JSON formats read and written by the pipeline.

Floats are written with ``repr`` so every file round-trips bit-exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .congestion import WarningMatch
from .errors import DataError
from .flow import ParameterSample
from .geometry import BoundingBox
from .tracking.tracker import Detection, TrackRecord

DETECTION_HEADER = ("frame", "id_hint", "cx", "cy", "w", "h", "confidence", "class")
GROUND_TRUTH_HEADER = ("frame", "id", "cx", "cy", "w", "h")
TRACK_HEADER = ("frame", "track_id", "cx", "cy", "w", "h", "status")
PARAMETER_HEADER = ("frame", "flow", "density", "speed")
WARNING_HEADER = ("event_id", "actual_start", "warning_time", "lead_error_minutes")
PLOT_HEADER = ("x", "series_name", "y")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_rows(path, header: Sequence[str], prefix_only: bool = False):
    """Yield (line number, row) after checking the header.

    Returns the actual header as the first item so callers can see extra columns.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            return
        expected = list(header)
        if (got[: len(expected)] if prefix_only else got) != expected:
            raise DataError(f"{path}: line 1: expected header {','.join(expected)}, got {','.join(got)}")
        yield 1, got
        for row in reader:
            if not row:
                continue
            yield reader.line_num, row


def _parse(path, line: int, col: int, name: str, text: str, kind=float):
    try:
        v = kind(text)
    except ValueError:
        raise DataError(f"{path}: line {line}, column {col + 1} ({name}): cannot parse {text!r} as {kind.__name__}") from None
    if kind is float and not math.isfinite(v):
        raise DataError(f"{path}: line {line}, column {col + 1} ({name}): non-finite value {text!r}")
    return v


# --- detections ---------------------------------------------------------------


@dataclass
class RowRejection:
    line: int
    reason: str


@dataclass
class IngestReport:
    rows: int = 0
    accepted: int = 0
    rejected: list[RowRejection] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"rows": self.rows, "accepted": self.accepted,
                "rejected": [{"line": r.line, "reason": r.reason} for r in self.rejected]}


def write_detections(path, frames: Sequence[Sequence[Detection]]) -> Path:
    dim = max((len(d.embedding) for f in frames for d in f if d.embedding is not None), default=0)
    header = DETECTION_HEADER + tuple(f"e{i}" for i in range(dim))

    def rows():
        for t, dets in enumerate(frames):
            for d in dets:
                b = d.box
                emb = list(d.embedding) if d.embedding is not None else [None] * dim
                yield [t, d.id_hint, b.cx, b.cy, b.w, b.h, b.confidence, b.class_id, *emb]

    return write_rows(path, header, rows())


def ingest_detections(path, n_frames: int | None = None) -> tuple[list[list[Detection]], IngestReport]:
    """Per-frame detection lists from a detection CSV.

    Unparseable cells raise :class:`DataError` naming line and column. Rows
    that parse but violate a box or embedding invariant are skipped and
    listed in the report. ``n_frames`` pads trailing empty frames.
    """
    report = IngestReport()
    by_frame: dict[int, list[Detection]] = {}
    rows = read_rows(path, DETECTION_HEADER, prefix_only=True)
    header = None
    for line, row in rows:
        if header is None:
            header = row
            continue
        report.rows += 1
        if len(row) != len(header):
            raise DataError(f"{path}: line {line}: expected {len(header)} columns, got {len(row)}")
        frame = _parse(path, line, 0, "frame", row[0], int)
        id_hint = _parse(path, line, 1, "id_hint", row[1], int) if row[1] != "" else None
        cx, cy, w, h, conf = (_parse(path, line, c, header[c], row[c]) for c in range(2, 7))
        cls = _parse(path, line, 7, "class", row[7], int)
        emb_cells = row[8:]
        if frame < 0:
            report.rejected.append(RowRejection(line, f"negative frame {frame}"))
            continue
        if emb_cells and all(c == "" for c in emb_cells):
            emb = None
        else:
            emb = np.array([_parse(path, line, 8 + i, header[8 + i], c) for i, c in enumerate(emb_cells)]) \
                if emb_cells else None
        try:
            det = Detection(BoundingBox(cx, cy, w, h, conf, cls), emb, id_hint)
        except ValueError as exc:
            report.rejected.append(RowRejection(line, str(exc)))
            continue
        by_frame.setdefault(frame, []).append(det)
        report.accepted += 1
    last = max(by_frame, default=-1)
    n = max(last + 1, n_frames or 0)
    return [by_frame.get(t, []) for t in range(n)], report


def write_ground_truth(path, ground_truth: Mapping[int, Sequence[tuple[int, BoundingBox]]]) -> Path:
    rows = ([f, vid, b.cx, b.cy, b.w, b.h] for f in sorted(ground_truth) for vid, b in ground_truth[f])
    return write_rows(path, GROUND_TRUTH_HEADER, rows)


def read_ground_truth(path, n_frames: int | None = None) -> dict[int, list[tuple[int, BoundingBox]]]:
    out: dict[int, list[tuple[int, BoundingBox]]] = {t: [] for t in range(n_frames or 0)}
    for line, row in read_rows(path, GROUND_TRUTH_HEADER):
        if line == 1:
            continue
        f = _parse(path, line, 0, "frame", row[0], int)
        vid = _parse(path, line, 1, "id", row[1], int)
        cx, cy, w, h = (_parse(path, line, c, GROUND_TRUTH_HEADER[c], row[c]) for c in range(2, 6))
        try:
            out.setdefault(f, []).append((vid, BoundingBox(cx, cy, w, h)))
        except ValueError as exc:
            raise DataError(f"{path}: line {line}: {exc}") from None
    return out


# --- tracks, parameters, warnings ----------------------------------------------


def write_tracks(path, records: Sequence[TrackRecord]) -> Path:
    return write_rows(path, TRACK_HEADER, ([r.frame, r.track_id, r.cx, r.cy, r.w, r.h, r.status] for r in records))


def read_tracks(path) -> list[TrackRecord]:
    out = []
    for line, row in read_rows(path, TRACK_HEADER):
        if line == 1:
            continue
        f = _parse(path, line, 0, "frame", row[0], int)
        tid = _parse(path, line, 1, "track_id", row[1], int)
        cx, cy, w, h = (_parse(path, line, c, TRACK_HEADER[c], row[c]) for c in range(2, 6))
        out.append(TrackRecord(f, tid, cx, cy, w, h, row[6]))
    return out


def write_parameters(path, samples: Sequence[ParameterSample]) -> Path:
    return write_rows(path, PARAMETER_HEADER, ([s.frame, s.flow, s.density, s.speed] for s in samples))


def read_parameters(path) -> list[ParameterSample]:
    out = []
    for line, row in read_rows(path, PARAMETER_HEADER):
        if line == 1:
            continue
        frame = _parse(path, line, 0, "frame", row[0], int)
        q, k, v = (_parse(path, line, c, PARAMETER_HEADER[c], row[c]) for c in range(1, 4))
        out.append(ParameterSample(frame, q, k, v))
    return out


def samples_to_array(samples: Sequence[ParameterSample]) -> np.ndarray:
    return np.array([[s.flow, s.density, s.speed] for s in samples], dtype=float).reshape(-1, 3)


def write_warnings(path, matches: Sequence[WarningMatch]) -> Path:
    rows = ([m.event_id, m.actual_start, m.warning_time, m.lead_error_minutes] for m in matches)
    return write_rows(path, WARNING_HEADER, rows)


def read_warnings(path) -> list[WarningMatch]:
    out = []
    for line, row in read_rows(path, WARNING_HEADER):
        if line == 1:
            continue
        eid = _parse(path, line, 0, "event_id", row[0], int)
        start = _parse(path, line, 1, "actual_start", row[1])
        warn = _parse(path, line, 2, "warning_time", row[2]) if row[2] != "" else None
        err = _parse(path, line, 3, "lead_error_minutes", row[3]) if row[3] != "" else None
        out.append(WarningMatch(eid, start, warn, err))
    return out


# --- plot data ----------------------------------------------------------------


def emit_plot_data(path, series: Mapping[str, tuple[Sequence, Sequence]], kind: str,
                   metadata: Mapping | None = None) -> tuple[Path, Path]:
    """Tidy ``x,series_name,y`` CSV plus a ``.meta.json`` sidecar.

    ``series`` maps a name to equal-length (x, y) sequences. Rows are ordered
    by x, then by the order of ``series``, so variables sampled on the same
    frame sit next to each other.
    """
    rows = []
    for order, (name, (xs, ys)) in enumerate(series.items()):
        if len(xs) != len(ys):
            raise DataError(f"plot series {name!r}: {len(xs)} x values but {len(ys)} y values")
        rows.extend((float(x), order, name, float(y)) for x, y in zip(xs, ys))
    rows.sort(key=lambda r: (r[0], r[1]))
    path = write_rows(path, PLOT_HEADER, ([x, name, y] for x, _, name, y in rows))
    meta_path = path.with_suffix(".meta.json")
    meta = {"kind": kind, "series": list(series), **(dict(metadata) if metadata else {})}
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, meta_path


def read_plot_data(path) -> list[tuple[float, str, float]]:
    out = []
    for line, row in read_rows(path, PLOT_HEADER):
        if line == 1:
            continue
        out.append((_parse(path, line, 0, "x", row[0]), row[1], _parse(path, line, 2, "y", row[2])))
    return out


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
