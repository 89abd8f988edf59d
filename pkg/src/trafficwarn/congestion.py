"""Congestion index, sustained-congestion episodes and warning evaluation.

Times are seconds (floats) unless a name says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class CongestionConfig:
    k_c: float = 2200.0  # road design capacity
    v_f_free: float = 120.0  # km/h
    rho_threshold: float = 0.016
    sustained_fraction: float = 0.8
    sustained_window: float = 30.0  # minutes
    warning_lead: float = 10.0  # minutes
    match_tolerance: float = 1.0  # minutes
    debounce_samples: int = 3

    def __post_init__(self):
        for name in ("k_c", "v_f_free", "rho_threshold", "sustained_window", "warning_lead"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"congestion.{name} must be positive")
        if not 0 < self.sustained_fraction <= 1:
            raise ConfigError("congestion.sustained_fraction must lie in (0, 1]")
        if self.match_tolerance < 0 or self.debounce_samples < 1:
            raise ConfigError("congestion.match_tolerance >= 0 and debounce_samples >= 1 are required")


@dataclass(frozen=True)
class CongestionEpisode:
    start: float
    end: float
    peak_rho: float

    def __post_init__(self):
        if not self.end > self.start:
            raise ValueError(f"episode end {self.end} must follow start {self.start}")


def congestion_index(k_a, v_a, cfg: CongestionConfig = CongestionConfig()):
    """rho = (k_a / k_c) * (1 - v_a / v_f), clamped at 0 above free-flow speed.

    Works elementwise on arrays.
    """
    k_a = np.asarray(k_a, dtype=float)
    v_a = np.asarray(v_a, dtype=float)
    rho = (k_a / cfg.k_c) * np.maximum(1.0 - v_a / cfg.v_f_free, 0.0)
    return float(rho) if rho.ndim == 0 else rho


def is_congested(rho, cfg: CongestionConfig = CongestionConfig()):
    out = np.asarray(rho) > cfg.rho_threshold
    return bool(out) if out.ndim == 0 else out


def sustained_congestion(
    rho_series: Sequence[float],
    cfg: CongestionConfig = CongestionConfig(),
    sample_period: float = 1.0,
    t0: float = 0.0,
) -> list[CongestionEpisode]:
    """Episodes of sustained congestion in a regularly sampled rho series.

    A window of ``sustained_window`` minutes qualifies when the fraction of
    congested samples in it is at least ``sustained_fraction``. Overlapping
    qualifying windows merge; each merged span is trimmed to its first and
    last congested sample, so an episode starts at the congestion onset.
    """
    rho = np.asarray(rho_series, dtype=float)
    w = int(round(cfg.sustained_window * 60.0 / sample_period))
    n = rho.size
    if w < 1 or n < w:
        return []
    flags = rho > cfg.rho_threshold
    csum = np.concatenate([[0], np.cumsum(flags)])
    window_counts = csum[w:] - csum[:-w]  # windows starting at 0..n-w
    # integer comparison avoids float error at the boundary
    need = int(np.ceil(cfg.sustained_fraction * w - 1e-9))
    starts = np.flatnonzero(window_counts >= need)
    if starts.size == 0:
        return []
    spans = []
    s0, e0 = int(starts[0]), int(starts[0]) + w
    for s in starts[1:]:
        s = int(s)
        if s < e0:
            e0 = s + w
        else:
            spans.append((s0, e0))
            s0, e0 = s, s + w
    spans.append((s0, e0))
    episodes = []
    for s, e in spans:
        idx = np.flatnonzero(flags[s:e]) + s
        first, last = int(idx[0]), int(idx[-1])
        episodes.append(
            CongestionEpisode(
                t0 + first * sample_period,
                t0 + (last + 1) * sample_period,
                float(rho[first : last + 1].max()),
            )
        )
    return episodes


def episode_flags(episodes: Sequence[CongestionEpisode], n: int, sample_period: float = 1.0, t0: float = 0.0) -> np.ndarray:
    """Per-sample 0/1 flags marking samples inside any episode."""
    flags = np.zeros(n, dtype=int)
    for ep in episodes:
        a = int(round((ep.start - t0) / sample_period))
        b = int(round((ep.end - t0) / sample_period))
        flags[max(a, 0) : min(b, n)] = 1
    return flags


def emit_warnings(
    probabilities: Sequence[float],
    times: Sequence[float],
    cfg: CongestionConfig = CongestionConfig(),
    threshold: float = 0.5,
    refractory: float | None = None,
) -> list[float]:
    """Warning times from a probability stream.

    A warning is emitted at the ``debounce_samples``-th consecutive sample with
    probability above ``threshold``; the emitter re-arms only after the same
    number of consecutive samples at or below the threshold. A warning already
    announces congestion ``warning_lead`` minutes ahead, so a run that completes
    within ``refractory`` seconds of the previous warning (default: the lead)
    is treated as the same alarm and dropped rather than deferred.
    """
    n = cfg.debounce_samples
    hold = cfg.warning_lead * 60.0 if refractory is None else float(refractory)
    above = below = 0
    armed = True
    last = -np.inf
    out = []
    for p, t in zip(probabilities, times):
        if p > threshold:
            above += 1
            below = 0
            if armed and above >= n:
                if t - last >= hold:
                    out.append(float(t))
                    last = float(t)
                armed = False
        else:
            below += 1
            above = 0
            if below >= n:
                armed = True
    return out


@dataclass(frozen=True)
class WarningMatch:
    event_id: int
    actual_start: float
    warning_time: float | None
    lead_error_minutes: float | None


def evaluate_warnings(
    predicted_warnings: Sequence[float],
    actual_episodes: Sequence[CongestionEpisode],
    cfg: CongestionConfig = CongestionConfig(),
) -> dict:
    """Match warnings to episode onsets and score their timeliness.

    A warning matches an episode when it falls in
    [start - lead - tolerance, start]. Each episode takes the eligible
    unused warning with the smallest lead error; episodes are processed in
    start order. Lead error is |(start - warning) - lead| in minutes.
    """
    lead = cfg.warning_lead * 60.0
    tol = cfg.match_tolerance * 60.0
    warnings = sorted(float(w) for w in predicted_warnings)
    used = [False] * len(warnings)
    table: list[WarningMatch] = []
    for k, ep in enumerate(sorted(actual_episodes, key=lambda e: e.start)):
        best, best_err = None, None
        for i, w in enumerate(warnings):
            if used[i] or not (ep.start - lead - tol <= w <= ep.start):
                continue
            err = abs((ep.start - w) - lead) / 60.0
            if best_err is None or err < best_err:
                best, best_err = i, err
        if best is None:
            table.append(WarningMatch(k + 1, ep.start, None, None))
        else:
            used[best] = True
            table.append(WarningMatch(k + 1, ep.start, warnings[best], best_err))
    matched = [m for m in table if m.warning_time is not None]
    n_ep = len(table)
    n_false = used.count(False)
    return {
        "episodes": n_ep,
        "matched": len(matched),
        "missed": n_ep - len(matched),
        "false_warnings": n_false,
        "warning_accuracy": len(matched) / n_ep if n_ep else 0.0,
        "missed_rate": (n_ep - len(matched)) / n_ep if n_ep else 0.0,
        "false_rate": n_false / len(warnings) if warnings else 0.0,
        "mean_lead_error_minutes": float(np.mean([m.lead_error_minutes for m in matched])) if matched else None,
        "events": table,
    }
