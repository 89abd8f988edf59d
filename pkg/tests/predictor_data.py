"""Seeded four-point congestion dataset shared by the predictor and warning checks.

Three training points are split 70/30 in time; the fourth point is the test
set. Each point carries three congestion events near minutes 5, 72 and 142
with jittered onsets and peaks. Episode labels come from the cleaned series,
the same way the pipeline derives them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from trafficwarn.congestion import CongestionConfig, congestion_index, episode_flags, sustained_congestion
from trafficwarn.preprocess import CleaningBounds, Windows, chronological_split, clean, fit_normalizer, \
    interpolate, window
from trafficwarn.scenario import CongestionEvent, CongestionScenario, generate_parameter_series

ONSETS = (5.0, 72.0, 142.0)
DURATION = 230.0


@dataclass
class PredictorData:
    train: Windows
    val: Windows
    test: Windows
    test_series: np.ndarray  # cleaned, un-normalised (N, 3)
    test_episodes: list


def point_series(rng, point_seed, noise_scale=1.0):
    starts = np.array(ONSETS) + rng.uniform(-2, 2, len(ONSETS))
    events = [CongestionEvent(float(s), 41.0, float(rng.uniform(66, 74)), 15.0, 3.0) for s in starts]
    scen = CongestionScenario(duration=DURATION, events=events, seed=point_seed,
                              noise=(0.01 * noise_scale, 0.3 * noise_scale, 1.0 * noise_scale))
    samples, _ = generate_parameter_series(scen)
    raw = np.array([[s.flow, s.density, s.speed] for s in samples])
    x = interpolate(clean(raw, CleaningBounds(speed_min=0.0))[0])
    episodes = sustained_congestion(congestion_index(x[:, 1], x[:, 2]))
    return x, episodes


def build(seed=0, horizon_minutes=30.0, seq_len=10, noise_scale=1.0, purge=True) -> PredictorData:
    rng = np.random.default_rng(seed)
    series = [point_series(rng, 1000 * seed + p, noise_scale) for p in range(4)]
    horizon = int(round(horizon_minutes * 60))
    tr_parts, va_parts = [], []
    for x, eps in series[:3]:
        flags = episode_flags(eps, len(x))
        w = window(x, flags, seq_len, horizon)
        i_tr, _ = chronological_split(len(x))
        cut = len(i_tr)
        # training windows must not see labels past the cut; validation windows start after it
        tr_keep = w.end_index + (horizon if purge else 0) < cut
        va_keep = w.end_index - (seq_len - 1) >= cut
        tr_parts.append((x, w.subset(tr_keep)))
        va_parts.append(w.subset(va_keep))
    norm = fit_normalizer(np.concatenate([x[: int(round(0.7 * len(x)))] for x, _ in tr_parts]))

    def scaled(w: Windows) -> Windows:
        return Windows(norm.apply(w.X), w.y, w.end_index)

    x_te, eps_te = series[3]
    test = window(x_te, episode_flags(eps_te, len(x_te)), seq_len, horizon)
    return PredictorData(
        Windows.concat([scaled(w) for _, w in tr_parts]),
        Windows.concat([scaled(w) for w in va_parts]),
        scaled(test),
        x_te,
        eps_te,
    )
