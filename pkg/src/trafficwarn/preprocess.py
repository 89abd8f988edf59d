"""Cleaning, gap filling, normalisation and windowing of parameter series."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError

FEATURES = ("flow", "density", "speed")


@dataclass(frozen=True)
class CleaningBounds:
    speed_min: float = 60.0
    speed_max: float = 140.0
    n_sigma: float = 3.0
    max_iter: int = 10


@dataclass
class CleaningReport:
    removed: list[tuple[int, str, str]] = field(default_factory=list)  # (index, feature, reason)

    def count(self, reason: str | None = None) -> int:
        return sum(1 for r in self.removed if reason is None or r[2] == reason)

    def to_dict(self) -> dict:
        return {"removed": [list(r) for r in self.removed], "hard_bound": self.count("hard_bound"),
                "sigma": self.count("sigma")}


def clean(values: np.ndarray, bounds: CleaningBounds = CleaningBounds()) -> tuple[np.ndarray, CleaningReport]:
    """Mark outliers in an (N, 3) flow/density/speed array as NaN.

    Stage one drops speeds outside the hard bounds. Stage two repeats the
    n-sigma rule per feature (mean and standard deviation of the surviving
    values) until no further values are removed or ``max_iter`` passes ran.
    Surviving values are never modified.
    """
    x = np.array(values, dtype=float)
    if x.ndim != 2 or x.shape[1] != len(FEATURES):
        raise DataError(f"expected an (N, {len(FEATURES)}) array, got shape {x.shape}")
    report = CleaningReport()
    s = FEATURES.index("speed")
    bad = ~np.isnan(x[:, s]) & ((x[:, s] < bounds.speed_min) | (x[:, s] > bounds.speed_max))
    for i in np.flatnonzero(bad):
        report.removed.append((int(i), "speed", "hard_bound"))
    x[bad, s] = np.nan

    for f, name in enumerate(FEATURES):
        col = x[:, f]
        for _ in range(bounds.max_iter):
            present = ~np.isnan(col)
            if present.sum() < 2:
                break
            mu = col[present].mean()
            sd = col[present].std()
            out = present & (np.abs(col - mu) > bounds.n_sigma * sd)
            if not out.any():
                break
            for i in np.flatnonzero(out):
                report.removed.append((int(i), name, "sigma"))
            col[out] = np.nan
    report.removed.sort()
    return x, report


def interpolate(values: np.ndarray) -> np.ndarray:
    """Fill NaNs linearly between present neighbours; ends take the nearest value."""
    x = np.array(values, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    idx = np.arange(len(x))
    for f in range(x.shape[1]):
        col = x[:, f]
        present = ~np.isnan(col)
        if not present.any():
            raise DataError(f"feature column {f} has no values to interpolate from")
        if present.all():
            continue
        col[~present] = np.interp(idx[~present], idx[present], col[present])
    return x[:, 0] if squeeze else x


@dataclass
class Normalizer:
    mu: np.ndarray
    sigma: np.ndarray
    features: tuple[str, ...] = FEATURES

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if np.any(~(self.sigma > 0)):
            raise ConfigError(f"normalizer has non-positive sigma {self.sigma.tolist()}")

    def apply(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.mu) / self.sigma

    def invert(self, values) -> np.ndarray:
        return np.asarray(values, dtype=float) * self.sigma + self.mu

    def to_dict(self) -> dict:
        return {"features": list(self.features), "mu": self.mu.tolist(), "sigma": self.sigma.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(np.array(d["mu"]), np.array(d["sigma"]), tuple(d["features"]))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "Normalizer":
        return cls.from_dict(json.loads(Path(path).read_text()))


def fit_normalizer(train_values) -> Normalizer:
    """Per-feature mean and standard deviation of the training split."""
    x = np.asarray(train_values, dtype=float)
    x = x.reshape(-1, x.shape[-1])
    sd = x.std(axis=0)
    if np.any(sd == 0):
        raise ConfigError(f"training split has a constant feature (sigma = {sd.tolist()})")
    return Normalizer(x.mean(axis=0), sd)


def apply_normalizer(norm: Normalizer, values) -> np.ndarray:
    return norm.apply(values)


@dataclass(frozen=True)
class WindowedSample:
    sequence: np.ndarray  # (seq_len, 3)
    label: int


@dataclass
class Windows:
    """A batch of windowed samples stored as arrays."""

    X: np.ndarray  # (n, seq_len, features)
    y: np.ndarray  # (n,)
    end_index: np.ndarray  # index of each window's last sample in the source series

    def __len__(self) -> int:
        return len(self.y)

    def __getitem__(self, i) -> WindowedSample:
        return WindowedSample(self.X[i], int(self.y[i]))

    @classmethod
    def concat(cls, parts: Sequence["Windows"]) -> "Windows":
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls(np.zeros((0, 0, 0)), np.zeros(0, dtype=int), np.zeros(0, dtype=int))
        return cls(np.concatenate([p.X for p in parts]), np.concatenate([p.y for p in parts]),
                   np.concatenate([p.end_index for p in parts]))

    def subset(self, idx) -> "Windows":
        return Windows(self.X[idx], self.y[idx], self.end_index[idx])


def onset_indices(flags: Sequence[int]) -> np.ndarray:
    """Indices where an episode flag switches from 0 to 1."""
    f = np.asarray(flags, dtype=int)
    if f.size == 0:
        return np.zeros(0, dtype=int)
    return np.flatnonzero((f[1:] == 1) & (f[:-1] == 0)) + 1


def window(values, labels, seq_len: int = 10, horizon: int = 1800) -> Windows:
    """Slide a ``seq_len`` window over the series, one sample per position.

    ``labels`` are per-sample episode flags. A window ending at index e gets
    label 1 iff an episode onset o satisfies e < o <= e + horizon (horizon in
    samples).
    """
    x = np.asarray(values, dtype=float)
    flags = np.asarray(labels, dtype=int)
    if len(flags) != len(x):
        raise DataError(f"labels ({len(flags)}) are not aligned with the series ({len(x)})")
    n = len(x) - seq_len + 1
    if n <= 0:
        return Windows(np.zeros((0, seq_len, x.shape[1] if x.ndim == 2 else 1)), np.zeros(0, dtype=int),
                       np.zeros(0, dtype=int))
    ends = np.arange(seq_len - 1, len(x))
    X = np.lib.stride_tricks.sliding_window_view(x, seq_len, axis=0).transpose(0, 2, 1).copy()
    onsets = onset_indices(flags)
    # first onset strictly after e
    pos = np.searchsorted(onsets, ends, side="right")
    nxt = np.where(pos < len(onsets), onsets[np.minimum(pos, len(onsets) - 1)] if len(onsets) else 0, -1)
    y = ((nxt > ends) & (nxt <= ends + horizon)).astype(int)
    return Windows(X, y, ends)


def chronological_split(n: int, train_fraction: float = 0.7) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays for an ordered train/validation split (no shuffling)."""
    cut = int(round(n * train_fraction))
    return np.arange(cut), np.arange(cut, n)
