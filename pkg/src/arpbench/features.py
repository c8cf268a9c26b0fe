"""Per-window statistical features (FS1, FS2, FS3) and the feature matrix type."""

from __future__ import annotations

import csv
import enum
import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dataset import Dataset
from .segmentation import Window

# Upper bound on the number of floats gathered into one window block.
_BLOCK_ELEMENTS = 1 << 22


class FeatureError(ValueError):
    pass


class FeatureSet(enum.Enum):
    FS1 = ("mean",)
    FS2 = ("mean", "std")
    FS3 = ("mean", "std", "max", "min", "mean_crossing_rate")

    @property
    def tag(self) -> str:
        return self.name

    @property
    def stats(self) -> tuple[str, ...]:
        return self.value

    def width(self, n_channels: int) -> int:
        return n_channels * len(self.value)

    @classmethod
    def parse(cls, text: str) -> "FeatureSet":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise FeatureError(f"unknown feature set {text!r} (expected FS1, FS2 or FS3)") from None


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Rows of (subject id, activity label, feature vector), stored column-wise."""

    subjects: np.ndarray
    labels: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise FeatureError(f"feature array must be 2-D, got shape {X.shape}")
        n = X.shape[0]
        subjects = np.asarray(self.subjects, dtype=object)
        labels = np.asarray(self.labels, dtype=np.int64)
        if subjects.shape != (n,) or labels.shape != (n,):
            raise FeatureError("subjects and labels must have one entry per row")
        if not np.all(np.isfinite(X)):
            raise FeatureError("feature matrix contains non-finite values")
        if n and labels.min() < 0:
            raise FeatureError("activity labels must be non-negative")
        for a in (X, subjects, labels):
            a.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "subjects", subjects)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def width(self) -> int:
        return self.X.shape[1]

    def take(self, indices) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureMatrix(self.subjects[idx], self.labels[idx], self.X[idx])

    def rows(self):
        for s, lab, x in zip(self.subjects, self.labels, self.X):
            yield str(s), int(lab), x


def mean_crossing_rate(series: Sequence[float]) -> float:
    """Fraction of consecutive pairs lying strictly on opposite sides of the mean."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise FeatureError("mean crossing rate needs at least 2 samples")
    return float(_window_stats(x[None, None, :], ("mean_crossing_rate",))[0, 0, 0])


def _window_stats(block: np.ndarray, stats: Sequence[str]) -> np.ndarray:
    """Stats over the last axis of ``block`` (windows, channels, samples).

    Returns shape (windows, channels, len(stats)).
    """
    out = np.empty(block.shape[:2] + (len(stats),), dtype=np.float64)
    mn = block.min(axis=-1)
    mx = block.max(axis=-1)
    # rounding can push the mean of a near-constant window just outside [min, max]
    mean = np.clip(block.mean(axis=-1), mn, mx)
    for j, name in enumerate(stats):
        if name == "mean":
            out[..., j] = mean
        elif name == "std":
            out[..., j] = np.sqrt(np.mean((block - mean[..., None]) ** 2, axis=-1))
        elif name == "max":
            out[..., j] = mx
        elif name == "min":
            out[..., j] = mn
        elif name == "mean_crossing_rate":
            d = block - mean[..., None]
            crossings = np.count_nonzero(d[..., :-1] * d[..., 1:] < 0, axis=-1)
            out[..., j] = crossings / (block.shape[-1] - 1)
        else:
            raise FeatureError(f"unknown statistic {name!r}")
    return out


def extract_features(windows: Sequence[Window], source: Dataset, fs: FeatureSet) -> FeatureMatrix:
    """One feature row per window, in window order.

    Columns are channel-major: every statistic of channel 0, then channel 1, ...
    """
    n_ch = source.n_channels
    width = fs.width(n_ch)
    n = len(windows)
    X = np.empty((n, width), dtype=np.float64)
    subjects = np.empty(n, dtype=object)
    labels = np.empty(n, dtype=np.int64)
    needs_pairs = any(s in ("std", "mean_crossing_rate") for s in fs.stats)

    recordings = {r.subject_id: r for r in source}
    groups: dict[tuple[str, int], list[int]] = defaultdict(list)
    for i, win in enumerate(windows):
        rec = recordings.get(win.subject_id)
        if rec is None:
            raise FeatureError(f"window {i} references unknown subject {win.subject_id!r}")
        if win.length < 1 or win.start_index < 0 or win.start_index + win.length > len(rec):
            raise FeatureError(
                f"window {i} [{win.start_index}, {win.start_index + win.length}) "
                f"is outside subject {win.subject_id!r} of length {len(rec)}"
            )
        if needs_pairs and win.length < 2:
            raise FeatureError(f"window {i} has {win.length} sample(s); {fs.tag} needs at least 2")
        groups[(win.subject_id, win.length)].append(i)
        subjects[i] = win.subject_id
        labels[i] = win.label

    for (sid, length), idx in groups.items():
        # (n_positions, channels, length) view, no copy
        view = sliding_window_view(recordings[sid].values, length, axis=0)
        starts = np.fromiter((windows[i].start_index for i in idx), dtype=np.int64, count=len(idx))
        rows = np.asarray(idx, dtype=np.int64)
        chunk = max(1, _BLOCK_ELEMENTS // (n_ch * length))
        for lo in range(0, len(idx), chunk):
            block = view[starts[lo:lo + chunk]]
            X[rows[lo:lo + chunk]] = _window_stats(block, fs.stats).reshape(len(block), width)

    return FeatureMatrix(subjects, labels, X)


def feature_names(fs: FeatureSet, channel_names: Sequence[str]) -> list[str]:
    return [f"{ch}_{stat}" for ch in channel_names for stat in fs.stats]


def write_feature_csv(path: str | os.PathLike, matrix: FeatureMatrix) -> None:
    """CSV with header ``subject,label,f0..f{w-1}``; floats in round-trip repr."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject", "label"] + [f"f{j}" for j in range(matrix.width)])
        for sid, lab, x in matrix.rows():
            writer.writerow([sid, lab] + [repr(v) for v in x.tolist()])


def read_feature_csv(path: str | os.PathLike) -> FeatureMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["subject", "label"]:
            raise FeatureError(f"{path}: missing 'subject,label,...' header")
        width = len(header) - 2
        subjects, labels, rows = [], [], []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != width + 2:
                raise FeatureError(f"{path}:{lineno}: expected {width + 2} fields, got {len(rec)}")
            try:
                labels.append(int(rec[1]))
                rows.append([float(v) for v in rec[2:]])
            except ValueError as exc:
                raise FeatureError(f"{path}:{lineno}: {exc}") from None
            subjects.append(rec[0])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), width)
    return FeatureMatrix(np.array(subjects, dtype=object), np.array(labels, dtype=np.int64), X)
