"""Fixed-duration sliding-window segmentation of subject recordings."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

import numpy as np

from .dataset import NULL_LABEL, SubjectRecording

DEFAULT_WINDOW_SIZES_S = (
    0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0,
)
DEFAULT_OVERLAP_STEP_S = 0.2


class SegmentationError(ValueError):
    pass


def seconds_to_samples(seconds: float, rate_hz: float) -> int:
    """Round ``seconds * rate_hz`` to the nearest integer, halves up.

    Done in decimal on the shortest repr of each operand so that e.g.
    0.25 s at 50 Hz is exactly 12.5 -> 13 regardless of binary rounding.
    """
    product = Decimal(repr(float(seconds))) * Decimal(repr(float(rate_hz)))
    return int(product.to_integral_value(rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class WindowSpec:
    """Window duration and slide step in seconds; ``step_s == size_s`` means non-overlapping."""

    size_s: float
    step_s: float | None = None

    def __post_init__(self):
        if self.step_s is None:
            object.__setattr__(self, "step_s", self.size_s)
        if not self.size_s > 0:
            raise SegmentationError(f"window size must be positive, got {self.size_s}")
        if not (0 < self.step_s <= self.size_s):
            raise SegmentationError(
                f"step must satisfy 0 < step <= size, got step={self.step_s} size={self.size_s}"
            )

    @property
    def overlapping(self) -> bool:
        return self.step_s < self.size_s

    def in_samples(self, rate_hz: float) -> tuple[int, int]:
        w = seconds_to_samples(self.size_s, rate_hz)
        step = seconds_to_samples(self.step_s, rate_hz)
        if w < 1:
            raise SegmentationError(f"window of {self.size_s}s at {rate_hz}Hz is shorter than one sample")
        if step < 1:
            raise SegmentationError(f"step of {self.step_s}s at {rate_hz}Hz is shorter than one sample")
        return w, step


@dataclass(frozen=True)
class Window:
    subject_id: str
    start_index: int
    length: int
    label: int


def window_starts(n_samples: int, w: int, step: int) -> np.ndarray:
    if n_samples < w:
        return np.empty(0, dtype=np.int64)
    return np.arange(0, n_samples - w + 1, step, dtype=np.int64)


def window_count(n_samples: int, w: int, step: int) -> int:
    """Pre-filter window count: floor((N - w) / step) + 1, or 0 when N < w."""
    return (n_samples - w) // step + 1 if n_samples >= w else 0


def window_label(labels: Sequence[int]) -> int:
    """Most frequent label; ties go to the smallest id.

    The null label only wins as the strict unique majority: when it ties with
    real activities the smallest tied activity is returned instead.
    """
    if len(labels) == 0:
        raise SegmentationError("cannot label an empty window")
    values, counts = np.unique(np.asarray(labels, dtype=np.int64), return_counts=True)
    top = counts.max()
    tied = values[counts == top]
    if tied[0] == NULL_LABEL and len(tied) > 1:
        return int(tied[1])
    return int(tied[0])


def window_labels(labels: np.ndarray, starts: np.ndarray, w: int) -> np.ndarray:
    """Vectorised :func:`window_label` over windows ``labels[s:s+w]``."""
    if len(starts) == 0:
        return np.empty(0, dtype=np.int64)
    classes, codes = np.unique(labels, return_inverse=True)
    onehot = np.zeros((len(labels) + 1, len(classes)), dtype=np.int64)
    onehot[np.arange(1, len(labels) + 1), codes] = 1
    cum = np.cumsum(onehot, axis=0)
    counts = cum[starts + w] - cum[starts]
    # argmax returns the first maximum, i.e. the smallest label id (classes are sorted)
    best = np.argmax(counts, axis=1)
    if classes[0] == NULL_LABEL and len(classes) > 1:
        null_won = best == 0
        if null_won.any():
            rest = counts[null_won, 1:]
            rest_best = np.argmax(rest, axis=1)
            tie = rest[np.arange(len(rest)), rest_best] == counts[null_won, 0]
            best[np.flatnonzero(null_won)[tie]] = rest_best[tie] + 1
    return classes[best]


def segment(recording: SubjectRecording, spec: WindowSpec, keep_null: bool = False) -> list[Window]:
    """Cut ``recording`` into windows starting at 0, step, 2*step, ...

    Trailing partial windows are dropped. Windows whose label is the null
    class are dropped unless ``keep_null`` is set.
    """
    w, step = spec.in_samples(recording.sampling_rate_hz)
    starts = window_starts(len(recording), w, step)
    labels = window_labels(recording.labels, starts, w)
    sid = recording.subject_id
    return [
        Window(sid, int(s), w, int(lab))
        for s, lab in zip(starts.tolist(), labels.tolist())
        if keep_null or lab != NULL_LABEL
    ]


def segment_dataset(dataset, spec: WindowSpec, keep_null: bool = False) -> list[Window]:
    """Windows of every recording, in dataset order then start order."""
    out: list[Window] = []
    for rec in dataset:
        out.extend(segment(rec, spec, keep_null=keep_null))
    return out
