"""Synthetic multi-subject activity data with subject offsets and AR(1) noise.

Sample ``t`` of subject ``s`` performing activity ``a`` on channel ``c`` is::

    x = mu[a, c] + b[s, c] + e[t, c],   e[t] = rho * e[t-1] + N(0, noise_sigma^2)

``b[s] ~ N(0, subject_sigma^2)`` is drawn once per subject. Activity means sit on
a fixed grid: ``mu[a, c] = ACTIVITY_SPACING * ((a - 1 + c) mod n_activities)``,
so any two activities differ by at least ``ACTIVITY_SPACING`` on every channel.

With ``max_lead_in_samples > 0`` each recording starts with a null (label 0)
stretch of uniform random length in ``[0, max_lead_in_samples]`` carrying only
``b[s] + e[t]``. Without it every subject has the same label layout, so
fixed-grid windows line up across subjects sample for sample.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .dataset import DEFAULT_SAMPLING_RATE_HZ, Dataset, SubjectRecording, write_manifest, write_recording

ACTIVITY_SPACING = 2.0


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 12
    n_activities: int = 8
    segments_per_activity: int = 2
    segment_len_samples: int = 210
    n_channels: int = 8
    subject_sigma: float = 4.0
    noise_sigma: float = 2.0
    smoothness: float = 0.9
    seed: int = 42
    sampling_rate_hz: float = DEFAULT_SAMPLING_RATE_HZ
    max_lead_in_samples: int = 0

    def __post_init__(self):
        checks = [
            (self.n_subjects >= 2, "n_subjects must be >= 2"),
            (self.n_activities >= 2, "n_activities must be >= 2"),
            (self.segments_per_activity >= 1, "segments_per_activity must be positive"),
            (self.segment_len_samples >= 1, "segment_len_samples must be positive"),
            (self.n_channels >= 1, "n_channels must be positive"),
            (self.subject_sigma >= 0 and math.isfinite(self.subject_sigma), "subject_sigma must be >= 0"),
            (self.noise_sigma > 0 and math.isfinite(self.noise_sigma), "noise_sigma must be > 0"),
            (0 <= self.smoothness < 1, "smoothness must lie in [0, 1)"),
            (self.sampling_rate_hz > 0, "sampling_rate_hz must be positive"),
            (self.max_lead_in_samples >= 0, "max_lead_in_samples must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise SynthError(msg)

    @property
    def samples_per_subject(self) -> int:
        """Labelled samples per subject, excluding any null lead-in."""
        return self.n_activities * self.segments_per_activity * self.segment_len_samples

    def as_dict(self) -> dict:
        return asdict(self)


def activity_means(n_activities: int, n_channels: int) -> np.ndarray:
    """Row ``a - 1`` is the channel-mean pattern of activity ``a``."""
    a = np.arange(n_activities)[:, None]
    c = np.arange(n_channels)[None, :]
    return ACTIVITY_SPACING * ((a + c) % n_activities).astype(np.float64)


def subject_id(i: int) -> str:
    return f"s{i + 1:02d}"


def generate(cfg: SynthConfig) -> Dataset:
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    mu = activity_means(cfg.n_activities, cfg.n_channels)
    # row 0 is the null pattern
    mu = np.vstack([np.zeros((1, cfg.n_channels)), mu])
    seg_labels = np.repeat(np.arange(1, cfg.n_activities + 1), cfg.segments_per_activity)
    activity_labels = np.repeat(seg_labels, cfg.segment_len_samples).astype(np.int64)
    recordings = []
    for s in range(cfg.n_subjects):
        offset = rng.normal(0.0, cfg.subject_sigma, size=cfg.n_channels) if cfg.subject_sigma > 0 \
            else np.zeros(cfg.n_channels)
        lead_in = int(rng.integers(0, cfg.max_lead_in_samples + 1)) if cfg.max_lead_in_samples else 0
        labels = np.concatenate([np.zeros(lead_in, dtype=np.int64), activity_labels])
        innovations = rng.normal(0.0, cfg.noise_sigma, size=(len(labels), cfg.n_channels))
        # e[t] = rho * e[t-1] + innovation[t], starting from e[-1] = 0
        noise = lfilter([1.0], [1.0, -cfg.smoothness], innovations, axis=0)
        values = mu[labels] + offset[None, :] + noise
        recordings.append(
            SubjectRecording(
                subject_id=subject_id(s),
                values=values,
                labels=labels,
                sampling_rate_hz=cfg.sampling_rate_hz,
                channel_names=tuple(f"ch{c}" for c in range(cfg.n_channels)),
            )
        )
    return Dataset(tuple(recordings))


def write_dataset(dataset: Dataset, out_dir: str | os.PathLike) -> Path:
    """Write one raw log per subject plus ``manifest.txt``; returns the manifest path.

    Channels occupy columns ``0..n_channels-1`` and the label column ``n_channels``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for rec in dataset:
        name = f"{rec.subject_id}.log"
        write_recording(out / name, rec)
        entries.append((rec.subject_id, name))
    manifest = out / "manifest.txt"
    write_manifest(manifest, entries)
    return manifest
