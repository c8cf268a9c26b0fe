"""Per-subject sensor recordings: data model, raw-log ingestion and manifests.

Raw logs are whitespace-delimited numeric text, one sample per row. Columns
are picked by zero-based index through a :class:`ChannelSelection`; one column
holds the integer activity label (0 = null / unlabeled).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, NamedTuple, Sequence

import numpy as np

NULL_LABEL = 0
DEFAULT_SAMPLING_RATE_HZ = 50.0

# Column layout of the REALDISP benchmark logs: 2 time columns (s, us), then
# 9 sensors x 13 values (acc xyz, gyr xyz, mag xyz, quaternion wxyz), then the
# label. Sensor order: RLA, RUA, BACK, LUA, LLA, RC, RT, LT, LC.
REALDISP_SENSORS = ("RLA", "RUA", "BACK", "LUA", "LLA", "RC", "RT", "LT", "LC")
REALDISP_LABEL_COLUMN = 119
REALDISP_ACC_COLUMNS = tuple(2 + 13 * s + a for s in range(9) for a in range(3))
REALDISP_ACC_NAMES = tuple(f"{s}_acc_{ax}" for s in REALDISP_SENSORS for ax in "xyz")


class DatasetError(ValueError):
    """Raised for unreadable, malformed or inconsistent sensor data."""


@dataclass(frozen=True)
class ChannelSelection:
    columns: tuple[int, ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        cols = tuple(int(c) for c in self.columns)
        object.__setattr__(self, "columns", cols)
        if not cols:
            raise DatasetError("channel selection is empty")
        if len(set(cols)) != len(cols):
            raise DatasetError(f"duplicate column indices in selection {cols}")
        if any(c < 0 for c in cols):
            raise DatasetError(f"negative column index in selection {cols}")
        if self.names is not None:
            names = tuple(self.names)
            if len(names) != len(cols):
                raise DatasetError("channel names must parallel the column list")
            object.__setattr__(self, "names", names)

    def __len__(self) -> int:
        return len(self.columns)


def realdisp_acceleration() -> ChannelSelection:
    """The 27 acceleration channels (9 sensors x 3 axes) of the REALDISP logs."""
    return ChannelSelection(REALDISP_ACC_COLUMNS, REALDISP_ACC_NAMES)


class Sample(NamedTuple):
    t: float
    values: np.ndarray
    label: int


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SubjectRecording:
    """One subject's time-ordered stream, stored column-wise.

    ``values`` has shape (n_samples, n_channels); ``labels`` and ``t`` have
    shape (n_samples,). Arrays are made read-only on construction.
    """

    subject_id: str
    values: np.ndarray
    labels: np.ndarray
    t: np.ndarray | None = None
    sampling_rate_hz: float = DEFAULT_SAMPLING_RATE_HZ
    channel_names: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        if not (self.sampling_rate_hz > 0 and math.isfinite(self.sampling_rate_hz)):
            raise DatasetError(f"sampling rate must be positive, got {self.sampling_rate_hz}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DatasetError(f"values must be 2-D (samples x channels), got shape {values.shape}")
        if values.shape[1] < 1:
            raise DatasetError("recording has no channels")
        n = values.shape[0]
        labels = np.asarray(self.labels)
        if labels.shape != (n,):
            raise DatasetError(f"expected {n} labels, got shape {labels.shape}")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.mod(labels, 1) == 0):
                raise DatasetError("labels must be integers")
        labels = labels.astype(np.int64)
        if np.any(labels < 0):
            raise DatasetError("labels must be non-negative")
        if not np.all(np.isfinite(values)):
            raise DatasetError(f"subject {self.subject_id!r}: non-finite sensor values")
        if self.t is None:
            t = np.arange(n, dtype=np.float64) / self.sampling_rate_hz
        else:
            t = np.asarray(self.t, dtype=np.float64)
            if t.shape != (n,):
                raise DatasetError(f"expected {n} timestamps, got shape {t.shape}")
            if not np.all(np.isfinite(t)):
                raise DatasetError("timestamps must be finite")
            if n > 1 and np.any(np.diff(t) < 0):
                raise DatasetError("timestamps must be non-decreasing")
        if self.channel_names is not None and len(self.channel_names) != values.shape[1]:
            raise DatasetError("channel_names length does not match channel count")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "t", _frozen(t))

    def __len__(self) -> int:
        return self.values.shape[0]

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self.sample(i)

    def sample(self, i: int) -> Sample:
        return Sample(float(self.t[i]), self.values[i], int(self.labels[i]))

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Dataset:
    recordings: tuple[SubjectRecording, ...]

    def __post_init__(self):
        recs = tuple(self.recordings)
        object.__setattr__(self, "recordings", recs)
        seen = set()
        for r in recs:
            if r.subject_id in seen:
                raise DatasetError(f"duplicate subject id {r.subject_id!r}")
            seen.add(r.subject_id)
        widths = {r.n_channels for r in recs}
        if len(widths) > 1:
            raise DatasetError(f"recordings disagree on channel count: {sorted(widths)}")

    def __len__(self) -> int:
        return len(self.recordings)

    def __iter__(self) -> Iterator[SubjectRecording]:
        return iter(self.recordings)

    def __getitem__(self, subject_id: str) -> SubjectRecording:
        for r in self.recordings:
            if r.subject_id == subject_id:
                return r
        raise KeyError(subject_id)

    @property
    def subject_ids(self) -> list[str]:
        return [r.subject_id for r in self.recordings]

    @property
    def n_channels(self) -> int:
        return self.recordings[0].n_channels if self.recordings else 0


def _parse_rows(path: Path, wanted: Sequence[int]) -> np.ndarray:
    """Parse the wanted columns of every non-blank line, reporting the first bad line."""
    needed = max(wanted) + 1
    rows = []
    with open(path, "r", newline=None) as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) < needed:
                raise DatasetError(
                    f"{path}:{lineno}: row has {len(tokens)} columns, need at least {needed}"
                )
            try:
                rows.append([float(tokens[c]) for c in wanted])
            except ValueError as exc:
                raise DatasetError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
    if not rows:
        raise DatasetError(f"{path}: file is empty")
    return np.array(rows, dtype=np.float64)


def load_recording(
    path: str | os.PathLike,
    subject_id: str,
    selection: ChannelSelection,
    label_column: int,
    sampling_rate_hz: float = DEFAULT_SAMPLING_RATE_HZ,
    time_column: int | None = None,
) -> SubjectRecording:
    """Read one raw sensor log.

    Timestamps come from ``time_column`` (seconds) when given, otherwise they
    are synthesized as ``row_index / sampling_rate_hz``.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"sensor log not found: {path}")
    wanted = list(selection.columns) + [label_column]
    if time_column is not None:
        wanted.append(time_column)
    data = _parse_rows(path, wanted)
    n_sel = len(selection)
    values = data[:, :n_sel]
    raw_labels = data[:, n_sel]

    bad = ~np.isfinite(values).all(axis=1)
    if bad.any():
        line = _physical_line(path, int(np.argmax(bad)))
        raise DatasetError(f"{path}:{line}: non-finite value in a selected column")
    bad = ~(np.isfinite(raw_labels) & (np.mod(raw_labels, 1) == 0) & (raw_labels >= 0))
    if bad.any():
        line = _physical_line(path, int(np.argmax(bad)))
        raise DatasetError(f"{path}:{line}: label is not a non-negative integer")

    t = data[:, n_sel + 1] if time_column is not None else None
    return SubjectRecording(
        subject_id=subject_id,
        values=values,
        labels=raw_labels.astype(np.int64),
        t=t,
        sampling_rate_hz=sampling_rate_hz,
        channel_names=selection.names,
    )


def _physical_line(path: Path, row_index: int) -> int:
    """1-based line number of the ``row_index``-th non-blank row."""
    seen = -1
    with open(path, "r", newline=None) as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                seen += 1
                if seen == row_index:
                    return lineno
    return -1


def load_dataset(
    manifest: Mapping[str, str | os.PathLike] | Sequence[tuple[str, str | os.PathLike]],
    selection: ChannelSelection,
    label_column: int,
    sampling_rate_hz: float = DEFAULT_SAMPLING_RATE_HZ,
    time_column: int | None = None,
) -> Dataset:
    """Load every manifest entry, preserving manifest order."""
    entries = list(manifest.items()) if isinstance(manifest, Mapping) else list(manifest)
    if not entries:
        raise DatasetError("manifest is empty")
    ids = [sid for sid, _ in entries]
    dupes = sorted({s for s in ids if ids.count(s) > 1})
    if dupes:
        raise DatasetError(f"duplicate subject id(s) in manifest: {', '.join(dupes)}")
    recordings = []
    for sid, path in entries:
        try:
            rec = load_recording(path, sid, selection, label_column, sampling_rate_hz, time_column)
        except (DatasetError, OSError) as exc:
            raise DatasetError(f"subject {sid!r}: {exc}") from exc
        recordings.append(rec)
    return Dataset(tuple(recordings))


def read_manifest(path: str | os.PathLike) -> list[tuple[str, Path]]:
    """Parse ``subject_id <whitespace> path`` lines; relative paths resolve against the manifest."""
    path = Path(path)
    base = path.parent
    entries = []
    with open(path, "r", newline=None) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split(None, 1)
            if len(parts) != 2:
                raise DatasetError(f"{path}:{lineno}: expected 'subject_id path'")
            sid, file_path = parts[0], Path(parts[1].strip())
            if not file_path.is_absolute():
                file_path = base / file_path
            entries.append((sid, file_path))
    return entries


def write_manifest(path: str | os.PathLike, entries: Sequence[tuple[str, str | os.PathLike]]) -> None:
    with open(path, "w", newline="\n") as fh:
        for sid, file_path in entries:
            fh.write(f"{sid} {file_path}\n")


def write_recording(path: str | os.PathLike, recording: SubjectRecording) -> None:
    """Write ``recording`` as a raw log: channel columns first, label last.

    Floats use the shortest round-tripping representation, so reloading with
    ``ChannelSelection(range(n_channels))`` and ``label_column=n_channels``
    reproduces the values bit for bit.
    """
    with open(path, "w", newline="\n") as fh:
        for row, label in zip(recording.values.tolist(), recording.labels.tolist()):
            fh.write(" ".join(repr(v) for v in row))
            fh.write(f" {label}\n")
