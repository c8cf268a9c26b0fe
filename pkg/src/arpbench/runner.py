"""Experiment grid: window size x mode x feature set x classifier x CV scheme.

Configuration is an INI file::

    [grid]
    window_sizes_s = 0.5, 1, 2, 4
    modes = nonoverlap, overlap(0.2)
    feature_sets = FS1, FS3
    classifiers = KNN, DT
    cv_schemes = kfold(10), subject
    seed = 42

    [synth]                 ; or a [data] section pointing at a manifest
    n_subjects = 12

Every ``[grid]`` key is optional and defaults to the full benchmark grid.
"""

from __future__ import annotations

import configparser
import csv
import logging
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Sequence

from .classifiers import ClassifierKind, ClassifierSpec
from .dataset import (
    DEFAULT_SAMPLING_RATE_HZ,
    ChannelSelection,
    Dataset,
    load_dataset,
    read_manifest,
    realdisp_acceleration,
)
from .evaluation import EvalResult, FoldPlan, Scheme, cross_validate, kfold_plan, subject_plan
from .features import FeatureMatrix, FeatureSet, extract_features
from .rng import derive_seed
from .segmentation import DEFAULT_OVERLAP_STEP_S, DEFAULT_WINDOW_SIZES_S, WindowSpec, segment_dataset
from .synthgen import SynthConfig, generate

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "window_size_s", "mode", "feature_set", "classifier", "cv_scheme",
    "mean_f1", "std_f1", "n_windows", "wall_time_s",
]
FOLD_COLUMNS = ["window_size_s", "mode", "feature_set", "classifier", "cv_scheme", "fold", "f1"]


class ConfigError(ValueError):
    pass


class GridError(RuntimeError):
    pass


@dataclass(frozen=True)
class WindowMode:
    """``step_s is None`` means non-overlapping (step equals the window size)."""

    step_s: float | None = None

    @property
    def label(self) -> str:
        return "NONOVERLAP" if self.step_s is None else f"OVERLAP({self.step_s!r})"

    @property
    def sort_key(self):
        return (0, 0.0) if self.step_s is None else (1, self.step_s)

    def window_spec(self, size_s: float) -> WindowSpec:
        return WindowSpec(size_s, size_s if self.step_s is None else self.step_s)

    @classmethod
    def parse(cls, text: str) -> "WindowMode":
        t = text.strip().lower().replace(" ", "")
        if t in ("nonoverlap", "non-overlap", "nonoverlapping"):
            return cls(None)
        if t in ("overlap", "overlapping"):
            return cls(DEFAULT_OVERLAP_STEP_S)
        m = re.fullmatch(r"overlap(?:ping)?(?:\((.+)\)|:(.+))", t)
        if m:
            step = float(m.group(1) or m.group(2))
            if not step > 0:
                raise ConfigError(f"overlap step must be positive: {text!r}")
            return cls(step)
        raise ConfigError(f"unknown window mode {text!r} (expected nonoverlap or overlap(STEP))")


@dataclass(frozen=True)
class CVScheme:
    scheme: Scheme
    k: int = 10

    @property
    def label(self) -> str:
        return f"KFOLD({self.k})" if self.scheme is Scheme.KFOLD else "SUBJECT"

    @property
    def sort_key(self):
        return (0, self.k) if self.scheme is Scheme.KFOLD else (1, 0)

    @classmethod
    def parse(cls, text: str) -> "CVScheme":
        t = text.strip().lower().replace(" ", "")
        if t in ("subject", "loso", "leave-one-subject-out"):
            return cls(Scheme.SUBJECT)
        if t in ("kfold", "k-fold"):
            return cls(Scheme.KFOLD, 10)
        m = re.fullmatch(r"k-?fold(?:\((\d+)\)|:(\d+))", t)
        if m:
            k = int(m.group(1) or m.group(2))
            if k < 2:
                raise ConfigError(f"k-fold needs k >= 2: {text!r}")
            return cls(Scheme.KFOLD, k)
        raise ConfigError(f"unknown CV scheme {text!r} (expected kfold(K) or subject)")


@dataclass(frozen=True)
class ManifestSource:
    manifest: Path
    selection: ChannelSelection
    label_column: int
    sampling_rate_hz: float = DEFAULT_SAMPLING_RATE_HZ
    time_column: int | None = None

    def load(self) -> Dataset:
        return load_dataset(
            read_manifest(self.manifest), self.selection, self.label_column,
            self.sampling_rate_hz, self.time_column,
        )


@dataclass(frozen=True)
class GridConfig:
    data_source: ManifestSource | SynthConfig
    window_sizes_s: tuple[float, ...] = DEFAULT_WINDOW_SIZES_S
    modes: tuple[WindowMode, ...] = (WindowMode(None), WindowMode(DEFAULT_OVERLAP_STEP_S))
    feature_sets: tuple[FeatureSet, ...] = (FeatureSet.FS1, FeatureSet.FS2, FeatureSet.FS3)
    classifiers: tuple[ClassifierSpec, ...] = tuple(ClassifierSpec(k) for k in ClassifierKind)
    cv_schemes: tuple[CVScheme, ...] = (CVScheme(Scheme.KFOLD, 10), CVScheme(Scheme.SUBJECT))
    seed: int = 42
    keep_null: bool = False
    aggregation: str = "mean"
    jobs: int = 1
    record_timing: bool = False

    def __post_init__(self):
        for name in ("window_sizes_s", "modes", "feature_sets", "classifiers", "cv_schemes"):
            value = tuple(getattr(self, name))
            if not value:
                raise ConfigError(f"{name} must not be empty")
            if len(set(value)) != len(value):
                raise ConfigError(f"{name} contains duplicates")
            object.__setattr__(self, name, value)
        if any(not (s > 0 and math.isfinite(s)) for s in self.window_sizes_s):
            raise ConfigError("window sizes must be positive")
        if self.aggregation not in ("mean", "pooled"):
            raise ConfigError(f"aggregation must be 'mean' or 'pooled', got {self.aggregation!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @property
    def n_cells(self) -> int:
        return (len(self.window_sizes_s) * len(self.modes) * len(self.feature_sets)
                * len(self.classifiers) * len(self.cv_schemes))

    def synth_config(self) -> SynthConfig | None:
        return self.data_source if isinstance(self.data_source, SynthConfig) else None


@dataclass(frozen=True)
class ExperimentCell:
    window_size_s: float
    mode: WindowMode
    feature_set: FeatureSet
    classifier: ClassifierSpec
    cv_scheme: CVScheme
    eval: EvalResult
    n_windows: int
    wall_time_s: float = 0.0

    @property
    def coordinates(self) -> tuple:
        return (self.window_size_s, self.mode.label, self.feature_set.tag,
                self.classifier.kind.value, self.cv_scheme.label)

    @property
    def sort_key(self) -> tuple:
        return (self.window_size_s, self.mode.sort_key, self.feature_set.tag,
                self.classifier.kind.value, self.cv_scheme.sort_key)


# -- config file parsing -------------------------------------------------------

def _split_list(text: str) -> list[str]:
    # commas inside parentheses belong to the item, e.g. "overlap(0.2)"
    items, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            items.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    items.append("".join(cur))
    return [i.strip() for i in items if i.strip()]


def _optional_int(text: str | None) -> int | None:
    if text is None or text.strip().lower() in ("", "none", "null"):
        return None
    return int(text)


def _parse_selection(text: str) -> ChannelSelection:
    t = text.strip().lower()
    if t in ("realdisp_acc", "realdisp-acceleration"):
        return realdisp_acceleration()
    cols = []
    for part in _split_list(text):
        if "-" in part:
            lo, hi = part.split("-", 1)
            cols.extend(range(int(lo), int(hi) + 1))
        else:
            cols.append(int(part))
    return ChannelSelection(tuple(cols))


def _synth_from_section(section, default_seed: int) -> SynthConfig:
    kwargs = {}
    types = {f.name: f.type for f in fields(SynthConfig)}
    for key, raw in section.items():
        if key not in types:
            raise ConfigError(f"unknown [synth] key {key!r}")
        kwargs[key] = int(raw) if types[key] == "int" else float(raw)
    if "seed" not in kwargs:
        kwargs["seed"] = derive_seed(default_seed, "synth")
    return SynthConfig(**kwargs)


def parse_config(text: str, base_dir: str | os.PathLike = ".", seed: int | None = None) -> GridConfig:
    """Build a :class:`GridConfig` from INI text; ``seed`` overrides ``[grid] seed``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    grid = parser["grid"] if parser.has_section("grid") else {}
    known = {"window_sizes_s", "modes", "feature_sets", "classifiers", "cv_schemes", "seed",
             "keep_null", "aggregation", "jobs", "record_timing"}
    unknown = set(grid) - known
    if unknown:
        raise ConfigError(f"unknown [grid] key(s): {', '.join(sorted(unknown))}")

    kwargs: dict = {}
    try:
        if "window_sizes_s" in grid:
            kwargs["window_sizes_s"] = tuple(float(v) for v in _split_list(grid["window_sizes_s"]))
        if "modes" in grid:
            kwargs["modes"] = tuple(WindowMode.parse(v) for v in _split_list(grid["modes"]))
        if "feature_sets" in grid:
            kwargs["feature_sets"] = tuple(FeatureSet.parse(v) for v in _split_list(grid["feature_sets"]))
        clf_opts = {}
        if parser.has_section("classifier"):
            sec = parser["classifier"]
            for key in sec:
                if key not in ("knn_k", "dt_max_depth", "dt_min_leaf", "nb_var_smoothing"):
                    raise ConfigError(f"unknown [classifier] key {key!r}")
            if "knn_k" in sec:
                clf_opts["knn_k"] = int(sec["knn_k"])
            if "dt_max_depth" in sec:
                clf_opts["dt_max_depth"] = _optional_int(sec["dt_max_depth"])
            if "dt_min_leaf" in sec:
                clf_opts["dt_min_leaf"] = int(sec["dt_min_leaf"])
            if "nb_var_smoothing" in sec:
                clf_opts["nb_var_smoothing"] = float(sec["nb_var_smoothing"])
        kinds = _split_list(grid["classifiers"]) if "classifiers" in grid else [k.value for k in ClassifierKind]
        kwargs["classifiers"] = tuple(ClassifierSpec(ClassifierKind.parse(k), **clf_opts) for k in kinds)
        if "cv_schemes" in grid:
            kwargs["cv_schemes"] = tuple(CVScheme.parse(v) for v in _split_list(grid["cv_schemes"]))
        kwargs["seed"] = seed if seed is not None else int(grid.get("seed", 42))
        if "keep_null" in grid:
            kwargs["keep_null"] = parser.getboolean("grid", "keep_null")
        if "record_timing" in grid:
            kwargs["record_timing"] = parser.getboolean("grid", "record_timing")
        if "aggregation" in grid:
            kwargs["aggregation"] = grid["aggregation"].strip().lower()
        if "jobs" in grid:
            kwargs["jobs"] = int(grid["jobs"])

        has_data, has_synth = parser.has_section("data"), parser.has_section("synth")
        if has_data == has_synth:
            raise ConfigError("config needs exactly one of a [data] or a [synth] section")
        if has_synth:
            kwargs["data_source"] = _synth_from_section(parser["synth"], kwargs["seed"])
        else:
            sec = parser["data"]
            if "manifest" not in sec:
                raise ConfigError("[data] needs a 'manifest' path")
            manifest = Path(sec["manifest"])
            if not manifest.is_absolute():
                manifest = Path(base_dir) / manifest
            kwargs["data_source"] = ManifestSource(
                manifest=manifest,
                selection=_parse_selection(sec.get("columns", "realdisp_acc")),
                label_column=int(sec.get("label_column", "119")),
                sampling_rate_hz=float(sec.get("sampling_rate_hz", str(DEFAULT_SAMPLING_RATE_HZ))),
                time_column=_optional_int(sec.get("time_column")),
            )
        return GridConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path: str | os.PathLike, seed: int | None = None) -> GridConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent, seed=seed)


# -- grid execution ------------------------------------------------------------

def load_source(cfg: GridConfig) -> Dataset:
    if isinstance(cfg.data_source, SynthConfig):
        return generate(cfg.data_source)
    return cfg.data_source.load()


def kfold_seed(seed: int, window_size_s: float, mode: WindowMode) -> int:
    """Shuffle seed of one (window size, mode) row set; shared by its feature sets and classifiers."""
    return derive_seed(seed, "kfold", float(window_size_s), mode.label)


def _describe(size, mode, fs=None, clf=None, scheme=None) -> str:
    parts = [f"window_size_s={size!r}", f"mode={mode.label}"]
    if fs is not None:
        parts.append(f"feature_set={fs.tag}")
    if clf is not None:
        parts.append(f"classifier={clf.kind.value}")
    if scheme is not None:
        parts.append(f"cv_scheme={scheme.label}")
    return "cell(" + ", ".join(parts) + ")"


def _plan(matrix: FeatureMatrix, scheme: CVScheme, seed: int) -> FoldPlan:
    if scheme.scheme is Scheme.KFOLD:
        return kfold_plan(len(matrix), scheme.k, seed)
    return subject_plan(matrix.subjects)


def _evaluate_cell(task):
    matrix, plan, spec, aggregation, timing = task
    t0 = time.perf_counter()
    result = cross_validate(matrix, plan, spec, aggregation=aggregation)
    elapsed = time.perf_counter() - t0 if timing else 0.0
    return result, elapsed


def run_grid(cfg: GridConfig, dataset: Dataset | None = None, use_cache: bool = True) -> list[ExperimentCell]:
    """Evaluate every grid coordinate; cells come back sorted by coordinates.

    Windows are computed once per (size, mode) and features once per
    (size, mode, feature set), then shared by all classifiers and schemes.
    """
    if dataset is None:
        dataset = load_source(cfg)

    window_cache: dict = {}
    feature_cache: dict = {}

    def windows_for(size, mode):
        key = (size, mode)
        if use_cache and key in window_cache:
            return window_cache[key]
        wins = segment_dataset(dataset, mode.window_spec(size), keep_null=cfg.keep_null)
        if use_cache:
            window_cache[key] = wins
        return wins

    def features_for(size, mode, fs):
        key = (size, mode, fs)
        if use_cache and key in feature_cache:
            return feature_cache[key]
        fm = extract_features(windows_for(size, mode), dataset, fs)
        if use_cache:
            feature_cache[key] = fm
        return fm

    coords, tasks = [], []
    for size in cfg.window_sizes_s:
        for mode in cfg.modes:
            for fs in cfg.feature_sets:
                try:
                    matrix = features_for(size, mode, fs)
                except Exception as exc:
                    raise GridError(f"{_describe(size, mode, fs)}: {exc}") from exc
                for scheme in cfg.cv_schemes:
                    try:
                        plan = _plan(matrix, scheme, kfold_seed(cfg.seed, size, mode))
                    except Exception as exc:
                        raise GridError(f"{_describe(size, mode, fs, None, scheme)}: {exc}") from exc
                    for clf in cfg.classifiers:
                        coords.append((size, mode, fs, clf, scheme, len(matrix)))
                        tasks.append((matrix, plan, clf, cfg.aggregation, cfg.record_timing))
    log.info("evaluating %d cells with %d job(s)", len(tasks), cfg.jobs)

    results = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_evaluate_cell, t) for t in tasks]
            for c, fut in zip(coords, futures):
                try:
                    results.append(fut.result())
                except Exception as exc:
                    raise GridError(f"{_describe(*c[:5])}: {exc}") from exc
    else:
        for c, t in zip(coords, tasks):
            try:
                results.append(_evaluate_cell(t))
            except Exception as exc:
                raise GridError(f"{_describe(*c[:5])}: {exc}") from exc

    cells = [
        ExperimentCell(size, mode, fs, clf, scheme, result, n_windows, elapsed)
        for (size, mode, fs, clf, scheme, n_windows), (result, elapsed) in zip(coords, results)
    ]
    cells.sort(key=lambda c: c.sort_key)
    return cells


# -- reporting -----------------------------------------------------------------

def report(cells: Sequence[ExperimentCell], out_dir: str | os.PathLike) -> tuple[Path, Path]:
    """Write ``summary.csv`` and ``folds.csv`` into ``out_dir``."""
    if not cells:
        raise GridError("no cells to report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        summary_path, folds_path = out / "summary.csv", out / "folds.csv"
        ordered = sorted(cells, key=lambda c: c.sort_key)
        with open(summary_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SUMMARY_COLUMNS)
            for c in ordered:
                writer.writerow(list(_coord_fields(c)) + [
                    repr(c.eval.mean_f1), repr(c.eval.std_f1), c.n_windows, repr(c.wall_time_s),
                ])
        with open(folds_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(FOLD_COLUMNS)
            for c in ordered:
                names = c.eval.fold_names or tuple(str(i) for i in range(len(c.eval.per_fold_f1)))
                for name, f1 in zip(names, c.eval.per_fold_f1):
                    writer.writerow(list(_coord_fields(c)) + [name, repr(f1)])
    except OSError as exc:
        raise GridError(f"cannot write results to {out}: {exc}") from exc
    return summary_path, folds_path


def _coord_fields(c: ExperimentCell):
    return (repr(float(c.window_size_s)), c.mode.label, c.feature_set.tag,
            c.classifier.kind.value, c.cv_scheme.label)


def with_overrides(cfg: GridConfig, **changes) -> GridConfig:
    return replace(cfg, **changes)
