"""Cross-validation fold plans (shuffled k-fold, leave-one-subject-out) and micro-F1 scoring."""

from __future__ import annotations

import csv
import enum
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .classifiers import ClassifierSpec, fit_arrays
from .features import FeatureMatrix
from .rng import SplitMix64


class EvaluationError(ValueError):
    pass


class Scheme(str, enum.Enum):
    KFOLD = "KFOLD"
    SUBJECT = "SUBJECT"


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[tuple[np.ndarray, np.ndarray], ...]
    scheme: Scheme
    fold_names: tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)


def _balanced_bounds(n: int, k: int) -> list[int]:
    # first n % k chunks take one extra row
    base, extra = divmod(n, k)
    bounds = [0]
    for i in range(k):
        bounds.append(bounds[-1] + base + (1 if i < extra else 0))
    return bounds


def kfold_plan(n_rows: int, k: int, seed: int) -> FoldPlan:
    """Shuffle row indices with SplitMix64(seed) and cut them into k contiguous chunks."""
    if k < 2:
        raise EvaluationError(f"k-fold needs k >= 2, got {k}")
    if k > n_rows:
        raise EvaluationError(f"k={k} exceeds the number of rows ({n_rows})")
    perm = list(range(n_rows))
    SplitMix64(seed).shuffle(perm)
    perm = np.asarray(perm, dtype=np.int64)
    bounds = _balanced_bounds(n_rows, k)
    folds = []
    for i in range(k):
        test = np.sort(perm[bounds[i]:bounds[i + 1]])
        mask = np.ones(n_rows, dtype=bool)
        mask[test] = False
        folds.append((np.flatnonzero(mask), test))
    return FoldPlan(tuple(folds), Scheme.KFOLD, tuple(str(i) for i in range(k)))


def subject_plan(subject_ids: Sequence[str]) -> FoldPlan:
    """One fold per subject (first-appearance order) testing exactly that subject's rows."""
    subjects = np.asarray(subject_ids, dtype=object)
    order = list(dict.fromkeys(subjects.tolist()))
    if len(order) < 2:
        raise EvaluationError(f"subject cross-validation needs >= 2 subjects, got {len(order)}")
    folds = []
    for sid in order:
        is_test = subjects == sid
        folds.append((np.flatnonzero(~is_test), np.flatnonzero(is_test)))
    return FoldPlan(tuple(folds), Scheme.SUBJECT, tuple(str(s) for s in order))


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: dict[tuple[int, int], int]

    @classmethod
    def from_labels(cls, y_true: Iterable[int], y_pred: Iterable[int]) -> "ConfusionMatrix":
        y_true, y_pred = list(y_true), list(y_pred)
        if len(y_true) != len(y_pred):
            raise EvaluationError("y_true and y_pred differ in length")
        return cls(dict(Counter(zip((int(v) for v in y_true), (int(v) for v in y_pred)))))

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        merged = Counter(self.counts)
        merged.update(other.counts)
        return ConfusionMatrix(dict(merged))

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def true_positives(self) -> int:
        return sum(c for (t, p), c in self.counts.items() if t == p)


def micro_f1(cm: ConfusionMatrix) -> float:
    """F1 from counts pooled over all classes: 2TP / (2TP + FP + FN).

    With one prediction per row FP = FN = total - TP, so this is TP / total.
    """
    total = cm.total
    if total <= 0:
        raise EvaluationError("confusion matrix is empty")
    tp = cm.true_positives
    fp = fn = total - tp
    return 2 * tp / (2 * tp + fp + fn)


@dataclass(frozen=True)
class EvalResult:
    per_fold_f1: tuple[float, ...]
    mean_f1: float
    std_f1: float
    pooled_f1: float | None = None
    fold_names: tuple[str, ...] = ()


def _run_fold(matrix: FeatureMatrix, train, test, spec: ClassifierSpec) -> ConfusionMatrix:
    if len(train) == 0 or len(test) == 0:
        raise EvaluationError("every fold needs non-empty train and test sets")
    model = fit_arrays(matrix.X[train], matrix.labels[train], spec)
    pred = model.predict(matrix.X[test])
    return ConfusionMatrix.from_labels(matrix.labels[test].tolist(), pred.tolist())


def cross_validate(
    matrix: FeatureMatrix,
    plan: FoldPlan,
    spec: ClassifierSpec,
    aggregation: str = "mean",
    jobs: int = 1,
) -> EvalResult:
    """Fit and score each fold; aggregate by the unweighted mean of per-fold micro-F1.

    ``aggregation="pooled"`` reports micro-F1 of the summed confusion matrices as
    ``mean_f1`` instead. Fold results do not depend on ``jobs``.
    """
    if aggregation not in ("mean", "pooled"):
        raise EvaluationError(f"unknown aggregation {aggregation!r}")
    n = len(matrix)
    for train, test in plan:
        if len(train) and (train.min() < 0 or train.max() >= n):
            raise EvaluationError("fold plan indexes rows outside the matrix")
        if len(test) and (test.min() < 0 or test.max() >= n):
            raise EvaluationError("fold plan indexes rows outside the matrix")
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cms = list(pool.map(lambda f: _run_fold(matrix, f[0], f[1], spec), plan.folds))
    else:
        cms = [_run_fold(matrix, train, test, spec) for train, test in plan]
    scores = tuple(micro_f1(cm) for cm in cms)
    pooled = cms[0]
    for cm in cms[1:]:
        pooled = pooled + cm
    pooled_f1 = micro_f1(pooled)
    arr = np.asarray(scores)
    mean = float(arr.mean()) if aggregation == "mean" else pooled_f1
    return EvalResult(scores, mean, float(arr.std()), pooled_f1, plan.fold_names)


def write_fold_csv(path: str | os.PathLike, result: EvalResult, scheme: Scheme | str) -> None:
    """Per-fold results as ``fold,scheme,f1``."""
    label = scheme.value if isinstance(scheme, Scheme) else str(scheme)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fold", "scheme", "f1"])
        names = result.fold_names or tuple(str(i) for i in range(len(result.per_fold_f1)))
        for name, f1 in zip(names, result.per_fold_f1):
            writer.writerow([name, label, repr(f1)])
