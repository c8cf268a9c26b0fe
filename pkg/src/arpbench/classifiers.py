"""From-scratch multiclass classifiers: KNN, CART decision tree, Gaussian NB, nearest centroid.

All four are deterministic. Every argmax over classes resolves ties towards
the smallest label id; KNN distance ties resolve towards the lower training
row index. Features are used raw (no scaling).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial.distance import cdist

from .features import FeatureMatrix

# Upper bound on test x train entries held in one distance block.
_DIST_BLOCK = 1 << 22
_CUM_BLOCK = 1 << 22


class ClassifierError(ValueError):
    pass


class ClassifierKind(str, enum.Enum):
    KNN = "KNN"
    DT = "DT"
    NB = "NB"
    NCC = "NCC"

    @classmethod
    def parse(cls, text: str) -> "ClassifierKind":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ClassifierError(f"unknown classifier {text!r} (expected KNN, DT, NB or NCC)") from None


@dataclass(frozen=True)
class ClassifierSpec:
    kind: ClassifierKind
    knn_k: int = 3
    dt_max_depth: int | None = None
    dt_min_leaf: int = 1
    nb_var_smoothing: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "kind", ClassifierKind.parse(str(getattr(self.kind, "value", self.kind))))
        if self.knn_k < 1:
            raise ClassifierError(f"knn_k must be >= 1, got {self.knn_k}")
        if self.dt_min_leaf < 1:
            raise ClassifierError(f"dt_min_leaf must be >= 1, got {self.dt_min_leaf}")
        if self.dt_max_depth is not None and self.dt_max_depth < 1:
            raise ClassifierError(f"dt_max_depth must be >= 1, got {self.dt_max_depth}")
        if not self.nb_var_smoothing > 0:
            raise ClassifierError("nb_var_smoothing must be positive")


def _as_arrays(data) -> np.ndarray:
    if isinstance(data, FeatureMatrix):
        return data.X
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ClassifierError(f"expected a 2-D feature array, got shape {X.shape}")
    return X


class Model:
    """Base for fitted models; ``classes_`` holds the sorted training labels."""

    classes_: np.ndarray
    width: int

    def predict(self, rows) -> np.ndarray:
        X = _as_arrays(rows)
        if X.shape[1] != self.width:
            raise ClassifierError(f"expected {self.width} features, got {X.shape[1]}")
        if X.shape[0] == 0:
            return np.empty(0, dtype=self.classes_.dtype)
        return self.classes_[self._predict_codes(X)]

    def _predict_codes(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _sq_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # direct (a - b)^2 accumulation: exact ties stay ties, unlike the Gram expansion
    return cdist(A, B, "sqeuclidean")


class KNNModel(Model):
    def __init__(self, X, codes, classes, k):
        self.X, self.codes, self.classes_, self.k = X, codes, classes, k
        self.width = X.shape[1]

    def _predict_codes(self, X):
        n_train = self.X.shape[0]
        k = min(self.k, n_train)
        n_classes = len(self.classes_)
        onehot = np.zeros((n_train, n_classes), dtype=np.int64)
        onehot[np.arange(n_train), self.codes] = 1
        out = np.empty(X.shape[0], dtype=np.int64)
        step = max(1, _DIST_BLOCK // n_train)
        for lo in range(0, X.shape[0], step):
            d = _sq_distances(X[lo:lo + step], self.X)
            kth = np.partition(d, k - 1, axis=1)[:, k - 1:k]
            closer = d < kth
            # fill the remaining slots with the lowest-index rows at exactly the k-th distance
            need = k - closer.sum(axis=1, keepdims=True)
            at_kth = d == kth
            chosen = closer | (at_kth & (np.cumsum(at_kth, axis=1) <= need))
            votes = chosen.astype(np.int64) @ onehot
            out[lo:lo + step] = np.argmax(votes, axis=1)
        return out


class CentroidModel(Model):
    def __init__(self, centroids, classes):
        self.centroids, self.classes_ = centroids, classes
        self.width = centroids.shape[1]

    def _predict_codes(self, X):
        return np.argmin(_sq_distances(X, self.centroids), axis=1)


class GaussianNBModel(Model):
    def __init__(self, log_prior, theta, var, classes):
        self.log_prior, self.theta, self.var, self.classes_ = log_prior, theta, var, classes
        self.width = theta.shape[1]

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        norm = -0.5 * np.sum(np.log(2.0 * np.pi * self.var), axis=1)
        sq = ((X[:, None, :] - self.theta[None, :, :]) ** 2 / self.var[None, :, :]).sum(axis=2)
        return self.log_prior[None, :] + norm[None, :] - 0.5 * sq

    def _predict_codes(self, X):
        out = np.empty(X.shape[0], dtype=np.int64)
        step = max(1, _DIST_BLOCK // max(1, self.theta.size))
        for lo in range(0, X.shape[0], step):
            out[lo:lo + step] = np.argmax(self.joint_log_likelihood(X[lo:lo + step]), axis=1)
        return out


class TreeModel(Model):
    """Binary tree in flat arrays; ``feature[i] == -1`` marks a leaf."""

    def __init__(self, feature, threshold, left, right, counts, classes, width):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.classes_ = classes
        self.width = width

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                return node
            r, n, f = rows[internal], node[internal], feat[internal]
            go_left = X[r, f] <= self.threshold[n]
            node[internal] = np.where(go_left, self.left[n], self.right[n])

    def _predict_codes(self, X):
        return np.argmax(self.counts[self.apply(X)], axis=1)


def _best_split(Xs_sorted, ys_sorted, n_classes, min_leaf):
    """Best Gini split of one node.

    ``Xs_sorted[:, f]`` are the node's values of feature f in ascending order and
    ``ys_sorted[:, f]`` the matching class codes. Returns (feature, position) where
    the left child takes the first ``position + 1`` values, or None.

    Minimising weighted Gini is maximising A/nL + B/nR with A, B the sums of
    squared class counts of each side; that score is ranked in floating point,
    then near-maxima are re-ranked exactly so equal splits tie exactly.
    """
    m, d = Xs_sorted.shape
    nL = np.arange(1, m, dtype=np.int64)
    nR = m - nL
    size_ok = (nL >= min_leaf) & (nR >= min_leaf)
    if not size_ok.any():
        return None
    total = np.bincount(ys_sorted[:, 0], minlength=n_classes).astype(np.int64)

    best_score = -np.inf
    feats, poss, A_all, B_all, S_all = [], [], [], [], []
    chunk = max(1, _CUM_BLOCK // (m * n_classes))
    for lo in range(0, d, chunk):
        hi = min(d, lo + chunk)
        ys = ys_sorted[:, lo:hi]
        onehot = np.zeros((m, hi - lo, n_classes), dtype=np.int64)
        onehot[np.arange(m)[:, None], np.arange(hi - lo)[None, :], ys] = 1
        cum = np.cumsum(onehot, axis=0)[:-1]  # left counts at positions 0..m-2
        A = np.einsum("pfk,pfk->pf", cum, cum)
        right = total[None, None, :] - cum
        B = np.einsum("pfk,pfk->pf", right, right)
        valid = (Xs_sorted[1:, lo:hi] > Xs_sorted[:-1, lo:hi]) & size_ok[:, None]
        if not valid.any():
            continue
        score = np.where(valid, A / nL[:, None] + B / nR[:, None], -np.inf)
        p_idx, f_idx = np.nonzero(valid)
        feats.append(f_idx + lo)
        poss.append(p_idx)
        A_all.append(A[p_idx, f_idx])
        B_all.append(B[p_idx, f_idx])
        S_all.append(score[p_idx, f_idx])
        best_score = max(best_score, float(score.max()))
    if not feats:
        return None
    feats = np.concatenate(feats)
    poss = np.concatenate(poss)
    A_all = np.concatenate(A_all)
    B_all = np.concatenate(B_all)
    S_all = np.concatenate(S_all)

    near = np.flatnonzero(S_all >= best_score - 1e-9 * max(1.0, abs(best_score)))
    best_key = None
    best = None
    for i in near.tolist():
        p, f = int(poss[i]), int(feats[i])
        l, r = p + 1, m - p - 1
        exact = Fraction(int(A_all[i]) * r + int(B_all[i]) * l, l * r)
        key = (-exact, f, p)
        if best_key is None or key < best_key:
            best_key, best = key, (f, p)
    return best


def _midpoint(lo: float, hi: float) -> float:
    mid = (lo + hi) / 2.0
    # adjacent floats (or overflow) can round the midpoint onto the upper value
    if not (lo <= mid < hi):
        mid = lo
    return mid


def _grow_tree(X, codes, n_classes, max_depth, min_leaf) -> TreeModel:
    n, d = X.shape
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(node_codes):
        feature.append(-1)
        threshold.append(math.nan)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(node_codes, minlength=n_classes))
        return len(feature) - 1

    order = np.argsort(X, axis=0, kind="stable")
    root = new_node(codes)
    stack = [(root, order, 0)]
    while stack:
        node, sidx, depth = stack.pop()
        m = sidx.shape[0]
        if np.count_nonzero(counts[node]) <= 1:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        if m < 2 * min_leaf:
            continue
        Xs = X[sidx, np.arange(d)]
        split = _best_split(Xs, codes[sidx], n_classes, min_leaf)
        if split is None:
            continue
        f, p = split
        thr = _midpoint(float(Xs[p, f]), float(Xs[p + 1, f]))
        goes_left = np.zeros(n, dtype=bool)
        node_rows = sidx[:, f]
        goes_left[node_rows[: p + 1]] = True
        n_left = p + 1
        mask = goes_left[sidx]
        # boolean selection on the transpose keeps each feature's sorted order
        left_idx = sidx.T[mask.T].reshape(d, n_left).T
        right_idx = sidx.T[~mask.T].reshape(d, m - n_left).T
        feature[node] = f
        threshold[node] = thr
        li = new_node(codes[left_idx[:, 0]])
        ri = new_node(codes[right_idx[:, 0]])
        left[node], right[node] = li, ri
        # right pushed first so the left subtree is numbered first
        stack.append((ri, right_idx, depth + 1))
        stack.append((li, left_idx, depth + 1))
    return TreeModel(feature, threshold, left, right, np.array(counts), None, d)


def fit_arrays(X, y, spec: ClassifierSpec) -> Model:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ClassifierError("training set is empty")
    if X.shape[1] == 0:
        raise ClassifierError("training features have zero width")
    if y.shape != (X.shape[0],):
        raise ClassifierError("need exactly one label per training row")
    if not np.all(np.isfinite(X)):
        raise ClassifierError("training features must be finite")
    classes, codes = np.unique(y, return_inverse=True)
    codes = codes.astype(np.int64)
    n_classes = len(classes)
    kind = spec.kind

    if kind is ClassifierKind.KNN:
        return KNNModel(X.copy(), codes, classes, spec.knn_k)

    if kind is ClassifierKind.NCC:
        centroids = np.stack([X[codes == c].mean(axis=0) for c in range(n_classes)])
        return CentroidModel(centroids, classes)

    if kind is ClassifierKind.NB:
        epsilon = spec.nb_var_smoothing * float(np.var(X, axis=0).max())
        if epsilon == 0.0:
            epsilon = spec.nb_var_smoothing
        theta = np.empty((n_classes, X.shape[1]))
        var = np.empty((n_classes, X.shape[1]))
        class_count = np.bincount(codes, minlength=n_classes)
        for c in range(n_classes):
            Xc = X[codes == c]
            theta[c] = Xc.mean(axis=0)
            var[c] = Xc.var(axis=0) + epsilon
        log_prior = np.log(class_count / X.shape[0])
        return GaussianNBModel(log_prior, theta, var, classes)

    if kind is ClassifierKind.DT:
        tree = _grow_tree(X, codes, n_classes, spec.dt_max_depth, spec.dt_min_leaf)
        tree.classes_ = classes
        return tree

    raise ClassifierError(f"unsupported classifier kind {kind}")


def fit(train: FeatureMatrix, spec: ClassifierSpec) -> Model:
    return fit_arrays(train.X, train.labels, spec)


def predict(model: Model, rows) -> np.ndarray:
    return model.predict(rows)
