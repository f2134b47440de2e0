"""CART classifier (Gini impurity, binary axis-aligned splits)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class DegenerateData(UserWarning):
    """Identical feature rows carry different labels; the leaf takes the majority."""


LEAF = -1


@dataclass
class DecisionTreeModel:
    """Flat array representation of a fitted tree.

    Node ``i`` is a leaf when ``feature[i] == -1``; otherwise rows with
    ``x[feature[i]] <= threshold[i]`` go to ``left[i]``, the rest to
    ``right[i]``. ``histogram[i]`` counts training rows per entry of
    ``classes`` that reached node ``i``.
    """

    classes: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray
    histogram: np.ndarray
    max_depth: int | None = None
    min_samples_leaf: int = 1
    degenerate: bool = False

    kind = "tree"

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_features(self) -> int:
        used = self.feature[self.feature >= 0]
        return int(used.max()) + 1 if used.size else 0

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            if self.feature[node] == LEAF:
                best = max(best, d)
            else:
                stack.append((self.left[node], d + 1))
                stack.append((self.right[node], d + 1))
        return best

    def apply(self, X) -> np.ndarray:
        """Index of the leaf reached by each row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(len(X), dtype=int)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            n = node[rows]
            go_left = X[rows, self.feature[n]] <= self.threshold[n]
            node[rows] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] != LEAF
        return node

    def predict(self, X) -> np.ndarray:
        return self.label[self.apply(X)]

    def predict_one(self, x) -> int:
        return int(self.predict(np.asarray(x, dtype=float)[None, :])[0])


def _best_split(X, onehot, min_samples_leaf):
    """Lowest weighted Gini split over all features and midpoints.

    Ties go to the lowest feature index, then the lowest threshold. Scores
    are computed from integer class counts only, so the result does not
    depend on the row order.
    """
    n = len(X)
    best = None  # (score, feature, threshold, left_mask)
    positions = np.arange(1, n)  # left part = first i rows in sorted order
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        valid = xs[:-1] < xs[1:]
        valid &= (positions >= min_samples_leaf) & (n - positions >= min_samples_leaf)
        if not valid.any():
            continue
        left_counts = np.cumsum(onehot[order], axis=0)[:-1]
        right_counts = left_counts[-1] + onehot[order[-1]] - left_counts
        n_left = positions.astype(float)
        n_right = n - n_left
        # n_left * gini_left + n_right * gini_right
        score = (n_left - (left_counts**2).sum(axis=1) / n_left) + \
                (n_right - (right_counts**2).sum(axis=1) / n_right)
        score = np.where(valid, score, np.inf)
        i = int(np.argmin(score))
        if best is None or score[i] < best[0]:
            threshold = 0.5 * (xs[i] + xs[i + 1])
            # midpoint can round onto the upper value for adjacent floats
            if threshold >= xs[i + 1]:
                threshold = xs[i]
            best = (score[i], f, threshold)
    return best


def _majority(counts, classes):
    # argmax returns the first maximum, i.e. the lowest label on ties
    return classes[int(np.argmax(counts))]


def tree_fit(X, y, max_depth: int | None = None, min_samples_leaf: int = 2) -> DecisionTreeModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one row per label")
    if not np.isfinite(X).all():
        raise ValueError("features must be finite")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    if min_samples_leaf < 1:
        raise ValueError("min_samples_leaf must be >= 1")
    onehot = (y[:, None] == classes[None, :]).astype(float)

    feature, threshold, left, right, label, hist = [], [], [], [], [], []
    degenerate = False

    def new_node(counts):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        label.append(_majority(counts, classes))
        hist.append(counts.astype(int))
        return len(feature) - 1

    root_rows = np.arange(len(X))
    stack = [(new_node(onehot.sum(axis=0)), root_rows, 0)]
    while stack:
        node, rows, depth = stack.pop()
        counts = hist[node]
        if np.count_nonzero(counts) <= 1:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        if len(rows) < 2 * min_samples_leaf:
            continue
        Xn = X[rows]
        split = _best_split(Xn, onehot[rows], min_samples_leaf)
        if split is None:
            if (Xn == Xn[0]).all():
                degenerate = True
            continue
        _, f, t = split
        mask = Xn[:, f] <= t
        lrows, rrows = rows[mask], rows[~mask]
        feature[node] = f
        threshold[node] = float(t)
        left[node] = new_node(onehot[lrows].sum(axis=0))
        right[node] = new_node(onehot[rrows].sum(axis=0))
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))

    if degenerate:
        warnings.warn("identical feature rows with conflicting labels; leaves use the majority label",
                      DegenerateData, stacklevel=2)
    return DecisionTreeModel(
        classes=classes,
        feature=np.array(feature, dtype=int),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=int),
        right=np.array(right, dtype=int),
        label=np.array(label),
        histogram=np.array(hist, dtype=int),
        max_depth=max_depth,
        min_samples_leaf=min_samples_leaf,
        degenerate=degenerate,
    )


def tree_predict(model: DecisionTreeModel, x) -> int:
    return model.predict_one(x)
