"""CART regression trees and squared-loss gradient boosting.

A tree is stored as flat node arrays. Internal nodes send rows with
``x[feature] <= threshold`` left; leaves have ``left == -1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.value)

    @property
    def depth(self) -> int:
        def walk(i):
            return 0 if self.left[i] < 0 else 1 + max(walk(self.left[i]), walk(self.right[i]))
        return walk(0)

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.left[node] >= 0)
        while len(active):
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.left[node[active]] >= 0]
        return node

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.array(d["feature"], dtype=np.int64),
            np.array(d["threshold"], dtype=np.float64),
            np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["value"], dtype=np.float64),
            np.array(d["n_samples"], dtype=np.int64),
        )


def presort(X) -> np.ndarray:
    """Per-column stable argsort, shaped (n, d); reusable across fits on X."""
    return np.argsort(np.asarray(X, dtype=np.float64), axis=0, kind="stable")


def _best_split(Xs: np.ndarray, ys: np.ndarray, min_leaf: int):
    """Best (feature, position) for one node.

    ``Xs``/``ys`` hold, column by column, feature values and targets in
    ascending feature order, targets centered on the node mean. Returns
    None when no admissible split reduces the squared error.
    """
    n, d = Xs.shape
    if n < 2 * min_leaf:
        return None
    csum = np.cumsum(ys, axis=0)[:-1]  # left sums for cut after position i
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    # with centered targets the right sum is -left; gain = SL^2 (1/nL + 1/nR)
    gain = csum * csum * (1.0 / n_left + 1.0 / n_right)
    ok = Xs[:-1] < Xs[1:]
    ok[: min_leaf - 1] = False
    ok[n - min_leaf :] = False
    gain = np.where(ok, gain, -np.inf)
    # feature-major flattening so argmax prefers lower feature, then lower threshold
    flat = gain.T.ravel()
    best = int(np.argmax(flat))
    if not np.isfinite(flat[best]) or flat[best] <= 0.0:
        return None
    f, pos = divmod(best, n - 1)
    return f, pos, float(flat[best])


def fit_tree(X, y, max_depth: int | None = 12, min_samples_leaf: int = 1,
             order: np.ndarray | None = None) -> Tree:
    """Greedy CART on squared error. ``order`` may pass a precomputed
    :func:`presort` of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    if n == 0:
        raise ValueError("cannot fit a tree on zero rows")
    if min_samples_leaf < 1:
        raise ValueError("min_samples_leaf must be >= 1")
    if max_depth is not None and max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    cols = np.arange(d)
    feature, threshold, left, right, value, counts = [], [], [], [], [], []
    goes_left = np.zeros(n, dtype=bool)

    def new_node(rows_sorted) -> int:
        rows = rows_sorted[:, 0] if d else np.arange(n)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[rows].mean()))
        counts.append(len(rows))
        return len(value) - 1

    root_order = presort(X) if order is None else order
    stack = [(new_node(root_order), root_order, 0)]
    while stack:
        node, S, depth = stack.pop()
        if d == 0 or (max_depth is not None and depth >= max_depth):
            continue
        ys = y[S]
        if np.ptp(ys[:, 0]) == 0.0:
            continue
        split = _best_split(X[S, cols], ys - value[node], min_samples_leaf)
        if split is None:
            continue
        f, pos, _ = split
        lo = X[S[pos, f], f]
        hi = X[S[pos + 1, f], f]
        thr = 0.5 * (lo + hi)
        if not lo <= thr < hi:  # adjacent floats
            thr = lo
        rows = S[:, 0]
        goes_left[rows] = X[rows, f] <= thr
        M = goes_left[S]
        n_left = int(M[:, 0].sum())
        S_left = S.T[M.T].reshape(d, n_left).T
        S_right = S.T[~M.T].reshape(d, len(rows) - n_left).T
        feature[node] = f
        threshold[node] = thr
        l_id = new_node(S_left)
        r_id = new_node(S_right)
        left[node] = l_id
        right[node] = r_id
        # right pushed first so the left subtree is numbered first
        stack.append((r_id, S_right, depth + 1))
        stack.append((l_id, S_left, depth + 1))
    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
        np.array(counts, dtype=np.int64),
    )


@dataclass(frozen=True)
class BoostedEnsemble:
    init: float
    learning_rate: float
    trees: tuple[Tree, ...]

    def staged_predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        pred = np.full(len(X), self.init)
        yield pred.copy()
        for t in self.trees:
            pred = pred + self.learning_rate * t.predict(X)
            yield pred.copy()

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        pred = np.full(len(X), self.init)
        for t in self.trees:
            pred = pred + self.learning_rate * t.predict(X)
        return pred


def fit_gbt(X, y, n_trees: int = 100, learning_rate: float = 0.1, max_depth: int = 3,
            min_samples_leaf: int = 1) -> BoostedEnsemble:
    """Stagewise boosting of regression trees on squared-loss residuals."""
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    init = float(y.mean())
    pred = np.full(len(y), init)
    order = presort(X)
    trees = []
    for _ in range(n_trees):
        tree = fit_tree(X, y - pred, max_depth, min_samples_leaf, order=order)
        trees.append(tree)
        pred = pred + learning_rate * tree.predict(X)
    return BoostedEnsemble(init, float(learning_rate), tuple(trees))
