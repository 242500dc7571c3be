"""Gradient-boosted regression trees on squared error, written from scratch.

Correctness-first: exhaustive split search over axis-aligned thresholds at
midpoints of sorted distinct values. Missing feature values are routed down
a per-split default branch chosen to minimize training loss. Leaf values
are ridge-shrunk means, sum(residuals) / (count + l2_leaf_penalty), scaled
by the learning rate. The ensemble starts from a base score of zero, so a
constant target c is fit exactly by the first tree at learning_rate=1.

The estimator follows the scikit-learn protocol (fit/predict/get_params)
so it drops into the wider ecosystem; training is deterministic for a
fixed seed regardless of thread count.
"""
from __future__ import annotations

import io

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

_EPS_GAIN = 1e-12


class _Tree:
    """Flat-array binary tree; node 0 is the root."""

    __slots__ = ("feature", "threshold", "missing_left", "left", "right", "value")

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.missing_left: list[bool] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def add_leaf(self, value: float) -> int:
        return self._add(-1, np.nan, True, -1, -1, value)

    def add_split(self, feature: int, threshold: float, missing_left: bool) -> int:
        return self._add(feature, threshold, missing_left, -1, -1, np.nan)

    def _add(self, feature, threshold, missing_left, left, right, value) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.missing_left.append(missing_left)
        self.left.append(left)
        self.right.append(right)
        self.value.append(value)
        return len(self.feature) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(len(X))
        stack = [(0, np.arange(len(X)))]
        while stack:
            node, rows = stack.pop()
            if len(rows) == 0:
                continue
            if self.feature[node] < 0:
                out[rows] = self.value[node]
                continue
            x = X[rows, self.feature[node]]
            missing = np.isnan(x)
            with np.errstate(invalid="ignore"):
                go_left = (x < self.threshold[node]) | (missing & self.missing_left[node])
            stack.append((self.left[node], rows[go_left]))
            stack.append((self.right[node], rows[~go_left]))
        return out


def _best_split(X, residuals, rows, l2, min_leaf):
    """Exhaustive search; returns (gain, feature, threshold, missing_left) or None."""
    r = residuals[rows]
    parent_sum = r.sum()
    parent_cnt = len(rows)
    parent_score = parent_sum * parent_sum / (parent_cnt + l2)
    best = None
    best_gain = _EPS_GAIN
    for j in range(X.shape[1]):
        x = X[rows, j]
        finite = np.isfinite(x)
        n_f = int(finite.sum())
        if n_f < 2:
            continue  # all-missing or single-valued features cannot split
        xf = x[finite]
        rf = r[finite]
        m_sum = parent_sum - rf.sum()
        m_cnt = parent_cnt - n_f
        order = np.argsort(xf, kind="stable")
        xs = xf[order]
        csum = np.cumsum(rf[order])
        cut = np.flatnonzero(xs[1:] != xs[:-1]) + 1  # left side takes xs[:cut]
        if len(cut) == 0:
            continue
        left_sum = csum[cut - 1]
        left_cnt = cut.astype(np.float64)
        right_sum = csum[-1] - left_sum
        right_cnt = n_f - left_cnt
        thresholds = (xs[cut - 1] + xs[cut]) / 2.0
        for miss_left in (True, False):
            ls = left_sum + (m_sum if miss_left else 0.0)
            lc = left_cnt + (m_cnt if miss_left else 0)
            rs = right_sum + (0.0 if miss_left else m_sum)
            rc = right_cnt + (0 if miss_left else m_cnt)
            valid = (lc >= min_leaf) & (rc >= min_leaf)
            if not valid.any():
                continue
            gain = ls * ls / (lc + l2) + rs * rs / (rc + l2) - parent_score
            gain[~valid] = -np.inf
            k = int(np.argmax(gain))
            if gain[k] > best_gain:
                best_gain = float(gain[k])
                best = (j, float(thresholds[k]), miss_left)
            if m_cnt == 0:
                break  # no missing rows: both routings are identical
    if best is None:
        return None
    return (best_gain, *best)


def _grow(tree, X, residuals, rows, depth, max_depth, lr, l2, min_leaf) -> int:
    r = residuals[rows]
    if depth >= max_depth:
        return tree.add_leaf(lr * r.sum() / (len(rows) + l2))
    found = _best_split(X, residuals, rows, l2, min_leaf)
    if found is None:
        return tree.add_leaf(lr * r.sum() / (len(rows) + l2))
    _, feature, threshold, missing_left = found
    node = tree.add_split(feature, threshold, missing_left)
    x = X[rows, feature]
    missing = np.isnan(x)
    with np.errstate(invalid="ignore"):
        go_left = (x < threshold) | (missing & missing_left)
    tree.left[node] = _grow(tree, X, residuals, rows[go_left], depth + 1,
                            max_depth, lr, l2, min_leaf)
    tree.right[node] = _grow(tree, X, residuals, rows[~go_left], depth + 1,
                             max_depth, lr, l2, min_leaf)
    return node


class BoostedTreeRegressor(BaseEstimator, RegressorMixin):
    """Additive ensemble of depth-limited regression trees.

    Parameters mirror the usual gradient-boosting knobs; `l2_leaf_penalty`
    is the ridge term in the leaf-value denominator, `subsample_fraction`
    draws a fresh row subsample per tree from the seeded generator.
    """

    def __init__(self, n_trees=50, max_depth=3, learning_rate=0.1, min_leaf_count=20,
                 l2_leaf_penalty=1.0, subsample_fraction=1.0, seed=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.min_leaf_count = min_leaf_count
        self.l2_leaf_penalty = l2_leaf_penalty
        self.subsample_fraction = subsample_fraction
        self.seed = seed

    def _check_params(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.l2_leaf_penalty < 0:
            raise ValueError("l2_leaf_penalty must be >= 0")
        if self.min_leaf_count < 1:
            raise ValueError("min_leaf_count must be >= 1")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise ValueError("subsample_fraction must be in (0, 1]")

    def fit(self, X, y):
        self._check_params()
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be 2-dimensional")
        if y.shape != (len(X),):
            raise ValueError("y must be 1-dimensional and aligned with X")
        if len(X) == 0:
            raise ValueError("empty training set")
        if not np.isfinite(y).all():
            raise ValueError("y must be finite (drop missing targets upstream)")
        if len(X) < self.min_leaf_count:
            raise ValueError(
                f"need at least min_leaf_count={self.min_leaf_count} rows, got {len(X)}")
        rng = np.random.default_rng(self.seed)
        n = len(X)
        self.n_features_in_ = X.shape[1]
        self.trees_ = []
        self.train_mse_path_ = []
        predictions = np.zeros(n)
        for _ in range(self.n_trees):
            residuals = y - predictions
            if self.subsample_fraction < 1.0:
                size = max(self.min_leaf_count, int(round(self.subsample_fraction * n)))
                rows = np.sort(rng.choice(n, size=min(size, n), replace=False))
            else:
                rows = np.arange(n)
            tree = _Tree()
            _grow(tree, X, residuals, rows, 0, self.max_depth, self.learning_rate,
                  self.l2_leaf_penalty, self.min_leaf_count)
            self.trees_.append(tree)
            predictions += tree.predict(X)
            self.train_mse_path_.append(float(np.mean((y - predictions) ** 2)))
        return self

    def predict(self, X):
        if not hasattr(self, "trees_"):
            raise ValueError("model is not fitted")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(f"X must have shape (n, {self.n_features_in_})")
        out = np.zeros(len(X))
        for tree in self.trees_:
            out += tree.predict(X)
        return out

    # -- plain-text audit dump ----------------------------------------------

    def dump_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"model=boosted_trees n_trees={len(self.trees_)} "
                  f"n_features={self.n_features_in_}\n")
        for t, tree in enumerate(self.trees_):
            for node in range(len(tree.feature)):
                if tree.feature[node] < 0:
                    buf.write(f"tree={t} node={node} kind=leaf "
                              f"value={float(tree.value[node])!r}\n")
                else:
                    side = "left" if tree.missing_left[node] else "right"
                    buf.write(
                        f"tree={t} node={node} kind=split feature={tree.feature[node]} "
                        f"threshold={float(tree.threshold[node])!r} missing={side} "
                        f"left={tree.left[node]} right={tree.right[node]}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "BoostedTreeRegressor":
        lines = text.strip().splitlines()
        header = dict(kv.split("=") for kv in lines[0].split())
        model = cls(n_trees=int(header["n_trees"]))
        model.n_features_in_ = int(header["n_features"])
        trees: list[_Tree] = [_Tree() for _ in range(int(header["n_trees"]))]
        for line in lines[1:]:
            fields = dict(kv.split("=") for kv in line.split())
            tree = trees[int(fields["tree"])]
            if fields["kind"] == "leaf":
                tree._add(-1, np.nan, True, -1, -1, float(fields["value"]))
            else:
                tree._add(int(fields["feature"]), float(fields["threshold"]),
                          fields["missing"] == "left", int(fields["left"]),
                          int(fields["right"]), np.nan)
        model.trees_ = trees
        return model
