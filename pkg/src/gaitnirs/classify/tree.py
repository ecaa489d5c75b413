"""CART with Gini impurity, and a bagged forest of them.

Trees are stored as flat arrays: ``feature[i] < 0`` marks a leaf whose class
is ``value[i]``; otherwise rows with ``x[feature] <= threshold`` go to
``left[i]`` and the rest to ``right[i]``.
"""

from __future__ import annotations

import numpy as np


def gini_split(x: np.ndarray, y: np.ndarray):
    """Best threshold on one feature: (weighted child impurity, threshold) or None.

    Candidate thresholds are midpoints between consecutive distinct values;
    the lowest threshold wins ties.
    """
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    cut = np.flatnonzero(xs[1:] != xs[:-1]) + 1  # left size at each candidate
    if len(cut) == 0:
        return None
    ones_left = np.cumsum(ys)[cut - 1].astype(float)
    n_left = cut.astype(float)
    n_right = n - n_left
    ones_right = ys.sum() - ones_left
    g_left = 1.0 - (ones_left / n_left) ** 2 - (1.0 - ones_left / n_left) ** 2
    g_right = 1.0 - (ones_right / n_right) ** 2 - (1.0 - ones_right / n_right) ** 2
    score = (n_left * g_left + n_right * g_right) / n
    j = int(np.argmin(score))  # first minimum = lowest threshold
    return float(score[j]), 0.5 * (xs[cut[j] - 1] + xs[cut[j]])


def _majority(y: np.ndarray) -> int:
    return int(2 * y.sum() > len(y))  # tie -> 0 (STW)


def build_tree(X: np.ndarray, y: np.ndarray, min_samples_split: int = 2, max_features: int | None = None, rng=None):
    """Grow an unpruned tree; returns dict of flat node arrays."""
    n_features = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        for arr, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (value, 0)):
            arr.append(v)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(len(y)))]
    while stack:
        node, idx = stack.pop()
        yy = y[idx]
        value[node] = _majority(yy)
        if len(idx) < min_samples_split or yy.min() == yy.max():
            continue
        if max_features is None or max_features >= n_features:
            candidates = range(n_features)
        else:
            candidates = np.sort(rng.choice(n_features, max_features, replace=False))
        best = None
        for f in candidates:
            res = gini_split(X[idx, f], yy)
            # strict '<' keeps the lowest feature index on equal impurity
            if res is not None and (best is None or res[0] < best[0]):
                best = (res[0], int(f), res[1])
        if best is None:
            continue
        _, f, thr = best
        go_left = X[idx, f] <= thr
        feature[node], threshold[node] = f, thr
        left[node], right[node] = new_node(), new_node()
        stack.append((right[node], idx[~go_left]))
        stack.append((left[node], idx[go_left]))
    return {
        "feature": np.array(feature, dtype=np.int64),
        "threshold": np.array(threshold, dtype=float),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "value": np.array(value, dtype=np.int64),
    }


def tree_predict(tree: dict, X: np.ndarray) -> np.ndarray:
    node = np.zeros(len(X), dtype=np.int64)
    rows = np.arange(len(X))
    feature, threshold = tree["feature"], tree["threshold"]
    active = feature[node] >= 0
    while active.any():
        r, nd = rows[active], node[active]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, tree["left"][nd], tree["right"][nd])
        active = feature[node] >= 0
    return tree["value"][node]


def build_forest(
    X, y, n_trees: int, seed: int, bootstrap: bool = True, feature_subsample: bool = True, min_samples_split: int = 2
) -> list[dict]:
    n, d = X.shape
    m = max(1, int(np.sqrt(d))) if feature_subsample else None
    trees = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        idx = rng.integers(0, n, n) if bootstrap else np.arange(n)
        trees.append(build_tree(X[idx], y[idx], min_samples_split, m, rng))
    return trees


def forest_predict(trees: list[dict], X: np.ndarray) -> np.ndarray:
    votes = np.sum([tree_predict(t, X) for t in trees], axis=0)
    return (2 * votes > len(trees)).astype(np.int64)  # tie -> 0 (STW)
