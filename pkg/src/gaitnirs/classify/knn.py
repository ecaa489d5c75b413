from __future__ import annotations

import numpy as np

CHUNK = 256


def knn_predict(X_train: np.ndarray, y_train: np.ndarray, X: np.ndarray, k: int) -> np.ndarray:
    """Majority label of the k nearest training rows (Euclidean).

    Equal distances go to the lower training index; an even vote goes to 0 (STW).
    """
    k = min(k, len(X_train))
    out = np.empty(len(X), dtype=np.int64)
    for start in range(0, len(X), CHUNK):
        q = X[start : start + CHUNK]
        diff = q[:, None, :] - X_train[None, :, :]
        d2 = np.einsum("qnd,qnd->qn", diff, diff)
        # stable sort keeps index order among equal distances
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        votes = y_train[nearest].sum(axis=1)
        out[start : start + CHUNK] = 2 * votes > k
    return out
