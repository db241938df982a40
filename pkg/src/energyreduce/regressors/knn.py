from __future__ import annotations

import numpy as np

from ..errors import KTooLarge

_CHUNK = 256


def knn_neighbors(X_train, X_query, k: int) -> np.ndarray:
    """Indices of the k nearest training rows per query, nearest first.

    Candidates come from the expanded-square distance; the final order is
    decided on exactly recomputed distances, equal distances going to the
    lower row index. Every row whose approximate distance could tie the
    k-th candidate is rechecked, so a run of duplicates larger than the
    candidate pool still resolves by index.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    X_query = np.atleast_2d(np.asarray(X_query, dtype=np.float64))
    n = len(X_train)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise KTooLarge(f"k={k} exceeds {n} training rows")
    pool = min(n, 2 * k + 8)
    train_sq = np.einsum("ij,ij->i", X_train, X_train)
    train_max = float(train_sq.max())
    out = np.empty((len(X_query), k), dtype=np.int64)
    for lo in range(0, len(X_query), _CHUNK):
        Q = X_query[lo : lo + _CHUNK]
        approx = train_sq[None, :] - 2.0 * (Q @ X_train.T)
        if pool < n:
            cand = np.argpartition(approx, pool - 1, axis=1)[:, :pool]
        else:
            cand = np.broadcast_to(np.arange(n), approx.shape)
        diff = X_train[cand] - Q[:, None, :]
        exact = np.einsum("qpd,qpd->qp", diff, diff)
        q_sq = np.einsum("ij,ij->i", Q, Q)
        for row in range(len(Q)):
            order = np.lexsort((cand[row], exact[row]))[:k]
            picked = cand[row][order]
            if pool < n:
                # rounding bound of the expanded square, then widen to every possible tie
                margin = 64 * np.finfo(float).eps * (train_max + q_sq[row])
                kth = exact[row][order[-1]]
                wide = np.flatnonzero(approx[row] + q_sq[row] <= kth + 2 * margin)
                if len(wide) > k:
                    d = X_train[wide] - Q[row]
                    dist = np.einsum("ij,ij->i", d, d)
                    picked = wide[np.lexsort((wide, dist))[:k]]
            out[lo + row] = picked
    return out


def knn_predict(X_train, y_train, X_query, k: int) -> np.ndarray:
    """Unweighted mean target of the k nearest training rows (Euclidean)."""
    y_train = np.asarray(y_train, dtype=np.float64)
    X_query = np.asarray(X_query, dtype=np.float64)
    if X_query.ndim == 2 and len(X_query) == 0:
        return np.empty(0)
    idx = knn_neighbors(X_train, X_query, k)
    return y_train[idx].mean(axis=1)
