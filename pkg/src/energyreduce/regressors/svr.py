"""Linear epsilon-insensitive support vector regression."""
from __future__ import annotations

import numpy as np

from ..seeding import derive_rng


def svr_objective(X, y, w, b, epsilon: float, C: float) -> float:
    r = np.abs(np.asarray(y) - np.asarray(X) @ w - b)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, r - epsilon).sum())


def fit_svr(X, y, epsilon: float = 0.1, C: float = 1.0, epochs: int = 20, step: float = 0.05,
            seed: int = 0, batch: int = 32) -> tuple[np.ndarray, float]:
    """Minimize 0.5*||w||^2 + C * sum(max(0, |y - Xw - b| - epsilon)).

    Mini-batch subgradient steps with a 1/sqrt(epoch) decay; the returned
    point is the running average of the iterates over the second half of
    the epochs. Targets are standardized internally, with epsilon and C
    rescaled so the optimum is unchanged.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if C < 0:
        raise ValueError("C must be >= 0")
    if n == 0:
        raise ValueError("cannot fit on zero rows")
    y_mean = float(y.mean())
    y_scale = float(y.std()) or 1.0
    if C == 0.0 or epochs == 0:
        return np.zeros(d), y_mean

    ys = (y - y_mean) / y_scale
    eps_s = epsilon / y_scale
    # objective in scaled units: 0.5||w||^2 + C/y_scale * sum(loss); divide by C n / y_scale
    reg = y_scale / (C * n)
    w = np.zeros(d)
    b = 0.0
    w_avg = np.zeros(d)
    b_avg = 0.0
    seen = 0
    rng = derive_rng(seed, 0)
    for epoch in range(epochs):
        eta = step / np.sqrt(epoch + 1.0)
        perm = rng.permutation(n)
        for lo in range(0, n, batch):
            idx = perm[lo : lo + batch]
            Xb = X[idx]
            r = ys[idx] - Xb @ w - b
            # subgradient of the tube loss: -sign(r) outside the tube
            s = np.where(r > eps_s, -1.0, np.where(r < -eps_s, 1.0, 0.0))
            g_w = reg * w + (s @ Xb) / len(idx)
            g_b = float(s.mean())
            w = w - eta * g_w
            b = b - eta * g_b
            if 2 * epoch < epochs - 1:
                continue
            seen += 1
            w_avg += (w - w_avg) / seen
            b_avg += (b - b_avg) / seen
    coef = w_avg * y_scale
    return coef, y_mean + b_avg * y_scale
