"""Least-squares family: OLS, ridge and lasso.

All three fit the intercept by centering and never penalize it.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..errors import NotConvergedWarning, RankDeficientWarning


def _center(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or len(X) != len(y):
        raise ValueError(f"need X (n, d) and y (n,), got {X.shape} and {y.shape}")
    if len(y) == 0:
        raise ValueError("cannot fit on zero rows")
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    return X - x_mean, y - y_mean, x_mean, y_mean


def solve_ols(X, y, *, rcond: float | None = None) -> tuple[np.ndarray, float]:
    """Least squares through a column-pivoted QR of the centered design.

    A rank-deficient design triggers RankDeficientWarning naming the
    dependent columns and returns the minimum-norm solution instead.
    """
    Xc, yc, x_mean, y_mean = _center(X, y)
    n, d = Xc.shape
    if d == 0:
        return np.zeros(0), y_mean
    Q, R, piv = scipy.linalg.qr(Xc, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = (rcond if rcond is not None else max(n, d) * np.finfo(float).eps) * (diag[0] if len(diag) else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < d:
        warnings.warn(RankDeficientWarning(sorted(int(c) for c in piv[rank:])), stacklevel=2)
        w = np.linalg.lstsq(Xc, yc, rcond=None)[0]
    else:
        z = scipy.linalg.solve_triangular(R, Q.T @ yc)
        w = np.empty(d)
        w[piv] = z
    return w, y_mean - float(x_mean @ w)


def solve_ridge(X, y, lam: float) -> tuple[np.ndarray, float]:
    """Minimize ||y - Xw - b||^2 + lam*||w||^2 via an SVD of the centered design."""
    if lam < 0:
        raise ValueError("ridge penalty must be >= 0")
    Xc, yc, x_mean, y_mean = _center(X, y)
    if Xc.shape[1] == 0:
        return np.zeros(0), y_mean
    U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    if lam == 0:
        # plain least squares, minimum norm on a null space
        cutoff = max(Xc.shape) * np.finfo(float).eps * (s[0] if len(s) else 0.0)
        shrink = np.divide(1.0, s, out=np.zeros_like(s), where=s > cutoff)
    else:
        shrink = s / (s * s + lam)
    w = Vt.T @ (shrink * (U.T @ yc))
    return w, y_mean - float(x_mean @ w)


def soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def lasso_objective(Xc, yc, w, lam) -> float:
    r = yc - Xc @ w
    return float(r @ r) / (2 * len(yc)) + lam * float(np.abs(w).sum())


@dataclass
class LassoPath:
    coefficients: np.ndarray
    intercept: float
    iterations: int
    converged: bool
    objective: list[float] = field(default_factory=list)  # one entry per sweep, plus the start


def lasso_coordinate_descent(X, y, lam: float, max_iter: int = 10_000, tol: float = 1e-6) -> LassoPath:
    """Cyclic coordinate descent on (1/2n)||y - Xw - b||^2 + lam*||w||_1.

    Columns are centered, not rescaled, so the penalty acts on the
    coefficients in the caller's units. Updates run on the Gram matrix,
    so a sweep costs O(d^2) however many rows there are.
    """
    if lam < 0:
        raise ValueError("lasso penalty must be >= 0")
    Xc, yc, x_mean, y_mean = _center(X, y)
    n, d = Xc.shape
    G = (Xc.T @ Xc) / n
    c = (Xc.T @ yc) / n
    yy = float(yc @ yc) / n
    w = np.zeros(d)
    Gw = np.zeros(d)

    def objective() -> float:
        return 0.5 * (yy - 2.0 * float(c @ w) + float(w @ Gw)) + lam * float(np.abs(w).sum())

    history = [objective()]
    converged = d == 0
    it = 0
    diag = np.diag(G).tolist()
    while not converged and it < max_iter:
        it += 1
        max_delta = 0.0
        for j in range(d):
            if diag[j] == 0.0:
                continue
            old = w[j]
            rho = c[j] - Gw[j] + diag[j] * old
            new = soft_threshold(rho, lam) / diag[j]
            if new != old:
                Gw += (new - old) * G[:, j]
                w[j] = new
                max_delta = max(max_delta, abs(new - old))
        history.append(objective())
        converged = max_delta < tol
    return LassoPath(w, y_mean - float(x_mean @ w), it, converged, history)


def solve_lasso(X, y, lam: float, max_iter: int = 10_000, tol: float = 1e-6) -> tuple[np.ndarray, float]:
    path = lasso_coordinate_descent(X, y, lam, max_iter, tol)
    if not path.converged:
        warnings.warn(NotConvergedWarning(f"lasso stopped after {path.iterations} sweeps"), stacklevel=2)
    return path.coefficients, path.intercept


def lasso_lambda_max(X, y) -> float:
    """Smallest penalty at which every coefficient is zero."""
    Xc, yc, _, _ = _center(X, y)
    if Xc.shape[1] == 0:
        return 0.0
    return float(np.max(np.abs(Xc.T @ yc))) / len(yc)
