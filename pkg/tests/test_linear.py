import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from energyreduce.errors import RankDeficientWarning
from energyreduce.regressors.linear import (
    lasso_coordinate_descent,
    lasso_lambda_max,
    soft_threshold,
    solve_lasso,
    solve_ols,
    solve_ridge,
)


def normal_equations(X, y):
    """Solve [1 X]^T [1 X] beta = [1 X]^T y by Gaussian elimination."""
    A = [[1.0] + list(row) for row in X]
    p = len(A[0])
    M = [[sum(A[k][i] * A[k][j] for k in range(len(A))) for j in range(p)]
         + [sum(A[k][i] * y[k] for k in range(len(A)))] for i in range(p)]
    for c in range(p):
        piv = max(range(c, p), key=lambda r: abs(M[r][c]))
        M[c], M[piv] = M[piv], M[c]
        for r in range(p):
            if r != c:
                f = M[r][c] / M[c][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    beta = [M[i][p] / M[i][i] for i in range(p)]
    return np.array(beta[1:]), beta[0]


def regression_data(seed, n=60, d=5, noise=0.1):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = X @ rng.normal(size=d) + 3.0 + noise * rng.normal(size=n)
    return X, y


class TestOLS:
    def test_exact_line(self):
        w, b = solve_ols([[1.0], [2.0], [3.0]], [2.0, 4.0, 6.0])
        assert w[0] == pytest.approx(2.0, abs=1e-10)
        assert b == pytest.approx(0.0, abs=1e-10)

    def test_constant_target(self):
        X, _ = regression_data(0)
        w, b = solve_ols(X, np.full(len(X), 4.2))
        assert np.allclose(w, 0.0, atol=1e-12)
        assert b == pytest.approx(4.2, abs=1e-12)

    def test_normal_equation_oracle(self):
        X = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
        y = [1.0, 2.0, 3.1]
        w_ref, b_ref = normal_equations(X, y)
        w, b = solve_ols(X, y)
        assert w == pytest.approx(w_ref, abs=1e-8)
        assert b == pytest.approx(b_ref, abs=1e-8)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 8))
    def test_residual_orthogonality(self, seed, d):
        X, y = regression_data(seed, n=d + 20, d=d, noise=1.0)
        w, b = solve_ols(X, y)
        resid = y - X @ w - b
        bound = 1e-6 * np.linalg.norm(y)
        assert np.max(np.abs(X.T @ resid)) <= bound
        assert abs(resid.sum()) <= bound

    def test_rank_deficient_reports_columns(self):
        X, y = regression_data(1, d=3)
        X = np.column_stack([X, X[:, 0] + X[:, 1]])
        with pytest.warns(RankDeficientWarning) as rec:
            w, b = solve_ols(X, y)
        assert len(rec[0].message.columns) == 1
        ref = np.linalg.lstsq(X - X.mean(0), y - y.mean(), rcond=None)[0]
        assert w == pytest.approx(ref, abs=1e-8)


class TestRidge:
    def test_zero_penalty_is_ols(self):
        X, y = regression_data(2)
        w0, b0 = solve_ols(X, y)
        w, b = solve_ridge(X, y, 0.0)
        assert w == pytest.approx(w0, abs=1e-8) and b == pytest.approx(b0, abs=1e-8)

    def test_huge_penalty(self):
        X, y = regression_data(3)
        w, b = solve_ridge(X, y, 1e12)
        assert np.all(np.abs(w) < 1e-8)
        assert b == pytest.approx(y.mean(), abs=1e-6)

    def test_scalar_closed_form(self):
        x, y = [-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0]
        expected = sum(a * c for a, c in zip(x, y)) / (sum(a * a for a in x) + 1.0)
        w, b = solve_ridge([[v] for v in x], y, 1.0)
        assert w[0] == pytest.approx(expected, abs=1e-10) == pytest.approx(2 / 3)
        assert b == pytest.approx(0.0, abs=1e-12)

    def test_matches_regularized_normal_equations(self):
        X, y = regression_data(4)
        Xc, yc = X - X.mean(0), y - y.mean()
        ref = np.linalg.solve(Xc.T @ Xc + 2.5 * np.eye(X.shape[1]), Xc.T @ yc)
        w, _ = solve_ridge(X, y, 2.5)
        assert w == pytest.approx(ref, abs=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000))
    def test_monotone_shrinkage(self, seed):
        X, y = regression_data(seed, noise=2.0)
        norms = [np.linalg.norm(solve_ridge(X, y, lam)[0]) for lam in np.logspace(-4, 4, 10)]
        for a, b in zip(norms, norms[1:]):
            assert a >= b - 1e-9

    def test_negative_penalty(self):
        with pytest.raises(ValueError):
            solve_ridge([[1.0], [2.0]], [1.0, 2.0], -1.0)


class TestLasso:
    @pytest.mark.parametrize("z, t, out", [(3.0, 1.0, 2.0), (-3.0, 1.0, -2.0), (0.5, 1.0, 0.0)])
    def test_soft_threshold(self, z, t, out):
        assert soft_threshold(z, t) == out

    def test_scalar_example(self):
        x, y = [-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0]
        n = 3
        sxy = sum(a * c for a, c in zip(x, y)) / n
        sxx = sum(a * a for a in x) / n
        expected = soft_threshold(sxy, 0.5) / sxx
        w, b = solve_lasso([[v] for v in x], y, 0.5)
        assert w[0] == pytest.approx(expected, abs=1e-8) == pytest.approx(1.25)

    def test_lambda_max_kills_everything(self):
        X, y = regression_data(5)
        lam = lasso_lambda_max(X, y)
        w, b = solve_lasso(X, y, lam)
        assert np.all(w == 0.0)
        assert b == pytest.approx(y.mean())
        w_below, _ = solve_lasso(X, y, 0.99 * lam)
        assert np.count_nonzero(w_below) >= 1

    def test_zero_penalty_is_ols(self):
        X, y = regression_data(6)
        w0, b0 = solve_ols(X, y)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            w, b = solve_lasso(X, y, 0.0, max_iter=10_000, tol=1e-12)
        assert w == pytest.approx(w0, abs=1e-6) and b == pytest.approx(b0, abs=1e-6)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.floats(1e-4, 1.0))
    def test_objective_nonincreasing(self, seed, lam):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(40, 6))
        X[:, 1] = X[:, 0] + 0.05 * rng.normal(size=40)  # correlated pair slows descent
        y = X[:, 0] - 2 * X[:, 2] + rng.normal(size=40)
        path = lasso_coordinate_descent(X, y, lam, max_iter=500, tol=1e-10)
        obj = path.objective
        for before, after in zip(obj, obj[1:]):
            assert after <= before + 1e-12 * max(1.0, abs(before))

    def test_not_converged_flag(self):
        X, y = regression_data(7)
        path = lasso_coordinate_descent(X, y, 1e-3, max_iter=1, tol=1e-30)
        assert not path.converged and path.iterations == 1
