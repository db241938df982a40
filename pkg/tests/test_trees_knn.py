import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from energyreduce.errors import KTooLarge
from energyreduce.regressors.knn import knn_neighbors, knn_predict
from energyreduce.regressors.tree import Tree, fit_gbt, fit_tree

STEP_X = np.array([[0.0], [1.0], [2.0], [3.0]])
STEP_Y = np.array([0.0, 0.0, 10.0, 10.0])


def brute_force_neighbors(X, q, k):
    d = [(float(np.sum((row - q) ** 2)), i) for i, row in enumerate(X)]
    return [i for _, i in sorted(d)[:k]]


class TestKNN:
    def test_worked_example(self):
        X = [[0.0], [1.0], [2.0]]
        assert knn_predict(X, [0.0, 10.0, 20.0], [[0.9]], 2)[0] == 5.0

    def test_k_equals_n_is_global_mean(self):
        rng = np.random.default_rng(0)
        X, y = rng.normal(size=(30, 3)), rng.normal(size=30)
        assert knn_predict(X, y, rng.normal(size=(4, 3)), 30) == pytest.approx(np.full(4, y.mean()))

    def test_k1_reproduces_training_targets(self):
        rng = np.random.default_rng(1)
        X, y = rng.normal(size=(200, 5)), rng.normal(size=200)
        assert np.array_equal(knn_predict(X, y, X, 1), y)

    def test_too_large(self):
        with pytest.raises(KTooLarge):
            knn_predict([[0.0], [1.0]], [0.0, 1.0], [[0.5]], 3)

    def test_ties_go_to_lower_index(self):
        X = np.array([[1.0], [-1.0], [1.0], [-1.0]])
        assert knn_neighbors(X, [[0.0]], 3).tolist() == [[0, 1, 2]]

    def test_tie_run_longer_than_candidate_pool(self):
        X = np.zeros((200, 2))
        X[:100] = 1.0
        assert knn_neighbors(X, [[0.0, 0.0]], 4).tolist() == [[100, 101, 102, 103]]

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 6))
    def test_matches_exhaustive_sort(self, seed, k):
        rng = np.random.default_rng(seed)
        # small integer grid makes exact distance ties common
        X = rng.integers(-2, 3, size=(60, 2)).astype(float)
        Q = rng.integers(-2, 3, size=(5, 2)).astype(float)
        got = knn_neighbors(X, Q, k)
        for q, row in zip(Q, got):
            assert row.tolist() == brute_force_neighbors(X, q, k)


class TestTree:
    def test_step_split(self):
        tree = fit_tree(STEP_X, STEP_Y, max_depth=1)
        assert tree.feature[0] == 0 and tree.threshold[0] == 1.5
        assert sorted(tree.value[[tree.left[0], tree.right[0]]].tolist()) == [0.0, 10.0]

    def exhaustive_root_split(self, X, y):
        best = None
        for f in range(X.shape[1]):
            vals = np.unique(X[:, f])
            for lo, hi in zip(vals, vals[1:]):
                t = (lo + hi) / 2
                m = X[:, f] <= t
                sse = ((y[m] - y[m].mean()) ** 2).sum() + ((y[~m] - y[~m].mean()) ** 2).sum()
                if best is None or sse < best[0] - 1e-9:
                    best = (sse, f, t)
        return best

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_root_split_matches_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(25, 3))
        y = np.where(X[:, 1] > 0.2, 5.0, 0.0) + rng.normal(size=25)
        sse, f, t = self.exhaustive_root_split(X, y)
        tree = fit_tree(X, y, max_depth=1)
        assert tree.feature[0] == f
        assert tree.threshold[0] == pytest.approx(t, abs=1e-12)

    def test_depth_zero(self):
        tree = fit_tree(STEP_X, STEP_Y, max_depth=0)
        assert tree.node_count == 1 and tree.value[0] == 5.0

    def test_constant_target(self):
        tree = fit_tree(np.random.default_rng(0).normal(size=(20, 2)), np.full(20, 3.5))
        assert tree.node_count == 1 and tree.predict([[9.0, 9.0]])[0] == 3.5

    def test_min_samples_leaf(self):
        rng = np.random.default_rng(2)
        X, y = rng.normal(size=(100, 2)), rng.normal(size=100)
        tree = fit_tree(X, y, max_depth=None, min_samples_leaf=7)
        leaves = tree.left < 0
        assert tree.n_samples[leaves].min() >= 7

    def test_prediction_is_one_leaf_mean(self):
        rng = np.random.default_rng(3)
        X, y = rng.normal(size=(120, 3)), rng.normal(size=120)
        tree = fit_tree(X, y, max_depth=5, min_samples_leaf=3)
        train_leaf = tree.apply(X)
        queries = rng.normal(size=(10, 3))
        for leaf, pred in zip(tree.apply(queries), tree.predict(queries)):
            members = y[train_leaf == leaf]
            assert len(members) == tree.n_samples[leaf]
            assert pred == pytest.approx(members.mean(), abs=1e-12)

    def test_round_trip(self):
        tree = fit_tree(STEP_X, STEP_Y)
        back = Tree.from_dict(tree.to_dict())
        assert np.array_equal(back.predict(STEP_X), tree.predict(STEP_X))

    def test_repeatable(self):
        rng = np.random.default_rng(4)
        X, y = rng.integers(0, 4, size=(80, 4)).astype(float), rng.normal(size=80)
        assert fit_tree(X, y).to_dict() == fit_tree(X, y).to_dict()


class TestGBT:
    def test_two_stumps_fit_step_exactly(self):
        model = fit_gbt(STEP_X, STEP_Y, n_trees=2, learning_rate=1.0, max_depth=1)
        assert np.allclose(model.predict(STEP_X), STEP_Y, atol=1e-12)

    def test_zero_rate_is_constant(self):
        model = fit_gbt(STEP_X, STEP_Y, n_trees=5, learning_rate=0.0)
        assert np.all(model.predict(STEP_X) == 5.0)

    def test_one_tree_equals_single_tree_plus_offset(self):
        rng = np.random.default_rng(5)
        X, y = rng.normal(size=(60, 3)), rng.normal(size=60) + 4.0
        gbt = fit_gbt(X, y, n_trees=1, learning_rate=1.0, max_depth=20)
        single = fit_tree(X, y - y.mean(), max_depth=20)
        assert gbt.predict(X) == pytest.approx(y.mean() + single.predict(X), abs=1e-12)
        assert gbt.predict(X) == pytest.approx(fit_tree(X, y, max_depth=20).predict(X), abs=1e-12)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.05, 1.0))
    def test_training_mse_nonincreasing(self, seed, rate):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(80, 3))
        y = np.sin(2 * X[:, 0]) + X[:, 1] ** 2 + 0.1 * rng.normal(size=80)
        model = fit_gbt(X, y, n_trees=25, learning_rate=rate, max_depth=2)
        mse = [float(np.mean((y - p) ** 2)) for p in model.staged_predict(X)]
        for a, b in zip(mse, mse[1:]):
            assert b <= a + 1e-12
