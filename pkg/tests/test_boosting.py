from __future__ import annotations

import numpy as np
import pytest

from alphakit.boosting import BoostedTreeRegressor


def test_single_stump_closed_form():
    # perfectly separable by x > 0: leaf values are ridge-shrunk side means
    X = np.array([[-2.0], [-1.0], [-0.5], [0.5], [1.0], [2.0]])
    y = np.array([-1.0, -1.0, -1.0, 1.0, 1.0, 1.0])
    for lr, lam in [(1.0, 0.0), (0.3, 0.0), (1.0, 2.0)]:
        model = BoostedTreeRegressor(n_trees=1, max_depth=1, learning_rate=lr,
                                     min_leaf_count=1, l2_leaf_penalty=lam).fit(X, y)
        expect = lr * 3.0 / (3.0 + lam)
        assert model.predict(X) == pytest.approx(
            [-expect] * 3 + [expect] * 3, abs=1e-12)


def test_stump_signs_match_targets():
    X = np.array([[-2.0], [-1.0], [0.5], [1.5]])
    y = np.array([-1.0, -1.0, 1.0, 1.0])
    model = BoostedTreeRegressor(n_trees=1, max_depth=1, learning_rate=0.5,
                                 min_leaf_count=1, l2_leaf_penalty=0.0).fit(X, y)
    assert np.array_equal(np.sign(model.predict(X)), np.sign(y))


def test_constant_target_recovered_exactly_at_lr_one():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = np.full(40, 0.7)
    model = BoostedTreeRegressor(n_trees=1, max_depth=2, learning_rate=1.0,
                                 min_leaf_count=1, l2_leaf_penalty=0.0).fit(X, y)
    assert model.predict(X) == pytest.approx([0.7] * 40, abs=1e-12)


def test_constant_target_geometric_convergence():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 2))
    y = np.full(30, 2.0)
    model = BoostedTreeRegressor(n_trees=25, max_depth=2, learning_rate=0.4,
                                 min_leaf_count=1, l2_leaf_penalty=0.0).fit(X, y)
    assert model.predict(X) == pytest.approx([2.0] * 30, rel=1e-4)


def test_n_trees_zero_rejected():
    with pytest.raises(ValueError, match="n_trees"):
        BoostedTreeRegressor(n_trees=0, min_leaf_count=1).fit(
            np.zeros((5, 1)), np.zeros(5))


def test_training_mse_non_increasing():
    rng = np.random.default_rng(5)
    for seed in range(3):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(120, 4))
        y = X[:, 0] * 0.5 + np.sin(X[:, 1]) + rng.normal(scale=0.3, size=120)
        model = BoostedTreeRegressor(n_trees=40, max_depth=3, learning_rate=0.2,
                                     min_leaf_count=5, l2_leaf_penalty=1.0,
                                     seed=seed).fit(X, y)
        path = np.array(model.train_mse_path_)
        assert np.all(np.diff(path) <= 1e-12)


def test_deterministic_given_seed():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(200, 3))
    y = X[:, 0] + rng.normal(size=200)
    kwargs = dict(n_trees=20, max_depth=3, min_leaf_count=5,
                  subsample_fraction=0.7, seed=123)
    a = BoostedTreeRegressor(**kwargs).fit(X, y).predict(X)
    b = BoostedTreeRegressor(**kwargs).fit(X, y).predict(X)
    assert np.array_equal(a, b)


def test_missing_values_routed_to_best_branch():
    # x missing exactly where the target is high: the default branch must learn it
    X = np.array([[np.nan]] * 10 + [[1.0]] * 10)
    y = np.array([1.0] * 10 + [-1.0] * 10)
    X2 = np.vstack([X, [[2.0]] * 4])  # extra distinct value so a split exists
    y2 = np.r_[y, [-1.0] * 4]
    model = BoostedTreeRegressor(n_trees=5, max_depth=2, learning_rate=1.0,
                                 min_leaf_count=2, l2_leaf_penalty=0.0).fit(X2, y2)
    pred = model.predict(np.array([[np.nan], [1.0]]))
    assert pred[0] > 0.8 and pred[1] < -0.8


def test_all_missing_feature_ignored():
    rng = np.random.default_rng(2)
    X = np.column_stack([np.full(50, np.nan), rng.normal(size=50)])
    y = np.where(X[:, 1] > 0, 1.0, -1.0)
    model = BoostedTreeRegressor(n_trees=3, max_depth=1, learning_rate=1.0,
                                 min_leaf_count=1, l2_leaf_penalty=0.0).fit(X, y)
    assert all(tree.feature[0] != 0 for tree in model.trees_)


def test_empty_training_set_rejected():
    with pytest.raises(ValueError, match="empty"):
        BoostedTreeRegressor(min_leaf_count=1).fit(np.zeros((0, 2)), np.zeros(0))


def test_too_few_rows_rejected():
    with pytest.raises(ValueError, match="min_leaf_count"):
        BoostedTreeRegressor(min_leaf_count=10).fit(np.zeros((5, 1)), np.zeros(5))


def test_prediction_on_all_missing_row_uses_default_branches():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(60, 2))
    y = X[:, 0]
    model = BoostedTreeRegressor(n_trees=4, max_depth=2, min_leaf_count=5).fit(X, y)
    pred = model.predict(np.array([[np.nan, np.nan]]))
    assert np.isfinite(pred[0])


def test_empty_predict():
    model = BoostedTreeRegressor(n_trees=1, min_leaf_count=1).fit(
        np.array([[0.0], [1.0]]), np.array([0.0, 1.0]))
    assert model.predict(np.zeros((0, 1))).shape == (0,)


def test_text_dump_round_trip():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(80, 3))
    X[rng.random(X.shape) < 0.1] = np.nan
    y = np.nan_to_num(X[:, 0]) + rng.normal(size=80) * 0.1
    model = BoostedTreeRegressor(n_trees=6, max_depth=3, min_leaf_count=4).fit(X, y)
    text = model.dump_text()
    clone = BoostedTreeRegressor.from_text(text)
    probe = rng.normal(size=(30, 3))
    assert np.array_equal(model.predict(probe), clone.predict(probe))
    assert text.splitlines()[1].startswith("tree=0 node=0")


def test_sklearn_get_params_round_trip():
    model = BoostedTreeRegressor(n_trees=7, learning_rate=0.25)
    params = model.get_params()
    assert params["n_trees"] == 7
    clone = BoostedTreeRegressor(**params)
    assert clone.get_params() == params
