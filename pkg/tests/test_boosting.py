import numpy as np
import pytest

from causalpairs.boosting import (
    BoostedModel,
    GbcConfig,
    best_split,
    fit_tree,
    gbc_fit,
    gbc_predict,
    gbc_predict_batch,
    load_gbc,
    save_gbc,
)
from causalpairs.errors import ConfigurationError, ShapeError, ValidationError


def exhaustive_best_split(X, y):
    """Brute-force oracle: try every (feature, midpoint) split, computing
    SSE reduction with explicit per-side mean subtraction."""
    n, n_feat = X.shape
    parent = float(((y - y.mean()) ** 2).sum())
    best = None
    for j in range(n_feat):
        for thr in sorted(set((a + b) / 2.0 for a, b in
                              zip(sorted(set(X[:, j]))[:-1], sorted(set(X[:, j]))[1:]))):
            left = y[X[:, j] <= thr]
            right = y[X[:, j] > thr]
            if len(left) == 0 or len(right) == 0:
                continue
            sse = (((left - left.mean()) ** 2).sum()
                   + ((right - right.mean()) ** 2).sum())
            reduction = parent - sse
            if best is None or reduction > best[2]:
                best = (j, thr, reduction)
    return best


class TestFitTree:
    def test_constant_targets_single_leaf(self):
        X = np.arange(10.0).reshape(-1, 1)
        tree = fit_tree(X, np.full(10, 2.5), depth_limit=5, min_split=2)
        assert tree.n_nodes == 1
        assert tree.predict(X) == pytest.approx(np.full(10, 2.5))

    def test_two_cluster_split(self):
        # {0->0, 1->0, 10->9, 11->9}: only the middle gap removes all variance
        X = np.array([[0.0], [1.0], [10.0], [11.0]])
        y = np.array([0.0, 0.0, 9.0, 9.0])
        tree = fit_tree(X, y, depth_limit=1, min_split=2)
        assert tree.feature[0] == 0
        assert 1.0 < tree.threshold[0] < 10.0
        leaves = sorted(tree.value[tree.feature < 0])
        assert leaves == pytest.approx([0.0, 9.0])

    def test_depth_limit(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(64, 2))
        y = rng.normal(size=64)
        tree = fit_tree(X, y, depth_limit=2, min_split=2)

        def depth(node, d=0):
            if tree.feature[node] < 0:
                return d
            return max(depth(tree.left[node], d + 1), depth(tree.right[node], d + 1))

        assert depth(0) <= 2

    def test_min_split_respected(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(40, 3))
        y = rng.normal(size=40)
        tree = fit_tree(X, y, depth_limit=12, min_split=10)
        counts = np.zeros(tree.n_nodes, dtype=int)
        leaf_of = tree.apply(X)
        for leaf in leaf_of:
            counts[leaf] += 1
        # every split node had >= 10 samples, so no leaf pair sums below 10
        internal = np.flatnonzero(tree.feature >= 0)
        for node in internal:
            sub = _samples_under(tree, node, X)
            assert sub >= 10

    def test_empty_input(self):
        with pytest.raises(ValidationError):
            fit_tree(np.empty((0, 2)), np.empty(0), 3, 2)


def _samples_under(tree, node, X):
    idx = tree.apply(X)
    reach = set()

    def collect(k):
        if tree.feature[k] < 0:
            reach.add(k)
        else:
            collect(tree.left[k])
            collect(tree.right[k])

    collect(node)
    return sum(1 for leaf in idx if leaf in reach)


class TestSplitOracle:
    def test_matches_exhaustive_search(self):
        rng = np.random.default_rng(7)
        for trial in range(100):
            n = int(rng.integers(5, 101))
            f = int(rng.integers(1, 6))
            X = rng.normal(size=(n, f))
            y = rng.normal(size=n)
            got = best_split(X, y)
            want = exhaustive_best_split(X, y)
            assert got is not None and want is not None
            assert got[0] == want[0], f"trial {trial}: feature mismatch"
            assert got[2] == pytest.approx(want[2], abs=1e-10)
            assert got[1] == pytest.approx(want[1], abs=1e-12)

    def test_no_split_on_constant_feature(self):
        X = np.ones((6, 1))
        y = np.arange(6.0)
        assert best_split(X, y) is None


def separable_toy(rng, n=60):
    """Two informative features, three linearly separable classes."""
    labels = np.array([1, 0, -1])[rng.integers(0, 3, size=n)]
    centers = {1: (2.0, 0.0), 0: (0.0, 2.0), -1: (-2.0, -2.0)}
    X = np.array([centers[l] for l in labels]) + rng.normal(scale=0.2, size=(n, 2))
    return X, [int(l) for l in labels]


class TestGbcFit:
    def test_zero_rounds_equal_priors(self):
        X = np.zeros((30, 2))
        labels = [1] * 10 + [0] * 10 + [-1] * 10
        model = gbc_fit(X, labels, GbcConfig(n_estimators=1, learning_rate=0.0))
        p = gbc_predict(model, np.zeros(2))
        assert p.as_array() == pytest.approx([1 / 3] * 3, abs=1e-9)

    def test_learning_rate_zero_predicts_priors(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(40, 3))
        labels = [1] * 20 + [0] * 10 + [-1] * 10
        model = gbc_fit(X, labels, GbcConfig(n_estimators=5, learning_rate=0.0))
        for row in rng.normal(size=(5, 3)):
            p = gbc_predict(model, row)
            assert p.as_array() == pytest.approx([0.5, 0.25, 0.25], abs=1e-9)

    def test_separable_reaches_perfect_accuracy(self):
        rng = np.random.default_rng(5)
        X, labels = separable_toy(rng)
        model = gbc_fit(X, labels, GbcConfig(n_estimators=50, max_depth=3,
                                             min_samples_split=2))
        preds = gbc_predict_batch(model, X)
        from causalpairs.ensemble import predict_class

        assert all(predict_class(p) == l for p, l in zip(preds, labels))

    def test_logloss_non_increasing(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(80, 4))
        margin = X[:, 0] + 0.5 * X[:, 1] + rng.normal(scale=0.3, size=80)
        labels = [1 if m > 0.5 else (-1 if m < -0.5 else 0) for m in margin]
        model = gbc_fit(X, labels, GbcConfig(n_estimators=60, max_depth=3,
                                             min_samples_split=4, learning_rate=0.05))
        ll = np.array(model.train_logloss)
        assert (np.diff(ll) <= 1e-12).all()
        assert ll[60] <= ll[30]

    def test_single_class_rejected(self):
        with pytest.raises(ValidationError):
            gbc_fit(np.zeros((5, 2)), [1] * 5)

    def test_deterministic(self):
        rng = np.random.default_rng(13)
        X, labels = separable_toy(rng, n=40)
        cfg = GbcConfig(n_estimators=10, max_depth=3, min_samples_split=2)
        m1 = gbc_fit(X, labels, cfg)
        m2 = gbc_fit(X, labels, cfg)
        assert m1.train_logloss == m2.train_logloss

    def test_config_defaults_match_contract(self):
        cfg = GbcConfig()
        assert cfg.n_estimators == 500
        assert cfg.max_depth == 9
        assert cfg.min_samples_split == 8
        assert cfg.feature_subsample is None

    def test_bad_config(self):
        with pytest.raises(ConfigurationError):
            GbcConfig(n_estimators=0)
        with pytest.raises(ConfigurationError):
            GbcConfig(feature_subsample=1.5)


class TestGbcPredict:
    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(15)
        X, labels = separable_toy(rng, n=30)
        model = gbc_fit(X, labels, GbcConfig(n_estimators=10, max_depth=2,
                                             min_samples_split=2))
        for row in rng.normal(size=(10, 2)):
            assert abs(sum(gbc_predict(model, row).as_array()) - 1.0) < 1e-9

    def test_purity(self):
        rng = np.random.default_rng(16)
        X, labels = separable_toy(rng, n=30)
        model = gbc_fit(X, labels, GbcConfig(n_estimators=5, max_depth=2,
                                             min_samples_split=2))
        row = rng.normal(size=2)
        assert gbc_predict(model, row) == gbc_predict(model, row)

    def test_feature_width_mismatch(self):
        rng = np.random.default_rng(17)
        X, labels = separable_toy(rng, n=30)
        model = gbc_fit(X, labels, GbcConfig(n_estimators=2, max_depth=2,
                                             min_samples_split=2))
        with pytest.raises(ShapeError):
            gbc_predict(model, np.zeros(5))


class TestSerialization:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(19)
        X, labels = separable_toy(rng, n=50)
        model = gbc_fit(X, labels, GbcConfig(n_estimators=8, max_depth=3,
                                             min_samples_split=2))
        path = tmp_path / "g.model"
        save_gbc(model, path)
        loaded = load_gbc(path)
        assert isinstance(loaded, BoostedModel)
        assert loaded.config == model.config
        assert loaded.n_features == 2
        a = loaded.decision_scores(X)
        b = model.decision_scores(X)
        assert a == pytest.approx(b, abs=0)

    def test_save_twice_identical(self, tmp_path):
        rng = np.random.default_rng(20)
        X, labels = separable_toy(rng, n=30)
        model = gbc_fit(X, labels, GbcConfig(n_estimators=3, max_depth=2,
                                             min_samples_split=2))
        p1, p2 = tmp_path / "a", tmp_path / "b"
        save_gbc(model, p1)
        save_gbc(model, p2)
        assert p1.read_bytes() == p2.read_bytes()
