import numpy as np
import pytest

from electrolyte_sa.errors import ConfigError, TooFewSamples
from electrolyte_sa.gbt import GbtHyperparams
from electrolyte_sa.search import (DEFAULT_SPACE, cv_rmse, kfold_indices, random_search,
                                   sample_params)

SMALL = {"n_trees": ("int", 5, 20), "max_depth": ("int", 1, 3),
         "learning_rate": ("loguniform", 0.05, 0.3)}


def problem(seed=0, n=40):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    return X, X[:, 0] - X[:, 1] ** 2 + 0.1 * rng.normal(size=n)


class TestKFold:
    def test_partition(self):
        folds = kfold_indices(23, 5, seed=1)
        assert sorted(np.concatenate(folds).tolist()) == list(range(23))
        assert sorted(len(f) for f in folds) == [4, 4, 5, 5, 5]
        assert all(np.all(np.diff(f) > 0) for f in folds)

    def test_seeded(self):
        a, b = kfold_indices(30, 5, 2), kfold_indices(30, 5, 2)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            kfold_indices(3, 5, 0)


class TestSampling:
    def test_within_default_space(self):
        rng = np.random.default_rng(0)
        for t in range(200):
            hp = sample_params(DEFAULT_SPACE, rng, seed=t)
            hp.validate()
            assert 50 <= hp.n_trees <= 500 and 2 <= hp.max_depth <= 6
            assert 0.01 <= hp.learning_rate <= 0.3 and 0.0 <= hp.l2_leaf_penalty <= 10.0
            assert 0.6 <= hp.subsample_fraction <= 1.0 and 1 <= hp.min_samples_leaf <= 5

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            sample_params({"n_trees": ("normal", 1, 2)}, np.random.default_rng(0), 0)


class TestSearch:
    def test_single_trial(self):
        X, y = problem()
        best, log = random_search(X, y, SMALL, trials=1, folds=3, seed=0)
        assert len(log) == 1 and log[0]["status"] == "ok"
        assert best.to_dict() == log[0]["params"]

    def test_deterministic(self):
        X, y = problem()
        a = random_search(X, y, SMALL, trials=4, folds=3, seed=5)
        b = random_search(X, y, SMALL, trials=4, folds=3, seed=5)
        assert a == b

    def test_best_is_argmin(self):
        X, y = problem(1)
        best, log = random_search(X, y, SMALL, trials=6, folds=4, seed=1)
        ok = [e for e in log if e["status"] == "ok"]
        assert best.to_dict() == min(ok, key=lambda e: e["cv_rmse"])["params"]
        folds = kfold_indices(len(y), 4, 1)
        assert cv_rmse(X, y, best, folds) == min(e["cv_rmse"] for e in ok)

    def test_baseline_is_scored_first(self):
        X, y = problem(2)
        base = GbtHyperparams(n_trees=10, max_depth=2)
        _, log = random_search(X, y, SMALL, trials=2, folds=3, seed=0, baseline=base)
        assert log[0]["source"] == "baseline" and log[0]["params"] == base.to_dict()
        assert [e["source"] for e in log[1:]] == ["random", "random"]

    def test_failed_trial_is_logged(self):
        X, y = problem(3)
        space = {**SMALL, "subsample_fraction": ("uniform", 1.5, 2.0)}
        base = GbtHyperparams(n_trees=5)
        best, log = random_search(X, y, space, trials=2, folds=3, seed=0, baseline=base)
        assert best == base
        assert [e["status"] for e in log] == ["ok", "failed", "failed"]
        assert "subsample_fraction" in log[1]["error"] and log[1]["cv_rmse"] is None

    def test_all_failed(self):
        X, y = problem(3)
        with pytest.raises(ConfigError):
            random_search(X, y, {"max_depth": ("int", 0, 0)}, trials=2, folds=3)

    @pytest.mark.parametrize("bad", [dict(trials=0), dict(folds=1)])
    def test_bad_settings(self, bad):
        X, y = problem()
        with pytest.raises(ConfigError):
            random_search(X, y, SMALL, **bad)

    def test_constant_fold_target_still_scores(self):
        X = np.arange(20.0)[:, None]
        y = np.r_[np.zeros(10), np.ones(10)]
        best, log = random_search(X, y, SMALL, trials=2, folds=2, seed=0)
        assert all(e["status"] == "ok" for e in log)
