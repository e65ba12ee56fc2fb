"""Seeded random hyperparameter search with k-fold cross-validation."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ConfigError, DegenerateDataWarning, TooFewSamples
from .gbt import GbtEnsemble, GbtHyperparams, rmse

log = logging.getLogger(__name__)

# name -> (kind, low, high); kinds: int (inclusive), uniform, loguniform
DEFAULT_SPACE: dict[str, tuple[str, float, float]] = {
    "n_trees": ("int", 50, 500),
    "max_depth": ("int", 2, 6),
    "learning_rate": ("loguniform", 0.01, 0.3),
    "l2_leaf_penalty": ("uniform", 0.0, 10.0),
    "subsample_fraction": ("uniform", 0.6, 1.0),
    "min_samples_leaf": ("int", 1, 5),
}


@dataclass(frozen=True)
class SearchConfig:
    trials: int = 50
    folds: int = 5
    seed: int = 0

    def validate(self) -> "SearchConfig":
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        return self


def sample_params(space: Mapping[str, tuple[str, float, float]],
                  rng: np.random.Generator, seed: int) -> GbtHyperparams:
    values = {}
    for name, (kind, lo, hi) in space.items():
        if kind == "int":
            values[name] = int(rng.integers(int(lo), int(hi) + 1))
        elif kind == "uniform":
            values[name] = float(rng.uniform(lo, hi))
        elif kind == "loguniform":
            values[name] = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
        else:
            raise ConfigError(f"unknown distribution {kind!r} for {name}")
    return GbtHyperparams(seed=seed, **values)


def kfold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    if n < folds:
        raise TooFewSamples(f"{n} rows cannot be split into {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def cv_rmse(X: np.ndarray, y: np.ndarray, hp: GbtHyperparams,
            folds: list[np.ndarray]) -> float:
    """Mean of per-fold held-out RMSE."""
    scores = []
    for held in folds:
        train = np.setdiff1d(np.arange(len(y)), held, assume_unique=True)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateDataWarning)
            model = GbtEnsemble.fit(X[train], y[train], hp)
        scores.append(rmse(actual=y[held], predicted=model.predict_batch(X[held])))
    return float(np.mean(scores))


def random_search(X_train, y_train, space: Mapping | None = None, trials: int = 50,
                  folds: int = 5, seed: int = 0,
                  baseline: GbtHyperparams | None = None) -> tuple[GbtHyperparams, list[dict]]:
    """Uniformly sample ``trials`` configurations and keep the best CV-RMSE.

    Only the training rows are ever passed in. ``baseline``, if given, is
    scored as an extra first entry in the log. Failed trials are logged with
    ``status="failed"`` and skipped. Ties go to the earlier trial.
    """
    SearchConfig(trials, folds, seed).validate()
    X = np.asarray(X_train, dtype=np.float64)
    y = np.asarray(y_train, dtype=np.float64)
    space = DEFAULT_SPACE if space is None else space
    split = kfold_indices(len(y), folds, seed)
    rng = np.random.default_rng([seed, 2])

    candidates: list[tuple[str, GbtHyperparams]] = []
    if baseline is not None:
        candidates.append(("baseline", baseline))
    for t in range(trials):
        candidates.append(("random", sample_params(space, rng, seed=seed * 1000 + t)))

    trial_log: list[dict] = []
    best: tuple[float, GbtHyperparams] | None = None
    for i, (source, hp) in enumerate(candidates):
        entry = {"trial": i, "source": source, "params": hp.to_dict()}
        try:
            score = cv_rmse(X, y, hp.validate(), split)
            if not math.isfinite(score):
                raise FloatingPointError("non-finite CV-RMSE")
        except (ValueError, ArithmeticError) as exc:
            log.warning("trial %d failed: %s", i, exc)
            entry.update(status="failed", error=f"{type(exc).__name__}: {exc}", cv_rmse=None)
        else:
            entry.update(status="ok", cv_rmse=score)
            if best is None or score < best[0]:
                best = (score, hp)
        trial_log.append(entry)
    if best is None:
        raise ConfigError("every search trial failed")
    return best[1], trial_log
