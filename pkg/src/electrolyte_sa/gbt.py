"""Gradient-boosted regression trees on squared error.

First-order boosting: each tree is grown greedily on the current residuals
with exact splits at midpoints between consecutive distinct feature values,
scored by

    gain = GL^2/(nL+lam) + GR^2/(nR+lam) - G^2/(n+lam)

where G is a residual sum and n a row count. Leaves take G/(n+lam). Rows go
left when ``x[feature] < threshold``. Among splits whose gain is within
rounding of the best, the lowest feature index wins, then the lowest
threshold.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (ConfigError, DegenerateDataWarning, DimensionMismatch, EmptyInput,
                     ValidationError)

FORMAT = "gbt-ensemble/1"
# splits must beat this fraction of the node's residual sum of squares
MIN_REL_GAIN = 1e-12
# gains this close (relative) to the best count as ties
TIE_REL_TOL = 1e-10


@dataclass(frozen=True)
class GbtHyperparams:
    n_trees: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_samples_leaf: int = 1
    l2_leaf_penalty: float = 1.0
    subsample_fraction: float = 1.0
    seed: int = 0

    def validate(self) -> "GbtHyperparams":
        for name in ("n_trees", "max_depth", "min_samples_leaf"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if not self.l2_leaf_penalty >= 0.0:
            raise ConfigError(f"l2_leaf_penalty must be >= 0, got {self.l2_leaf_penalty}")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise ConfigError(
                f"subsample_fraction must be in (0, 1], got {self.subsample_fraction}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GbtHyperparams":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class Tree:
    """Flat node arrays; leaves have feature -1 and left/right -1."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def add_leaf(self, value: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        return len(self.feature) - 1

    def __len__(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        def walk(i):
            return 0 if self.feature[i] < 0 else 1 + max(walk(self.left[i]), walk(self.right[i]))
        return walk(0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold, dtype=np.float64)
        left, right = np.asarray(self.left), np.asarray(self.right)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            f = feature[node]
            inner = f >= 0
            if not inner.any():
                break
            r, n, fi = rows[inner], node[inner], f[inner]
            go_left = X[r, fi] < threshold[n]
            node[inner] = np.where(go_left, left[n], right[n])
        return np.asarray(self.value, dtype=np.float64)[node]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float


def best_split(X: np.ndarray, resid: np.ndarray, lam: float,
               min_samples_leaf: int) -> Split | None:
    """Best exact split of the rows of ``X`` (already restricted to one node)."""
    order = np.argsort(X, axis=0, kind="stable")
    return _best_sorted(np.take_along_axis(X, order, axis=0), resid[order], lam,
                        min_samples_leaf)


def _best_sorted(xs: np.ndarray, rs: np.ndarray, lam: float,
                 min_samples_leaf: int) -> Split | None:
    """``xs``/``rs``: each column sorted by that feature's value."""
    n, d = xs.shape
    if n < 2 * min_samples_leaf or n < 2:
        return None
    gl = np.cumsum(rs, axis=0)[:-1]                 # left sums for a cut after row k
    total = rs[:, 0].sum()
    nl = np.arange(1, n, dtype=np.float64)[:, None]
    nr = n - nl
    gain = gl * gl / (nl + lam) + (total - gl) ** 2 / (nr + lam) - total * total / (n + lam)
    valid = (xs[:-1] < xs[1:]) & (nl >= min_samples_leaf) & (nr >= min_samples_leaf)
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    best = gain.max()
    floor = MIN_REL_GAIN * float(rs[:, 0] @ rs[:, 0])
    if not best > floor:
        return None
    tol = TIE_REL_TOL * (abs(best) + total * total / (n + lam))
    tied = (gain >= best - tol).T                   # (d, n-1): feature-major
    j, k = divmod(int(np.argmax(tied.reshape(-1))), n - 1)
    return Split(j, split_threshold(xs[k, j], xs[k + 1, j]), float(gain[k, j]))


def split_threshold(lo: float, hi: float) -> float:
    """Midpoint of lo < hi, nudged to hi if rounding collapses it onto lo."""
    mid = lo + (hi - lo) / 2.0
    if not lo < mid <= hi:
        mid = hi
    return float(mid)


def _grow(X, presorted, resid, rows, depth, hp: GbtHyperparams, tree: Tree) -> int:
    """``presorted`` is the (N, d) argsort of all of X; filtering it to
    ``rows`` keeps each column sorted without sorting again."""
    lam = hp.l2_leaf_penalty
    split = None
    if depth < hp.max_depth and len(rows) >= max(2, 2 * hp.min_samples_leaf):
        member = np.zeros(len(X), dtype=bool)
        member[rows] = True
        cols = presorted.T[member[presorted.T]].reshape(X.shape[1], len(rows)).T
        xs = np.take_along_axis(X, cols, axis=0)
        split = _best_sorted(xs, resid[cols], lam, hp.min_samples_leaf)
    if split is None:
        r = resid[rows]
        return tree.add_leaf(r.sum() / (len(r) + lam) if len(r) + lam > 0 else 0.0)
    node = tree.add_leaf(0.0)
    tree.feature[node] = split.feature
    tree.threshold[node] = split.threshold
    go_left = X[rows, split.feature] < split.threshold
    tree.left[node] = _grow(X, presorted, resid, rows[go_left], depth + 1, hp, tree)
    tree.right[node] = _grow(X, presorted, resid, rows[~go_left], depth + 1, hp, tree)
    return node


def _check_matrix(X, y=None) -> tuple[np.ndarray, np.ndarray | None]:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D feature matrix, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValidationError("feature matrix contains NaN or infinite values")
    if y is not None:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (X.shape[0],):
            raise DimensionMismatch(f"{X.shape[0]} feature rows but target shape {y.shape}")
        if not np.isfinite(y).all():
            raise ValidationError("targets contain NaN or infinite values")
    return X, y


class GbtEnsemble:
    def __init__(self, base_prediction: float, learning_rate: float, n_features: int,
                 trees: Sequence[Tree] = (), hyperparams: GbtHyperparams | None = None):
        self.base_prediction = float(base_prediction)
        self.learning_rate = float(learning_rate)
        self.n_features = int(n_features)
        self.trees = list(trees)
        self.hyperparams = hyperparams
        self.train_rmse: list[float] = []

    @classmethod
    def fit(cls, X, y, hp: GbtHyperparams | None = None) -> "GbtEnsemble":
        hp = (hp or GbtHyperparams()).validate()
        X, y = _check_matrix(X, y)
        n, d = X.shape
        if n == 0:
            raise EmptyInput("cannot fit on zero rows")
        if n < 2 or np.ptp(y) == 0.0:
            warnings.warn(f"degenerate training data (N={n}, target range {np.ptp(y):g}); "
                          "fitting a constant model", DegenerateDataWarning, stacklevel=2)
            return cls(y[0], hp.learning_rate, d, (), hp)
        model = cls(float(np.mean(y)), hp.learning_rate, d, (), hp)
        rng = np.random.default_rng(hp.seed)
        eta = hp.learning_rate
        pred = np.full(n, model.base_prediction)
        all_rows = np.arange(n)
        n_sub = max(2, int(round(hp.subsample_fraction * n)))
        presorted = np.argsort(X, axis=0, kind="stable")
        for _ in range(hp.n_trees):
            resid = y - pred
            rows = all_rows
            if n_sub < n:
                rows = np.sort(rng.choice(n, size=n_sub, replace=False))
            tree = Tree()
            _grow(X, presorted, resid, rows, 0, hp, tree)
            model.trees.append(tree)
            pred = pred + eta * tree.predict(X)
            model.train_rmse.append(float(np.sqrt(np.mean((y - pred) ** 2))))
        return model

    def predict_batch(self, X) -> np.ndarray:
        X, _ = _check_matrix(X)
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        pred = np.full(len(X), self.base_prediction)
        for tree in self.trees:
            pred = pred + self.learning_rate * tree.predict(X)
        return pred

    def predict(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise DimensionMismatch(f"expected a 1-D feature vector, got shape {x.shape}")
        return float(self.predict_batch(x[None, :])[0])

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "base_prediction": self.base_prediction,
            "learning_rate": self.learning_rate,
            "n_features": self.n_features,
            "hyperparams": None if self.hyperparams is None else self.hyperparams.to_dict(),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbtEnsemble":
        if d.get("format") != FORMAT:
            raise ValidationError(f"not a {FORMAT} document")
        hp = d.get("hyperparams")
        trees = [Tree(**t) for t in d["trees"]]
        for t in trees:
            if any(f >= d["n_features"] for f in t.feature):
                raise ValidationError("tree references a feature beyond n_features")
        return cls(d["base_prediction"], d["learning_rate"], d["n_features"], trees,
                   GbtHyperparams.from_dict(hp) if hp else None)

    def dumps(self) -> str:
        # json writes floats with repr, which round-trips exactly
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "GbtEnsemble":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(doc)


def fit(X, y, hp: GbtHyperparams | None = None) -> GbtEnsemble:
    return GbtEnsemble.fit(X, y, hp)


def predict(e: GbtEnsemble, x) -> float:
    return e.predict(x)


def rmse(pairs=None, *, actual=None, predicted=None) -> float:
    """Root mean squared error of (actual, predicted) pairs or two arrays."""
    if pairs is not None:
        arr = np.asarray(list(pairs), dtype=np.float64).reshape(-1, 2)
        actual, predicted = arr[:, 0], arr[:, 1]
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.size == 0:
        raise EmptyInput("rmse of an empty set is undefined")
    if a.shape != p.shape:
        raise DimensionMismatch(f"{a.size} actual values but {p.size} predictions")
    return math.sqrt(float(np.mean((a - p) ** 2)))
