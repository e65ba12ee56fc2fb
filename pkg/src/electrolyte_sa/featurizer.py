"""Composition-weighted sum of component embeddings: SA = sum_i c_i * r_i."""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import EmptyInput, FractionSumError, MissingTarget

FRACTION_TOL = 1e-3

Embed = Callable[[str], np.ndarray]


@dataclass(frozen=True)
class Formulation:
    id: str
    components: tuple[tuple[str, float], ...]
    target: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "components",
                           tuple((str(s), float(c)) for s, c in self.components))
        if not self.components:
            raise EmptyInput(f"formulation {self.id!r} has no components")

    @property
    def fractions(self) -> tuple[float, ...]:
        return tuple(c for _, c in self.components)


def check_fractions(fractions: Sequence[float], label: str = "formulation",
                    strict: bool = True, tol: float = FRACTION_TOL) -> None:
    """Reject negative, non-finite, percentage-scaled and (strict) non-unit fractions."""
    for c in fractions:
        if not math.isfinite(c) or c < 0:
            raise FractionSumError(f"{label}: fraction {c!r} must be finite and >= 0")
    total = math.fsum(fractions)
    if abs(total - 100.0) <= 100.0 * tol:
        raise FractionSumError(
            f"{label}: fractions sum to {total:g}; these look like percentages, "
            "give mole fractions in [0, 1] instead")
    if strict and abs(total - 1.0) > tol:
        raise FractionSumError(f"{label}: fractions sum to {total:.6g}, expected 1 +/- {tol:g}")


def weighted_sum(pairs: Iterable[tuple[str, float, np.ndarray]]) -> np.ndarray:
    """Kahan-compensated sum of c * r, accumulated in sorted-key order."""
    items = sorted(pairs, key=lambda t: (t[0], t[1]))
    if not items:
        raise EmptyInput("nothing to sum")
    total = np.zeros_like(np.asarray(items[0][2], dtype=np.float64))
    comp = np.zeros_like(total)
    for _, c, r in items:
        term = c * np.asarray(r, dtype=np.float64) - comp
        new = total + term
        comp = (new - total) - term
        total = new
    return total


def featurize(f: Formulation, embed: Embed, strict: bool = True) -> np.ndarray:
    check_fractions(f.fractions, f"formulation {f.id!r}", strict=strict)
    return weighted_sum((smi, c, embed(smi)) for smi, c in f.components)


class CachedEmbedder:
    """Memoizes an embedding function per SMILES; safe for concurrent callers.

    ``misses`` counts calls to the wrapped function, so after a dataset pass
    it equals the number of distinct SMILES seen.
    """

    def __init__(self, embed: Embed):
        self._embed = embed
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()
        self.misses = 0
        self.hits = 0

    def __call__(self, smiles: str) -> np.ndarray:
        with self._lock:
            vec = self._cache.get(smiles)
            if vec is not None:
                self.hits += 1
                return vec
        vec = np.asarray(self._embed(smiles), dtype=np.float64)
        vec.setflags(write=False)
        with self._lock:
            if smiles not in self._cache:
                self._cache[smiles] = vec
                self.misses += 1
            return self._cache[smiles]

    def __len__(self) -> int:
        return len(self._cache)


def featurize_dataset(ds: Sequence[Formulation], embed: Embed,
                      strict: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix (N x d) and target vector; embeddings computed once per SMILES."""
    for f in ds:
        if f.target is None:
            raise MissingTarget(f"formulation {f.id!r} has no target")
    X = featurize_matrix(ds, embed, strict)
    y = np.array([f.target for f in ds], dtype=np.float64)
    return X, y


def featurize_matrix(ds: Sequence[Formulation], embed: Embed, strict: bool = True) -> np.ndarray:
    if not ds:
        raise EmptyInput("no formulations to featurize")
    cached = embed if isinstance(embed, CachedEmbedder) else CachedEmbedder(embed)
    rows = [featurize(f, cached, strict) for f in ds]
    width = {len(r) for r in rows}
    assert len(width) == 1, "feature width must not depend on component count"
    return np.vstack(rows)


def write_features_csv(path: str | Path, ds: Sequence[Formulation], X: np.ndarray) -> None:
    d = X.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["formulation_id", *(f"f{j}" for j in range(d)), "target"])
        for f, row in zip(ds, X):
            target = "" if f.target is None else repr(float(f.target))
            w.writerow([f.id, *(repr(float(v)) for v in row), target])
