"""End-to-end workflow: pretrain, featurize, fit, evaluate, export.

Every run writes into a temporary sibling directory and renames it into
place only after all files are complete, so a failed run leaves nothing
behind. Outputs contain no timestamps or host details; identical inputs and
seeds give byte-identical files.
"""

from __future__ import annotations

import contextlib
import csv
import hashlib
import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .chem import parse_smiles
from .errors import (EmptyReport, FractionError, FractionSumError, InconsistentTarget,
                     SchemaError, SmilesError, TooFewSamples, ValidationError)
from .featurizer import CachedEmbedder, Formulation, check_fractions, featurize_matrix
from .gbt import GbtEnsemble, GbtHyperparams, rmse
from .search import random_search
from .selfies import smiles_to_selfies
from .tokenizer import build_vocab
from .transformer import Embedder, ModelConfig, TrainConfig, load_bundle, pretrain, save_bundle

HEADER = ("formulation_id", "component_smiles", "mole_fraction", "target")
PREDICT_HEADER = HEADER[:3]
MAX_COMPONENTS = 10
TRAIN_FRACTION = 0.8
MIN_DATASET = 5

ENSEMBLE_FILE = "ensemble.json"
REPORT_FILE = "report.json"
PARITY_FILE = "parity.csv"
SEARCH_LOG_FILE = "search_log.json"
TRAIN_LOG_FILE = "train_log.json"


def data_path(name: str) -> Path:
    """Path of a file bundled under ``electrolyte_sa/data``."""
    return Path(str(resources.files("electrolyte_sa") / "data" / name))


# ---------------------------------------------------------------- file helpers

def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@contextlib.contextmanager
def atomic_dir(out_dir: str | Path) -> Iterator[Path]:
    """Yield a scratch directory that replaces ``out_dir`` on clean exit."""
    out = Path(out_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", suffix=".tmp", dir=out.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if out.exists():
        shutil.rmtree(out)
    os.replace(tmp, out)


@contextlib.contextmanager
def atomic_file(path: str | Path) -> Iterator[Path]:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    os.close(fd)
    try:
        yield Path(name)
    except BaseException:
        Path(name).unlink(missing_ok=True)
        raise
    os.replace(name, target)


# ---------------------------------------------------------------- datasets

def load_corpus(path: str | Path) -> list[str]:
    """SMILES lines; blank lines and ``#`` comments skipped."""
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def load_dataset(path: str | Path, log10_target: bool = False,
                 require_target: bool | None = None) -> list[Formulation]:
    """Read the long-format CSV; one row per component.

    ``require_target=None`` accepts either header; True/False demand the
    4- or 3-column form. Formulations come back in first-appearance order.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file, expected header {','.join(HEADER)}")
    header = tuple(h.strip() for h in rows[0])
    if header == HEADER and require_target is not False:
        has_target = True
    elif header == PREDICT_HEADER and not require_target:
        has_target = False
    else:
        allowed = [HEADER] if require_target else [PREDICT_HEADER] if require_target is False \
            else [HEADER, PREDICT_HEADER]
        raise SchemaError(f"{path}: header {','.join(header)!r}; expected "
                          + " or ".join(repr(",".join(h)) for h in allowed))

    groups: dict[str, dict] = {}
    known_smiles: dict[str, None] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        fid, smiles, frac_text = (c.strip() for c in row[:3])
        if not fid:
            raise SchemaError(f"{path}:{lineno}: empty formulation_id")
        try:
            frac = float(frac_text)
        except ValueError:
            raise FractionError(
                f"{path}:{lineno}: mole_fraction {frac_text!r} is not a number") from None
        if smiles not in known_smiles:
            try:
                parse_smiles(smiles)
                smiles_to_selfies(smiles)
            except ValidationError as exc:
                raise SmilesError(f"{path}:{lineno}: cannot use SMILES {smiles!r}: {exc}") from exc
            known_smiles[smiles] = None
        target = None
        if has_target:
            try:
                target = float(row[3])
            except ValueError:
                raise SchemaError(f"{path}:{lineno}: target {row[3]!r} is not a number") from None
            if not math.isfinite(target):
                raise SchemaError(f"{path}:{lineno}: target must be finite")
            if log10_target:
                if target <= 0:
                    raise SchemaError(f"{path}:{lineno}: --log10-target needs positive targets")
                target = math.log10(target)
        g = groups.setdefault(fid, {"components": [], "target": target, "line": lineno})
        if has_target and g["target"] != target:
            raise InconsistentTarget(
                f"{path}:{lineno}: formulation {fid!r} has targets {g['target']!r} and {target!r}")
        g["components"].append((smiles, frac))

    out = []
    for fid, g in groups.items():
        comps = g["components"]
        if len(comps) > MAX_COMPONENTS:
            raise SchemaError(f"{path}: formulation {fid!r} has {len(comps)} components, "
                              f"at most {MAX_COMPONENTS} allowed")
        try:
            check_fractions([c for _, c in comps], f"{path}: formulation {fid!r}")
        except FractionSumError as exc:
            raise FractionError(str(exc)) from exc
        out.append(Formulation(fid, tuple(comps), g["target"]))
    return out


def write_dataset(path: str | Path, ds: Sequence[Formulation]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        with_target = any(f.target is not None for f in ds)
        w.writerow(HEADER if with_target else PREDICT_HEADER)
        for f in ds:
            for smiles, c in f.components:
                row = [f.id, smiles, repr(c)]
                if with_target:
                    row.append(repr(f.target))
                w.writerow(row)


def train_size(n: int, train_fraction: float = TRAIN_FRACTION) -> int:
    """floor(train_fraction * n), computed exactly from the decimal fraction."""
    return math.floor(Fraction(repr(float(train_fraction))) * n)


def split(ds: Sequence[Formulation], seed: int,
          train_fraction: float = TRAIN_FRACTION) -> tuple[list[Formulation], list[Formulation]]:
    """Seeded shuffle by formulation; each side keeps dataset order."""
    n = len(ds)
    if n < MIN_DATASET:
        raise TooFewSamples(f"need at least {MIN_DATASET} formulations to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    k = train_size(n, train_fraction)
    train_idx, test_idx = np.sort(perm[:k]), np.sort(perm[k:])
    return [ds[i] for i in train_idx], [ds[i] for i in test_idx]


# ---------------------------------------------------------------- pretraining

def read_run_config(path: str | Path | None) -> tuple[dict, dict]:
    """``{"model": {...}, "training": {...}}`` JSON; either part may be absent."""
    if path is None:
        return {}, {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict) or set(doc) - {"model", "training"}:
        raise SchemaError(f"{path}: expected an object with 'model' and/or 'training' keys")
    return dict(doc.get("model", {})), dict(doc.get("training", {}))


def run_pretrain(corpus_path: str | Path, model_cfg: dict, train_cfg: TrainConfig,
                 out_dir: str | Path) -> Path:
    smiles = load_corpus(corpus_path)
    corpus = []
    for i, s in enumerate(smiles, start=1):
        try:
            corpus.append(smiles_to_selfies(s))
        except ValidationError as exc:
            raise SmilesError(f"{corpus_path}: entry {i} ({s!r}): {exc}") from exc
    vocab = build_vocab(corpus)
    try:
        cfg = ModelConfig(vocab_size=len(vocab), **model_cfg).validate()
    except TypeError as exc:
        raise SchemaError(f"bad model config: {exc}") from exc
    model, report = pretrain(corpus, vocab, cfg, train_cfg)
    training = {
        "train_config": train_cfg.to_dict(),
        "corpus_sha256": sha256_file(corpus_path),
        "corpus_size": len(corpus),
        "final_loss": report.epoch_losses[-1] if report.epoch_losses else None,
    }
    with atomic_dir(out_dir) as tmp:
        save_bundle(model, vocab, tmp, training)
        _dump_json(tmp / TRAIN_LOG_FILE, {**report.to_dict(), "seed": train_cfg.seed})
    return Path(out_dir)


# ---------------------------------------------------------------- fine-tuning

@dataclass(frozen=True)
class SearchSettings:
    trials: int = 50
    folds: int = 5
    seed: int = 0


def train_regressor(train: Sequence[Formulation], embed, search: SearchSettings
                    ) -> tuple[GbtEnsemble, GbtHyperparams, list[dict]]:
    """Search and refit on the training formulations only."""
    X = featurize_matrix(train, embed)
    y = np.array([f.target for f in train], dtype=np.float64)
    best, log = random_search(X, y, trials=search.trials, folds=search.folds, seed=search.seed)
    return GbtEnsemble.fit(X, y, best), best, log


def parity_rows(ds: Sequence[Formulation], predicted: np.ndarray) -> list[dict]:
    rows = [{"formulation_id": f.id, "actual": float(f.target), "predicted": float(p)}
            for f, p in zip(ds, predicted)]
    return sorted(rows, key=lambda r: r["formulation_id"])


def eval_report(ds: Sequence[Formulation], predicted: np.ndarray) -> dict:
    pairs = parity_rows(ds, predicted)
    value = rmse([(p["actual"], p["predicted"]) for p in pairs])
    return {"rmse": value, "rmse_rounded": round(value, 3), "n": len(pairs),
            "parity_pairs": pairs}


def emit_parity(report: dict, path: str | Path) -> None:
    """``actual,predicted`` CSV, one row per pair in formulation-id order."""
    pairs = report.get("parity_pairs") or []
    if not pairs:
        raise EmptyReport("report has no parity pairs")
    pairs = sorted(pairs, key=lambda p: p["formulation_id"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["actual", "predicted"])
        for p in pairs:
            w.writerow([repr(float(p["actual"])), repr(float(p["predicted"]))])


def read_parity(path: str | Path) -> list[tuple[float, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return [(float(a), float(p)) for a, p in rows[1:]]


def run_train(model_dir: str | Path, dataset_path: str | Path, split_seed: int,
              search: SearchSettings, out_dir: str | Path, log10_target: bool = False) -> dict:
    model, vocab, _ = load_bundle(model_dir)
    embed = CachedEmbedder(Embedder(model, vocab))
    ds = load_dataset(dataset_path, log10_target=log10_target, require_target=True)
    train, test = split(ds, split_seed)
    ensemble, best, search_log = train_regressor(train, embed, search)
    report = eval_report(test, ensemble.predict_batch(featurize_matrix(test, embed)))

    bundle = Path(model_dir)
    with atomic_dir(out_dir) as tmp:
        ensemble.save(tmp / ENSEMBLE_FILE)
        _dump_json(tmp / SEARCH_LOG_FILE, search_log)
        report.update({
            "best_hyperparams": best.to_dict(),
            "seeds": {"split": split_seed, "search": search.seed},
            "search": {"trials": search.trials, "folds": search.folds},
            "log10_target": log10_target,
            "counts": {
                "dataset_rows": sum(len(f.components) for f in ds),
                "formulations": len(ds),
                "train": len(train),
                "test": len(test),
                "distinct_molecules": len(embed),
            },
            "train_ids": [f.id for f in train],
            "test_ids": [f.id for f in test],
            "hashes": {
                "dataset_sha256": sha256_file(dataset_path),
                "model_config_sha256": sha256_file(bundle / "config.json"),
                "model_weights_sha256": sha256_file(bundle / "weights.bin"),
                "ensemble_sha256": sha256_file(tmp / ENSEMBLE_FILE),
            },
        })
        _dump_json(tmp / REPORT_FILE, report)
        emit_parity(report, tmp / PARITY_FILE)
    return report


def run_predict(model_dir: str | Path, regressor_file: str | Path, dataset_path: str | Path,
                out_path: str | Path) -> list[tuple[str, float]]:
    model, vocab, _ = load_bundle(model_dir)
    ensemble = GbtEnsemble.load(regressor_file)
    ds = load_dataset(dataset_path)
    preds: list[tuple[str, float]] = []
    if ds:
        X = featurize_matrix(ds, CachedEmbedder(Embedder(model, vocab)))
        preds = [(f.id, float(p)) for f, p in zip(ds, ensemble.predict_batch(X))]
    with atomic_file(out_path) as tmp:
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["formulation_id", "prediction"])
            for fid, p in preds:
                w.writerow([fid, repr(p)])
    return preds


def evaluate(model_dir: str | Path, regressor_file: str | Path, dataset_path: str | Path,
             out_path: str | Path, log10_target: bool = False) -> dict:
    """Score a regressor on a labelled dataset; writes the report JSON."""
    model, vocab, _ = load_bundle(model_dir)
    ensemble = GbtEnsemble.load(regressor_file)
    ds = load_dataset(dataset_path, log10_target=log10_target, require_target=True)
    if not ds:
        raise EmptyReport(f"{dataset_path} has no formulations")
    X = featurize_matrix(ds, CachedEmbedder(Embedder(model, vocab)))
    report = eval_report(ds, ensemble.predict_batch(X))
    with atomic_file(out_path) as tmp:
        _dump_json(tmp, report)
    return report
