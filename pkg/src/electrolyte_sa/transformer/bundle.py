"""Model bundle on disk and the molecule -> vector entry point.

A bundle directory holds ``config.json`` (model config, training metadata
and the tensor manifest), ``vocab.txt`` and ``weights.bin``: float32
little-endian tensors concatenated in manifest order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import BundleError, ConfigError
from ..selfies import smiles_to_selfies
from ..tokenizer import Vocabulary, tokenize
from .model import DenoisingTransformer, ModelConfig, param_shapes, represent

CONFIG_FILE = "config.json"
VOCAB_FILE = "vocab.txt"
WEIGHTS_FILE = "weights.bin"
_WEIGHT_DTYPE = np.dtype("<f4")


def save_bundle(model: DenoisingTransformer, vocab: Vocabulary, out_dir: str | Path,
                training: dict | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = [{"name": k, "shape": list(v.shape)} for k, v in model.params.items()]
    config = {
        "model": model.cfg.to_dict(),
        "training": training or {},
        "weights": {"file": WEIGHTS_FILE, "dtype": "float32-le", "manifest": manifest},
    }
    (out / CONFIG_FILE).write_text(json.dumps(config, indent=2, sort_keys=True) + "\n",
                                   encoding="utf-8")
    vocab.save(out / VOCAB_FILE)
    with open(out / WEIGHTS_FILE, "wb") as fh:
        for arr in model.params.values():
            fh.write(np.ascontiguousarray(arr, dtype=_WEIGHT_DTYPE).tobytes())


def load_bundle(path: str | Path) -> tuple[DenoisingTransformer, Vocabulary, dict]:
    """Returns (model, vocabulary, training metadata)."""
    root = Path(path)
    for name in (CONFIG_FILE, VOCAB_FILE, WEIGHTS_FILE):
        if not (root / name).is_file():
            raise BundleError(f"model bundle {root} is missing {name}")
    try:
        config = json.loads((root / CONFIG_FILE).read_text(encoding="utf-8"))
        cfg = ModelConfig(**config["model"])
        manifest = config["weights"]["manifest"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise BundleError(f"unreadable {CONFIG_FILE}: {exc}") from exc
    try:
        cfg.validate()
    except ConfigError as exc:
        raise BundleError(f"invalid model config in bundle: {exc}") from exc

    expected = param_shapes(cfg)
    listed = {m["name"]: tuple(m["shape"]) for m in manifest}
    if list(listed) != list(expected) or listed != expected:
        raise BundleError("weight manifest does not match the model config")
    raw = (root / WEIGHTS_FILE).read_bytes()
    n_values = sum(int(np.prod(s)) for s in expected.values())
    if len(raw) != n_values * _WEIGHT_DTYPE.itemsize:
        raise BundleError(
            f"{WEIGHTS_FILE} has {len(raw)} bytes, manifest needs "
            f"{n_values * _WEIGHT_DTYPE.itemsize}")
    flat = np.frombuffer(raw, dtype=_WEIGHT_DTYPE)
    params, offset = {}, 0
    for name, shape in expected.items():
        size = int(np.prod(shape))
        params[name] = flat[offset:offset + size].reshape(shape).astype(np.float32)
        offset += size

    vocab = Vocabulary.load(root / VOCAB_FILE)
    if len(vocab) != cfg.vocab_size:
        raise BundleError(f"vocab.txt has {len(vocab)} tokens, config says {cfg.vocab_size}")
    return DenoisingTransformer(cfg, params), vocab, config.get("training", {})


def embed_molecule(model: DenoisingTransformer, vocab: Vocabulary, smiles: str) -> np.ndarray:
    """SMILES -> canonical SELFIES -> ids -> encoder -> pooled d-vector (float64)."""
    ids = tokenize(smiles_to_selfies(smiles), vocab)
    return represent(model, ids)


class Embedder:
    """Callable wrapper around a frozen model and its vocabulary."""

    def __init__(self, model: DenoisingTransformer, vocab: Vocabulary):
        self.model = model
        self.vocab = vocab

    @classmethod
    def from_bundle(cls, path: str | Path) -> "Embedder":
        model, vocab, _ = load_bundle(path)
        return cls(model, vocab)

    @property
    def dim(self) -> int:
        return self.model.cfg.d_model

    def __call__(self, smiles: str) -> np.ndarray:
        return embed_molecule(self.model, self.vocab, smiles)
