"""Denoising pretraining loop with Adam."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ConfigError, EmptyCorpus, SequenceTooLong
from ..tokenizer import MASK, PAD, Vocabulary, apply_masking, tokenize
from .model import DenoisingTransformer, ModelConfig, init_model


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 16
    learning_rate: float = 1e-3
    mask_ratio: float = 0.15
    seed: int = 0

    def validate(self) -> "TrainConfig":
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if not 0.0 < self.mask_ratio < 1.0:
            raise ConfigError("mask_ratio must be in (0, 1)")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    epoch_mask_accuracy: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for name, p in params.items():
            g = grads[name]
            m, v = self.m[name], self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            update = self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            p -= update.astype(p.dtype)


def pad_batch(seqs: Sequence[Sequence[int]]) -> np.ndarray:
    width = max(len(s) for s in seqs)
    out = np.full((len(seqs), width), PAD, dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = s
    return out


def _masked_hits(logits: np.ndarray, source: np.ndarray, target: np.ndarray) -> tuple[int, int]:
    at_mask = source == MASK
    pred = logits.argmax(axis=-1)
    return int((pred[at_mask] == target[at_mask]).sum()), int(at_mask.sum())


def pretrain(corpus: Sequence[str], vocab: Vocabulary, cfg: ModelConfig,
             train_cfg: TrainConfig) -> tuple[DenoisingTransformer, TrainReport]:
    """Train a fresh model on SELFIES strings; everything is seeded by ``train_cfg.seed``.

    The same seed drives initialization, shuffling and masking, so a rerun
    is bit-identical.
    """
    train_cfg.validate()
    if len(corpus) == 0:
        raise EmptyCorpus("pretraining corpus is empty")
    if cfg.vocab_size != len(vocab):
        raise ConfigError(f"vocab_size={cfg.vocab_size} but vocabulary has {len(vocab)} tokens")
    ids = [tokenize(s, vocab) for s in corpus]
    longest = max(len(s) for s in ids)
    if longest > cfg.max_len:
        raise SequenceTooLong(f"corpus sequence of length {longest} exceeds max_len={cfg.max_len}")

    model = init_model(cfg, train_cfg.seed, np.float32)
    rng = np.random.default_rng([train_cfg.seed, 1])
    opt = Adam(model.params, train_cfg.learning_rate)
    report = TrainReport()
    for _ in range(train_cfg.epochs):
        order = rng.permutation(len(ids))
        loss_sum = 0.0
        tok_sum = 0.0
        hits = total = 0
        for start in range(0, len(order), train_cfg.batch_size):
            chunk = [ids[i] for i in order[start:start + train_cfg.batch_size]]
            masked = [apply_masking(s, train_cfg.mask_ratio, rng) for s in chunk]
            source = pad_batch([m.source for m in masked])
            target = pad_batch([m.target for m in masked])
            fwd = model.forward_denoise(source, target, rng)
            grads = model.backward(fwd)
            opt.step(model.params, grads)
            n_tok = float((target != PAD).sum())
            loss_sum += fwd.loss * n_tok
            tok_sum += n_tok
            h, t = _masked_hits(fwd.logits, source, target)
            hits += h
            total += t
        report.epoch_losses.append(loss_sum / tok_sum)
        report.epoch_mask_accuracy.append(hits / total)
        if not all(np.isfinite(p).all() for p in model.params.values()):
            raise FloatingPointError("non-finite parameter after training step")
    return model, report


def evaluate_reconstruction(model: DenoisingTransformer, corpus: Sequence[str], vocab: Vocabulary,
                            mask_ratio: float = 0.15, seed: int = 0,
                            batch_size: int = 64) -> float:
    """Fraction of masked tokens whose teacher-forced argmax equals the original."""
    rng = np.random.default_rng(seed)
    ids = [tokenize(s, vocab) for s in corpus]
    hits = total = 0
    for start in range(0, len(ids), batch_size):
        masked = [apply_masking(s, mask_ratio, rng) for s in ids[start:start + batch_size]]
        source = pad_batch([m.source for m in masked])
        target = pad_batch([m.target for m in masked])
        fwd = model.forward_denoise(source, target)
        h, t = _masked_hits(fwd.logits, source, target)
        hits += h
        total += t
    return hits / total if total else math.nan
