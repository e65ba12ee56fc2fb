"""BART-style encoder-decoder with hand-written backpropagation.

Post-norm layers, GELU feed-forward, fixed sinusoidal positions, and one
embedding matrix shared by encoder input, decoder input and the output
projection. Parameters live in an ordered dict; that order is the on-disk
manifest order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigError, EmptySequence, SequenceTooLong
from ..tokenizer import BOS, EOS, PAD
from . import layers as L

_ATTN = ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")
_FF = ("w1", "b1", "w2", "b2")


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 64
    n_heads: int = 4
    n_layers_enc: int = 2
    n_layers_dec: int = 2
    d_ff: int = 128
    max_len: int = 128
    dropout_rate: float = 0.0
    pooling: str = "mean"  # or "bos"

    def validate(self) -> "ModelConfig":
        dims = ("vocab_size", "d_model", "n_heads", "n_layers_enc", "n_layers_dec",
                "d_ff", "max_len")
        for name in dims:
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.d_model % self.n_heads:
            raise ConfigError(
                f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.pooling not in ("mean", "bos"):
            raise ConfigError(f"unknown pooling {self.pooling!r}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Parameter names and shapes in manifest order."""
    d, f = cfg.d_model, cfg.d_ff
    shapes: dict[str, tuple[int, ...]] = {"embed": (cfg.vocab_size, d)}

    def attn(prefix):
        for name in _ATTN:
            shapes[prefix + name] = (d, d) if name.startswith("w") else (d,)

    def norm(prefix):
        shapes[prefix + "g"] = (d,)
        shapes[prefix + "b"] = (d,)

    def ff(prefix):
        shapes[prefix + "w1"] = (d, f)
        shapes[prefix + "b1"] = (f,)
        shapes[prefix + "w2"] = (f, d)
        shapes[prefix + "b2"] = (d,)

    for i in range(cfg.n_layers_enc):
        attn(f"enc.{i}.attn.")
        norm(f"enc.{i}.ln1.")
        ff(f"enc.{i}.ff.")
        norm(f"enc.{i}.ln2.")
    for i in range(cfg.n_layers_dec):
        attn(f"dec.{i}.self.")
        norm(f"dec.{i}.ln1.")
        attn(f"dec.{i}.cross.")
        norm(f"dec.{i}.ln2.")
        ff(f"dec.{i}.ff.")
        norm(f"dec.{i}.ln3.")
    return shapes


@dataclass
class ForwardResult:
    logits: np.ndarray
    loss: float
    cache: dict


class DenoisingTransformer:
    def __init__(self, cfg: ModelConfig, params: dict[str, np.ndarray]):
        self.cfg = cfg.validate()
        expected = param_shapes(cfg)
        if list(params) != list(expected):
            raise ConfigError("parameter names do not match the configuration")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ConfigError(f"{name}: shape {params[name].shape}, expected {shape}")
        self.params = params
        self.dtype = params["embed"].dtype
        self.positions = L.sinusoidal_table(cfg.max_len, cfg.d_model, self.dtype)

    @classmethod
    def initialize(cls, cfg: ModelConfig, seed: int, dtype=np.float32) -> "DenoisingTransformer":
        """Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases 0; norms g=1, b=0."""
        cfg.validate()
        rng = np.random.default_rng(seed)
        params = {}
        for name, shape in param_shapes(cfg).items():
            leaf = name.rsplit(".", 1)[-1]
            if name == "embed":
                bound = 1.0 / math.sqrt(cfg.d_model)
                arr = rng.uniform(-bound, bound, size=shape)
            elif leaf.startswith("w"):
                bound = 1.0 / math.sqrt(shape[0])
                arr = rng.uniform(-bound, bound, size=shape)
            elif leaf == "g":
                arr = np.ones(shape)
            else:
                arr = np.zeros(shape)
            params[name] = arr.astype(dtype)
        return cls(cfg, params)

    def astype(self, dtype) -> "DenoisingTransformer":
        return DenoisingTransformer(self.cfg, {k: v.astype(dtype) for k, v in self.params.items()})

    def copy(self) -> "DenoisingTransformer":
        return DenoisingTransformer(self.cfg, {k: v.copy() for k, v in self.params.items()})

    @property
    def n_params(self) -> int:
        return sum(v.size for v in self.params.values())

    # ------------------------------------------------------------------ helpers

    def _check_ids(self, ids: np.ndarray):
        if ids.shape[-1] > self.cfg.max_len:
            raise SequenceTooLong(
                f"sequence of length {ids.shape[-1]} exceeds max_len={self.cfg.max_len}")
        if ids.size and (ids.min() < 0 or ids.max() >= self.cfg.vocab_size):
            raise ValueError("token id outside the vocabulary")

    def _embed(self, ids):
        scale = math.sqrt(self.cfg.d_model)
        x = self.params["embed"][ids] * self.dtype.type(scale)
        return x + self.positions[: ids.shape[1]]

    @staticmethod
    def _key_bias(ids, dtype, n_query):
        pad = (ids == PAD)[:, None, :]
        bias = np.where(pad, NEG, 0.0).astype(dtype)
        return np.broadcast_to(bias, (ids.shape[0], n_query, ids.shape[1]))

    # ------------------------------------------------------------------ encoder

    def _encode(self, src, rng=None):
        cfg, p = self.cfg, self.params
        bias = self._key_bias(src, self.dtype, src.shape[1])
        x = self._embed(src)
        caches = []
        for i in range(cfg.n_layers_enc):
            pre = f"enc.{i}."
            a, c_attn = L.attention_forward(x, x, p, pre + "attn.", bias, cfg.n_heads)
            a, k1 = L.dropout_forward(a, cfg.dropout_rate, rng)
            x1, c_ln1 = L.layernorm_forward(x + a, p[pre + "ln1.g"], p[pre + "ln1.b"])
            f, c_ff = L.feedforward_forward(x1, p, pre + "ff.")
            f, k2 = L.dropout_forward(f, cfg.dropout_rate, rng)
            x, c_ln2 = L.layernorm_forward(x1 + f, p[pre + "ln2.g"], p[pre + "ln2.b"])
            caches.append((c_attn, k1, c_ln1, c_ff, k2, c_ln2))
        return x, caches

    def encode(self, ids: Sequence[int] | np.ndarray) -> np.ndarray:
        """Encoder states: (L, d) for one sequence, (B, L, d) for a padded batch."""
        arr = np.asarray(ids, dtype=np.int64)
        single = arr.ndim == 1
        batch = arr[None] if single else arr
        self._check_ids(batch)
        states, _ = self._encode(batch)
        assert states.shape == batch.shape + (self.cfg.d_model,)
        return states[0] if single else states

    # ------------------------------------------------------------------ denoising

    def forward_denoise(self, source, target, rng=None) -> ForwardResult:
        """Teacher-forced denoising pass.

        ``source`` is the masked sequence, ``target`` the original; both are
        (B, L) padded with PAD or 1-D. The decoder reads ``[BOS] + target[:-1]``
        and is scored on every non-PAD target position.
        """
        cfg, p = self.cfg, self.params
        src = np.atleast_2d(np.asarray(source, dtype=np.int64))
        tgt = np.atleast_2d(np.asarray(target, dtype=np.int64))
        self._check_ids(src)
        self._check_ids(tgt)
        memory, enc_caches = self._encode(src, rng)

        dec_in = np.concatenate([np.full((tgt.shape[0], 1), BOS), tgt[:, :-1]], axis=1)
        lt = tgt.shape[1]
        causal = np.triu(np.full((lt, lt), NEG), k=1).astype(self.dtype)
        self_bias = self._key_bias(dec_in, self.dtype, lt) + causal
        cross_bias = self._key_bias(src, self.dtype, lt)
        y = self._embed(dec_in)
        dec_caches = []
        for i in range(cfg.n_layers_dec):
            pre = f"dec.{i}."
            a, c_self = L.attention_forward(y, y, p, pre + "self.", self_bias, cfg.n_heads)
            a, k1 = L.dropout_forward(a, cfg.dropout_rate, rng)
            y1, c_ln1 = L.layernorm_forward(y + a, p[pre + "ln1.g"], p[pre + "ln1.b"])
            c, c_cross = L.attention_forward(y1, memory, p, pre + "cross.", cross_bias,
                                             cfg.n_heads)
            c, k2 = L.dropout_forward(c, cfg.dropout_rate, rng)
            y2, c_ln2 = L.layernorm_forward(y1 + c, p[pre + "ln2.g"], p[pre + "ln2.b"])
            f, c_ff = L.feedforward_forward(y2, p, pre + "ff.")
            f, k3 = L.dropout_forward(f, cfg.dropout_rate, rng)
            y, c_ln3 = L.layernorm_forward(y2 + f, p[pre + "ln3.g"], p[pre + "ln3.b"])
            dec_caches.append((c_self, k1, c_ln1, c_cross, k2, c_ln2, c_ff, k3, c_ln3))

        logits = y @ p["embed"].T
        assert logits.shape == tgt.shape + (cfg.vocab_size,)
        probs = L.softmax(logits)
        weight = (tgt != PAD).astype(self.dtype)
        n_tok = max(weight.sum(), 1.0)
        z = logits - logits.max(axis=-1, keepdims=True)
        logp = np.take_along_axis(z, tgt[..., None], axis=-1)[..., 0] - np.log(
            np.exp(z).sum(axis=-1))
        loss = float(-(logp * weight).sum() / n_tok)
        cache = dict(src=src, tgt=tgt, dec_in=dec_in, enc=enc_caches, dec=dec_caches,
                     y=y, probs=probs, weight=weight, n_tok=n_tok)
        return ForwardResult(logits, loss, cache)

    def backward(self, fwd: ForwardResult) -> dict[str, np.ndarray]:
        """Analytic gradients of ``fwd.loss`` for every parameter."""
        cfg, p = self.cfg, self.params
        c = fwd.cache
        grads = {name: np.zeros_like(arr) for name, arr in p.items()}
        tgt, probs, weight = c["tgt"], c["probs"], c["weight"]

        dlogits = probs.copy()
        np.put_along_axis(
            dlogits, tgt[..., None],
            np.take_along_axis(dlogits, tgt[..., None], axis=-1) - 1.0, axis=-1)
        dlogits *= (weight / c["n_tok"])[..., None]
        d, v = cfg.d_model, cfg.vocab_size
        grads["embed"] += dlogits.reshape(-1, v).T @ c["y"].reshape(-1, d)
        dy = dlogits @ p["embed"]

        dmemory = None
        for i in reversed(range(cfg.n_layers_dec)):
            pre = f"dec.{i}."
            c_self, k1, c_ln1, c_cross, k2, c_ln2, c_ff, k3, c_ln3 = c["dec"][i]
            dsum, grads[pre + "ln3.g"], grads[pre + "ln3.b"] = L.layernorm_backward(dy, c_ln3)
            df, g = L.feedforward_backward(L.dropout_backward(dsum, k3), c_ff, p, pre + "ff.")
            grads.update(g)
            dy2 = dsum + df
            dsum, grads[pre + "ln2.g"], grads[pre + "ln2.b"] = L.layernorm_backward(dy2, c_ln2)
            dq, dmem, g = L.attention_backward(
                L.dropout_backward(dsum, k2), c_cross, p, pre + "cross.", cfg.n_heads)
            grads.update(g)
            dmemory = dmem if dmemory is None else dmemory + dmem
            dy1 = dsum + dq
            dsum, grads[pre + "ln1.g"], grads[pre + "ln1.b"] = L.layernorm_backward(dy1, c_ln1)
            dq, dkv, g = L.attention_backward(
                L.dropout_backward(dsum, k1), c_self, p, pre + "self.", cfg.n_heads)
            grads.update(g)
            dy = dsum + dq + dkv

        scale = self.dtype.type(math.sqrt(d))
        np.add.at(grads["embed"], c["dec_in"], dy * scale)

        dx = dmemory
        for i in reversed(range(cfg.n_layers_enc)):
            pre = f"enc.{i}."
            c_attn, k1, c_ln1, c_ff, k2, c_ln2 = c["enc"][i]
            dsum, grads[pre + "ln2.g"], grads[pre + "ln2.b"] = L.layernorm_backward(dx, c_ln2)
            df, g = L.feedforward_backward(L.dropout_backward(dsum, k2), c_ff, p, pre + "ff.")
            grads.update(g)
            dx1 = dsum + df
            dsum, grads[pre + "ln1.g"], grads[pre + "ln1.b"] = L.layernorm_backward(dx1, c_ln1)
            dq, dkv, g = L.attention_backward(
                L.dropout_backward(dsum, k1), c_attn, p, pre + "attn.", cfg.n_heads)
            grads.update(g)
            dx = dsum + dq + dkv
        np.add.at(grads["embed"], c["src"], dx * scale)
        for name, g in grads.items():
            assert g.shape == p[name].shape, name
        return grads


NEG = L.NEG_INF


def init_model(cfg: ModelConfig, seed: int, dtype=np.float32) -> DenoisingTransformer:
    return DenoisingTransformer.initialize(cfg, seed, dtype)


def encode(model: DenoisingTransformer, src) -> np.ndarray:
    return model.encode(src)


def forward_denoise(model: DenoisingTransformer, masked_src, target, rng=None):
    fwd = model.forward_denoise(masked_src, target, rng)
    return fwd.logits, fwd.loss


def backward(model: DenoisingTransformer, fwd: ForwardResult) -> dict[str, np.ndarray]:
    return model.backward(fwd)


def pool(states: np.ndarray, pad_mask=None) -> np.ndarray:
    """Mean of ``states`` rows where ``pad_mask`` is False.

    ``pad_mask`` flags positions to leave out (padding and BOS/EOS); ``None``
    keeps every row.
    """
    states = np.asarray(states)
    keep = np.ones(len(states), bool) if pad_mask is None else ~np.asarray(pad_mask, bool)
    if states.ndim != 2 or keep.shape != (states.shape[0],):
        raise ValueError("pool expects (L, d) states and a length-L mask")
    if not keep.any():
        raise EmptySequence("no content positions to pool")
    return states[keep].mean(axis=0)


def content_mask(ids: Sequence[int]) -> np.ndarray:
    """``pad_mask`` for :func:`pool`: True at PAD/BOS/EOS."""
    ids = np.asarray(ids)
    return (ids == PAD) | (ids == BOS) | (ids == EOS)


def represent(model: DenoisingTransformer, ids: Sequence[int]) -> np.ndarray:
    """Pooled encoder output for one tokenized sequence, as float64."""
    states = model.encode(ids)
    if model.cfg.pooling == "bos":
        vec = states[0]
    else:
        vec = pool(states, content_mask(ids))
    return np.asarray(vec, dtype=np.float64)
