"""Forward/backward primitives.

Every ``*_forward`` returns ``(output, cache)``; the matching ``*_backward``
takes the upstream gradient and that cache and returns the input gradient
plus a dict of parameter gradients keyed like the parameter dict.
"""

from __future__ import annotations

import math

import numpy as np

LN_EPS = 1e-5
NEG_INF = -1e9
_GELU_C = math.sqrt(2.0 / math.pi)


def sinusoidal_table(max_len: int, d_model: int, dtype=np.float32) -> np.ndarray:
    pos = np.arange(max_len)[:, None].astype(np.float64)
    i = np.arange(d_model)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / d_model)
    table = np.where(i % 2 == 0, np.sin(angle), np.cos(angle))
    return table.astype(dtype)


def linear_forward(x, w, b):
    return x @ w + b, x


def linear_backward(dy, x, w):
    d_in, d_out = w.shape
    dw = x.reshape(-1, d_in).T @ dy.reshape(-1, d_out)
    db = dy.reshape(-1, d_out).sum(axis=0)
    return dy @ w.T, dw, db


def layernorm_forward(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return g * xhat + b, (xhat, inv, g)


def layernorm_backward(dy, cache):
    xhat, inv, g = cache
    d = xhat.shape[-1]
    dg = (dy * xhat).reshape(-1, d).sum(axis=0)
    db = dy.reshape(-1, d).sum(axis=0)
    dxhat = dy * g
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def gelu_forward(x):
    inner = _GELU_C * (x + 0.044715 * x ** 3)
    t = np.tanh(inner)
    return 0.5 * x * (1.0 + t), (x, t)


def gelu_backward(dy, cache):
    x, t = cache
    dinner = _GELU_C * (1.0 + 3 * 0.044715 * x * x)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner)


def softmax(s, axis=-1):
    z = s - s.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _split_heads(x, n_heads):
    b, l, d = x.shape
    return x.reshape(b, l, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, l, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, l, h * dk)


def attention_forward(xq, xkv, p: dict, prefix: str, bias, n_heads: int):
    """Multi-head attention; ``bias`` is additive, broadcast to (B, 1, Lq, Lk)."""
    q, _ = linear_forward(xq, p[prefix + "wq"], p[prefix + "bq"])
    k, _ = linear_forward(xkv, p[prefix + "wk"], p[prefix + "bk"])
    v, _ = linear_forward(xkv, p[prefix + "wv"], p[prefix + "bv"])
    qh, kh, vh = (_split_heads(t, n_heads) for t in (q, k, v))
    scale = 1.0 / math.sqrt(qh.shape[-1])
    scores = (qh @ kh.transpose(0, 1, 3, 2)) * scale + bias[:, None]
    attn = softmax(scores)
    oh = attn @ vh
    o = _merge_heads(oh)
    y, _ = linear_forward(o, p[prefix + "wo"], p[prefix + "bo"])
    cache = (xq, xkv, qh, kh, vh, attn, o, scale)
    return y, cache


def attention_backward(dy, cache, p: dict, prefix: str, n_heads: int):
    """Returns (d_xq, d_xkv, grads)."""
    xq, xkv, qh, kh, vh, attn, o, scale = cache
    grads = {}
    do, grads[prefix + "wo"], grads[prefix + "bo"] = linear_backward(dy, o, p[prefix + "wo"])
    doh = _split_heads(do, n_heads)
    dattn = doh @ vh.transpose(0, 1, 3, 2)
    dvh = attn.transpose(0, 1, 3, 2) @ doh
    dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True)) * scale
    dqh = dscores @ kh
    dkh = dscores.transpose(0, 1, 3, 2) @ qh
    dxq, grads[prefix + "wq"], grads[prefix + "bq"] = linear_backward(
        _merge_heads(dqh), xq, p[prefix + "wq"])
    dxk, grads[prefix + "wk"], grads[prefix + "bk"] = linear_backward(
        _merge_heads(dkh), xkv, p[prefix + "wk"])
    dxv, grads[prefix + "wv"], grads[prefix + "bv"] = linear_backward(
        _merge_heads(dvh), xkv, p[prefix + "wv"])
    return dxq, dxk + dxv, grads


def feedforward_forward(x, p: dict, prefix: str):
    h, _ = linear_forward(x, p[prefix + "w1"], p[prefix + "b1"])
    a, gcache = gelu_forward(h)
    y, _ = linear_forward(a, p[prefix + "w2"], p[prefix + "b2"])
    return y, (x, gcache, a)


def feedforward_backward(dy, cache, p: dict, prefix: str):
    x, gcache, a = cache
    grads = {}
    da, grads[prefix + "w2"], grads[prefix + "b2"] = linear_backward(dy, a, p[prefix + "w2"])
    dh = gelu_backward(da, gcache)
    dx, grads[prefix + "w1"], grads[prefix + "b1"] = linear_backward(dh, x, p[prefix + "w1"])
    return dx, grads


def dropout_forward(x, rate: float, rng):
    if rate <= 0.0 or rng is None:
        return x, None
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * keep, keep


def dropout_backward(dy, keep):
    return dy if keep is None else dy * keep
