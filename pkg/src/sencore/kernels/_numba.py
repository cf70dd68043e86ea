"""Numba-jitted implementations of the hot kernels.

Same signatures and numeric conventions as :mod:`sencore.kernels._numpy`.
Kernels are compiled with ``cache=True`` and without ``fastmath`` or
``parallel``: reductions run in a fixed sequential order so results are
reproducible run to run.  Scalar arguments arrive as Python floats and are
cast to the array dtype inside each kernel; float64 constants leaking into
float32 loops would silently upcast every element operation.

The dropout kernel inlines the SplitMix64 finalizer from :mod:`sencore.rng`
with identical constants, so the mask for a given ``(seed, start)`` block is
bitwise identical to the numpy backend's.
"""

from __future__ import annotations

import numpy as np
from numba import njit

BACKEND_NAME = "numba"

# SplitMix64 constants, shared verbatim with sencore.rng
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE_U = np.uint64(1)
_U53 = 2.0 ** -53

_GELU_C = 0.7978845608028654  # sqrt(2 / pi)
_GELU_A = 0.044715


@njit(cache=True)
def softmax_rows(x):
    rows, cols = x.shape
    y = np.empty_like(x)
    for r in range(rows):
        hi = x[r, 0]
        for c in range(1, cols):
            if x[r, c] > hi:
                hi = x[r, c]
        total = x.dtype.type(0)
        for c in range(cols):
            e = np.exp(x[r, c] - hi)
            y[r, c] = e
            total += e
        inv = x.dtype.type(1) / total
        for c in range(cols):
            y[r, c] *= inv
    return y


@njit(cache=True)
def softmax_backward(y, gy):
    rows, cols = y.shape
    gx = np.empty_like(y)
    for r in range(rows):
        inner = y.dtype.type(0)
        for c in range(cols):
            inner += gy[r, c] * y[r, c]
        for c in range(cols):
            gx[r, c] = y[r, c] * (gy[r, c] - inner)
    return gx


@njit(cache=True)
def _layernorm_rows(x, gain, bias, eps):
    rows, cols = x.shape
    y = np.empty_like(x)
    mean = np.empty(rows, dtype=x.dtype)
    rstd = np.empty(rows, dtype=x.dtype)
    inv_n = x.dtype.type(1) / x.dtype.type(cols)
    one = x.dtype.type(1)
    for r in range(rows):
        acc = x.dtype.type(0)
        for c in range(cols):
            acc += x[r, c]
        mu = acc * inv_n
        var = x.dtype.type(0)
        for c in range(cols):
            d = x[r, c] - mu
            var += d * d
        var *= inv_n
        rs = one / np.sqrt(var + eps)
        mean[r] = mu
        rstd[r] = rs
        for c in range(cols):
            y[r, c] = (x[r, c] - mu) * rs * gain[c] + bias[c]
    return y, mean, rstd


def layernorm_rows(x, gain, bias, eps):
    return _layernorm_rows(x, gain, bias, x.dtype.type(eps))


@njit(cache=True)
def layernorm_backward(x, mean, rstd, gain, gy):
    rows, cols = x.shape
    gx = np.empty_like(x)
    ggain = np.zeros(cols, dtype=x.dtype)
    gbias = np.zeros(cols, dtype=x.dtype)
    inv_n = x.dtype.type(1) / x.dtype.type(cols)
    for r in range(rows):
        mu = mean[r]
        rs = rstd[r]
        m1 = x.dtype.type(0)
        m2 = x.dtype.type(0)
        for c in range(cols):
            xhat = (x[r, c] - mu) * rs
            gxh = gy[r, c] * gain[c]
            ggain[c] += gy[r, c] * xhat
            gbias[c] += gy[r, c]
            m1 += gxh
            m2 += gxh * xhat
        m1 *= inv_n
        m2 *= inv_n
        for c in range(cols):
            xhat = (x[r, c] - mu) * rs
            gxh = gy[r, c] * gain[c]
            gx[r, c] = rs * (gxh - m1 - xhat * m2)
    return gx, ggain, gbias


@njit(cache=True)
def gelu(x):
    n = x.size
    flat = x.ravel()
    out = np.empty_like(flat)
    c = x.dtype.type(_GELU_C)
    a = x.dtype.type(_GELU_A)
    half = x.dtype.type(0.5)
    one = x.dtype.type(1.0)
    for i in range(n):
        v = flat[i]
        u = c * (v + a * v * v * v)
        out[i] = half * v * (one + np.tanh(u))
    return out.reshape(x.shape)


@njit(cache=True)
def gelu_backward(x, gy):
    n = x.size
    flat = x.ravel()
    gflat = gy.ravel()
    out = np.empty_like(flat)
    c = x.dtype.type(_GELU_C)
    a = x.dtype.type(_GELU_A)
    half = x.dtype.type(0.5)
    one = x.dtype.type(1.0)
    three = x.dtype.type(3.0)
    for i in range(n):
        v = flat[i]
        u = c * (v + a * v * v * v)
        t = np.tanh(u)
        du = c * (one + three * a * v * v)
        out[i] = gflat[i] * (half * (one + t) + half * v * (one - t * t) * du)
    return out.reshape(x.shape)


@njit(cache=True)
def _dropout_apply(flat, p, scale, seed, start):
    n = flat.size
    out = np.empty_like(flat)
    sc = flat.dtype.type(scale)
    zero = flat.dtype.type(0)
    for i in range(n):
        z = seed + (start + _ONE_U + np.uint64(i)) * _GOLDEN
        z = (z ^ (z >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
        z = z ^ (z >> _S31)
        u = np.float64(z >> _S11) * _U53
        out[i] = flat[i] * sc if u >= p else zero
    return out


def dropout_apply(x, p, scale, seed, start):
    flat = np.ascontiguousarray(x).ravel()
    out = _dropout_apply(flat, float(p), float(scale), np.uint64(seed), np.uint64(start))
    return out.reshape(x.shape)


@njit(cache=True)
def _adam_update(p, g, m, v, lr, b1, b2, bc1, bc2, eps):
    one = p.dtype.type(1)
    omb1 = one - b1
    omb2 = one - b2
    for i in range(p.size):
        gi = g[i]
        mi = b1 * m[i] + omb1 * gi
        vi = b2 * v[i] + omb2 * (gi * gi)
        m[i] = mi
        v[i] = vi
        p[i] -= lr * (mi * bc1) / (np.sqrt(vi * bc2) + eps)


def adam_update(p, g, m, v, lr, beta1, beta2, bc1, bc2, eps):
    dt = p.dtype.type
    _adam_update(
        p.ravel(), g.ravel(), m.ravel(), v.ravel(),
        dt(lr), dt(beta1), dt(beta2), dt(bc1), dt(bc2), dt(eps),
    )


@njit(cache=True)
def _ema_update(target, source, lam):
    oml = target.dtype.type(1) - lam
    for i in range(target.size):
        target[i] = lam * target[i] + oml * source[i]


def ema_update(target, source, lam):
    _ema_update(target.ravel(), source.ravel(), target.dtype.type(lam))


@njit(cache=True)
def embedding_grad(ids, grads, out):
    rows, cols = grads.shape
    for r in range(rows):
        row = ids[r]
        for c in range(cols):
            out[row, c] += grads[r, c]
