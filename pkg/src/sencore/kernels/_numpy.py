"""Pure-numpy implementations of the hot kernels.

This backend is always importable and serves as the reference the numba
backend is checked against.  Signatures and numeric conventions are shared
with :mod:`sencore.kernels._numba`; the selection layer in
:mod:`sencore.kernels` picks one of the two at import time.

Dropout masks are regenerated from ``(seed, start)`` counter coordinates
(see :mod:`sencore.rng`) rather than stored, and the mask for flat element
``i`` uses draw index ``start + i``.  Both backends follow that convention
exactly, so masks are bitwise identical no matter which one is active.
"""

from __future__ import annotations

import numpy as np

from ..rng import unit_block

BACKEND_NAME = "numpy"


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax of a 2D array."""
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_backward(y: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Gradient through a row-wise softmax with output ``y``."""
    inner = (gy * y).sum(axis=1, keepdims=True)
    return y * (gy - inner)


def layernorm_rows(
    x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise layer norm.  Returns (y, mean, rstd); the latter two feed
    the backward pass."""
    eps_ = x.dtype.type(eps)
    mean = x.mean(axis=1, dtype=x.dtype)
    centered = x - mean[:, None]
    var = (centered * centered).mean(axis=1, dtype=x.dtype)
    rstd = x.dtype.type(1) / np.sqrt(var + eps_)
    y = centered * rstd[:, None] * gain + bias
    return y, mean, rstd


def layernorm_backward(
    x: np.ndarray,
    mean: np.ndarray,
    rstd: np.ndarray,
    gain: np.ndarray,
    gy: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of a row-wise layer norm: (gx, ggain, gbias)."""
    xhat = (x - mean[:, None]) * rstd[:, None]
    ggain = (gy * xhat).sum(axis=0)
    gbias = gy.sum(axis=0)
    gxhat = gy * gain
    m1 = gxhat.mean(axis=1, keepdims=True, dtype=x.dtype)
    m2 = (gxhat * xhat).mean(axis=1, keepdims=True, dtype=x.dtype)
    gx = rstd[:, None] * (gxhat - m1 - xhat * m2)
    return gx, ggain, gbias


# tanh-form gelu constants, shared verbatim with the numba backend
_GELU_C = 0.7978845608028654  # sqrt(2 / pi)
_GELU_A = 0.044715


def gelu(x: np.ndarray) -> np.ndarray:
    c = x.dtype.type(_GELU_C)
    a = x.dtype.type(_GELU_A)
    half = x.dtype.type(0.5)
    one = x.dtype.type(1.0)
    u = c * (x + a * x * x * x)
    return half * x * (one + np.tanh(u))


def gelu_backward(x: np.ndarray, gy: np.ndarray) -> np.ndarray:
    c = x.dtype.type(_GELU_C)
    a = x.dtype.type(_GELU_A)
    half = x.dtype.type(0.5)
    one = x.dtype.type(1.0)
    three = x.dtype.type(3.0)
    u = c * (x + a * x * x * x)
    t = np.tanh(u)
    du = c * (one + three * a * x * x)
    dgelu = half * (one + t) + half * x * (one - t * t) * du
    return gy * dgelu


def dropout_apply(
    x: np.ndarray, p: float, scale: float, seed: int, start: int
) -> np.ndarray:
    """Zero elements whose uniform draw falls below ``p``; survivors scale up.

    Flat element ``i`` is keyed by draw index ``start + i``, so calling again
    with the same coordinates (as the backward pass does on the incoming
    gradient) reproduces the identical mask.
    """
    u = unit_block(seed, start, x.size).reshape(x.shape)
    keep = u >= p
    return np.where(keep, x * x.dtype.type(scale), x.dtype.type(0))


def adam_update(
    p: np.ndarray,
    g: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    lr: float,
    beta1: float,
    beta2: float,
    bc1: float,
    bc2: float,
    eps: float,
) -> None:
    """One fused Adam step, in place on (p, m, v).

    ``bc1`` and ``bc2`` are the bias corrections 1/(1-beta1**t) and
    1/(1-beta2**t); scalars are cast to ``p.dtype`` before use.
    """
    dt = p.dtype.type
    b1, b2 = dt(beta1), dt(beta2)
    one = dt(1)
    np.multiply(m, b1, out=m)
    m += (one - b1) * g
    np.multiply(v, b2, out=v)
    v += (one - b2) * (g * g)
    p -= dt(lr) * (m * dt(bc1)) / (np.sqrt(v * dt(bc2)) + dt(eps))


def ema_update(target: np.ndarray, source: np.ndarray, lam: float) -> None:
    """In-place exponential moving average: target = lam*target + (1-lam)*source."""
    dt = target.dtype.type
    lam_ = dt(lam)
    np.multiply(target, lam_, out=target)
    target += (dt(1) - lam_) * source


def embedding_grad(ids: np.ndarray, grads: np.ndarray, out: np.ndarray) -> None:
    """Scatter-add row gradients into an embedding-table gradient, in place."""
    np.add.at(out, ids, grads)
