"""Cosine similarity and the contrastive training objectives.

Two objectives share one core: the in-batch loss (each sentence's augmented
view is its positive, every other augmented view a negative) and the
queue-extended loss, whose denominator also ranges over momentum-encoded
embeddings of earlier batches.  Both are means over per-example terms

    l_i = -log( exp(cos(h_i, h_i+)/tau) / sum_j exp(cos(h_i, h_j+)/tau) )

with the queue contributing extra j's.  The head is computed in float64 even
when the encoder runs in float32 (log-sum-exp of similarity ratios at small
tau amplifies rounding), and gradients are cast back to the encoder dtype.
Queue embeddings are plain arrays, never tensors, so no gradient can reach
them.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor

NORM_FLOOR = 1e-12


def cosine_sim(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors, in [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na <= NORM_FLOOR or nb <= NORM_FLOOR:
        raise ValueError(f"degenerate embedding: norms {na:.3e}, {nb:.3e}")
    return float(a @ b) / (na * nb)


def _normalized_rows(x: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(x, axis=1)
    if norms.size and float(norms.min()) <= NORM_FLOOR:
        raise ValueError(f"degenerate embedding in {what}: norm {norms.min():.3e}")
    return x / norms[:, None], norms


def _validate(h: Tensor, h_plus: Tensor, queue: np.ndarray, temperature: float):
    if h.value.ndim != 2 or h.value.shape != h_plus.value.shape:
        raise ValueError(
            f"embedding shapes must match: {h.value.shape} vs {h_plus.value.shape}"
        )
    if h.value.shape[0] < 1:
        raise ValueError("loss needs at least one pair")
    if queue.ndim != 2 or queue.shape[1] != h.value.shape[1]:
        raise ValueError(
            f"queue width {queue.shape} does not match embedding width {h.value.shape[1]}"
        )
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")


def _info_nce(h: Tensor, h_plus: Tensor, queue: np.ndarray, temperature: float) -> Tensor:
    _validate(h, h_plus, queue, temperature)
    n = h.value.shape[0]
    a = h.value.astype(np.float64)
    b = h_plus.value.astype(np.float64)
    q = np.asarray(queue, dtype=np.float64)

    u, norm_a = _normalized_rows(a, "first views")
    v, norm_b = _normalized_rows(b, "augmented views")
    qn, _ = _normalized_rows(q, "queue")

    logits = np.concatenate([u @ v.T, u @ qn.T], axis=1) / temperature
    hi = logits.max(axis=1, keepdims=True)
    lse = hi[:, 0] + np.log(np.exp(logits - hi).sum(axis=1))
    per_example = lse - logits[np.arange(n), np.arange(n)]
    loss = per_example.mean()

    def bwd(g):
        s = float(g)
        probs = np.exp(logits - lse[:, None])
        dlogits = probs
        dlogits[np.arange(n), np.arange(n)] -= 1.0
        dlogits *= s / (n * temperature)
        du = dlogits[:, :n] @ v + dlogits[:, n:] @ qn
        dv = dlogits[:, :n].T @ u
        da = (du - (du * u).sum(axis=1, keepdims=True) * u) / norm_a[:, None]
        db = (dv - (dv * v).sum(axis=1, keepdims=True) * v) / norm_b[:, None]
        return (
            da.astype(h.value.dtype, copy=False),
            db.astype(h_plus.value.dtype, copy=False),
        )

    return Tensor(np.asarray(loss), (h, h_plus), bwd)


def simcse_loss(h: Tensor, h_plus: Tensor, temperature: float) -> Tensor:
    """In-batch InfoNCE over the two dropout views, mean over examples."""
    width = h.value.shape[1] if h.value.ndim == 2 else 0
    empty = np.zeros((0, width), dtype=np.float64)
    _validate(h, h_plus, empty, temperature)
    n = h.value.shape[0]
    a = h.value.astype(np.float64)
    b = h_plus.value.astype(np.float64)
    u, norm_a = _normalized_rows(a, "first views")
    v, norm_b = _normalized_rows(b, "augmented views")

    logits = (u @ v.T) / temperature
    hi = logits.max(axis=1, keepdims=True)
    lse = hi[:, 0] + np.log(np.exp(logits - hi).sum(axis=1))
    per_example = lse - logits[np.arange(n), np.arange(n)]
    loss = per_example.mean()

    def bwd(g):
        s = float(g)
        probs = np.exp(logits - lse[:, None])
        dlogits = probs
        dlogits[np.arange(n), np.arange(n)] -= 1.0
        dlogits *= s / (n * temperature)
        du = dlogits @ v
        dv = dlogits.T @ u
        da = (du - (du * u).sum(axis=1, keepdims=True) * u) / norm_a[:, None]
        db = (dv - (dv * v).sum(axis=1, keepdims=True) * v) / norm_b[:, None]
        return (
            da.astype(h.value.dtype, copy=False),
            db.astype(h_plus.value.dtype, copy=False),
        )

    return Tensor(np.asarray(loss), (h, h_plus), bwd)


def esimcse_loss(
    h: Tensor, h_plus: Tensor, queue_view: np.ndarray, temperature: float
) -> Tensor:
    """Queue-extended InfoNCE; an empty queue reduces it to ``simcse_loss``."""
    return _info_nce(h, h_plus, np.asarray(queue_view), temperature)
