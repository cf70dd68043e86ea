"""Reverse-mode automatic differentiation over numpy arrays.

A :class:`Tensor` wraps an ndarray and remembers how it was produced: its
parent tensors and a closure that maps the incoming gradient to one gradient
per parent.  Calling :func:`backward` on a scalar loss walks the recorded
graph once in reverse topological order and accumulates ``.grad`` on every
tensor that contributed.

The op set is deliberately small: exactly what a residual transformer encoder
with a contrastive head needs.  Arrays that must never receive gradient
(token ids, attention masks, queue entries) are passed as plain ndarrays, so
gradient cannot reach them by construction.

Heavy elementwise/row ops delegate to :mod:`sencore.kernels`, which switches
between the numba and pure-numpy backends.
"""

from __future__ import annotations

import numpy as np

from . import kernels


class Tensor:
    """A node in the backward graph: a value, a grad slot, and provenance."""

    __slots__ = ("value", "grad", "_parents", "_bwd")

    def __init__(self, value: np.ndarray, parents: tuple = (), bwd=None):
        self.value = np.asarray(value)
        self.grad = None
        self._parents = parents
        self._bwd = bwd

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def dtype(self):
        return self.value.dtype

    def __repr__(self) -> str:
        kind = "leaf" if self._bwd is None else "op"
        return f"Tensor({kind}, shape={self.value.shape}, dtype={self.value.dtype})"


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` down to ``shape``, undoing numpy broadcasting."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def backward(loss: Tensor) -> None:
    """Populate ``.grad`` on every tensor the scalar ``loss`` depends on."""
    if loss.value.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.value.shape}")
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node._bwd is None or node.grad is None:
            continue
        for parent, g in zip(node._parents, node._bwd(node.grad)):
            if g is None:
                continue
            parent.grad = g if parent.grad is None else parent.grad + g


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum with numpy broadcasting."""
    def bwd(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)
    return Tensor(a.value + b.value, (a, b), bwd)


def add_const(a: Tensor, c: np.ndarray) -> Tensor:
    """Add a constant array (no gradient flows into ``c``)."""
    def bwd(g):
        return (_unbroadcast(g, a.value.shape),)
    return Tensor(a.value + c, (a,), bwd)


def scale(a: Tensor, s: float) -> Tensor:
    """Multiply by a python scalar."""
    s = a.value.dtype.type(s)
    def bwd(g):
        return (g * s,)
    return Tensor(a.value * s, (a,), bwd)


def mul_const(a: Tensor, c: np.ndarray) -> Tensor:
    """Elementwise product with a constant array (no gradient into ``c``)."""
    def bwd(g):
        return (_unbroadcast(g * c, a.value.shape),)
    return Tensor(a.value * c, (a,), bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product, batched over leading axes like ``np.matmul``."""
    av, bv = a.value, b.value
    def bwd(g):
        ga = _unbroadcast(g @ bv.swapaxes(-1, -2), av.shape)
        gb = _unbroadcast(av.swapaxes(-1, -2) @ g, bv.shape)
        return ga, gb
    return Tensor(av @ bv, (a, b), bwd)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    def bwd(g):
        return (g.reshape(a.value.shape),)
    return Tensor(a.value.reshape(shape), (a,), bwd)


def transpose(a: Tensor, axes: tuple[int, ...]) -> Tensor:
    inverse = tuple(np.argsort(axes))
    def bwd(g):
        return (np.ascontiguousarray(g.transpose(inverse)),)
    return Tensor(np.ascontiguousarray(a.value.transpose(axes)), (a,), bwd)


def token_at(a: Tensor, position: int) -> Tensor:
    """Select one sequence position from a (batch, seq, dim) tensor."""
    def bwd(g):
        full = np.zeros_like(a.value)
        full[:, position, :] = g
        return (full,)
    return Tensor(a.value[:, position, :].copy(), (a,), bwd)


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.value)
    def bwd(g):
        return (g * (1 - y * y),)
    return Tensor(y, (a,), bwd)


def gelu(a: Tensor) -> Tensor:
    def bwd(g):
        return (kernels.gelu_backward(a.value, g),)
    return Tensor(kernels.gelu(a.value), (a,), bwd)


def softmax_last(a: Tensor) -> Tensor:
    """Softmax over the last axis."""
    shp = a.value.shape
    rows = np.ascontiguousarray(a.value).reshape(-1, shp[-1])
    y = kernels.softmax_rows(rows)
    def bwd(g):
        grows = np.ascontiguousarray(g).reshape(-1, shp[-1])
        return (kernels.softmax_backward(y, grows).reshape(shp),)
    return Tensor(y.reshape(shp), (a,), bwd)


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean and unit variance, then affine."""
    shp = a.value.shape
    rows = np.ascontiguousarray(a.value).reshape(-1, shp[-1])
    y, mean, rstd = kernels.layernorm_rows(rows, gain.value, bias.value, eps)
    def bwd(g):
        grows = np.ascontiguousarray(g).reshape(-1, shp[-1])
        gx, ggain, gbias = kernels.layernorm_backward(
            rows, mean, rstd, gain.value, grows
        )
        return gx.reshape(shp), ggain, gbias
    return Tensor(y.reshape(shp), (a, gain, bias), bwd)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Look up rows of ``table`` by integer id; ids take no gradient."""
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    def bwd(g):
        out = np.zeros_like(table.value)
        grows = np.ascontiguousarray(g).reshape(-1, table.value.shape[1])
        kernels.embedding_grad(ids.ravel(), grows, out)
        return (out,)
    return Tensor(table.value[ids], (table,), bwd)


def dropout(a: Tensor, p: float, rng) -> Tensor:
    """Inverted dropout driven by the run's deterministic stream.

    Reserves ``a.size`` draw indices from ``rng`` and regenerates the same
    mask in the backward pass from those coordinates, so nothing is stored.
    ``p == 0`` is an identity and consumes no draws.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {p}")
    if p == 0.0:
        return a
    seed, start = rng.reserve(a.value.size)
    keep_scale = 1.0 / (1.0 - p)
    def bwd(g):
        return (kernels.dropout_apply(g, p, keep_scale, seed, start),)
    return Tensor(kernels.dropout_apply(a.value, p, keep_scale, seed, start), (a,), bwd)


def sum_all(a: Tensor) -> Tensor:
    def bwd(g):
        return (np.broadcast_to(g, a.value.shape).astype(a.value.dtype, copy=False),)
    return Tensor(np.asarray(a.value.sum()), (a,), bwd)


def mean_all(a: Tensor) -> Tensor:
    inv = 1.0 / a.value.size
    def bwd(g):
        gb = np.broadcast_to(g * a.value.dtype.type(inv), a.value.shape)
        return (gb.astype(a.value.dtype, copy=False),)
    return Tensor(np.asarray(a.value.mean()), (a,), bwd)
