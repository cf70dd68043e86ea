"""The EMA-shadow encoder and the FIFO queue of its embeddings.

The shadow parameter set trails the trained encoder through an exponential
moving average and is the only thing that encodes sentences for the queue;
back-propagation never touches it.  The queue holds the most recent momentum
embeddings up to a fixed capacity, oldest first, and its entries are plain
arrays with no gradient linkage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .encoder import EncoderConfig, encode_batch
from .tokenizer import TokenSequence


@dataclass
class MomentumState:
    """Shadow parameters and their retention coefficient."""

    params: dict[str, np.ndarray]
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam < 1.0:
            raise ValueError(f"momentum coefficient must lie in [0, 1), got {self.lam}")


def init_momentum(params: dict[str, np.ndarray], lam: float) -> MomentumState:
    """Start the shadow as an exact copy of the encoder parameters."""
    return MomentumState({name: value.copy() for name, value in params.items()}, lam)


def ema_update(state: MomentumState, params: dict[str, np.ndarray]) -> None:
    """shadow <- lam * shadow + (1 - lam) * params, every array, in place."""
    if state.params.keys() != params.keys():
        raise ValueError("parameter sets differ between shadow and encoder")
    for name, source in params.items():
        target = state.params[name]
        if target.shape != source.shape:
            raise ValueError(
                f"shape mismatch for {name!r}: {target.shape} vs {source.shape}"
            )
        kernels.ema_update(target, source, state.lam)


class EmbeddingQueue:
    """Fixed-capacity FIFO of sentence embeddings, oldest first."""

    def __init__(self, capacity: int, width: int):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        if width < 1:
            raise ValueError(f"width must be positive, got {width}")
        self.capacity = capacity
        self.width = width
        self._rows: list[np.ndarray] = []

    @property
    def fill(self) -> int:
        return len(self._rows)

    def view(self) -> np.ndarray:
        """Current contents as one (fill, width) array, oldest first."""
        if not self._rows:
            return np.zeros((0, self.width), dtype=np.float32)
        return np.stack(self._rows)

    def enqueue(self, embeddings: np.ndarray) -> np.ndarray:
        """Append a batch; evict oldest entries past capacity and return them."""
        embeddings = np.asarray(embeddings)
        if embeddings.ndim != 2 or embeddings.shape[1] != self.width:
            raise ValueError(
                f"expected shape (n, {self.width}), got {embeddings.shape}"
            )
        self._rows.extend(np.array(row, copy=True) for row in embeddings)
        overflow = len(self._rows) - self.capacity
        if overflow <= 0:
            return np.zeros((0, self.width), dtype=embeddings.dtype)
        evicted = self._rows[:overflow]
        self._rows = self._rows[overflow:]
        return np.stack(evicted)


def momentum_encode(
    sequences: list[TokenSequence], state: MomentumState, config: EncoderConfig
) -> np.ndarray:
    """Encode with the shadow parameters and dropout off; output is detached."""
    return encode_batch(sequences, state.params, config, dropout_on=False)
