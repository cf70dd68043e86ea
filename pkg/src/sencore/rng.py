"""Deterministic, counter-based pseudo-randomness.

Every stochastic choice in the package (dropout masks, repetition sampling,
corpus shuffling, parameter init) flows through :class:`Rng` so that a run is
fully determined by its seed.  The generator is SplitMix64 in counter mode:

    output_i = finalize(seed + (i + 1) * 0x9E3779B97F4A7C15)   (mod 2**64)

where ``finalize`` is the SplitMix64 finalizer (xor-shift / multiply mixing)
and ``i`` is the number of 64-bit words drawn so far.  The algorithm is frozen
as ``splitmix64/1``; any future change bumps that tag so old seeds keep
reproducing old streams.  Counter mode means a block of draws can be replayed
from ``(seed, start_counter)`` alone, which the dropout kernels use to
regenerate masks during the backward pass instead of storing them.
"""

from __future__ import annotations

import math

import numpy as np

ALGORITHM = "splitmix64/1"

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_U53 = 2.0 ** -53


def _finalize(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * MIX1
    z = (z ^ (z >> _S27)) * MIX2
    return z ^ (z >> _S31)


def raw_block(seed: int, start: int, n: int) -> np.ndarray:
    """The uint64 outputs for draw indices start .. start+n-1 of a stream."""
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    return _finalize(np.uint64(seed) + idx * GOLDEN)


def unit_block(seed: int, start: int, n: int) -> np.ndarray:
    """Uniform [0, 1) doubles for a draw-index block (53-bit mantissas)."""
    return (raw_block(seed, start, n) >> _S11) * _U53


class Rng:
    """A seeded SplitMix64 stream with an explicit draw counter.

    The same seed and the same call sequence always produce the same values;
    ``reserve`` hands out a block of draw indices without materializing them,
    so kernels can regenerate the block lazily.
    """

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.counter = 0

    def reserve(self, n: int) -> tuple[int, int]:
        """Consume ``n`` draw indices, returning (seed, start) for replay."""
        start = self.counter
        self.counter += int(n)
        return self.seed, start

    def raw(self, n: int) -> np.ndarray:
        seed, start = self.reserve(n)
        return raw_block(seed, start, n)

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` uniform [0, 1) doubles."""
        seed, start = self.reserve(n)
        return unit_block(seed, start, n)

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def normals(self, n: int, dtype=np.float64) -> np.ndarray:
        """``n`` standard normals via Box-Muller on consecutive uniform pairs."""
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs)
        u1, u2 = u[0::2], u[1::2]
        # log(1 - u1) is finite because u1 < 1; r = 0 when u1 = 0.
        r = np.sqrt(-2.0 * np.log1p(-u1))
        theta = (2.0 * math.pi) * u2
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return z[:n].astype(dtype, copy=False)

    def randint(self, k: int) -> int:
        """Uniform integer in [0, k)."""
        if k <= 0:
            raise ValueError(f"randint needs k >= 1, got {k}")
        return min(int(self.uniform() * k), k - 1)

    def choice(self, items):
        return items[self.randint(len(items))]

    def sample_without_replacement(self, n: int, k: int) -> list[int]:
        """``k`` distinct integers from [0, n), via a partial Fisher-Yates."""
        if not 0 <= k <= n:
            raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.randint(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]
