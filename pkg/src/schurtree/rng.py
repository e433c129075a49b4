"""Seeded counter-based random number generation.

All randomness flows through numpy Generators backed by the Philox bit
generator. Philox is a counter-based generator: a 64-bit key fully determines
the stream, so identical seeds reproduce identical outputs on any platform,
and distinct keys give statistically independent streams. Per-tree streams
are derived by XORing the base seed with the tree index.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(seed: int) -> np.random.Generator:
    """Generator with a Philox stream keyed directly by `seed`."""
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))


def derive_seed(seed: int, index: int) -> int:
    """Seed of the index-th derived stream (base seed XOR index)."""
    return (int(seed) ^ int(index)) & _MASK64
