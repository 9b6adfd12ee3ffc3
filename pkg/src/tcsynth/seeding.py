"""Stable seed mixing so every sample owns an independent random stream.

Streams are keyed by ``(seed, stream, index)`` through splitmix64, which keeps
results identical no matter which worker renders a given index.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# stream tags
STREAM_SAMPLE = 0
STREAM_LEXICON = 1
STREAM_AUGMENT = 2


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix_seed(seed: int, *keys: int) -> int:
    """Fold ``keys`` into ``seed``; returns an unsigned 64-bit value."""
    h = splitmix64(seed & MASK64)
    for k in keys:
        h = splitmix64(h ^ (k & MASK64))
    return h


def stream_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(mix_seed(seed, *keys)))


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """The per-sample stream used by the renderer."""
    return stream_rng(seed, STREAM_SAMPLE, index)
