"""Seed derivation without global RNG state.

Child seeds are derived with SplitMix64 so that a sweep cell's randomness only
depends on ``(base_seed, *keys)`` and never on execution order.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One SplitMix64 output step for state ``x`` (Steele, Lea & Flood 2014)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, *keys: int) -> int:
    """Fold integer ``keys`` into ``base_seed``; result is a 64-bit unsigned int.

    ``derive_seed(b, k1, k2) == splitmix64(splitmix64(splitmix64(b) ^ k1) ^ k2)``.
    """
    h = splitmix64(int(base_seed) & MASK64)
    for k in keys:
        h = splitmix64(h ^ (int(k) & MASK64))
    return h


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & MASK64)
