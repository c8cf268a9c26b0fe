"""Portable seeded randomness for fold shuffling and sub-seed derivation.

Fold plans must be reproducible on any platform and any numpy version, so the
shuffle is driven by SplitMix64 (Steele, Lea & Flood 2014) rather than by a
library generator whose method-level output is not guaranteed stable.
"""

from __future__ import annotations

import hashlib
from typing import MutableSequence

MASK64 = (1 << 64) - 1


class SplitMix64:
    """64-bit SplitMix generator."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError(f"bound must be positive, got {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def shuffle(self, items: MutableSequence) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def coordinate_hash(*coords) -> int:
    """Stable 64-bit hash of a tuple of coordinates (independent of PYTHONHASHSEED)."""
    text = "\x1f".join(repr(c) for c in coords)
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")


def derive_seed(seed: int, *coords) -> int:
    """Sub-seed for one stream: ``seed XOR hash(coords)``."""
    return (seed & MASK64) ^ coordinate_hash(*coords)
