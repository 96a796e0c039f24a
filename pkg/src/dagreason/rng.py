"""Deterministic PRNG utilities.

Everything that samples in this package goes through splitmix64 so that runs
are bit-exactly reproducible across platforms and languages. Per-problem
streams are derived by mixing the master seed with the problem index instead
of sharing one stream, which keeps generation order-independent and
parallelizable.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """splitmix64 finalizer: a bijective 64-bit mixing function."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & MASK64
    return x ^ (x >> 31)


def derive_seed(base: int, *parts: int | str) -> int:
    """Derive an independent substream seed from a base seed and tags.

    String tags are folded with FNV-1a before mixing. Used to give each
    (problem, redundancy level, order) cell its own splitmix64 stream.
    """
    h = base & MASK64
    for part in parts:
        if isinstance(part, str):
            f = 0xCBF29CE484222325
            for ch in part.encode("utf-8"):
                f = ((f ^ ch) * 0x100000001B3) & MASK64
            part = f
        h = mix64(h ^ (part & MASK64))
    return h


class SplitMix64:
    """splitmix64 sequence generator with Fisher-Yates shuffling.

    Shuffle indices are drawn as ``next_u64() % (i + 1)``; the modulo bias is
    negligible for the sizes used here and keeps the draw sequence trivially
    portable.
    """

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & MASK64
        return mix64(self._state)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError(f"below() requires n >= 1, got {n}")
        return self.next_u64() % n

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, high index first."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            items[i], items[j] = items[j], items[i]


def problem_seed(master_seed: int, problem_index: int) -> int:
    """Per-problem seed: finalizer of master seed XOR problem index."""
    return mix64((master_seed ^ problem_index) & MASK64)
