#!/usr/bin/env python3
"""
SplitMix64 generator for reproducible scene corpora.

The update is fixed and language-neutral, so a corpus generated here can be
regenerated bit for bit by any other implementation:

    state  = state + 0x9E3779B97F4A7C15            (mod 2^64)
    z      = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z      = (z ^ (z >> 27)) * 0x94D049BB133111EB
    output = z ^ (z >> 31)

Floats take the top 53 bits of one output divided by 2^53.
"""

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.next_float()

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in [low, high], inclusive. Plain modulo reduction."""
        if high < low:
            raise ValueError(f"empty range [{low}, {high}]")
        return low + self.next_u64() % (high - low + 1)


def derive_seeds(seed: int, count: int) -> list[int]:
    """Per-scene seeds for a corpus: the first `count` outputs of SplitMix64(seed)."""
    rng = SplitMix64(seed)
    return [rng.next_u64() for _ in range(count)]
