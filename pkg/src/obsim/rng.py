"""Deterministic 64-bit RNG used everywhere outcomes are sampled.

All stochastic results in this package derive from a single master seed
through splitmix64 (Steele, Lea & Flood constants).  Per-component and
per-trial sub-seeds come from :func:`derive_seed`, so independent trials can
run in any order (or concurrently) and still reproduce bit-identically.  The
compiled kernel in ``obsim._kernels.fastkern`` implements the exact same
integer arithmetic, which is what makes the two backends interchangeable.

Constants:
    increment  0x9E3779B97F4A7C15  (golden-ratio step)
    mix mul 1  0xBF58476D1CE4E5B9
    mix mul 2  0x94D049BB133111EB
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Named sub-streams hanging off the master seed (see derive_seed).
STREAM_RECORD = 1
STREAM_IDENTIFY = 2
STREAM_REFINE = 3
STREAM_LG = 4
STREAM_CHSH = 5


def mix64(z: int) -> int:
    """splitmix64 finalizer: avalanche a 64-bit value."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Sub-seed ``index`` of ``seed``: mix64(seed + (index+1)*GOLDEN).

    Equivalent to the (index+1)-th output of a splitmix64 stream seeded at
    ``seed``; used both for component streams and for per-trial seeds.
    """
    return mix64((seed + (index + 1) * GOLDEN) & MASK64)


class SplitMix64:
    """Sequential splitmix64 stream."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 1.1102230246251565e-16  # 2**-53

    def bit(self) -> int:
        """Fair coin: top bit of the next output."""
        return self.next_u64() >> 63

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def spawn(self, index: int) -> "SplitMix64":
        """Independent child stream (used for per-trial RNGs)."""
        return SplitMix64(derive_seed(self.state, index))
