"""Deterministic 64-bit random source for reproducible simulations.

The generator is a splitmix64 sequence (see docs/determinism.md for the
exact constants and the uniform mapping). It is tiny, seedable, and
bit-exact across platforms and implementations, which is what makes
trace files byte-identical for a fixed seed.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """One splitmix64 output for state ``x`` (already incremented)."""
    z = x & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return (z ^ (z >> 31)) & _MASK


class SplitMix64:
    """splitmix64 generator over a 64-bit state.

    ``next_u64`` advances the state by the golden-gamma increment and
    returns the mixed output. ``uniform01`` maps the top 53 bits onto
    [0, 1), matching the conventional double construction.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        return mix64(self.state)

    def uniform01(self) -> float:
        return (self.next_u64() >> 11) * (2.0 ** -53)


def run_seed(master_seed: int, index: int) -> int:
    """Seed for the ``index``-th independent run of a batch.

    Defined as the ``index``-th output of the master stream. splitmix64 is
    counter-based (state_i = seed + (i+1) * gamma), so this is an O(1) jump
    rather than a walk, and batch seeds are independent of schedule order.
    """
    if index < 0:
        raise ValueError("run index must be nonnegative")
    return mix64((master_seed + (index + 1) * _GAMMA) & _MASK)
