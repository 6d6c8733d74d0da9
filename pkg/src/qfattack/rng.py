"""Deterministic 64-bit randomness primitives.

Everything random in this package derives from splitmix64, chosen because it
is exactly specified, fast, and trivially portable. Sub-streams are derived
by XORing the user seed with a fixed role constant so that independent parts
of an algorithm never share a stream.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1

GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Role constants for sub-stream derivation (seed XOR role).
GENETIC_ROLE = 0x67656E6574696373


def mix64(x: int) -> int:
    """One splitmix64 step applied to ``x`` as a stateless 64-bit hash."""
    z = (x + GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """The splitmix64 stream generator.

    ``SplitMix64(seed).next_u64()`` equals ``mix64(seed)``; subsequent draws
    advance the internal state by the golden-ratio increment.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_index(self, n: int) -> int:
        """Uniform integer in [0, n) via the multiply-shift map (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next_u64() * n) >> 64

    def next_float(self) -> float:
        """Uniform float in [0, 1) from the top 53 bits of one draw."""
        return (self.next_u64() >> 11) / float(1 << 53)


def unit_float(u: int) -> float:
    """Map a 64-bit word to [0, 1) using its top 53 bits."""
    return (u >> 11) / float(1 << 53)
