"""Deterministic 64-bit RNG shared by the Python and compiled code paths.

SplitMix64 is used instead of ``random.Random`` because the compiled kernels
must consume the exact same stream as the pure-Python fallback: the generator
is trivial to replicate in C with ``uint64_t`` arithmetic, giving bit-identical
training curves and benchmark results regardless of backend.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# 2**-53: converts the top 53 bits of a u64 into a double in [0, 1).
_INV53 = 1.0 / 9007199254740992.0


class SplitMix64:
    """Minimal deterministic RNG with value-copyable state."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * _INV53

    def randrange(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randrange() requires n >= 1")
        return self.next_u64() % n

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def copy(self) -> "SplitMix64":
        return SplitMix64(self.state)


def derive_seed(seed: int, salt: int) -> int:
    """Decorrelated child seed for auxiliary streams (demos, probes)."""
    return SplitMix64((seed ^ (salt * _GOLDEN)) & _MASK).next_u64()
