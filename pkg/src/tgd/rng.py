"""Portable, seedable random stream for reproducible noise generation.

The raw stream is SplitMix64: output i is ``mix64(seed + (i+1) * GAMMA)``
with the standard mixing constants, all arithmetic mod 2**64.  Uniform
doubles are ``(word >> 11) * 2**-53`` in [0, 1); normal deviates come from
the Box-Muller transform applied to consecutive uniform pairs, with the
first uniform shifted into (0, 1] so the logarithm is always defined.
The same seed therefore yields bit-identical draws on any platform.
"""

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SHIFT30 = np.uint64(30)
_SHIFT27 = np.uint64(27)
_SHIFT31 = np.uint64(31)
_SHIFT11 = np.uint64(11)
_TWO53 = float(2**53)


class SplitMix64:
    """Counter-based SplitMix64 generator over numpy uint64 arrays."""

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self._count = 0

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit words."""
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        z = self._seed + idx * _GAMMA
        z = (z ^ (z >> _SHIFT30)) * _MIX1
        z = (z ^ (z >> _SHIFT27)) * _MIX2
        return z ^ (z >> _SHIFT31)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles uniform on [0, 1)."""
        return (self.raw(n) >> _SHIFT11).astype(np.float64) / _TWO53

    def normal(self, n: int) -> np.ndarray:
        """``n`` standard normal deviates via Box-Muller."""
        m = (n + 1) // 2
        u1 = (self.raw(m) >> _SHIFT11).astype(np.float64)
        u1 = (u1 + 1.0) / _TWO53  # (0, 1]: log is finite
        u2 = self.uniform(m)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * m)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]
