"""Seeded pseudo-random stream used everywhere randomness is needed.

The generator is xoshiro256** whose four state words are produced by
splitmix64 applied to the user seed (both algorithms by Blackman & Vigna,
public domain reference code). All derived draws are pinned so an
independent implementation can reproduce every seeded run bit for bit:

- ``next_u64``     -- raw xoshiro256** output.
- ``random``       -- ``(next_u64() >> 11) * 2**-53`` in [0, 1).
- ``below(n)``     -- ``next_u64() % n``.
- ``shuffle``      -- Fisher-Yates, i from len-1 down to 1, j = below(i+1).
- ``normal``       -- Box-Muller on u1, u2 = random() with u1 clamped to
                      2**-53 when zero; cos branch first, sin branch cached.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """Deterministic 64-bit generator; one instance per seeded command."""

    __slots__ = ("_s", "_gauss_cache")

    def __init__(self, seed: int):
        seed &= _MASK64
        s = []
        for _ in range(4):
            seed, word = _splitmix64(seed)
            s.append(word)
        self._s = s
        self._gauss_cache: float | None = None

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self) -> float:
        """Uniform in [0, 1) with 53 random mantissa bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def below(self, n: int) -> int:
        """Uniform integer in [0, n). Modulo bias is negligible for n << 2**64."""
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        return self.next_u64() % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Gaussian draw via Box-Muller; consumes two uniforms per pair."""
        cached = self._gauss_cache
        if cached is not None:
            self._gauss_cache = None
            return mu + sigma * cached
        u1 = self.random()
        if u1 == 0.0:
            u1 = 2.0**-53
        u2 = self.random()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._gauss_cache = r * math.sin(theta)
        return mu + sigma * r * math.cos(theta)

    def normals(self, count: int, mu: float = 0.0, sigma: float = 1.0) -> "np.ndarray":
        return np.array([self.normal(mu, sigma) for _ in range(count)], dtype=np.float64)
