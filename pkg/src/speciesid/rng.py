"""Portable deterministic random generator.

Fold plans, SMOTE draws and fixture data must be reproducible across
implementations and platforms, so randomness comes from a fixed-rule
generator rather than a library default.  The exact update rules -- also
documented in the README so other implementations can replay them:

SplitMix64 (seeding / seed derivation), state ``s`` is a u64::

    s = (s + 0x9E3779B97F4A7C15) mod 2^64
    z = s
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   mod 2^64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB   mod 2^64
    output: z ^ (z >> 31)

xoshiro256** (the stream generator), state is four u64 words filled by
four successive SplitMix64 outputs; each step::

    out = rotl64(s1 * 5, 7) * 9          (mod 2^64)
    t  = s1 << 17                        (mod 2^64)
    s2 ^= s0;  s3 ^= s1;  s1 ^= s2;  s0 ^= s3
    s2 ^= t;   s3 = rotl64(s3, 45)

Derived quantities:

* ``uniform01`` = ``(out >> 11) * 2**-53`` (53-bit mantissa in [0, 1)).
* ``randbelow(n)`` draws u64 words, rejecting values >= ``2^64 - (2^64 % n)``,
  then reduces mod ``n`` (unbiased).
* ``shuffle`` is a Fisher-Yates pass from the last index down, swapping
  ``i`` with ``randbelow(i + 1)``.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step: returns (new_state, output)."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def derive_seed(seed: int, *tags: int) -> int:
    """Mix integer tags into a seed, one SplitMix64 step per tag.

    Used for per-repeat, per-split and per-class child seeds so that
    independent stages never share a stream.
    """
    state = seed & MASK64
    _, out = splitmix64(state)
    for tag in tags:
        _, out = splitmix64((out ^ (tag & MASK64)) & MASK64)
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** stream seeded through SplitMix64."""

    def __init__(self, seed: int):
        state = seed & MASK64
        words = []
        for _ in range(4):
            state, out = splitmix64(state)
            words.append(out)
        self._s = words

    def next_u64(self) -> int:
        s = self._s
        out = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return out

    def uniform01(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def normal(self) -> float:
        """Standard normal via Box-Muller (two uniform draws per call)."""
        import math

        u1 = self.uniform01()
        u2 = self.uniform01()
        while u1 <= 0.0:
            u1 = self.uniform01()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
