"""Deterministic random number generator shared by both search backends.

The search engines exist twice (compiled and pure Python) and must produce
bit-identical output for the same seed.  ``random.Random`` and numpy's
generators are unsuitable because their draw algorithms cannot be cheaply
reproduced inside a C loop, so the tree search uses its own xoshiro256++
stream with splitmix64 seeding.  This module is the reference
implementation; the compiled engine carries a C transliteration that is
checked against it draw for draw in the test suite.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


def _splitmix64_next(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256pp:
    """xoshiro256++ stream seeded through splitmix64.

    ``randbelow`` uses the multiply-shift reduction (Lemire) without a
    rejection loop: the modulo bias is below 2**-32 for the candidate-list
    sizes that occur here, and a rejection-free draw keeps the compiled and
    pure-Python engines in lockstep at exactly one draw per decision.
    """

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int) -> None:
        if seed < 0:
            raise ValueError(f"seed must be nonnegative, got {seed}")
        state = seed & _MASK64
        state, self._s0 = _splitmix64_next(state)
        state, self._s1 = _splitmix64_next(state)
        state, self._s2 = _splitmix64_next(state)
        state, self._s3 = _splitmix64_next(state)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s0 + s3) & _MASK64, 23) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def next_double(self) -> float:
        # 53 high bits, uniform in [0, 1).
        return (self.next_u64() >> 11) * (2.0**-53)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError(f"randbelow needs n >= 1, got {n}")
        return (self.next_u64() * n) >> 64

    def state(self) -> tuple[int, int, int, int]:
        return (self._s0, self._s1, self._s2, self._s3)
