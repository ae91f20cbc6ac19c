"""Deterministic randomness for all sampling in the toolkit.

Everything random flows through SplitMix64, a fixed 64-bit generator, so a
seeded run produces byte-identical artifacts on every platform and Python
version (the interpreter's own generator is deliberately not used).

Two sub-seed derivations exist:

* ``derive_seed(seed, index)`` for numbered streams, e.g. one per test draw;
* ``derive_seed_token(seed, token)`` for string-keyed streams, e.g. one per
  text label, so adding or removing a label never shifts the other labels'
  draws.
"""

from __future__ import annotations

import hashlib
from typing import Sequence, TypeVar

T = TypeVar("T")

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 output mixer: a bijective 64-bit avalanche function."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Sub-seed for numbered stream ``index`` of master ``seed``."""
    if index < 0:
        raise ValueError("stream index must be non-negative")
    return mix64((seed & _MASK64) ^ mix64(index + 1))


def derive_seed_token(seed: int, token: str) -> int:
    """Sub-seed keyed by a string (stable under unrelated stream changes)."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return mix64((seed & _MASK64) ^ int.from_bytes(digest, "big"))


class SplitMix64:
    """A SplitMix64 stream: state advances by the golden gamma, output mixed."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return mix64(self._state)

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n), by rejection sampling."""
        if n <= 0:
            raise ValueError("randbelow needs a positive bound")
        span = _MASK64 + 1
        limit = span - (span % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, items: Sequence[T], k: int) -> list[T]:
        """k distinct elements in draw order, by partial Fisher-Yates."""
        n = len(items)
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} from {n} items")
        pool = list(items)
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
