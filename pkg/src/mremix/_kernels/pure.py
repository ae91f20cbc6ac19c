"""Pure-Python co-occurrence kernel (fallback for the compiled extension).

Semantics are pinned here; the Cython kernel must match it exactly.
Counts are symmetric and stored under the canonical (min_id, max_id) key.
``observe`` counts every unordered position pair within one token list, so
a text contributes len*(len-1)/2 pair increments and one global increment
per token.
"""

from __future__ import annotations

from typing import Iterable, Sequence


class CoocTable:
    """Symmetric (context, candidate) co-occurrence counts over integer ids."""

    __slots__ = ("_pairs", "_globals")

    def __init__(self) -> None:
        self._pairs: dict[tuple[int, int], int] = {}
        self._globals: dict[int, int] = {}

    def observe(self, ids: Sequence[int]) -> None:
        """Count one text: all unordered position pairs plus global occurrences."""
        globals_ = self._globals
        for w in ids:
            globals_[w] = globals_.get(w, 0) + 1
        pairs = self._pairs
        n = len(ids)
        for i in range(n):
            a = ids[i]
            for j in range(i + 1, n):
                b = ids[j]
                key = (a, b) if a <= b else (b, a)
                pairs[key] = pairs.get(key, 0) + 1

    def pair_count(self, a: int, b: int) -> int:
        key = (a, b) if a <= b else (b, a)
        return self._pairs.get(key, 0)

    def set_pair(self, a: int, b: int, count: int) -> None:
        key = (a, b) if a <= b else (b, a)
        self._pairs[key] = count

    def global_count(self, w: int) -> int:
        return self._globals.get(w, 0)

    def set_global(self, w: int, count: int) -> None:
        self._globals[w] = count

    def context_sums(self, context_ids: Sequence[int], query_ids: Sequence[int]) -> list[int]:
        """For each query id, the summed pair count against all context ids."""
        pairs = self._pairs
        out: list[int] = []
        for q in query_ids:
            total = 0
            for c in context_ids:
                key = (c, q) if c <= q else (q, c)
                total += pairs.get(key, 0)
            out.append(total)
        return out

    def pair_items(self) -> Iterable[tuple[int, int, int]]:
        for (a, b), count in self._pairs.items():
            yield a, b, count

    def global_items(self) -> Iterable[tuple[int, int]]:
        yield from self._globals.items()

    def num_pairs(self) -> int:
        return len(self._pairs)

    def num_words(self) -> int:
        return len(self._globals)
