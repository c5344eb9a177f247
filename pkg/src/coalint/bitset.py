"""Coalitions as fixed-width bitmasks.

Player ``i`` is in the coalition iff bit ``i`` of ``mask`` is set. Python
integers act as dynamic bitsets, so any player count (including n > 64) is
handled uniformly; ``to_words`` packs a mask into 64-bit words for the
numeric kernels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

WORD_BITS = 64
_WORD_MASK = (1 << WORD_BITS) - 1


class CoalintError(Exception):
    """Base class for library errors."""


class CapacityError(CoalintError):
    """An enumeration-based operation was requested above its player cap."""


class PreconditionError(CoalintError):
    """An operation precondition was violated."""


def n_words(n: int) -> int:
    return max(1, (n + WORD_BITS - 1) // WORD_BITS)


@dataclass(frozen=True)
class Coalition:
    """An immutable subset of the player set {0, ..., n-1}."""

    mask: int
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise PreconditionError(f"player count must be >= 0, got {self.n}")
        if self.mask < 0 or self.mask >> self.n:
            raise PreconditionError(
                f"mask {self.mask:#x} has bits outside width {self.n}"
            )

    # -- constructors ------------------------------------------------------

    @classmethod
    def empty(cls, n: int) -> "Coalition":
        return cls(0, n)

    @classmethod
    def full(cls, n: int) -> "Coalition":
        return cls((1 << n) - 1, n)

    @classmethod
    def of(cls, players: Iterable[int], n: int) -> "Coalition":
        mask = 0
        for p in players:
            if not 0 <= p < n:
                raise PreconditionError(f"player {p} outside 0..{n - 1}")
            mask |= 1 << p
        return cls(mask, n)

    @classmethod
    def from_string(cls, bits: str) -> "Coalition":
        """Parse the 0/1 text encoding: character i = membership of player i."""
        if not bits or any(c not in "01" for c in bits):
            raise PreconditionError(f"not a 0/1 coalition string: {bits!r}")
        mask = 0
        for i, c in enumerate(bits):
            if c == "1":
                mask |= 1 << i
        return cls(mask, len(bits))

    # -- queries -----------------------------------------------------------

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    def __len__(self) -> int:
        return self.size

    def __contains__(self, player: int) -> bool:
        return 0 <= player < self.n and bool(self.mask >> player & 1)

    def __iter__(self) -> Iterator[int]:
        mask = self.mask
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def players(self) -> tuple[int, ...]:
        return tuple(self)

    def issubset(self, other: "Coalition") -> bool:
        self._check_width(other)
        return self.mask & ~other.mask == 0

    def isdisjoint(self, other: "Coalition") -> bool:
        self._check_width(other)
        return self.mask & other.mask == 0

    # -- set algebra (closed over width n) ----------------------------------

    def union(self, other: "Coalition") -> "Coalition":
        self._check_width(other)
        return Coalition(self.mask | other.mask, self.n)

    def intersection(self, other: "Coalition") -> "Coalition":
        self._check_width(other)
        return Coalition(self.mask & other.mask, self.n)

    def difference(self, other: "Coalition") -> "Coalition":
        self._check_width(other)
        return Coalition(self.mask & ~other.mask, self.n)

    def complement(self) -> "Coalition":
        return Coalition(~self.mask & ((1 << self.n) - 1), self.n)

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def _check_width(self, other: "Coalition") -> None:
        if self.n != other.n:
            raise PreconditionError(
                f"coalition widths differ: {self.n} vs {other.n}"
            )

    # -- encodings -----------------------------------------------------------

    def to_string(self) -> str:
        return "".join("1" if self.mask >> i & 1 else "0" for i in range(self.n))

    def to_words(self) -> np.ndarray:
        return mask_to_words(self.mask, self.n)

    def __repr__(self) -> str:
        return f"Coalition({{{','.join(map(str, self))}}}, n={self.n})"


def mask_to_words(mask: int, n: int) -> np.ndarray:
    w = n_words(n)
    out = np.empty(w, dtype=np.uint64)
    for i in range(w):
        out[i] = (mask >> (WORD_BITS * i)) & _WORD_MASK
    return out


def masks_to_words(masks: Iterable[int], n: int) -> np.ndarray:
    """Pack many masks into a (len, n_words) uint64 array."""
    masks = list(masks)
    w = n_words(n)
    if w == 1:
        return np.array(masks, dtype=np.uint64).reshape(-1, 1)
    out = np.empty((len(masks), w), dtype=np.uint64)
    for i in range(w):
        shift = WORD_BITS * i
        out[:, i] = [(mask >> shift) & _WORD_MASK for mask in masks]
    return out


def subsets_of(mask: int) -> Iterator[int]:
    """All submasks of ``mask``, including 0 and ``mask`` itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def subsets_of_size(n: int, size: int) -> Iterator[int]:
    """All masks of the given popcount over n players, ascending."""
    if size < 0 or size > n:
        return
    if size == 0:
        yield 0
        return
    mask = (1 << size) - 1
    limit = 1 << n
    while mask < limit:
        yield mask
        # Gosper's hack: next mask with the same popcount.
        low = mask & -mask
        ripple = mask + low
        mask = ripple | (((mask ^ ripple) >> 2) // low)


def all_subsets_up_to_order(n: int, k: int) -> list[Coalition]:
    """Coalitions of sizes 1..k, ordered by (size, mask)."""
    out = []
    for size in range(1, min(k, n) + 1):
        for mask in subsets_of_size(n, size):
            out.append(Coalition(mask, n))
    return out
