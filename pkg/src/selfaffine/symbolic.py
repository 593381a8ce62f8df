"""Symbolic addressing for nested partitions of the unit interval.

A partition ``0 = b_0 < b_1 < ... < b_m = 1`` induces an m-ary coding of
[0, 1]: a finite word ``w = (d_1, ..., d_k)`` with digits in {0..m-1}
addresses the cell obtained by applying the digit maps left to right.
This module is purely deterministic geometry; randomness lives elsewhere.

Conventions
-----------
* The cell of a word is ``[base, base + width]`` with
  ``base = sum_k b(d_k) * prod_{j<k} len(d_j)`` and ``width = prod len(d_k)``.
* Points on an interior cell boundary are coded by the cell on the
  right, so every coding ends in an all-zeros tail rather than an
  all-(m-1) tail.  ``x = 1.0`` is the single exception: all digits m-1.
* The successor of the lexicographically maximal word of its length is
  represented by ``None`` (a "top" sentinel whose base value is 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "DEFAULT_MAX_DEPTH",
    "Partition",
    "Word",
    "word_base",
    "word_width",
    "word_log_width",
    "word_interval",
    "successor",
    "code_point",
    "coding",
    "level_bases",
    "level_widths",
]

# Depth guard for tree-shaped enumerations; single words may go deeper.
DEFAULT_MAX_DEPTH = 32

Word = tuple[int, ...]

# Products of more than this many lengths are accumulated in log space
# to dodge gradual underflow.
_LOG_PRODUCT_CUTOFF = 64


@dataclass(frozen=True)
class Partition:
    """Strictly increasing breakpoints ``(0, b_1, ..., b_{m-1}, 1)``."""

    breakpoints: tuple[float, ...]

    def __post_init__(self):
        b = tuple(float(v) for v in self.breakpoints)
        object.__setattr__(self, "breakpoints", b)
        if len(b) < 3:
            raise ConfigurationError("need at least two cells (three breakpoints)")
        if b[0] != 0.0 or b[-1] != 1.0:
            raise ConfigurationError("breakpoints must start at 0 and end at 1")
        if any(lo >= hi for lo, hi in zip(b, b[1:])):
            raise ConfigurationError("breakpoints must be strictly increasing")

    @classmethod
    def uniform(cls, m: int) -> "Partition":
        if m < 2:
            raise ConfigurationError("m must be at least 2")
        return cls(tuple(i / m for i in range(m + 1)))

    @classmethod
    def thirds(cls) -> "Partition":
        return cls.uniform(3)

    @property
    def m(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def lengths(self) -> tuple[float, ...]:
        b = self.breakpoints
        return tuple(b[i + 1] - b[i] for i in range(self.m))

    @property
    def lengths_array(self) -> np.ndarray:
        return np.asarray(self.lengths, dtype=float)

    @property
    def min_length(self) -> float:
        """The finest cell width; the natural scale base for stopping sets."""
        return min(self.lengths)

    @property
    def max_length(self) -> float:
        return max(self.lengths)

    @property
    def trivial_regime(self) -> bool:
        """Two-cell partitions are allowed but degenerate for most diagnostics."""
        return self.m == 2

    def check_digit(self, d: int) -> None:
        if not 0 <= d < self.m:
            raise ValueError(f"digit {d} out of range for m={self.m}")


def _check_word(word: Sequence[int], p: Partition) -> None:
    for d in word:
        p.check_digit(d)


def word_base(word: Sequence[int], p: Partition) -> float:
    """Left endpoint of the cell addressed by ``word``."""
    _check_word(word, p)
    b = p.breakpoints
    lens = p.lengths
    base = 0.0
    scale = 1.0
    for d in word:
        base += b[d] * scale
        scale *= lens[d]
    return base


def word_width(word: Sequence[int], p: Partition) -> float:
    """Width (Lebesgue measure) of the cell addressed by ``word``."""
    _check_word(word, p)
    lens = p.lengths
    if len(word) > _LOG_PRODUCT_CUTOFF:
        return math.exp(word_log_width(word, p))
    scale = 1.0
    for d in word:
        scale *= lens[d]
    return scale


def word_log_width(word: Sequence[int], p: Partition) -> float:
    _check_word(word, p)
    lens = p.lengths
    return sum(math.log(lens[d]) for d in word)


def word_interval(word: Sequence[int], p: Partition) -> tuple[float, float]:
    """Closed cell ``[base, base + width]``; right end of the top word is 1."""
    lo = word_base(word, p)
    if all(d == p.m - 1 for d in word):
        return lo, 1.0
    return lo, lo + word_width(word, p)


def successor(word: Word, m: int) -> Optional[Word]:
    """Next word of the same length in base order; None past the maximum.

    The None sentinel stands for the supremum whose base value is 1.
    """
    digits = list(word)
    for i in reversed(range(len(digits))):
        if not 0 <= digits[i] < m:
            raise ValueError(f"digit {digits[i]} out of range for m={m}")
        if digits[i] < m - 1:
            digits[i] += 1
            for j in range(i + 1, len(digits)):
                digits[j] = 0
            return tuple(digits)
        digits[i] = 0  # carry
    return None


def code_point(x: float, p: Partition, depth: int) -> Word:
    """First ``depth`` digits of the coding of ``x`` in [0, 1].

    Digits are chosen so that ``word_base(w) <= x`` with the largest such
    digit at each level, which realizes the all-zeros-tail convention for
    boundary points.  ``x = 1`` codes as all m-1.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if x == 1.0:
        return (p.m - 1,) * depth
    return tuple(_coding_digits(x, p, depth))


def coding(x: float, p: Partition) -> Iterator[int]:
    """Lazy infinite coding of ``x``: yields digits forever."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 1.0:
        while True:
            yield p.m - 1
    base = 0.0
    scale = 1.0
    b = p.breakpoints
    lens = p.lengths
    while True:
        # Largest digit whose child base does not exceed x.  Comparing
        # against the same float expressions word_base would produce keeps
        # code_point and word_base exactly consistent.
        d = 0
        for cand in range(1, p.m):
            if base + b[cand] * scale <= x:
                d = cand
            else:
                break
        yield d
        base += b[d] * scale
        scale *= lens[d]


def _coding_digits(x: float, p: Partition, depth: int) -> list[int]:
    gen = coding(x, p)
    return [next(gen) for _ in range(depth)]


def level_bases(p: Partition, depth: int) -> np.ndarray:
    """Left endpoints of all m**depth cells at a level, in base order."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if depth > DEFAULT_MAX_DEPTH:
        raise ValueError(f"depth {depth} exceeds cap {DEFAULT_MAX_DEPTH}")
    b = np.asarray(p.breakpoints[:-1], dtype=float)
    lens = p.lengths_array
    bases = np.zeros(1)
    widths = np.ones(1)
    for _ in range(depth):
        bases = (bases[:, None] + b[None, :] * widths[:, None]).ravel()
        widths = (widths[:, None] * lens[None, :]).ravel()
    return bases


def level_widths(p: Partition, depth: int) -> np.ndarray:
    """Widths of all m**depth cells at a level, in base order."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if depth > DEFAULT_MAX_DEPTH:
        raise ValueError(f"depth {depth} exceeds cap {DEFAULT_MAX_DEPTH}")
    lens = p.lengths_array
    widths = np.ones(1)
    for _ in range(depth):
        widths = (widths[:, None] * lens[None, :]).ravel()
    return widths
