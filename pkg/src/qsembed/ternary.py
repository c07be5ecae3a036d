"""Ternary intervals [k 3^-l, (k+1) 3^-l) of the line, extended 1-periodically.

An address stores its digits packed into one integer ``index`` (base 3, most
significant digit first) plus the number of unit periods it sits to the right
of [0, 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

_CHUNK = 30
_CHUNK_POW = 3**_CHUNK


def to_base3(n: int, width: int) -> tuple:
    """Digits of n in base 3, left-padded to ``width``."""
    if n < 0:
        raise ValueError("negative index")
    chunks = []
    while n:
        n, rem = divmod(n, _CHUNK_POW)
        chunks.append(rem)
    digits = []
    for rem in reversed(chunks):
        block = []
        for _ in range(_CHUNK):
            rem, d = divmod(rem, 3)
            block.append(d)
        digits.extend(reversed(block))
    digits = digits[-width:] if width else []
    if len(digits) < width:
        digits = [0] * (width - len(digits)) + digits
    return tuple(digits)


@dataclass(frozen=True)
class TernaryAddress:
    level: int
    index: int
    wrap: int = 0

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.index < 3**self.level:
            raise ValueError(f"index {self.index} out of range for level {self.level}")

    @classmethod
    def from_digits(cls, digits, wrap: int = 0) -> "TernaryAddress":
        idx = 0
        for d in digits:
            if d not in (0, 1, 2):
                raise ValueError(f"bad ternary digit {d!r}")
            idx = 3 * idx + d
        return cls(len(digits), idx, wrap)

    @cached_property
    def digits(self) -> tuple:
        return to_base3(self.index, self.level)

    def digit(self, position: int) -> int:
        """Digit at 1-based ``position`` (1 = most significant)."""
        if not 1 <= position <= self.level:
            raise IndexError(position)
        return (self.index // 3 ** (self.level - position)) % 3

    @property
    def width(self) -> Fraction:
        return Fraction(1, 3**self.level)

    @property
    def left(self) -> Fraction:
        return self.wrap + Fraction(self.index, 3**self.level)

    @property
    def right(self) -> Fraction:
        return self.left + self.width

    def parent(self, level: int) -> "TernaryAddress":
        if not 0 <= level <= self.level:
            raise ValueError("parent level out of range")
        return TernaryAddress(level, self.index // 3 ** (self.level - level), self.wrap)

    def children(self):
        return [TernaryAddress(self.level + 1, 3 * self.index + c, self.wrap) for c in range(3)]

    def contains(self, other: "TernaryAddress") -> bool:
        return other.level >= self.level and other.wrap == self.wrap and other.parent(self.level).index == self.index

    def text(self) -> str:
        body = "0." + "".join(map(str, self.digits)) + "(3)"
        return body if self.wrap == 0 else f"{self.wrap}+{body}"

    @classmethod
    def parse(cls, text: str) -> "TernaryAddress":
        wrap = 0
        if "+" in text:
            head, text = text.split("+", 1)
            wrap = int(head)
        if text.endswith("(3)"):
            text = text[:-3]
        digits = text[2:]
        if not text.startswith("0.") or any(c not in "012" for c in digits):
            raise ValueError(f"not a ternary address: {text!r}")
        return cls.from_digits([int(c) for c in digits], wrap)

    def __str__(self):
        return self.text()


def address_of(t, level: int) -> TernaryAddress:
    """The level-``level`` interval [a, a + 3^-level) containing t (floor)."""
    t = Fraction(t)
    wrap = math.floor(t)
    idx = math.floor((t - wrap) * 3**level)
    return TernaryAddress(level, idx, wrap)


def right_neighbor(a: TernaryAddress) -> TernaryAddress:
    if a.index + 1 < 3**a.level:
        return TernaryAddress(a.level, a.index + 1, a.wrap)
    return TernaryAddress(a.level, 0, a.wrap + 1)


def left_neighbor(a: TernaryAddress) -> TernaryAddress:
    if a.index > 0:
        return TernaryAddress(a.level, a.index - 1, a.wrap)
    return TernaryAddress(a.level, 3**a.level - 1, a.wrap - 1)


def ones_count_in(a: TernaryAddress, J) -> int:
    """Number of positions j <= level with j in J and digit_j == 1.

    ``J`` is anything with ``positions_upto(level)`` (an IndexSet) or a plain
    container of positions.
    """
    if hasattr(J, "positions_upto"):
        positions = J.positions_upto(a.level)
    else:
        positions = [j for j in J if 1 <= j <= a.level]
    if len(positions) * 4 > a.level:
        digits = a.digits
        return sum(1 for j in positions if digits[j - 1] == 1)
    return sum(1 for j in positions if a.digit(j) == 1)


def is_ternary_rational(t, level: int) -> bool:
    return (Fraction(t) * 3**level).denominator == 1


def truncate(t, level: int):
    """Floor t to the level grid; returns (truncated, dropped amount)."""
    t = Fraction(t)
    a = math.floor(t * 3**level)
    tt = Fraction(a, 3**level)
    return tt, t - tt
