"""Nested closed-interval families of the Cantor set E in [-1/2, 1/2]."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .params import DyadicExponent, Params, branching_numbers, gap_lengths

HALF = Fraction(1, 2)


class NotInCantorSet(ValueError):
    def __init__(self, y, level):
        super().__init__(f"{y} falls in a gap at level {level}")
        self.y = y
        self.level = level


class BudgetExceeded(RuntimeError):
    """Enumeration larger than the configured budget; use sampled mode."""


@dataclass(frozen=True)
class CantorAddress:
    path: tuple

    @property
    def depth(self) -> int:
        return len(self.path)

    def prefix(self, k: int) -> "CantorAddress":
        return CantorAddress(self.path[:k])

    def common_depth(self, other: "CantorAddress") -> int:
        n = 0
        for a, b in zip(self.path, other.path):
            if a != b:
                break
            n += 1
        return n


@dataclass(frozen=True)
class CantorLevels:
    """m_n, r_n, gap_n and stride_n for n = 1..depth (index 0 is the root)."""

    m: tuple
    r: tuple
    gap: tuple
    exponents: tuple

    @property
    def depth(self) -> int:
        return len(self.m) - 1

    def stride(self, n: int) -> Fraction:
        return self.r[n] + self.gap[n]

    def count(self, n: int) -> int:
        return math.prod(self.m[1 : n + 1])

    def left(self, a: CantorAddress) -> Fraction:
        x = -HALF
        for k, i in enumerate(a.path, start=1):
            if not 0 <= i < self.m[k]:
                raise ValueError(f"child index {i} out of range at level {k}")
            x += i * self.stride(k)
        return x

    def interval(self, a: CantorAddress):
        left = self.left(a)
        return left, left + self.r[a.depth]

    def midpoint(self, a: CantorAddress) -> Fraction:
        return self.left(a) + self.r[a.depth] / 2

    def parent_midpoint(self, y, k: int) -> Fraction:
        """Midpoint of the level-k interval containing y (an address or a point)."""
        if not isinstance(y, CantorAddress):
            y = self.locate(y, k)
        if k > y.depth:
            raise ValueError(f"address of depth {y.depth} has no level-{k} parent")
        return self.midpoint(y.prefix(k))

    def midpoint_chain(self, a: CantorAddress) -> list:
        """[y_0, y_1, ..., y_depth] computed incrementally."""
        out = [Fraction(0)]
        left = -HALF
        for k, i in enumerate(a.path, start=1):
            left += i * self.stride(k)
            out.append(left + self.r[k] / 2)
        return out

    def locate(self, y, depth: int) -> CantorAddress:
        y = Fraction(y)
        if not -HALF <= y <= HALF:
            raise NotInCantorSet(y, 0)
        path = []
        left = -HALF
        for k in range(1, depth + 1):
            stride = self.stride(k)
            off = y - left
            i = min(math.floor(off / stride), self.m[k] - 1)
            if off - i * stride > self.r[k]:
                raise NotInCantorSet(y, k)
            path.append(i)
            left += i * stride
        return CantorAddress(tuple(path))

    def enumerate_intervals(self, n: int, budget: int = 10**6) -> Iterator[CantorAddress]:
        total = self.count(n)
        if total > budget:
            raise BudgetExceeded(f"level {n} has {total} intervals (budget {budget}); use sampled mode")
        return self._walk(n)

    def _walk(self, n: int):
        if n == 0:
            yield CantorAddress(())
            return
        for parent in self._walk(n - 1):
            for i in range(self.m[n]):
                yield CantorAddress(parent.path + (i,))

    def random_address(self, rng, depth: int) -> CantorAddress:
        return CantorAddress(tuple(rng.randrange(self.m[k]) for k in range(1, depth + 1)))

    def write_csv(self, path, n: int, budget: int = 10**6):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["path", "left", "midpoint", "right"])
            for a in self.enumerate_intervals(n, budget):
                left, right = self.interval(a)
                w.writerow([".".join(map(str, a.path)), str(left), str(left + self.r[n] / 2), str(right)])


def levels_from_exponents(s: DyadicExponent, exponents) -> CantorLevels:
    exponents = tuple(exponents)
    ms = branching_numbers(s, exponents)
    gaps = gap_lengths(exponents, ms)
    r = tuple(Fraction(1, 3**e) for e in exponents)
    return CantorLevels((1,) + ms, r, (Fraction(0),) + gaps, exponents)


def build_levels(p: Params) -> CantorLevels:
    return levels_from_exponents(p.s, p.exponents)
