"""The Riesz-product doubling measure, its densities and f(t) = mu([0, t]).

Densities are kept as exponent pairs: a level-l ternary interval with O
marked 1-digits has density (1+2a)^O (1-a)^(|J_l| - O).  The rational is only
materialised on demand.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .exact import ceil_log3_inverse, log3
from .params import DyadicExponent, Params, branching_numbers, gap_lengths
from .ternary import TernaryAddress, address_of, ones_count_in


class NotTernaryRational(ValueError):
    pass


def _merge(ranges):
    out = []
    for lo, hi in sorted(ranges):
        if lo > hi:
            continue
        if out and lo <= out[-1][1] + 1:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return tuple(out)


@dataclass(frozen=True)
class IndexSet:
    """Marked digit positions, stored as sorted disjoint inclusive ranges.

    Positions are 1-based digit positions: position p carries the factor
    1 + a h(3^(p-1) x).  Windowed sets are described by frequency windows
    on j = p - 1; custom sets list positions directly.
    """

    ranges: tuple
    mode: str = "custom"

    @classmethod
    def custom(cls, positions) -> "IndexSet":
        positions = sorted(set(int(p) for p in positions))
        if positions and positions[0] < 1:
            raise ValueError("digit positions are 1-based")
        return cls(_merge((p, p) for p in positions), "custom")

    @classmethod
    def windowed(cls, s: DyadicExponent, exponents, threshold: int) -> "IndexSet":
        """j in J iff j > threshold and 3^(n-1) r_n < 3^-j <= s_n for some n >= 1."""
        exponents = tuple(exponents)
        gaps = gap_lengths(exponents, branching_numbers(s, exponents))
        windows = []
        for n in range(1, len(exponents)):
            lo = max(ceil_log3_inverse(gaps[n - 1]), threshold + 1)
            hi = exponents[n] - n
            if lo <= hi:
                windows.append((lo + 1, hi + 1))
        return cls(_merge(windows), "windowed")

    @classmethod
    def for_params(cls, p: Params) -> "IndexSet":
        if p.index_positions is not None:
            return cls.custom(p.index_positions)
        return cls.windowed(p.s, p.exponents, p.g0_threshold)

    @cached_property
    def _his(self):
        return [hi for _, hi in self.ranges]

    def contains_position(self, pos: int) -> bool:
        k = bisect.bisect_left(self._his, pos)
        return k < len(self.ranges) and self.ranges[k][0] <= pos

    def frequency_to_position(self, j: int) -> int:
        return j + 1 if self.mode == "windowed" else j

    def count_upto(self, level: int) -> int:
        """|J_level|: marked positions in [1, level], no enumeration."""
        total = 0
        for lo, hi in self.ranges:
            if lo > level:
                break
            total += min(hi, level) - lo + 1
        return total

    def count_between(self, lo_excl: int, hi_incl: int) -> int:
        return self.count_upto(hi_incl) - self.count_upto(lo_excl)

    def positions_upto(self, level: int) -> list:
        out = []
        for lo, hi in self.ranges:
            if lo > level:
                break
            out.extend(range(lo, min(hi, level) + 1))
        return out

    def positions_between(self, lo_excl: int, hi_incl: int) -> list:
        return [p for p in self.positions_upto(hi_incl) if p > lo_excl]

    @property
    def max_position(self) -> int:
        return self.ranges[-1][1] if self.ranges else 0

    def __len__(self):
        return sum(hi - lo + 1 for lo, hi in self.ranges)


def index_contains(j: int, J: IndexSet) -> bool:
    """Frequency j in J (windowed mode: factor h(3^j x), i.e. digit position j + 1)."""
    if j < 0:
        return False
    return J.contains_position(J.frequency_to_position(j))


@dataclass(frozen=True)
class MeasureValue:
    """mu(I) = (1+2a)^ones (1-a)^others 3^-level."""

    ones: int
    others: int
    level: int
    alpha: Fraction

    @cached_property
    def theta(self) -> Fraction:
        return (1 + 2 * self.alpha) ** self.ones * (1 - self.alpha) ** self.others

    @cached_property
    def value(self) -> Fraction:
        return self.theta / 3**self.level

    @property
    def log3(self) -> float:
        return log3(self.value)


class RieszMeasure:
    def __init__(self, alpha, index: IndexSet):
        self.alpha = Fraction(alpha)
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must lie in [0, 1)")
        self.index = index
        self._theta_cache = {}

    @classmethod
    def for_params(cls, p: Params) -> "RieszMeasure":
        return cls(p.alpha, IndexSet.for_params(p))

    # factors ---------------------------------------------------------------

    @property
    def heavy(self) -> Fraction:
        return 1 + 2 * self.alpha

    @property
    def light(self) -> Fraction:
        return 1 - self.alpha

    def weight(self, position: int, digit: int) -> Fraction:
        """Child-to-parent density factor of a digit at a position."""
        if not self.index.contains_position(position):
            return Fraction(1)
        return self.heavy if digit == 1 else self.light

    def theta_from_pair(self, ones: int, others: int) -> Fraction:
        key = (ones, others)
        val = self._theta_cache.get(key)
        if val is None:
            val = self.heavy**ones * self.light**others
            self._theta_cache[key] = val
        return val

    # densities and masses --------------------------------------------------

    def theta_pair(self, a: TernaryAddress):
        ones = ones_count_in(a, self.index)
        return ones, self.index.count_upto(a.level) - ones

    def theta(self, a: TernaryAddress) -> Fraction:
        return self.theta_from_pair(*self.theta_pair(a))

    def mu_ternary(self, a: TernaryAddress) -> MeasureValue:
        ones, others = self.theta_pair(a)
        return MeasureValue(ones, others, a.level, self.alpha)

    def mu(self, a: TernaryAddress) -> Fraction:
        return self.theta(a) / 3**a.level

    def decompose(self, a, b, max_level: int):
        """Maximal ternary intervals of level <= max_level tiling [a, b)."""
        a, b = Fraction(a), Fraction(b)
        scale = 3**max_level
        A, B = a * scale, b * scale
        if A.denominator != 1 or B.denominator != 1:
            raise NotTernaryRational(f"endpoints {a}, {b} are not ternary rationals at level {max_level}")
        A, B = int(A), int(B)
        if A > B:
            raise ValueError("need a <= b")
        pieces = []
        while A < B:
            k = 0
            while k < max_level and A % 3 ** (k + 1) == 0 and A + 3 ** (k + 1) <= B:
                k += 1
            level = max_level - k
            idx = A // 3**k
            wrap, idx = divmod(idx, 3**level)
            pieces.append(TernaryAddress(level, idx, wrap))
            A += 3**k
        return pieces

    def mu_decomposed(self, a, b, max_level: int) -> Fraction:
        """mu([a, b)) summed over the canonical ternary decomposition."""
        return sum((self.mu(p) for p in self.decompose(a, b, max_level)), Fraction(0))

    def cumulative(self, a: TernaryAddress) -> Fraction:
        """mu([0, left endpoint of a)) plus whole periods, one pass over the digits."""
        total = Fraction(a.wrap)
        rho = Fraction(1)
        scale = Fraction(1)
        for p, d in enumerate(a.digits, start=1):
            scale /= 3
            if d:
                if self.index.contains_position(p):
                    left_mass = self.light if d == 1 else self.light + self.heavy
                else:
                    left_mass = Fraction(d)
                total += rho * scale * left_mass
            rho *= self.weight(p, d)
        return total

    def F(self, t) -> Fraction:
        """Distribution function mu([0, t)) extended by mu([j, j+1)) = 1.

        The finite product has constant density on cells of the deepest
        marked level, so the value is exact for every rational t.
        """
        t = Fraction(t)
        level = self.index.max_position
        cell = address_of(t, level)
        return self.cumulative(cell) + self.theta(cell) * (t - cell.left)

    def mu_interval(self, a, b, max_level: int | None = None) -> Fraction:
        """mu([a, b)); with ``max_level`` the endpoints must be ternary at that level."""
        a, b = Fraction(a), Fraction(b)
        if a > b:
            raise ValueError("need a <= b")
        if max_level is not None:
            return self.mu_decomposed(a, b, max_level)
        return self.F(b) - self.F(a)

    def f(self, t, max_level: int | None = None) -> Fraction:
        return self.mu_interval(0, t, max_level)


def ternary_level(t) -> int:
    """Smallest l with t * 3^l an integer; raises for non-ternary rationals."""
    t = Fraction(t)
    den = t.denominator
    level = 0
    while den % 3 == 0:
        den //= 3
        level += 1
    if den != 1:
        raise NotTernaryRational(f"{t} has no finite ternary expansion")
    return level


def theta(a: TernaryAddress, J: IndexSet, alpha) -> Fraction:
    return RieszMeasure(alpha, J).theta(a)


def mu_ternary(a: TernaryAddress, J: IndexSet, alpha) -> MeasureValue:
    return RieszMeasure(alpha, J).mu_ternary(a)
