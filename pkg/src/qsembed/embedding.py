"""The conjugate map g on [0,1] x E and the embedding F = (f, g, ..., g).

g(x, y) = sum_k (y_{k+1} - y_k) / r_k * (mu([0, r_k)) + int_0^x Delta_k dmu),
where y_k is the midpoint of the level-k Cantor interval containing y.  A
Cantor address of depth L stands for the midpoint of its interval, so
y_k = y_L for k >= L and the series is a finite sum.  Truncating at K < L
leaves the terms K <= k < L, which are bounded in ``tail_bound``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .cantor import CantorAddress, CantorLevels
from .carleson import CarlesonSeries, CarlesonSystem
from .exact import mirror
from .riesz import RieszMeasure
from .ternary import TernaryAddress, address_of


class SeriesTooShallow(ValueError):
    pass


class AddressTooShallow(ValueError):
    pass


@dataclass(frozen=True)
class GValue:
    value: Fraction
    tail_bound: Fraction = Fraction(0)

    @property
    def lo(self) -> Fraction:
        return self.value - self.tail_bound

    @property
    def hi(self) -> Fraction:
        return self.value + self.tail_bound

    def __sub__(self, other: "GValue") -> "GValue":
        return GValue(self.value - other.value, self.tail_bound + other.tail_bound)

    def abs_bounds(self):
        """Bracket for |g| given the tail."""
        v = abs(self.value)
        return max(Fraction(0), v - self.tail_bound), v + self.tail_bound

    def as_dict(self):
        return {"value": mirror(self.value), "tail_bound": mirror(self.tail_bound)}


@dataclass(frozen=True)
class EmbeddingPoint:
    x: Fraction
    y: tuple  # CantorAddress per coordinate 2..d

    def __post_init__(self):
        object.__setattr__(self, "x", Fraction(self.x))
        if not 0 <= self.x <= 1:
            raise ValueError("x must lie in [0, 1]")
        object.__setattr__(self, "y", tuple(self.y))


def sqrt_bracket(q: Fraction, bits: int = 96):
    """Rational lo <= sqrt(q) <= hi with relative width about 2^-bits."""
    q = Fraction(q)
    if q < 0:
        raise ValueError("negative argument")
    if q == 0:
        return Fraction(0), Fraction(0)
    scale = 1 << (2 * bits)
    n = q.numerator * scale // q.denominator
    root = math.isqrt(n)
    lo = Fraction(root, 1 << bits)
    hi = Fraction(root + 1, 1 << bits)
    # the floor in n only lowers the estimate, so hi stays an upper bound
    if lo * lo == q:
        return lo, lo
    return lo, hi


class Embedding:
    def __init__(
        self,
        measure: RieszMeasure,
        levels: CantorLevels,
        series: CarlesonSeries,
        system: CarlesonSystem,
        rho=None,
        d: int = 2,
    ):
        self.measure = measure
        self.levels = levels
        self.series = series
        self.system = system
        self.d = d
        self.C = series.C
        self.exponents = system.exponents
        self._mass0 = [measure.mu(TernaryAddress(e, 0)) for e in self.exponents]
        D = measure.heavy / measure.light
        self.D = D
        tau = measure.heavy / 3
        self.tau = tau
        if rho is None:
            rho = Fraction(1) / (4 * d * max(self.C, Fraction(1)) * D**3)
        self.rho = Fraction(rho)
        self.upper_constant = 4 * D**3 * (1 + self.C) / (1 - tau)
        self.lower_constant = 1 / self.upper_constant
        self._chains = {}

    # pieces ------------------------------------------------------------------

    def r(self, k: int) -> Fraction:
        return self.levels.r[k]

    def chain(self, y: CantorAddress):
        chain = self._chains.get(y.path)
        if chain is None:
            chain = self.levels.midpoint_chain(y)
            self._chains[y.path] = chain
        return chain

    def point(self, y: CantorAddress) -> Fraction:
        return self.chain(y)[-1]

    def bracket(self, k: int, x) -> Fraction:
        """mu([0, r_k)) + int_0^x Delta_k dmu."""
        return self._mass0[k] + self.series.integral(k, x)

    def _truncation(self, y: CantorAddress, K):
        L = y.depth
        if K is None:
            K = L
        if K > L:
            raise AddressTooShallow(f"truncation {K} needs an address of depth >= {K}, got {L}")
        return K, L

    def g_zero(self, y: CantorAddress, K: int | None = None) -> GValue:
        K, L = self._truncation(y, K)
        chain = self.chain(y)
        value = Fraction(0)
        for k in range(K):
            value += self._mass0[k] / self.r(k) * (chain[k + 1] - chain[k])
        tail = Fraction(0)
        for k in range(K, L):
            tail += self._mass0[k] / self.r(k) * abs(chain[k + 1] - chain[k])
        return GValue(value, tail)

    def g(self, x, y: CantorAddress, K: int | None = None) -> GValue:
        K, L = self._truncation(y, K)
        if K > self.series.depth + 1 or L > self.series.depth + 1:
            raise SeriesTooShallow(f"series depth {self.series.depth} cannot serve truncation {K}")
        x = Fraction(x)
        chain = self.chain(y)
        value = Fraction(0)
        for k in range(K):
            dy = chain[k + 1] - chain[k]
            if dy:
                value += dy / self.r(k) * self.bracket(k, x)
        tail = Fraction(0)
        for k in range(K, L):
            dy = abs(chain[k + 1] - chain[k])
            if dy:
                I = self._cell(x, k)
                tail += dy / self.r(k) * (1 + abs(self.system.coefficient(I))) * self.measure.mu(I)
        return GValue(value, tail)

    def _cell(self, x: Fraction, k: int) -> TernaryAddress:
        level = self.exponents[k]
        if x == 1:
            return TernaryAddress(level, 3**level - 1)
        return address_of(x, level)

    def F(self, p: EmbeddingPoint, K: int | None = None):
        """(f(x), g(x, y_2), ..., g(x, y_d)) as GValues; the first has no tail."""
        if len(p.y) != self.d - 1:
            raise ValueError(f"expected {self.d - 1} Cantor coordinates")
        out = [GValue(self.measure.f(p.x))]
        out.extend(self.g(p.x, y, K) for y in p.y)
        return out

    def coordinates(self, p: EmbeddingPoint):
        return [p.x] + [self.point(y) for y in p.y]

    # bounds --------------------------------------------------------------------

    def mu_forward(self, x1: Fraction, length: Fraction) -> Fraction:
        """mu([x1, x1 + length)) on the periodic line."""
        return self.measure.F(x1 + length) - self.measure.F(x1)

    def bounds_report(self, x: EmbeddingPoint, b: EmbeddingPoint, K: int | None = None) -> dict:
        """Quantities entering the two-sided comparison of |g(x) - g(b)| with mu.

        For d > 2 every Cantor coordinate is paired with x_1 separately.
        """
        pairs = []
        for i, (yx, yb) in enumerate(zip(x.y, b.y)):
            pairs.append(self._pair_report(x.x, yx, b.x, yb, K) | {"coordinate": i + 2})
        return pairs[0] if len(pairs) == 1 else {"pairs": pairs}

    def _pair_report(self, x1, x2: CantorAddress, b1, b2: CantorAddress, K=None) -> dict:
        mu = self.measure
        gx = self.g(x1, x2, K)
        gb = self.g(b1, b2, K)
        gm = self.g(x1, b2, K)
        total = (gx - gb).abs_bounds()
        vert = (gx - gm).abs_bounds()
        horiz = (gm - gb).abs_bounds()
        px, pb = self.point(x2), self.point(b2)
        dist2 = (x1 - b1) ** 2 + (px - pb) ** 2
        dlo, dhi = sqrt_bracket(dist2)
        mu_dist = (self.mu_forward(x1, dlo), self.mu_forward(x1, dhi))
        h = abs(x1 - b1)
        mu_h = self.mu_forward(x1, h)
        lo_end, hi_end = min(x1, b1), max(x1, b1)
        mu_between = mu.mu_interval(lo_end, hi_end)
        rep = {
            "g_diff": _bracket_dict(total),
            "g_vertical": _bracket_dict(vert),
            "g_horizontal": _bracket_dict(horiz),
            "mu_dist": _bracket_dict(mu_dist),
            "mu_horizontal": mirror(mu_h),
        }
        checks = {}
        # Lipschitz in x: |g(x1,b2) - g(b1,b2)| <= C mu([x1, b1])
        checks["lipschitz"] = {
            "applies": True,
            "violated": horiz[0] > self.C * mu_between,
            "ratio": _ratio(horiz[1], mu_between),
        }
        # upper comparability
        checks["upper"] = {
            "applies": dist2 > 0,
            "violated": dist2 > 0 and total[0] > self.upper_constant * mu_dist[1],
            "ratio": _ratio(total[1], mu_dist[0]),
            "constant": mirror(self.upper_constant),
        }
        in_stratum = h * h <= self.rho**2 * dist2 and dist2 > 0
        checks["lower"] = {
            "applies": in_stratum,
            "violated": in_stratum and total[1] < self.lower_constant * mu_dist[0],
            "ratio": _ratio(total[0], mu_dist[1]),
            "constant": mirror(self.lower_constant),
        }
        if x2 == b2:
            rep["split_level"] = None
            checks["vertical"] = {"applies": False, "violated": False, "ratio": None}
        else:
            n = x2.common_depth(b2)
            yx = self.chain(x2)[n + 1]
            yb = self.chain(b2)[n + 1]
            In = self._cell(x1, n)
            main = abs(yx - yb) * mu.theta(In)
            err_mu = mu.mu(self._cell(x1, n + 1)) if n + 1 < len(self.exponents) else Fraction(0)
            err_gap = Fraction(3, 4) * self.levels.gap[n + 1]
            rep["split_level"] = n
            rep["vertical_main"] = mirror(main)
            rep["error_mu"] = mirror(err_mu)
            rep["error_gap"] = mirror(err_gap)
            checks["vertical"] = {
                "applies": True,
                "violated": False,
                "ratio": _ratio(vert[1], main + err_mu),
            }
        rep["checks"] = checks
        return rep


def _bracket_dict(pair):
    return {"lo": mirror(pair[0]), "hi": mirror(pair[1])}


def _ratio(num: Fraction, den: Fraction):
    if den == 0:
        return None if num == 0 else float("inf")
    return float(num / den)
