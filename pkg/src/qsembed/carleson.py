"""Carleson coefficients a_I on the S-levels and the finite Carleson series.

Two independent routes compute Carleson sums: brute-force enumeration of all
sub-intervals (``carleson_sum``) and a closed form (``carleson_ratio_closed``).
The closed form uses the fact that a_I depends only on the last digit of I
that is not 2, so the sum over the sub-intervals of J at one level reduces to
a sum over digit positions.
"""
from __future__ import annotations

import os
import random
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import kernels
from .exact import sign
from .riesz import RieszMeasure
from .ternary import TernaryAddress, address_of, right_neighbor


class SeriesError(ValueError):
    """The finite construction cannot proceed (C too small or saturated budget)."""


DEFAULT_BUDGET = 3**10


class CarlesonSystem:
    """A measure together with the levelled family S_k = ternary level e_k."""

    def __init__(self, measure: RieszMeasure, exponents):
        self.measure = measure
        self.exponents = tuple(exponents)
        if not self.exponents or self.exponents[0] != 0:
            raise ValueError("S-levels must start with e_0 = 0")
        self._profiles = {}

    @property
    def depth(self) -> int:
        return len(self.exponents) - 1

    def generation(self, I: TernaryAddress) -> int:
        try:
            return self.exponents.index(I.level)
        except ValueError:
            raise ValueError(f"level {I.level} is not an S-level") from None

    # coefficients ------------------------------------------------------------

    def coefficient(self, I: TernaryAddress) -> Fraction:
        """a_I = (mu(I^r) - mu(I)) / mu(I) with the periodic right neighbour."""
        self.generation(I)
        mu = self.measure
        return mu.theta(right_neighbor(I)) / mu.theta(I) - 1

    def profile(self, level: int) -> np.ndarray:
        prof = self._profiles.get(level)
        if prof is None:
            positions = self.measure.index.positions_upto(level)
            prof = kernels.ones_profile(level, positions)
            self._profiles[level] = prof
        return prof

    def _abs_coefficients(self, level):
        """|a_I| for the three possible jumps of the marked-ones count."""
        D = self.measure.heavy / self.measure.light
        return {1: D - 1, 0: Fraction(0), -1: 1 - 1 / D}

    def level_table(self, level: int):
        """(ones profile, jump to the right neighbour) for every cell."""
        prof = self.profile(level)
        jump = np.roll(prof, -1) - prof
        return prof, jump

    def block_weight_sums(self, k: int, m: int):
        """sum of |a_I| mu(I) over I in S_m inside each J in S_k (enumeration)."""
        lk, lm = self.exponents[k], self.exponents[m]
        prof, jump = self.level_table(lm)
        total_marked = self.measure.index.count_upto(lm)
        K = 3 * (total_marked + 1)
        keys = prof.astype(np.int64) * 3 + (jump.astype(np.int64) + 1)
        nblocks = 3**lk
        block = np.repeat(np.arange(nblocks, dtype=np.int64), 3 ** (lm - lk))
        counts = np.bincount(block * K + keys, minlength=nblocks * K).reshape(nblocks, K)
        absa = self._abs_coefficients(lm)
        values = []
        scale = Fraction(1, 3**lm)
        for key in range(K):
            ones, j = divmod(key, 3)
            values.append(absa[j - 1] * self.measure.theta_from_pair(ones, total_marked - ones) * scale)
        nz = [key for key in range(K) if values[key] != 0]
        out = []
        for row in counts:
            out.append(sum((int(row[key]) * values[key] for key in nz if row[key]), Fraction(0)))
        return out

    def carleson_sum(self, J: TernaryAddress, depth: int | None = None):
        """(sum over I in S, I in J, gen(I) <= depth of |a_I| mu(I), sum / mu(J))."""
        depth = self.depth if depth is None else depth
        k = self.generation(J)
        if J.wrap:
            J = TernaryAddress(J.level, J.index)
        total = Fraction(0)
        for m in range(k, depth + 1):
            lm = self.exponents[m]
            sub = 3 ** (lm - J.level)
            for idx in range(J.index * sub, (J.index + 1) * sub):
                I = TernaryAddress(lm, idx)
                a = self.coefficient(I)
                if a:
                    total += abs(a) * self.measure.mu(I)
        return total, total / self.measure.mu(J)

    def carleson_ratio_closed(self, J: TernaryAddress, depth: int | None = None) -> Fraction:
        depth = self.depth if depth is None else depth
        k = self.generation(J)
        mu = self.measure
        absa = abs(self.coefficient(J))
        ratio = absa
        lk = self.exponents[k]
        for m in range(k + 1, depth + 1):
            lm = self.exponents[m]
            ratio += absa * self._tail_product(lk, lm)
            inner = Fraction(0)
            for p in mu.index.positions_between(lk, lm):
                inner += self._tail_product(p, lm)
            ratio += 2 * mu.alpha * inner
        return ratio

    def _tail_product(self, p: int, level: int) -> Fraction:
        # prod over q in (p, level] of w_q(2) / 3
        c = self.measure.index.count_between(p, level)
        return self.measure.light**c / 3 ** (level - p)

    def ratios_exhaustive(self, depth: int | None = None, budget: int = DEFAULT_BUDGET):
        """ratio(J) for every J in S_k, k <= depth, by enumeration."""
        depth = self.depth if depth is None else depth
        if 3 ** self.exponents[depth] > budget:
            raise BudgetExceeded(f"3^{self.exponents[depth]} cells exceed budget {budget}")
        out = {}
        for k in range(depth + 1):
            lk = self.exponents[k]
            sums = [Fraction(0)] * 3**lk
            for m in range(k, depth + 1):
                for j, w in enumerate(self.block_weight_sums(k, m)):
                    sums[j] += w
            prof = self.profile(lk)
            total_marked = self.measure.index.count_upto(lk)
            scale = Fraction(1, 3**lk)
            out[k] = [
                s / (self.measure.theta_from_pair(int(o), total_marked - int(o)) * scale) for s, o in zip(sums, prof)
            ]
        return out

    def verify_G2(self, depth: int | None = None, samples: int = 10**4, seed: int = 0, budget: int = DEFAULT_BUDGET):
        """Max Carleson ratio over S_0..S_depth against the analytic bound.

        Enumerable systems are scanned exhaustively; in addition ``samples``
        random chains are evaluated through the closed form.  When both
        routes ran, every sampled ratio must equal its exhaustive value.
        """
        depth = self.depth if depth is None else depth
        from .params import derived_constants

        dc = derived_constants(self.measure.alpha)
        c_emp = Fraction(0)
        witness = None
        exhaustive = None
        if 3 ** self.exponents[depth] <= budget:
            exhaustive = self.ratios_exhaustive(depth, budget)
            for k, ratios in exhaustive.items():
                for j, r in enumerate(ratios):
                    if r > c_emp:
                        c_emp, witness = r, TernaryAddress(self.exponents[k], j)
        rng = random.Random(seed)
        sampled = 0
        agree = True
        L = self.exponents[depth]
        for _ in range(samples):
            leaf = TernaryAddress(L, rng.randrange(3**L))
            for k in range(depth + 1):
                J = leaf.parent(self.exponents[k])
                r = self.carleson_ratio_closed(J, depth)
                sampled += 1
                if exhaustive is not None and exhaustive[k][J.index] != r:
                    agree = False
                if r > c_emp:
                    c_emp, witness = r, J
        return G2Report(
            depth=depth,
            c_emp=c_emp,
            witness=witness,
            analytic_bound=dc.C_inf_analytic,
            holds=c_emp <= dc.C_inf_analytic and agree,
            exhaustive_levels=sorted(exhaustive) if exhaustive is not None else [],
            sampled_ratios=sampled,
            routes_agree=agree,
        )

    # series ------------------------------------------------------------------

    def build_series(self, depth: int | None = None, C=None, budget: int = DEFAULT_BUDGET) -> "CarlesonSeries":
        """Finite Carleson series Delta_0..Delta_depth on the cells of S_depth.

        Built top-down from Delta_depth = a_I, then for each J in S_k
        Delta_k = sign(a_J) tau_J (C - sum_{j>k} |Delta_j|) with tau_J fixed by
        the integral condition.  ``C`` defaults to the exact empirical
        Carleson constant; a larger override is honoured.
        """
        depth = self.depth if depth is None else depth
        L = self.exponents[depth]
        ncells = 3**L
        if ncells > budget:
            raise BudgetExceeded(f"3^{L} cells exceed budget {budget}")
        c_emp = self.verify_G2(depth, samples=0, budget=budget).c_emp
        C = c_emp if C is None else max(Fraction(C), c_emp)
        prof = self.profile(L)
        marked = self.measure.index.count_upto(L)
        scale = Fraction(1, ncells)
        cell_mass = [self.measure.theta_from_pair(int(o), marked - int(o)) * scale for o in prof]
        abs_sum = [Fraction(0)] * ncells
        deltas = [None] * (depth + 1)
        taus = {}
        for k in range(depth, -1, -1):
            lk = self.exponents[k]
            prof_k, jump_k = self.level_table(lk)
            absa = self._abs_coefficients(lk)
            D = self.measure.heavy / self.measure.light
            signed = {1: D - 1, 0: Fraction(0), -1: 1 / D - 1}
            marked_k = self.measure.index.count_upto(lk)
            block = 3 ** (L - lk)
            delta = [Fraction(0)] * ncells
            for j in range(3**lk):
                a = signed[int(jump_k[j])]
                if a == 0:
                    continue
                lo, hi = j * block, (j + 1) * block
                if k == depth:
                    delta[lo] = a
                    continue
                muJ = self.measure.theta_from_pair(int(prof_k[j]), marked_k - int(prof_k[j])) / 3**lk
                denom = sum((C - abs_sum[c]) * cell_mass[c] for c in range(lo, hi))
                if denom == 0:
                    raise SeriesError(f"budget saturated on level {k} interval {j}; increase C")
                tau = absa[int(jump_k[j])] * muJ / denom
                if tau > 1:
                    raise SeriesError(f"tau = {tau} > 1 on level {k} interval {j}; C = {C} is too small")
                taus[(k, j)] = tau
                s = sign(a)
                for c in range(lo, hi):
                    delta[c] = s * tau * (C - abs_sum[c])
            for c in range(ncells):
                abs_sum[c] += abs(delta[c])
            deltas[k] = delta
        return CarlesonSeries(self.exponents[: depth + 1], C, deltas, cell_mass, taus, self.measure)


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class G2Report:
    depth: int
    c_emp: Fraction
    witness: TernaryAddress | None
    analytic_bound: Fraction
    holds: bool
    exhaustive_levels: list
    sampled_ratios: int
    routes_agree: bool = True

    def as_dict(self):
        from .exact import mirror

        return {
            "depth": self.depth,
            "C_emp": mirror(self.c_emp),
            "witness": None if self.witness is None else self.witness.text(),
            "analytic_bound": mirror(self.analytic_bound),
            "holds": self.holds,
            "exhaustive_levels": self.exhaustive_levels,
            "sampled_ratios": self.sampled_ratios,
            "routes_agree": self.routes_agree,
        }


@dataclass
class CarlesonSeries:
    exponents: tuple
    C: Fraction
    deltas: list  # deltas[k][cell], cells of level exponents[-1]
    cell_mass: list
    taus: dict = field(default_factory=dict)
    measure: RieszMeasure | None = None

    def __post_init__(self):
        self._prefix = None
        self._mass_prefix = None

    @property
    def depth(self) -> int:
        return len(self.exponents) - 1

    @property
    def cell_level(self) -> int:
        return self.exponents[-1]

    @property
    def ncells(self) -> int:
        return len(self.cell_mass)

    def _build_prefix(self):
        mass = [Fraction(0)]
        for m in self.cell_mass:
            mass.append(mass[-1] + m)
        prefix = []
        for delta in self.deltas:
            row = [Fraction(0)]
            for d, m in zip(delta, self.cell_mass):
                row.append(row[-1] + d * m if d else row[-1])
            prefix.append(row)
        self._mass_prefix, self._prefix = mass, prefix

    def integral(self, k: int, x) -> Fraction:
        """int_0^x Delta_k dmu for x in [0, 1]."""
        if self._prefix is None:
            self._build_prefix()
        x = Fraction(x)
        if not 0 <= x <= 1:
            raise ValueError("x must lie in [0, 1]")
        if x == 1:
            return self._prefix[k][-1]
        cell = address_of(x, self.cell_level)
        out = self._prefix[k][cell.index]
        if x != cell.left and self.deltas[k][cell.index]:
            out += self.deltas[k][cell.index] * self.measure.mu_interval(cell.left, x)
        return out

    def cumulative_mass(self, x) -> Fraction:
        if self._prefix is None:
            self._build_prefix()
        x = Fraction(x)
        if x == 1:
            return self._mass_prefix[-1]
        cell = address_of(x, self.cell_level)
        out = self._mass_prefix[cell.index]
        if x != cell.left:
            out += self.measure.mu_interval(cell.left, x)
        return out

    def abs_sums(self):
        return [sum(abs(self.deltas[k][c]) for k in range(self.depth + 1)) for c in range(self.ncells)]

    def verify(self, system: CarlesonSystem):
        """Properties (I), (II), (III) checked exactly; returns a dict of verdicts."""
        L = self.cell_level
        prop_I, prop_II = True, True
        witness_I = witness_II = None
        for k in range(self.depth + 1):
            lk = self.exponents[k]
            block = 3 ** (L - lk)
            for j in range(3**lk):
                J = TernaryAddress(lk, j)
                a = system.coefficient(J)
                lo, hi = j * block, (j + 1) * block
                integral = sum((self.deltas[k][c] * self.cell_mass[c] for c in range(lo, hi)), Fraction(0))
                if integral != a * system.measure.mu(J):
                    prop_I, witness_I = False, (k, j)
                s = sign(a)
                for c in range(lo, hi):
                    d = self.deltas[k][c]
                    if (s == 0 and d != 0) or (s != 0 and d != 0 and sign(d) != s):
                        prop_II, witness_II = False, (k, j, c)
        sums = self.abs_sums()
        worst = max(sums) if sums else Fraction(0)
        taus_ok = all(0 < t <= 1 for t in self.taus.values())
        return {
            "I": prop_I,
            "I_witness": witness_I,
            "II": prop_II,
            "II_witness": witness_II,
            "III": worst <= self.C,
            "max_abs_sum": worst,
            "C": self.C,
            "taus_in_unit_interval": taus_ok,
        }

    # binary cache --------------------------------------------------------------

    MAGIC = b"QSCS"
    VERSION = 1

    def to_bytes(self, params_hash: str) -> bytes:
        out = [self.MAGIC, struct.pack(">H", self.VERSION), bytes.fromhex(params_hash)]
        out.append(struct.pack(">II", self.depth, len(self.exponents)))
        out.append(struct.pack(f">{len(self.exponents)}I", *self.exponents))
        out.append(_pack_fraction(self.C))
        out.append(struct.pack(">I", self.ncells))
        for m in self.cell_mass:
            out.append(_pack_fraction(m))
        for row in self.deltas:
            for d in row:
                out.append(_pack_fraction(d))
        out.append(struct.pack(">I", len(self.taus)))
        for (k, j), t in sorted(self.taus.items()):
            out.append(struct.pack(">II", k, j))
            out.append(_pack_fraction(t))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, blob: bytes, params_hash: str, measure=None):
        """Decode a cache blob; None when the header does not match."""
        view = memoryview(blob)
        if bytes(view[:4]) != cls.MAGIC:
            return None
        (version,) = struct.unpack(">H", view[4:6])
        if version != cls.VERSION or bytes(view[6:38]).hex() != params_hash:
            return None
        pos = 38
        depth, nexp = struct.unpack(">II", view[pos : pos + 8])
        pos += 8
        exponents = struct.unpack(f">{nexp}I", view[pos : pos + 4 * nexp])
        pos += 4 * nexp
        C, pos = _unpack_fraction(view, pos)
        (ncells,) = struct.unpack(">I", view[pos : pos + 4])
        pos += 4
        mass = []
        for _ in range(ncells):
            q, pos = _unpack_fraction(view, pos)
            mass.append(q)
        deltas = []
        for _ in range(depth + 1):
            row = []
            for _ in range(ncells):
                q, pos = _unpack_fraction(view, pos)
                row.append(q)
            deltas.append(row)
        (ntaus,) = struct.unpack(">I", view[pos : pos + 4])
        pos += 4
        taus = {}
        for _ in range(ntaus):
            k, j = struct.unpack(">II", view[pos : pos + 8])
            pos += 8
            taus[(k, j)], pos = _unpack_fraction(view, pos)
        return cls(tuple(exponents), C, deltas, mass, taus, measure)


def _pack_int(n: int) -> bytes:
    raw = n.to_bytes((n.bit_length() + 8) // 8, "big", signed=True)
    return struct.pack(">I", len(raw)) + raw


def _pack_fraction(q: Fraction) -> bytes:
    return _pack_int(q.numerator) + _pack_int(q.denominator)


def _unpack_int(view, pos):
    (n,) = struct.unpack(">I", view[pos : pos + 4])
    pos += 4
    return int.from_bytes(view[pos : pos + n], "big", signed=True), pos + n


def _unpack_fraction(view, pos):
    num, pos = _unpack_int(view, pos)
    den, pos = _unpack_int(view, pos)
    return Fraction(num, den), pos


def cache_dir() -> Path:
    return Path(os.environ.get("QSEMBED_CACHE_DIR", Path.home() / ".cache" / "qsembed"))


def cached_series(system: CarlesonSystem, params_hash: str, depth=None, C=None, use_cache=True):
    """build_series with an on-disk cache keyed by the params hash."""
    depth = system.depth if depth is None else depth
    path = cache_dir() / f"series-{params_hash[:16]}-N{depth}.bin"
    if use_cache and path.exists():
        series = CarlesonSeries.from_bytes(path.read_bytes(), params_hash, system.measure)
        if series is not None and series.depth == depth and (C is None or series.C >= Fraction(C)):
            return series
    series = system.build_series(depth, C)
    if use_cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(series.to_bytes(params_hash))
        tmp.replace(path)
    return series
