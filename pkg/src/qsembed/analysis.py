"""Verification harness: exact structural checks and stratified samplers.

Every sampled verdict is computed from exact values.  A sample counts as a
violation only when it is violated for every value inside the truncation
interval, so a coarse truncation can never manufacture a failure.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .cantor import CantorAddress
from .carleson import BudgetExceeded
from .construction import Construction
from .embedding import EmbeddingPoint, GValue
from .exact import ceil_log3_inverse, mirror
from .ternary import TernaryAddress

EXHAUSTIVE_LEVEL = 8


@dataclass
class CheckLine:
    name: str
    passed: bool
    kind: str  # "exact" or "sampled"
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}"

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, "kind": self.kind, "detail": self.detail}


# structural checks on the measure ---------------------------------------------


def check_additivity(c: Construction, max_level: int = EXHAUSTIVE_LEVEL, chains: int = 10**4, seed: int = 0):
    """mu([0,1)) = 1 and parent = sum of children.

    Exhaustive through ``max_level`` using ones profiles; beyond that along
    random digit chains down to the deepest marked position.
    """
    mu = c.measure
    ok = mu.mu(TernaryAddress(0, 0)) == 1
    witness = None
    total = 0
    for level in range(max_level):
        parent_prof = kernels.ones_profile(level, mu.index.positions_upto(level))
        child_prof = kernels.ones_profile(level + 1, mu.index.positions_upto(level + 1))
        pm, cm = mu.index.count_upto(level), mu.index.count_upto(level + 1)
        # group children by their parent's ones count; masses depend on counts only
        parent_vals = {o: mu.theta_from_pair(o, pm - o) / 3**level for o in np.unique(parent_prof).tolist()}
        child_vals = {o: mu.theta_from_pair(o, cm - o) / 3 ** (level + 1) for o in np.unique(child_prof).tolist()}
        kids = child_prof.reshape(-1, 3)
        keys = np.unique(np.column_stack([parent_prof, kids]), axis=0)
        for row in keys.tolist():
            total += 1
            if parent_vals[row[0]] != sum(child_vals[o] for o in row[1:]):
                ok, witness = False, {"level": level, "pattern": row}
    deep = max(mu.index.max_position, max_level) + 1
    rng = random.Random(seed)
    for _ in range(chains):
        leaf = rng.randrange(3**deep)
        level = rng.randrange(deep)
        I = TernaryAddress(level, leaf // 3 ** (deep - level))
        total += 1
        if mu.mu(I) != sum(mu.mu(ch) for ch in I.children()):
            ok, witness = False, {"address": I.text()}
            break
    return CheckLine("measure_additivity", ok, "exact", {"comparisons": total, "witness": witness})


def check_doubling(c: Construction, max_level: int = EXHAUSTIVE_LEVEL):
    """Max ratio of adjacent same-level masses equals D^(max jump of ones count)."""
    mu = c.measure
    D = mu.heavy / mu.light
    best = Fraction(1)
    where = None
    for level in range(1, max_level + 1):
        prof = kernels.ones_profile(level, mu.index.positions_upto(level))
        rise, drop = kernels.adjacent_extremes(prof)
        jump = max(rise, drop)
        ratio = D**jump
        if ratio > best:
            best, where = ratio, level
    attained = mu.index.count_upto(max_level) > 0
    passed = best <= D and (best == D or not attained or mu.alpha == 0)
    return CheckLine(
        "doubling", passed, "exact", {"max_ratio": mirror(best), "D": mirror(D), "attained_at_level": where}
    )


def check_child_ratio(c: Construction, max_level: int = EXHAUSTIVE_LEVEL):
    mu = c.measure
    tau = mu.heavy / 3
    ok = True
    for level in range(max_level):
        w = max(mu.weight(level + 1, d) for d in range(3)) / 3
        ok &= w <= tau
    return CheckLine("child_ratio", ok, "exact", {"tau": mirror(tau)})


def check_G0(c: Construction, samples: int = 10**3, seed: int = 0):
    """Ternary intervals no shorter than r_{n_alpha} carry Lebesgue mass."""
    p, mu = c.params, c.measure
    top = p.exponents[p.n_alpha]
    ok = True
    witness = None
    checked = 0
    for level in range(min(top, 6) + 1):
        for j in range(3**level):
            I = TernaryAddress(level, j)
            checked += 1
            if mu.mu(I) != I.width:
                ok, witness = False, I.text()
    rng = random.Random(seed)
    for _ in range(samples):
        level = rng.randrange(top + 1)
        I = TernaryAddress(level, rng.randrange(3**level))
        checked += 1
        if mu.mu(I) != I.width:
            ok, witness = False, I.text()
    # arbitrary intervals of length >= r_{n_alpha}: |I|/3 <= mu(I) <= 2|I|
    r = p.scales.r(p.n_alpha)
    coarse_ok = True
    for _ in range(samples):
        a = Fraction(rng.randrange(3**9), 3**9)
        length = r * (1 + Fraction(rng.randrange(3**6), 3**5))
        m = mu.F(a + length) - mu.F(a)
        checked += 1
        if not length / 3 <= m <= 2 * length:
            coarse_ok, witness = False, {"a": str(a), "length": str(length)}
    return _structural("G0", c, ok and coarse_ok, {"checked": checked, "witness": witness})


def check_G1(c: Construction, samples: int = 10**3, seed: int = 0):
    """Theta(J) = Theta(I) for ternary J inside I in S_{n-1} with s_n <= |J| <= r_{n-1}."""
    p, mu, lv = c.params, c.measure, c.levels
    rng = random.Random(seed)
    windows = []
    for n in range(1, p.depth + 1):
        lo = p.exponents[n - 1]
        # largest level whose intervals are still no shorter than s_n
        hi = ceil_log3_inverse(lv.gap[n])
        if Fraction(1, 3**hi) < lv.gap[n]:
            hi -= 1
        if hi >= lo:
            windows.append((n, lo, hi))
    ok = True
    witness = None
    checked = 0
    for _ in range(samples if windows else 0):
        n, lo, hi = windows[rng.randrange(len(windows))]
        level = rng.randint(lo, hi)
        J = TernaryAddress(level, rng.randrange(3**level))
        I = J.parent(lo)
        checked += 1
        if mu.theta(J) != mu.theta(I):
            ok, witness = False, {"n": n, "J": J.text()}
    return _structural("G1", c, ok, {"checked": checked, "windows": windows, "witness": witness})


def _structural(name, c: Construction, holds: bool, detail: dict) -> CheckLine:
    """G0 and G1 are guaranteed by the frequency windows, not by custom index sets."""
    applies = c.params.index_positions is None
    detail = detail | {"holds": holds, "applies": applies}
    return CheckLine(name, holds or not applies, "exact", detail)


def check_G2(c: Construction, samples: int = 10**4, seed: int = 0):
    rep = c.system.verify_G2(samples=samples, seed=seed)
    D = c.constants.D
    # the first summand of the geometric majorant is not in the closed form
    stricter = rep.analytic_bound + 2 + (D + 1)
    detail = rep.as_dict() | {"bound_with_first_term": mirror(stricter)}
    return CheckLine("G2", rep.holds, "exact", detail)


def check_series(c: Construction):
    v = c.series.verify(c.system)
    passed = v["I"] and v["II"] and v["III"] and v["taus_in_unit_interval"]
    detail = {k: (mirror(x) if isinstance(x, Fraction) else x) for k, x in v.items()}
    return CheckLine("carleson_series", passed, "exact", detail)


# samplers ---------------------------------------------------------------------


class PointSampler:
    """Seeded draws of points in [0,1] x E^(d-1) with adversarial strata."""

    def __init__(self, c: Construction, seed: int):
        self.c = c
        self.rng = random.Random(seed)
        N = c.params.depth
        self.grid = c.params.exponents[min(2, N)]
        self.fine = c.params.exponents[N] + 6
        self.L = c.levels.depth

    def x1(self) -> Fraction:
        return Fraction(self.rng.randrange(3**self.grid + 1), 3**self.grid)

    def y(self, like: CantorAddress | None = None, keep: int | None = None) -> CantorAddress:
        lv, rng = self.c.levels, self.rng
        if like is None:
            return lv.random_address(rng, self.L)
        keep = rng.randint(0, self.L) if keep is None else keep
        tail = tuple(rng.randrange(lv.m[k]) for k in range(keep + 1, self.L + 1))
        return CantorAddress(like.path[:keep] + tail)

    def near_x1(self, x1: Fraction, tiny: bool = False) -> Fraction:
        rng = self.rng
        level = rng.randint(self.grid, self.fine) if tiny else rng.randint(1, self.grid)
        step = Fraction(rng.randint(0, 3), 3**level)
        out = x1 + step if rng.random() < 0.5 else x1 - step
        return min(max(out, Fraction(0)), Fraction(1))

    def straddle(self, y: CantorAddress) -> CantorAddress:
        """A neighbour of y across a gap at a random level."""
        lv, rng = self.c.levels, self.rng
        n = rng.randrange(self.L)
        i = y.path[n]
        m = lv.m[n + 1]
        j = i + 1 if i + 1 < m else i - 1
        if j < 0:
            return self.y(y)
        last = tuple((m_k - 1 if j > i else 0) for m_k in lv.m[n + 2 : self.L + 1])
        return CantorAddress(y.path[:n] + (j,) + tuple(x for x in last))

    def point(self, d: int) -> EmbeddingPoint:
        return EmbeddingPoint(self.x1(), tuple(self.y() for _ in range(d - 1)))

    def partner(self, p: EmbeddingPoint, stratum: int) -> EmbeddingPoint:
        if stratum == 0:
            return self.point(len(p.y) + 1)
        if stratum == 1:
            return EmbeddingPoint(self.near_x1(p.x), tuple(self.y(y) for y in p.y))
        if stratum == 2:
            return EmbeddingPoint(self.near_x1(p.x), tuple(self.straddle(y) for y in p.y))
        return EmbeddingPoint(self.near_x1(p.x, tiny=True), tuple(self.y(y) for y in p.y))

    def collinear(self, d: int):
        """x at a ternary point, a and b at equal distance on either side along L_x."""
        rng = self.rng
        level = rng.randint(1, self.grid)
        j = rng.randint(1, 3**level - 1)
        x1 = Fraction(j, 3**level)
        t = Fraction(1, 3 ** rng.randint(level, self.grid))
        ys = tuple(self.y() for _ in range(d - 1))
        return EmbeddingPoint(x1, ys), EmbeddingPoint(x1 - t, ys), EmbeddingPoint(x1 + t, ys)


STRATA = ("uniform", "local", "gap_straddle", "tiny_horizontal", "collinear")


class _FCache:
    def __init__(self, c: Construction):
        self.e = c.embedding
        self.store = {}

    def __call__(self, p: EmbeddingPoint):
        key = (p.x, tuple(y.path for y in p.y))
        v = self.store.get(key)
        if v is None:
            v = self.e.F(p)
            self.store[key] = v
        return v


def _dist2(c: Construction, p: EmbeddingPoint, q: EmbeddingPoint) -> Fraction:
    e = c.embedding
    return (p.x - q.x) ** 2 + sum((e.point(a) - e.point(b)) ** 2 for a, b in zip(p.y, q.y))


def _image_dist2(Fp, Fq):
    """(lower, upper) bracket of |F(p) - F(q)|^2."""
    lo = hi = Fraction(0)
    for u, v in zip(Fp, Fq):
        a, b = (u - v).abs_bounds()
        lo += a * a
        hi += b * b
    return lo, hi


@dataclass
class QSReport:
    samples: int
    kept: int
    max_weak_ratio: float
    max_ratio_squared: Fraction
    witness: tuple | None
    profile: list
    strata_max: dict
    violations: list

    def as_dict(self):
        return {
            "samples": self.samples,
            "kept": self.kept,
            "max_weak_ratio": self.max_weak_ratio,
            "max_ratio_squared": mirror(self.max_ratio_squared),
            "witness": None if self.witness is None else [_point_dict(p) for p in self.witness],
            "profile": self.profile,
            "strata_max": self.strata_max,
            "violations": self.violations,
        }


def _point_dict(p: EmbeddingPoint):
    return {"x": str(p.x), "y": [list(y.path) for y in p.y]}


def weak_ratio_squared(c: Construction, x, a, b, F=None):
    """Upper bracket of |F(a)-F(x)|^2 / |F(b)-F(x)|^2 (None if the denominator may vanish)."""
    F = F or c.embedding.F
    Fx, Fa, Fb = F(x), F(a), F(b)
    num = _image_dist2(Fa, Fx)[1]
    den = _image_dist2(Fb, Fx)[0]
    return None if den == 0 else num / den


def sample_weak_qs(c: Construction, n: int, seed: int = 0, bins: int = 10) -> QSReport:
    sampler = PointSampler(c, seed)
    F = _FCache(c)
    d = c.params.d
    best = Fraction(0)
    witness = None
    profile = [Fraction(0)] * bins
    strata = {name: Fraction(0) for name in STRATA}
    violations = []
    kept = 0
    for i in range(n):
        stratum = i % len(STRATA)
        if STRATA[stratum] == "collinear":
            x, a, b = sampler.collinear(d)
        else:
            x = sampler.point(d)
            a = sampler.partner(x, stratum)
            b = sampler.partner(x, stratum)
        da, db = _dist2(c, a, x), _dist2(c, b, x)
        if da > db:
            a, b, da, db = b, a, db, da
        if db == 0:
            continue
        kept += 1
        r2 = weak_ratio_squared(c, x, a, b, F)
        if da == db and r2 is not None:
            # both labellings satisfy the hypothesis
            r2b = weak_ratio_squared(c, x, b, a, F)
            if r2b is None or r2b > r2:
                a, b, r2 = b, a, r2b
        if r2 is None:
            violations.append([_point_dict(p) for p in (x, a, b)])
            continue
        t2 = da / db
        k = min(bins - 1, int(bins * float(t2) ** 0.5))
        profile[k] = max(profile[k], r2)
        strata[STRATA[stratum]] = max(strata[STRATA[stratum]], r2)
        if r2 > best:
            best, witness = r2, (x, a, b)
    return QSReport(
        samples=n,
        kept=kept,
        max_weak_ratio=float(best) ** 0.5,
        max_ratio_squared=best,
        witness=witness,
        profile=[float(v) ** 0.5 for v in profile],
        strata_max={k: float(v) ** 0.5 for k, v in strata.items()},
        violations=violations,
    )


def sample_lipschitz(c: Construction, n: int, seed: int = 0):
    """|g(x,y) - g(x',y)| <= C mu([x, x']) on stratified pairs."""
    sampler = PointSampler(c, seed)
    e = c.embedding
    C = e.C
    worst = 0.0
    violations = []
    for i in range(n):
        y = sampler.y()
        x = sampler.x1()
        stratum = i % 3
        if stratum == 0:
            xp = sampler.x1()
        elif stratum == 1:
            xp = sampler.near_x1(x)
        else:
            xp = sampler.near_x1(x, tiny=True)
        lo_x, hi_x = min(x, xp), max(x, xp)
        diff = (e.g(lo_x, y) - e.g(hi_x, y)).abs_bounds()
        m = c.measure.mu_interval(lo_x, hi_x)
        if diff[0] > C * m:
            violations.append({"x": str(lo_x), "x_prime": str(hi_x), "y": list(y.path)})
        if m:
            worst = max(worst, float(diff[1] / m))
    return CheckLine(
        "lipschitz", not violations, "sampled", {"pairs": n, "max_ratio": worst, "C": mirror(C), "violations": violations[:10]}
    )


def sample_bounds(c: Construction, n: int, seed: int = 0):
    """Two-sided comparison of |g(x) - g(b)| with mu([x1, x1 + |x - b|))."""
    sampler = PointSampler(c, seed)
    e = c.embedding
    upper_max = 0.0
    lower_min = None
    vertical_max = 0.0
    lower_count = 0
    violations = {"upper": [], "lower": [], "lipschitz": []}
    for i in range(n):
        x = EmbeddingPoint(sampler.x1(), (sampler.y(),))
        stratum = i % 4
        if stratum == 3:
            # the lower-bound stratum: |x1 - b1| <= rho |x - b|
            y = sampler.y(x.y[0])
            if y == x.y[0]:
                y = sampler.straddle(x.y[0])
            db = (e.point(y) - e.point(x.y[0])) ** 2
            b1 = x.x
            if sampler.rng.random() < 0.5:
                step = _small_step(e.rho, db, sampler.rng)
                b1 = min(Fraction(1), x.x + step)
            b = EmbeddingPoint(b1, (y,))
        else:
            b = sampler.partner(x, stratum)
        if b == x:
            continue
        rep = e.bounds_report(x, b)
        ch = rep["checks"]
        for name in ("upper", "lower", "lipschitz"):
            if ch[name]["applies"] and ch[name]["violated"]:
                violations[name].append([_point_dict(x), _point_dict(b)])
        if ch["upper"]["applies"] and ch["upper"]["ratio"] is not None:
            upper_max = max(upper_max, ch["upper"]["ratio"])
        if ch["lower"]["applies"]:
            lower_count += 1
            r = ch["lower"]["ratio"]
            lower_min = r if lower_min is None else min(lower_min, r)
        if ch["vertical"]["applies"] and ch["vertical"]["ratio"] is not None:
            vertical_max = max(vertical_max, ch["vertical"]["ratio"])
    upper = CheckLine(
        "upper_bound",
        not violations["upper"],
        "sampled",
        {"pairs": n, "max_ratio": upper_max, "constant": mirror(e.upper_constant), "violations": violations["upper"][:10]},
    )
    lower = CheckLine(
        "lower_bound",
        not violations["lower"] and (lower_min is None or lower_min > 0),
        "sampled",
        {
            "pairs_in_stratum": lower_count,
            "min_ratio": lower_min,
            "rho": mirror(e.rho),
            "constant": mirror(e.lower_constant),
            "violations": violations["lower"][:10],
        },
    )
    vertical = CheckLine("vertical_ratio", True, "sampled", {"max_ratio": vertical_max})
    return upper, lower, vertical


def _small_step(rho: Fraction, dist2: Fraction, rng) -> Fraction:
    """A ternary step h with h^2 <= rho^2 * dist2."""
    target = rho * rho * dist2
    level = 0
    while Fraction(1, 9**level) > target:
        level += 1
    level += rng.randint(0, 3)
    return Fraction(1, 3**level)


# the consolidated suite ----------------------------------------------------------


@dataclass
class SuiteReport:
    lines: list

    @property
    def exact_failures(self):
        return [ln for ln in self.lines if ln.kind == "exact" and not ln.passed]

    @property
    def ok(self) -> bool:
        return all(ln.passed for ln in self.lines)

    def as_dict(self):
        return {"ok": self.ok, "checks": [ln.as_dict() for ln in self.lines]}


def run_suite(c: Construction, samples: int = 10**4, seed: int = 0) -> SuiteReport:
    lines = [
        check_additivity(c, chains=min(samples, 10**4), seed=seed),
        check_doubling(c),
        check_child_ratio(c),
        check_G0(c, samples=min(samples, 10**3), seed=seed),
        check_G1(c, samples=min(samples, 10**3), seed=seed),
    ]
    try:
        lines.append(check_G2(c, samples=samples, seed=seed))
        lines.append(check_series(c))
    except BudgetExceeded as exc:
        lines.append(CheckLine("carleson_series", False, "exact", {"error": str(exc)}))
        return SuiteReport(lines)
    lines.append(sample_lipschitz(c, samples, seed))
    lines.extend(sample_bounds(c, samples, seed))
    qs = sample_weak_qs(c, samples, seed)
    lines.append(CheckLine("weak_qs", not qs.violations, "sampled", qs.as_dict()))
    return SuiteReport(lines)
