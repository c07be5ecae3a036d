"""Distribution of densities on S_n, Chernoff comparison and covering sums.

On an S_n interval the density is Theta_n = (1-alpha)^S (1+2alpha)^(J-S),
where J = |J_n| counts the marked positions up to level e_n and S counts
the marked digits different from 1.  Under Lebesgue measure S is binomial
with success probability 2/3, so every count below is closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath import iv
from mpmath.libmp import to_rational

from . import kernels
from .cantor import CantorAddress, CantorLevels
from .exact import compare_power3, mirror
from .riesz import IndexSet

ENUMERATION_LIMIT = 10**7


def binomial_row(J: int):
    """C(J, 0..J) by streaming the multiplicative recurrence."""
    row = [1]
    c = 1
    for k in range(J):
        c = c * (J - k) // (k + 1)
        row.append(c)
    return row


@dataclass
class DensityDistribution:
    level: int  # generation n
    e: int  # ternary level e_n
    J_count: int
    counts: list  # interval_count(k)
    masses: list  # lebesgue_mass(k)
    alpha: Fraction

    def theta_pair(self, k: int):
        """(exponent of 1-alpha, exponent of 1+2alpha)."""
        return k, self.J_count - k

    def theta(self, k: int) -> Fraction:
        a = self.alpha
        return (1 - a) ** k * (1 + 2 * a) ** (self.J_count - k)

    def mu_mass(self, k: int) -> Fraction:
        """mu of the union of S_n intervals with S = k."""
        return self.theta(k) * self.masses[k]

    def as_rows(self):
        return [
            {
                "k": k,
                "count": str(self.counts[k]),
                "lebesgue_mass": mirror(self.masses[k]),
                "theta_exponents": list(self.theta_pair(k)),
            }
            for k in range(self.J_count + 1)
        ]


def marked_count(index: IndexSet, e: int) -> int:
    return index.count_upto(e)


def density_distribution(index: IndexSet, exponents, n: int, alpha) -> DensityDistribution:
    e = exponents[n]
    J = marked_count(index, e)
    row = binomial_row(J)
    free = 3 ** (e - J)
    counts = [row[k] * 2**k * free for k in range(J + 1)]
    masses = [Fraction(row[k] * 2**k, 3**J) for k in range(J + 1)]
    return DensityDistribution(n, e, J, counts, masses, Fraction(alpha))


def enumerated_counts(index: IndexSet, e: int) -> list:
    """interval_count(k) by walking every level-e cell (oracle)."""
    if 3**e > ENUMERATION_LIMIT:
        raise ValueError(f"3^{e} cells exceed the enumeration limit")
    positions = index.positions_upto(e)
    hist = kernels.ones_histogram(e, positions)
    J = len(positions)
    counts = [0] * (J + 1)
    for ones, c in enumerate(hist.tolist()):
        if c:
            counts[J - ones] += int(c)
    return counts


# Chernoff --------------------------------------------------------------------


def exp_bracket(q: Fraction, prec: int = 128):
    """Rational (lo, hi) with lo <= exp(q) <= hi."""
    q = Fraction(q)
    iv.prec = prec
    x = iv.exp(iv.mpf(q.numerator) / iv.mpf(q.denominator))
    lo, hi = x._mpi_
    return Fraction(*to_rational(lo)), Fraction(*to_rational(hi))


@dataclass
class BadSetReport:
    J_count: int
    sigma: Fraction
    threshold: Fraction
    exact: Fraction
    chernoff: float
    chernoff_bracket: tuple
    holds: bool
    strict: bool

    def as_dict(self):
        return {
            "J_count": self.J_count,
            "sigma": str(self.sigma),
            "threshold": str(self.threshold),
            "exact": mirror(self.exact),
            "chernoff": self.chernoff,
            "holds": self.holds,
            "strict": self.strict,
        }


def bad_set_measure(J: int, sigma) -> BadSetReport:
    """Lebesgue mass of {S < (2/3 - sigma) J} against exp(-2 sigma^2 J)."""
    sigma = Fraction(sigma)
    if not 0 < sigma < Fraction(2, 3):
        raise ValueError("sigma must lie in (0, 2/3)")
    threshold = (Fraction(2, 3) - sigma) * J
    row = binomial_row(J)
    exact = Fraction(0)
    for k in range(J + 1):
        if k < threshold:
            exact += Fraction(row[k] * 2**k, 3**J)
    lo, hi = exp_bracket(-2 * sigma * sigma * J)
    return BadSetReport(
        J_count=J,
        sigma=sigma,
        threshold=threshold,
        exact=exact,
        chernoff=math.exp(-2 * float(sigma) ** 2 * J),
        chernoff_bracket=(lo, hi),
        holds=exact <= lo,
        strict=exact < lo,
    )


# good intervals and covering sums --------------------------------------------------


def theta_at_most_power3(dist: DensityDistribution, k: int, p: Fraction) -> bool:
    """theta(k) <= 3^p, decided exactly."""
    return compare_power3(dist.theta(k), Fraction(0), Fraction(1), Fraction(p)) <= 0


def good_interval_count(dist: DensityDistribution, M) -> int:
    """Number of S_n intervals I with |f(I)| <= r_n^(1+M), i.e. theta <= 3^(-M e_n)."""
    bound = -Fraction(M) * dist.e
    return sum(dist.counts[k] for k in range(dist.J_count + 1) if theta_at_most_power3(dist, k, bound))


@dataclass
class CoveringRow:
    n: int
    e: int
    J_count: int
    good: int
    cantor_count: int
    coefficient: int  # good * cantor_count^(d-1)
    exponent: Fraction  # power of 3 carried by r_n^((1+M) eps)

    @property
    def log3(self) -> float:
        if self.coefficient == 0:
            return float("-inf")
        return math.log(self.coefficient, 3) + float(self.exponent)

    def as_dict(self):
        return {
            "n": self.n,
            "e": self.e,
            "J_count": self.J_count,
            "good": str(self.good),
            "cantor_count": str(self.cantor_count),
            "coefficient": str(self.coefficient),
            "power_of_3": str(self.exponent),
            "log3_sum": self.log3,
        }


@dataclass
class CoveringCertificate:
    rows: list
    M: int
    epsilon: Fraction
    d: int
    s: Fraction
    c_mu: Fraction
    verdict: str  # "decreasing" | "not decreasing" | "identically zero" | "exponent condition unmet"
    epsilon_star: Fraction | None

    @property
    def passed(self) -> bool:
        return self.verdict in ("decreasing", "identically zero")

    def as_dict(self):
        return {
            "M": self.M,
            "epsilon": str(self.epsilon),
            "d": self.d,
            "s": str(self.s),
            "c_mu": str(self.c_mu),
            "c_mu_factor": "c_mu^epsilon multiplies every row",
            "verdict": self.verdict,
            "epsilon_star": None if self.epsilon_star is None else str(self.epsilon_star),
            "rows": [r.as_dict() for r in self.rows],
        }


def covering_rows(index, exponents, levels: CantorLevels, alpha, n_range, M, epsilon, d):
    rows = []
    for n in n_range:
        dist = density_distribution(index, exponents, n, alpha)
        good = good_interval_count(dist, M)
        cnt = levels.count(n)
        rows.append(
            CoveringRow(
                n=n,
                e=dist.e,
                J_count=dist.J_count,
                good=good,
                cantor_count=cnt,
                coefficient=good * cnt ** (d - 1),
                exponent=-(1 + Fraction(M)) * Fraction(epsilon) * dist.e,
            )
        )
    return rows


def _strictly_decreasing(rows) -> bool:
    for prev, cur in zip(rows, rows[1:]):
        if compare_power3(Fraction(cur.coefficient), cur.exponent, Fraction(prev.coefficient), prev.exponent) >= 0:
            return False
    return True


def covering_certificate(
    index, exponents, levels, alpha, s, n_range, M, epsilon, d=2, c_mu=1, eps_grid=None
) -> CoveringCertificate:
    """Exact covering sums good_n * |I_n|^(d-1) * (c_mu r_n^(1+M))^eps.

    The factor c_mu^eps is common to every row, so it does not affect the
    verdict; rows carry the remaining integer coefficient and power of 3.
    """
    s, epsilon = Fraction(s), Fraction(epsilon)
    n_range = list(n_range)
    rows = covering_rows(index, exponents, levels, alpha, n_range, M, epsilon, d)
    if (1 + M) * epsilon <= 1 + (d - 1) * s:
        verdict = "exponent condition unmet"
    elif all(r.coefficient == 0 for r in rows):
        verdict = "identically zero"
    elif _strictly_decreasing(rows):
        verdict = "decreasing"
    else:
        verdict = "not decreasing"
    eps_star = None
    grid = eps_grid if eps_grid is not None else [Fraction(k, 20) for k in range(1, 21)]
    for eps in sorted(Fraction(x) for x in grid):
        if (1 + M) * eps <= 1 + (d - 1) * s:
            continue
        trial = covering_rows(index, exponents, levels, alpha, n_range, M, eps, d)
        if any(r.coefficient for r in trial) and _strictly_decreasing(trial):
            eps_star = eps
            break
    return CoveringCertificate(rows, M, epsilon, d, s, Fraction(c_mu), verdict, eps_star)


def exponent_bookkeeping(row: CoveringRow, s: Fraction, d: int) -> dict:
    """Compare the row against 3^(e_n (1 + (d-1) s)) * r_n^((1+M) eps).

    |S_n| = 3^e_n and |I_n| = 3^(s e_n) exactly, so the gap equals
    log3(3^e_n / good) >= 0.
    """
    full = 3**row.e
    exact_counts = row.cantor_count**s.denominator == 3 ** (s.numerator * row.e) and row.good <= full
    gap = math.log(full, 3) - (math.log(row.good, 3) if row.good else float("-inf"))
    return {"counts_exact": exact_counts, "gap_log3": gap}


# product measure versus Hausdorff premeasure -------------------------------


@dataclass
class ProductRatio:
    m: int
    cover_q1: int
    cantor_count: int
    rational_factor: Fraction  # ceil(|Q1|/r_m) r_m / |Q1|
    power_of_2: Fraction  # (1 + s) / 2

    @property
    def value(self) -> float:
        return float(self.rational_factor) * 2 ** float(self.power_of_2)

    def as_dict(self):
        return {
            "m": self.m,
            "cover_q1": self.cover_q1,
            "cantor_count": str(self.cantor_count),
            "rational_factor": mirror(self.rational_factor),
            "power_of_2": str(self.power_of_2),
            "ratio": self.value,
        }


def product_measure_ratio(levels: CantorLevels, s, q1, q2: CantorAddress, depth: int) -> dict:
    """Premeasure of the product cover over the product of the two measures.

    Q2 is a level-n Cantor interval, covered by its level-m descendants of
    diameter r_m; Q1 is covered by ceil(|Q1|/r_m) intervals of length r_m.
    Each product cell has diameter sqrt(2) r_m, so the ratio is
    ceil(|Q1|/r_m) r_m / |Q1| * 2^((1+s)/2); count_m r_m^s cancels.
    """
    s = Fraction(s)
    a, b = (Fraction(v) for v in q1)
    if not 0 <= a < b <= 1:
        raise ValueError("Q1 must be a non-degenerate subinterval of [0, 1]")
    n = q2.depth
    for k, i in enumerate(q2.path, start=1):
        if not 0 <= i < levels.m[k]:
            raise ValueError(f"Q2 is not a Cantor interval: index {i} at level {k}")
    if depth < n or depth > levels.depth:
        raise ValueError("refinement depth out of range")
    length = b - a
    rows = []
    for m in range(n, depth + 1):
        r = levels.r[m]
        cover = math.ceil(length / r)
        count = math.prod(levels.m[n + 1 : m + 1])
        rows.append(ProductRatio(m, cover, count, cover * r / length, (1 + s) / 2))
    factors = [r.rational_factor for r in rows]
    spread = max(factors) / min(factors)
    return {
        "n": n,
        "q1": [str(a), str(b)],
        "rows": rows,
        "spread": spread,
        "bounded_by_4": spread <= 4,
    }
