"""Construction constants, the parameter pipeline and structural validation."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .exact import as_fraction, rational_json, to_float


# accepted spellings of the default index mode
WINDOWED_ALIASES = ("windowed", "paper")


class ParamsError(ValueError):
    """Malformed configuration (bad types, missing keys, broken invariants)."""


class ConstructionError(ValueError):
    """The Cantor construction is undefined for these parameters."""


@dataclass(frozen=True)
class DyadicExponent:
    p_s: int
    m_s: int

    def __post_init__(self):
        if self.m_s < 1 or not 0 < self.p_s < 2**self.m_s:
            raise ParamsError(f"need 0 < p_s < 2**m_s, got p_s={self.p_s}, m_s={self.m_s}")

    @property
    def value(self) -> Fraction:
        return Fraction(self.p_s, 2**self.m_s)

    @classmethod
    def from_fraction(cls, s) -> "DyadicExponent":
        s = as_fraction(s)
        den = s.denominator
        if den & (den - 1):
            raise ParamsError(f"s = {s} is not a dyadic rational")
        return cls(s.numerator, max(den.bit_length() - 1, 1) if den > 1 else 1)


@dataclass(frozen=True)
class ScaleSequence:
    """Exponents e_0 = 0 < e_1 < ... so that r_n = 3**-e_n."""

    exponents: tuple
    mode: str = "custom"

    def __post_init__(self):
        e = self.exponents
        if not e or e[0] != 0:
            raise ParamsError("scale exponents must start with e_0 = 0")
        if any(b <= a for a, b in zip(e, e[1:])):
            raise ParamsError(f"scale exponents must be strictly increasing: {e}")
        if self.mode not in ("canonical", "custom"):
            raise ParamsError(f"unknown scale mode {self.mode!r}")

    @classmethod
    def canonical(cls, s: DyadicExponent, depth: int) -> "ScaleSequence":
        return cls((0,) + tuple(2 ** (n + s.m_s) for n in range(1, depth + 1)), "canonical")

    def r(self, n: int) -> Fraction:
        return Fraction(1, 3 ** self.exponents[n])

    def __len__(self):
        return len(self.exponents)


@dataclass(frozen=True)
class Params:
    s: DyadicExponent
    alpha: Fraction
    scales: ScaleSequence
    depth: int
    n_alpha: int = 0
    d: int = 2
    M: int = 1
    epsilon: Fraction = Fraction(1, 2)
    index_positions: Optional[tuple] = None  # None selects the scale-window index set
    rho: Optional[Fraction] = None

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise ParamsError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.depth < 0 or self.depth >= len(self.scales):
            raise ParamsError("depth must be < number of scale exponents")
        if self.d < 2:
            raise ParamsError("ambient dimension d must be >= 2")
        if self.n_alpha < 0 or self.M < 1:
            raise ParamsError("n_alpha must be >= 0 and M >= 1")
        if not 0 < self.epsilon < 1:
            raise ParamsError("epsilon must lie in (0, 1)")
        if self.scales.mode == "canonical":
            expect = ScaleSequence.canonical(self.s, len(self.scales) - 1).exponents
            if self.scales.exponents != expect:
                raise ParamsError("canonical mode forces e_n = 2**(n + m_s)")

    @property
    def exponents(self) -> tuple:
        return self.scales.exponents[: self.depth + 1]

    @property
    def g0_threshold(self) -> int:
        """Largest index removed by the large-scale deletion."""
        if self.scales.mode == "canonical":
            return 2 ** (self.n_alpha + self.s.m_s)
        return self.scales.exponents[min(self.n_alpha, len(self.scales) - 1)]


@dataclass(frozen=True)
class DerivedParams:
    alpha: Fraction
    D: Fraction
    tau: Fraction
    D_prime: float
    C_inf_analytic: Fraction


@dataclass(frozen=True)
class Pipeline:
    d: int
    s: Fraction
    epsilon: Fraction
    M: int
    N_exp: int
    sigma: Fraction
    alpha_star: Fraction
    alpha_bracket: tuple
    derived: DerivedParams


def derived_constants(alpha) -> DerivedParams:
    alpha = as_fraction(alpha)
    D = (1 + 2 * alpha) / (1 - alpha)
    tau = (1 + 2 * alpha) / 3
    D_prime = -math.log(to_float(tau), 3)
    C_inf = D + 1 + (D + 1) * tau / (1 - tau)
    return DerivedParams(alpha, D, tau, D_prime, C_inf)


def _alpha_sign(alpha: Fraction, a: int, b: int, rhs: Fraction) -> int:
    # sign of (1-alpha)^a (1+2alpha)^b - rhs, all exponents integral
    lhs = (1 - alpha) ** a * (1 + 2 * alpha) ** b
    return (lhs > rhs) - (lhs < rhs)


def derive_pipeline(d: int, s, epsilon, bits: int = 64) -> Pipeline:
    """M, N, sigma and alpha for a target dimension ``epsilon``.

    alpha solves (1-a)^(2/3-sigma) (1+2a)^(1/3+sigma) = 3^-N.  Both sides are
    raised to the common denominator of the exponents so every sign test in
    the bisection is an exact integer comparison; the returned alpha is the
    upper end of the final dyadic bracket, where the left side is <= 3^-N.
    """
    s = as_fraction(s)
    epsilon = as_fraction(epsilon)
    if not (0 < s < 1 and 0 < epsilon < 1 and d >= 2):
        raise ParamsError("need 0 < s < 1, 0 < epsilon < 1, d >= 2")
    target = 1 + (d - 1) * s
    M = 1
    while (1 + M) * epsilon <= target:
        M += 1
    N = 1
    while N * (1 - s) / 2 < M:
        N += 1
    sigma = (1 - s) / 4
    ea, eb = Fraction(2, 3) - sigma, Fraction(1, 3) + sigma
    q = math.lcm(ea.denominator, eb.denominator)
    a, b = int(ea * q), int(eb * q)
    rhs = Fraction(1, 3 ** (N * q))
    lo, hi = 0, 2**bits
    scale = Fraction(1, 2**bits)
    # f(0) = 1 > rhs and f(1) = 0 < rhs
    assert _alpha_sign(Fraction(0), a, b, rhs) > 0
    assert _alpha_sign(Fraction(1), a, b, rhs) < 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _alpha_sign(mid * scale, a, b, rhs) > 0:
            lo = mid
        else:
            hi = mid
    alpha = hi * scale
    return Pipeline(d, s, epsilon, M, N, sigma, alpha, (lo * scale, alpha), derived_constants(alpha))


# --------------------------------------------------------------------------
# structural validation


@dataclass
class Check:
    name: str
    passed: bool
    severity: str  # "hard" | "warning" | "advisory"
    witness: dict = field(default_factory=dict)

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, "severity": self.severity, "witness": self.witness}


@dataclass
class ValidationReport:
    checks: list

    @property
    def warnings(self):
        return [c for c in self.checks if not c.passed and c.severity == "warning"]

    @property
    def ok(self) -> bool:
        return all(c.passed or c.severity != "hard" for c in self.checks)

    def by_name(self, name):
        return [c for c in self.checks if c.name == name]

    def as_dict(self):
        return {"ok": self.ok, "checks": [c.as_dict() for c in self.checks]}


def branching_numbers(s: DyadicExponent, exponents) -> tuple:
    """m_{n+1} = (r_n / r_{n+1})**s for consecutive exponents; hard errors if undefined."""
    out = []
    for n in range(len(exponents) - 1):
        step = (exponents[n + 1] - exponents[n]) * s.value
        if step.denominator != 1:
            raise ConstructionError(
                f"m_{n + 1} = 3^({step}) is not an integer (exponents {exponents[n]} -> {exponents[n + 1]})"
            )
        m = 3 ** int(step)
        if m < 2:
            raise ConstructionError(f"m_{n + 1} = {m} < 2")
        out.append(m)
    return tuple(out)


def gap_lengths(exponents, ms) -> tuple:
    """Flush-packed spacing s_{n+1} = (r_n - m r_{n+1}) / (m - 1)."""
    gaps = []
    for n, m in enumerate(ms):
        r_n = Fraction(1, 3 ** exponents[n])
        r_next = Fraction(1, 3 ** exponents[n + 1])
        gaps.append((r_n - m * r_next) / (m - 1))
    return tuple(gaps)


def validate_params(p: Params) -> ValidationReport:
    """Every structural inequality of the set construction, exactly.

    Non-integral or degenerate branching numbers raise ``ConstructionError``;
    everything else is recorded so degraded runs stay explicit.
    """
    e = p.exponents
    ms = branching_numbers(p.s, e)
    gaps = gap_lengths(e, ms)
    checks = []
    for n, (m, gap) in enumerate(zip(ms, gaps)):
        r_n, r_next = p.scales.r(n), p.scales.r(n + 1)
        checks.append(Check("m_integral", True, "hard", {"n": n + 1, "m": m}))
        checks.append(Check("gap_positive", gap > 0, "hard", {"n": n + 1, "gap": str(gap)}))
        lower = 3 ** (n + 1) * r_next
        checks.append(
            Check("spacing_lower", lower < gap, "warning", {"n": n, "3^(n+1) r_(n+1)": str(lower), "s_(n+1)": str(gap)})
        )
        checks.append(Check("spacing_upper", gap < r_n / 10, "warning", {"n": n, "s_(n+1)": str(gap), "r_n/10": str(r_n / 10)}))
        checks.append(Check("scale_ratio_30", r_next < r_n / 30, "warning", {"n": n, "r_(n+1)": str(r_next), "r_n/30": str(r_n / 30)}))
    # telescoping mass identity: prod m_k * r_n^s == 1
    prod = 1
    for n, m in enumerate(ms, start=1):
        prod *= m
        rs = Fraction(1, 3 ** int(e[n] * p.s.value))
        checks.append(Check("mass_telescopes", prod * rs == 1, "hard", {"n": n, "prod_m": str(prod)}))
    checks.append(Check("p_s_at_least_3", p.s.p_s >= 3, "advisory", {"p_s": p.s.p_s}))
    dc = derived_constants(p.alpha)
    lhs = to_float(dc.D) * dc.D_prime * 3 ** (-dc.D_prime * p.n_alpha)
    checks.append(Check("n_alpha_large", lhs < 1 / 29, "advisory", {"D*D'*3^(-D' n_alpha)": lhs, "bound": 1 / 29}))
    return ValidationReport(checks)


# --------------------------------------------------------------------------
# JSON config


def _rational_field(raw, key, default=None):
    if key not in raw:
        return default
    try:
        return as_fraction(raw[key])
    except (TypeError, ValueError, KeyError, ZeroDivisionError) as exc:
        raise ParamsError(f"bad rational for {key!r}: {raw[key]!r}") from exc


def params_from_dict(raw: dict) -> Params:
    try:
        s_raw = raw["s"]
        if isinstance(s_raw, dict) and "p" in s_raw:
            s = DyadicExponent(int(s_raw["p"]), int(s_raw["m"]))
        else:
            s = DyadicExponent.from_fraction(as_fraction(s_raw))
        depth = int(raw["depth"])
        scales_raw = raw.get("scales", {"mode": "canonical"})
        mode = scales_raw.get("mode", "canonical")
        if mode == "canonical":
            scales = ScaleSequence.canonical(s, max(depth, int(scales_raw.get("length", depth))))
        else:
            scales = ScaleSequence(tuple(int(x) for x in scales_raw["exponents"]), "custom")
        d = int(raw.get("d", 2))
        epsilon = _rational_field(raw, "epsilon", Fraction(1, 2))
        pipeline = None
        alpha_raw = raw.get("alpha", 0)
        if alpha_raw == "pipeline":
            pipeline = derive_pipeline(d, s.value, epsilon, int(raw.get("alpha_bits", 64)))
            alpha = pipeline.alpha_star
        else:
            alpha = _rational_field(raw, "alpha")
        if "M" in raw:
            M = int(raw["M"])
        else:
            M = (pipeline or derive_pipeline(d, s.value, epsilon)).M
        index_raw = raw.get("index", {"mode": "windowed"})
        mode = index_raw.get("mode", "windowed")
        if mode in WINDOWED_ALIASES:
            positions = None
        elif mode == "custom":
            positions = tuple(sorted(int(j) for j in index_raw["positions"]))
        else:
            raise ParamsError(f"unknown index mode {mode!r}")
        return Params(
            s=s,
            alpha=alpha,
            scales=scales,
            depth=depth,
            n_alpha=int(raw.get("n_alpha", 0)),
            d=d,
            M=M,
            epsilon=epsilon,
            index_positions=positions,
            rho=_rational_field(raw, "rho"),
        )
    except ParamsError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParamsError(f"malformed config: {exc}") from exc


def params_to_dict(p: Params) -> dict:
    out = {
        "s": {"p": p.s.p_s, "m": p.s.m_s},
        "alpha": rational_json(p.alpha),
        "scales": {"mode": p.scales.mode, "exponents": list(p.scales.exponents)},
        "depth": p.depth,
        "n_alpha": p.n_alpha,
        "d": p.d,
        "M": p.M,
        "epsilon": rational_json(p.epsilon),
        "index": {"mode": "windowed"}
        if p.index_positions is None
        else {"mode": "custom", "positions": list(p.index_positions)},
    }
    if p.rho is not None:
        out["rho"] = rational_json(p.rho)
    return out


def load_params(path) -> Params:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParamsError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParamsError("config must be a JSON object")
    return params_from_dict(raw)


def params_hash(p: Params) -> str:
    canon = json.dumps(params_to_dict(p), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
