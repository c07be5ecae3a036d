"""Exact rational helpers shared by every module.

All values that enter an assertion are ``fractions.Fraction``; floats only
appear as display mirrors (``log3``, ``to_float``).
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

LOG3 = math.log(3.0)


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions, ``"p/q"`` strings and ``{"num", "den"}`` dicts."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, dict):
        return Fraction(int(value["num"]), int(value["den"]))
    if isinstance(value, float):
        raise TypeError("floats are not accepted where an exact rational is required")
    raise TypeError(f"cannot interpret {value!r} as a rational")


def rational_json(q: Fraction) -> dict:
    q = Fraction(q)
    return {"num": str(q.numerator), "den": str(q.denominator)}


def _log_int(n: int) -> float:
    # math.log handles big ints, but guard against 0
    return math.log(n)


def log3(q) -> float:
    """log base 3 of a positive rational, safe for thousands of digits."""
    q = Fraction(q)
    if q <= 0:
        raise ValueError("log3 of a non-positive number")
    return (_log_int(q.numerator) - _log_int(q.denominator)) / LOG3


def to_float(q) -> float:
    """Float mirror; saturates to 0.0/inf instead of raising on overflow."""
    q = Fraction(q)
    if q == 0:
        return 0.0
    try:
        return float(q)
    except OverflowError:
        return math.copysign(math.inf, q)


def mirror(q) -> dict:
    """Exact value plus float and log3 mirrors, as emitted in reports."""
    q = Fraction(q)
    out = {"exact": str(q), "float": to_float(q)}
    if q > 0:
        out["log3"] = log3(q)
    return out


def ceil_log3_inverse(q: Fraction) -> int:
    """Smallest integer j >= 0 with 3**-j <= q, for 0 < q."""
    q = Fraction(q)
    if q <= 0:
        raise ValueError("q must be positive")
    j = max(0, int(math.floor(-log3(q))) - 2)
    while Fraction(1, 3**j) > q:
        j += 1
    while j > 0 and Fraction(1, 3 ** (j - 1)) <= q:
        j -= 1
    return j


def sign(q) -> int:
    return (q > 0) - (q < 0)


def compare_power3(a: Fraction, p: Fraction, b: Fraction, q: Fraction) -> int:
    """Exact sign of ``a*3**p - b*3**q`` for a, b >= 0 and rational p, q."""
    a, b = Fraction(a), Fraction(b)
    if a < 0 or b < 0:
        raise ValueError("coefficients must be non-negative")
    if a == 0 or b == 0:
        return sign(a - b)
    # a * 3^p  vs  b * 3^q  <=>  (a/b) vs 3^(q-p);  raise to the denominator
    e = Fraction(q) - Fraction(p)
    ratio = a / b
    k = e.denominator
    lhs = ratio**k
    rhs = Fraction(3) ** e.numerator
    return sign(lhs - rhs)
