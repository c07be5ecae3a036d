import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import build, config
from qsembed.cantor import CantorAddress
from qsembed.embedding import AddressTooShallow, EmbeddingPoint, GValue, sqrt_bracket
from qsembed.ternary import TernaryAddress


def test_g_zero_example(two_level):
    e = two_level.embedding
    assert e.g_zero(CantorAddress((0,))).value == Fraction(-4, 9)
    assert e.g(0, CantorAddress((2,))).value == Fraction(4, 9)


def test_lebesgue_identity(lebesgue):
    e = lebesgue.embedding
    rng = random.Random(1)
    for _ in range(50):
        y = lebesgue.levels.random_address(rng, lebesgue.levels.depth)
        x = Fraction(rng.randrange(82), 81)
        F = e.F(EmbeddingPoint(x, (y,)))
        assert F[0].value == x
        assert F[1].value == e.point(y) and F[1].tail_bound == 0


def test_bracket_identity(reference):
    # mu([0, r_k)) + int_0^d Delta_k dmu = mu([d, d + r_k)) at S_k endpoints
    e, mu = reference.embedding, reference.measure
    for k, lk in enumerate(reference.system.exponents):
        step = 3 ** max(lk - 4, 0)
        for j in range(0, 3**lk, step):
            d = Fraction(j, 3**lk)
            assert e.bracket(k, d) == mu.mu(TernaryAddress(lk, j))


def test_truncation_tail_contains_full_value(reference):
    e = reference.embedding
    rng = random.Random(2)
    for _ in range(30):
        y = reference.levels.random_address(rng, 2)
        x = Fraction(rng.randrange(3**9 + 1), 3**9)
        full = e.g(x, y).value
        for K in range(3):
            t = e.g(x, y, K)
            assert t.lo <= full <= t.hi
        assert e.g(x, y, 2).tail_bound == 0


def test_cylinder_determination(reference):
    # with K terms only the level-K prefix matters
    e = reference.embedding
    y1, y2 = CantorAddress((3, 1)), CantorAddress((3, 7))
    x = Fraction(17, 81)
    assert e.g(x, y1, 1).value == e.g(x, y2, 1).value
    assert e.g(x, y1, 2).value != e.g(x, y2, 2).value


def test_address_too_shallow(reference):
    with pytest.raises(AddressTooShallow):
        reference.embedding.g(0, CantorAddress((1,)), 2)


@given(st.fractions(0, 1, max_denominator=3**8), st.fractions(0, 1, max_denominator=3**8), st.integers(0, 80))
@settings(max_examples=60, deadline=None)
def test_additive_in_x(reference, a, b, leaf):
    e = reference.embedding
    y = CantorAddress((leaf // 9, leaf % 9))
    lo, hi = min(a, b), max(a, b)
    chain = e.chain(y)
    expect = sum(
        (chain[k + 1] - chain[k]) / e.r(k) * (reference.series.integral(k, hi) - reference.series.integral(k, lo))
        for k in range(2)
    )
    assert e.g(hi, y).value - e.g(lo, y).value == expect
    # Lipschitz in x with constant C
    assert abs(expect) <= e.C * reference.measure.mu_interval(lo, hi)


@given(st.fractions(0, 10**6))
def test_sqrt_bracket(q):
    lo, hi = sqrt_bracket(q)
    assert lo * lo <= q <= hi * hi


def test_gvalue_arithmetic():
    a, b = GValue(Fraction(1), Fraction(1, 10)), GValue(Fraction(3), Fraction(1, 5))
    d = a - b
    assert d.value == -2 and d.tail_bound == Fraction(3, 10)
    assert d.abs_bounds() == (Fraction(17, 10), Fraction(23, 10))


def test_point_validation():
    with pytest.raises(ValueError):
        EmbeddingPoint(Fraction(3, 2), ())


def test_bounds_report_shape(reference):
    e = reference.embedding
    x = EmbeddingPoint(Fraction(1, 3), (CantorAddress((0, 0)),))
    b = EmbeddingPoint(Fraction(1, 3), (CantorAddress((8, 8)),))
    rep = e.bounds_report(x, b)
    for name in ("upper", "lower", "lipschitz", "vertical"):
        assert not rep["checks"][name]["violated"]
    assert rep["checks"]["lower"]["applies"]
