from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsembed.cantor import BudgetExceeded, CantorAddress, NotInCantorSet, build_levels
from qsembed.params import params_from_dict


def levels(exponents, s="1/2"):
    raw = {"s": s, "alpha": "0", "scales": {"mode": "custom", "exponents": list(exponents)}, "depth": len(exponents) - 1}
    return build_levels(params_from_dict(raw))


@pytest.fixture(scope="module")
def lv():
    return levels((0, 2))


def test_first_level(lv):
    assert lv.m[1] == 3 and lv.gap[1] == Fraction(1, 3)
    assert [lv.midpoint(CantorAddress((i,))) for i in range(3)] == [Fraction(-4, 9), 0, Fraction(4, 9)]


def test_parent_midpoints(lv):
    assert lv.parent_midpoint(CantorAddress((2,)), 0) == 0
    assert lv.parent_midpoint(CantorAddress((1,)), 1) == 0
    assert lv.parent_midpoint(CantorAddress((0,)), 1) == Fraction(-4, 9)


def test_locate(lv):
    assert lv.locate(0, 1).path == (1,)
    assert lv.locate(Fraction(1, 2), 1).path == (2,)
    with pytest.raises(NotInCantorSet):
        lv.locate(Fraction(1, 5), 1)


def test_enumeration_counts(lv):
    assert [a.path for a in lv.enumerate_intervals(1)] == [(0,), (1,), (2,)]
    assert len(list(levels((0, 2, 4)).enumerate_intervals(2))) == 9


def test_budget():
    lv = build_levels(params_from_dict({"s": "3/4", "alpha": "0", "depth": 3}))
    assert lv.m[1] == 729
    with pytest.raises(BudgetExceeded):
        lv.enumerate_intervals(3)


def test_flush_packing():
    lv = levels((0, 4, 8))
    for n in (1, 2):
        # m intervals and m-1 gaps fill the parent exactly
        assert lv.m[n] * lv.r[n] + (lv.m[n] - 1) * lv.gap[n] == lv.r[n - 1]


@given(st.lists(st.integers(0, 8), min_size=2, max_size=2))
@settings(max_examples=50)
def test_locate_inverts_midpoint(path):
    lv = levels((0, 4, 8))
    a = CantorAddress(tuple(path))
    y = lv.midpoint(a)
    assert lv.locate(y, 2) == a
    chain = lv.midpoint_chain(a)
    for k in range(3):
        assert abs(y - chain[k]) <= lv.r[k]
