from fractions import Fraction

import pytest

from conftest import build, config
from qsembed import analysis as an
from qsembed.cantor import CantorAddress
from qsembed.embedding import EmbeddingPoint


def test_two_level_structure(two_level):
    assert an.check_additivity(two_level, chains=200).passed
    dbl = an.check_doubling(two_level)
    assert dbl.passed and dbl.detail["max_ratio"]["exact"] == "4"
    g2 = an.check_G2(two_level, samples=100)
    assert g2.passed and g2.detail["C_emp"]["exact"] == "3"
    # custom sets are outside the scope of the scale-window properties
    g1 = an.check_G1(two_level)
    assert g1.passed and not g1.detail["applies"]


def test_reference_structure(reference):
    for line in (
        an.check_additivity(reference, chains=500),
        an.check_doubling(reference),
        an.check_child_ratio(reference),
        an.check_G0(reference, samples=200),
        an.check_G1(reference, samples=200),
        an.check_series(reference),
    ):
        assert line.passed, line.name
        assert line.line() == f"PASS {line.name}"


def test_failed_line_text():
    assert an.CheckLine("x", False, "exact").line() == "FAIL x"


def test_lebesgue_weak_ratio_at_most_one(lebesgue):
    rep = an.sample_weak_qs(lebesgue, 300, seed=4)
    assert rep.max_weak_ratio <= 1
    assert not rep.violations


def test_weak_ratio_squared_exact(lebesgue):
    x = EmbeddingPoint(Fraction(1, 3), (CantorAddress((0, 0)),))
    a = EmbeddingPoint(Fraction(1, 3) + Fraction(1, 9), (CantorAddress((0, 0)),))
    b = EmbeddingPoint(Fraction(1, 3) - Fraction(2, 9), (CantorAddress((0, 0)),))
    assert an.weak_ratio_squared(lebesgue, x, a, b) == Fraction(1, 4)


def test_samplers_seeded(reference):
    r1 = an.sample_weak_qs(reference, 200, seed=7)
    r2 = an.sample_weak_qs(reference, 200, seed=7)
    assert r1.as_dict() == r2.as_dict()


def test_lipschitz_and_bounds(reference):
    assert an.sample_lipschitz(reference, 300, seed=1).passed
    upper, lower, _ = an.sample_bounds(reference, 300, seed=1)
    assert upper.passed and lower.passed
    assert lower.detail["pairs_in_stratum"] > 0


def test_small_step():
    import random

    rng = random.Random(0)
    for d2 in (Fraction(1), Fraction(1, 81), Fraction(5, 7)):
        h = an._small_step(Fraction(1, 10), d2, rng)
        assert h * h <= Fraction(1, 100) * d2


def test_run_suite_lebesgue(lebesgue):
    suite = an.run_suite(lebesgue, samples=300)
    assert suite.ok and not suite.exact_failures
