from fractions import Fraction

import mpmath
import pytest

from qsembed.params import (
    ConstructionError,
    ParamsError,
    derive_pipeline,
    derived_constants,
    load_params,
    params_from_dict,
    params_hash,
    validate_params,
)


def test_non_integral_branching_is_hard_error():
    raw = {"s": "1/2", "alpha": "1/2", "scales": {"mode": "custom", "exponents": [0, 3]}, "depth": 1}
    with pytest.raises(ConstructionError):
        validate_params(params_from_dict(raw))


def test_reference_spacing_lower_fails_by_equality():
    p = params_from_dict({"s": "1/2", "alpha": "1/2", "scales": {"mode": "custom", "exponents": [0, 4, 8]}, "depth": 2})
    rep = validate_params(p)
    assert rep.ok
    second = rep.by_name("spacing_lower")[1]
    assert not second.passed and second.severity == "warning"
    assert second.witness["s_(n+1)"] == "1/729" == second.witness["3^(n+1) r_(n+1)"]


def test_three_quarters_canonical_first_level():
    p = params_from_dict({"s": "3/4", "alpha": "1/2", "depth": 1})
    assert p.exponents == (0, 8)
    rep = validate_params(p)
    first = rep.by_name("spacing_lower")[0]
    assert first.passed
    assert rep.by_name("m_integral")[0].witness["m"] == 729
    assert Fraction(first.witness["s_(n+1)"]) == Fraction(1, 819)


def test_pipeline_example():
    pl = derive_pipeline(2, Fraction(1, 2), Fraction(1, 2))
    assert (pl.M, pl.N_exp, pl.sigma) == (3, 12, Fraction(1, 8))
    lo, hi = pl.alpha_bracket
    assert hi - lo == Fraction(1, 2**64)


def test_pipeline_root_against_mpmath():
    # independent oracle: high-precision root of the real equation
    pl = derive_pipeline(2, Fraction(1, 2), Fraction(1, 2))
    mpmath.mp.dps = 60
    g = lambda a: (1 - a) ** (mpmath.mpf(13) / 24) * (1 + 2 * a) ** (mpmath.mpf(11) / 24) - mpmath.mpf(3) ** -12
    lo, hi = pl.alpha_bracket
    assert g(mpmath.mpf(lo.numerator) / lo.denominator) > 0
    assert g(mpmath.mpf(hi.numerator) / hi.denominator) <= 0
    root = mpmath.findroot(g, (mpmath.mpf(lo.numerator) / lo.denominator, mpmath.mpf(hi.numerator) / hi.denominator), solver="anderson")
    assert abs(root - mpmath.mpf(hi.numerator) / hi.denominator) < mpmath.mpf(10) ** -12


def test_lebesgue_constants():
    dc = derived_constants(0)
    assert dc.D == 1 and dc.tau == Fraction(1, 3)


def test_analytic_bound_reference():
    assert derived_constants(Fraction(1, 2)).C_inf_analytic == 15


@pytest.mark.parametrize(
    "raw",
    [
        {"alpha": "1/2", "depth": 1},
        {"s": "1/3", "alpha": "1/2", "depth": 1},
        {"s": "1/2", "alpha": "1", "depth": 1},
        {"s": "1/2", "alpha": "1/2", "depth": 1, "scales": {"mode": "custom", "exponents": [0, 4, 2]}},
        {"s": "1/2", "alpha": "x", "depth": 1},
    ],
)
def test_malformed_configs(raw):
    with pytest.raises(ParamsError):
        params_from_dict(raw)


def test_hash_stable_and_sensitive(tmp_path):
    raw = '{"s": "1/2", "alpha": "1/2", "depth": 2}'
    (tmp_path / "a.json").write_text(raw)
    a = load_params(tmp_path / "a.json")
    b = params_from_dict({"s": "1/2", "alpha": "1/2", "depth": 2})
    assert params_hash(a) == params_hash(b)
    c = params_from_dict({"s": "1/2", "alpha": "1/3", "depth": 2})
    assert params_hash(a) != params_hash(c)


def test_bad_json(tmp_path):
    (tmp_path / "x.json").write_text("{nope")
    with pytest.raises(ParamsError):
        load_params(tmp_path / "x.json")


def test_index_modes():
    base = {"s": "1/2", "alpha": "1/2", "depth": 2}
    default = params_from_dict(base)
    for mode in ("windowed", "paper"):
        assert params_hash(params_from_dict(base | {"index": {"mode": mode}})) == params_hash(default)
    with pytest.raises(ParamsError):
        params_from_dict(base | {"index": {"mode": "mystery"}})
