import math
from fractions import Fraction

import pytest

from _table import TABLE
from hfgi.error_terms import efficiency, err_norm, hf_multipliers, order3_terms_threestage
from hfgi.schemes import build_scheme, catalog, get_scheme


def test_gamma5_anchors():
    assert hf_multipliers(get_scheme("BADAB")).gamma5 == Fraction(1, 1728)
    assert hf_multipliers(get_scheme("DAD")).gamma5 == Fraction(1, 288)
    assert hf_multipliers(get_scheme("ADA")).gamma5 == Fraction(1, 72)


def test_gamma5_equals_sum_over_d_stages():
    # independent oracle: every D stage contributes 2 c^2 / b
    for s in catalog():
        oracle = sum(2 * float(st.c) ** 2 / float(st.b) for st in s.stages if st.kind == "D")
        assert math.isclose(float(hf_multipliers(s).gamma5), oracle, rel_tol=1e-12, abs_tol=1e-15)


def test_non_gradient_schemes_vanish():
    for s in catalog():
        if not s.has_gradient:
            m = hf_multipliers(s)
            assert m.gamma5 == 0 and m.zeta11 == 0 and m.zeta12 == 0 and m.zeta13 == 0


def test_running_sums_are_one():
    for s in catalog():
        m = hf_multipliers(s)
        assert abs(float(m.nu_run) - 1) < 1e-15 and abs(float(m.sigma_run) - 1) < 1e-15


def test_gamma5_nonnegative_for_positive_b():
    for s in catalog():
        if all(float(st.b) > 0 for st in s.stages if st.kind == "D"):
            assert float(hf_multipliers(s).gamma5) >= 0


@pytest.mark.parametrize("lam", [Fraction(1, 2), Fraction(3), Fraction(-2)])
def test_scaling_with_c(lam):
    base = hf_multipliers(get_scheme("BADAB"))
    sc = build_scheme("BADAB", [Fraction(1, 2)], [Fraction(1, 6), Fraction(2, 3)], [lam * Fraction(1, 72)])
    m = hf_multipliers(sc)
    assert m.gamma5 == lam**2 * base.gamma5
    assert m.zeta11 == lam**3 * base.zeta11


def test_six_order_gamma5_vanishes():
    assert abs(float(hf_multipliers(get_scheme("BADADADAB")).gamma5)) < 1e-40


def test_err_norm_examples():
    assert math.isclose(err_norm((Fraction(1, 12), Fraction(1, 24)), 2), math.sqrt(5) / 24, rel_tol=1e-15)
    assert err_norm((1, 0, 0, 0, 0), 4) == 1.0
    assert math.isclose(err_norm((0, 0, 0, 0, Fraction(1, 1728)), 4), 1 / 6912, rel_tol=1e-15)
    assert math.isclose(err_norm([0] * 12 + [1], 6), 7 / 24, rel_tol=1e-15)
    with pytest.raises(ValueError):
        err_norm((1, 2, 3), 4)
    with pytest.raises(ValueError):
        err_norm((1, 2), 3)


@pytest.mark.parametrize("name,err3", [
    ("BAB", math.sqrt(5) / 24), ("ABA", math.sqrt(5) / 24), ("DAD", 1 / 12), ("ADA", 1 / 24),
])
def test_three_stage_err(name, err3):
    s = get_scheme(name)
    alpha, beta = order3_terms_threestage(s)
    assert abs(err_norm((alpha, beta), 2) - err3) < 1e-15
    assert float(f"{err3:.3g}") == s.err_leading


def test_three_stage_terms():
    assert order3_terms_threestage(get_scheme("DAD")) == (Fraction(1, 12), 0)
    assert order3_terms_threestage(get_scheme("ADA")) == (Fraction(-1, 24), 0)
    assert order3_terms_threestage(get_scheme("BAB")) == (Fraction(1, 12), Fraction(1, 24))
    with pytest.raises(ValueError):
        order3_terms_threestage(get_scheme("BADAB"))


def test_efficiency_examples():
    assert round(efficiency(3, 4, 0.000728), 2) == 16.96
    assert efficiency(1, 2, 1) == 1.0
    # the printed Err is rounded to three digits; the printed Eff must come
    # from a value inside its rounding interval
    lo, hi = efficiency(6, 4, 0.00001055), efficiency(6, 4, 0.00001045)
    assert lo <= 73.45 <= hi
    with pytest.raises(ValueError):
        efficiency(3, 4, 0.0)


def _decimals(s):
    return len(s.split(".")[1]) if "." in s else 0


def _sig_interval(err_str):
    digits = len(err_str.replace(".", "").lstrip("0"))
    exp = math.floor(math.log10(float(err_str)))
    half = 0.5 * 10 ** (exp - digits + 1)
    return float(err_str) - half, float(err_str) + half


def test_efficiency_column_consistent():
    for name, p, n_f, err, eff, _ in TABLE:
        lo, hi = _sig_interval(err)
        e_hi, e_lo = efficiency(n_f, p, lo), efficiency(n_f, p, hi)
        half = 0.5 * 10 ** -_decimals(eff)
        assert e_lo - half <= float(eff) <= e_hi + half, name
