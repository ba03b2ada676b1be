import numpy as np
import pytest

from hfgi.engine import (EvalCounter, Model, StepMode, check_model, d_stage, energy_drift, fit_drift, integrate,
                         jacobian_det, measure_order, reversibility_defect, step)
from hfgi.error_terms import hf_multipliers
from hfgi.models.simple import Harmonic, Pendulum, Quartic, point
from hfgi.models.solar import default_initial_data
from hfgi.phase import MassMetric, PhasePoint
from hfgi.schemes import Stage, Scheme, catalog, count_forces, get_scheme

GRADIENT = [s for s in catalog() if s.has_gradient]


class NoFG(Model):
    def potential(self, q):
        return 0.25 * float(np.sum(q**4))

    def force(self, q):
        return q**3


def test_d_stage_zero_c_is_kick():
    m, s = Quartic(), point([0.8], [0.3])
    out = d_stage(s, 0.5, 0.0, 0.1, m)
    assert out.p[0] == 0.3 - 0.05 * 0.8**3 and out.q is s.q


def test_d_stage_errors():
    s = point([1.0], [0.0])
    with pytest.raises(ValueError):
        d_stage(s, 0.0, 0.1, 0.1, Quartic())
    with pytest.raises(ValueError):
        d_stage(s, 0.5, 0.1, 0.1, NoFG(), StepMode.EXACT_FG)
    with pytest.raises(ValueError):
        d_stage(s, 0.5, 0.1, 0.1, Quartic(), "sideways")


def test_modes_agree_on_harmonic():
    metric = MassMetric.diagonal([1.0, 3.0])
    m = Harmonic(2.0, metric)
    s = PhasePoint(np.array([0.7, -0.2]), np.array([0.1, 0.4]))
    for sch in GRADIENT:
        a = step(sch, m, s, 0.05, "hessian_free")
        b = step(sch, m, s, 0.05, "exact_fg")
        assert np.max(np.abs(a.p - b.p)) < 1e-14 and np.max(np.abs(a.q - b.q)) < 1e-14


def test_hessian_free_difference_is_fifth_order():
    m, s = Quartic(), point([1.0], [0.0])
    sch = get_scheme("BADAB")
    hs = np.array([0.08, 0.04, 0.02, 0.01])
    d = np.array([(step(sch, m, s, h, "hessian_free").p - step(sch, m, s, h, "exact_fg").p)[0] for h in hs])
    slope = np.polyfit(np.log(hs), np.log(np.abs(d)), 1)[0]
    assert abs(slope - 5) < 0.2
    # leading coefficient -gamma5 V'^2 V''' = -6 gamma5 at q = 1
    r = d / hs**5
    coef = (4 * r[-1] - r[-2]) / 3
    assert coef == pytest.approx(-6 * float(hf_multipliers(sch).gamma5), rel=1e-3)


def test_opposite_shift_sign_would_break_the_match():
    # a kick evaluated at q + |shift| u differs from the exact FG kick at O(h^3)
    m, q = Quartic(), np.array([1.0])
    b, c, h = 2 / 3, 1 / 72, 0.01
    g = m.force(q)
    exact = -b * h * g + c * h**3 * m.fg_term(q)
    good = -b * h * m.force(q - 2 * c * h * h / b * g)
    bad = -b * h * m.force(q + 2 * c * h * h / b * g)
    assert abs(good - exact)[0] < 1e-12 < abs(bad - exact)[0]


def test_bab_is_leapfrog():
    m, s = Harmonic(), point([1.0], [0.0])
    h = 0.1
    out = step(get_scheme("BAB"), m, s, h)
    p = 0.0 - h / 2 * 1.0
    q = 1.0 + h * p
    p = p - h / 2 * q
    assert out.q[0] == q and out.p[0] == p


def test_zero_step_and_zero_steps():
    m, s = Quartic(), point([1.0], [0.5])
    for sch in catalog():
        assert step(sch, m, s, 0.0) is s
    out, c = integrate(get_scheme("BADAB"), m, s, 0.1, 0)
    assert out is s and c.force_evals == 0


def test_badab_force_counts():
    m, s = Quartic(), point([1.0], [0.5])
    sch = get_scheme("BADAB")
    c = EvalCounter()
    s1 = step(sch, m, s, 0.1, counter=c)
    assert c.force_evals == 4
    step(sch, m, s1, 0.1, counter=c)
    assert c.force_evals == 7
    _, c5 = integrate(sch, m, s, 0.1, 5)
    assert c5.force_evals == 4 + 3 * 4


def test_counts_match_catalog_for_every_scheme():
    m, s = Pendulum(), point([0.4, -1.0], [0.5, 0.1])
    for sch in catalog():
        first = {"A": 0, "B": 1, "D": 2}[sch.stages[0].kind]
        for n in (2, 5):
            _, c = integrate(sch, m, s, 0.05, n)
            assert c.force_evals == count_forces(sch) * n + first
    _, c = integrate(get_scheme("BADAB"), m, s, 0.05, 3, "exact_fg")
    assert (c.force_evals, c.fg_evals) == (7, 3) and c.work == 13


def test_split_run_equals_full_run():
    m, s = default_initial_data()
    sch = get_scheme("ABADABADABA")
    full, _ = integrate(sch, m, s, 200.0, 20)
    half, _ = integrate(sch, m, s, 200.0, 10)
    two, _ = integrate(sch, m, half, 200.0, 10)
    assert np.array_equal(full.q, two.q) and np.array_equal(full.p, two.p)


def test_reversibility_solar_all_schemes():
    m, s = default_initial_data()
    scale = max(np.max(np.abs(s.q)), np.max(np.abs(s.p)))
    for sch in catalog():
        assert reversibility_defect(sch, m, s, 200.0, n_steps=5) < 1e-10 * scale, sch.name


def test_asymmetric_scheme_is_not_reversible():
    m, s = Quartic(), point([1.0], [0.5])
    lopsided = Scheme("BA", (Stage("B", b=1), Stage("A", a=1)), "velocity", 1, 1)
    hs = np.array([0.04, 0.02, 0.01])
    d = np.array([reversibility_defect(lopsided, m, s, h) for h in hs])
    assert abs(np.polyfit(np.log(hs), np.log(d), 1)[0] - 2) < 0.2


def test_jacobian_examples():
    assert abs(jacobian_det(get_scheme("BADAB"), Quartic(), point([1.0], [0.5]), 0.1) - 1) < 1e-7
    assert abs(jacobian_det(get_scheme("BAB"), Harmonic(), point([1.0], [0.5]), 0.1) - 1) < 1e-9
    assert abs(jacobian_det(get_scheme("DADAD"), Quartic(), point([1.0], [0.5]), 0.1, "exact_fg") - 1) < 1e-7
    with pytest.raises(ValueError):
        jacobian_det(get_scheme("BAB"), Harmonic(), point(np.ones(5), np.zeros(5)), 0.1)


def test_exact_fg_fd_agrees_with_analytic():
    m, s = default_initial_data()
    for name in ("BADAB", "ABADABADABA", "BADADADAB"):
        a = step(get_scheme(name), m, s, 200.0, "exact_fg")
        b = step(get_scheme(name), m, s, 200.0, "exact_fg_fd")
        rel = np.max(np.abs(a.p - b.p)) / np.max(np.abs(a.p))
        assert rel < 1e-6


def test_model_contract_checks():
    rng = np.random.default_rng(3)
    m, s = default_initial_data()
    for model, q in ((Quartic(), np.array([0.9, -0.3])), (Pendulum(), np.array([0.4, 2.0])),
                     (Harmonic(1.5, MassMetric.diagonal([2.0, 1.0])), np.array([0.3, 0.1])), (m, s.q)):
        f_err, fg_err = check_model(model, q, rng)
        assert f_err < 1e-6 and fg_err < 1e-5


def test_measure_order_on_quartic_with_richardson():
    m, s = Quartic(), point([1.0], [0.5])
    for name, p in (("BAB", 2), ("BADAB", 4)):
        fit = measure_order(get_scheme(name), m, s, 4.0, [0.2, 0.1, 0.05])
        assert abs(fit.slope - p) < 0.15 and fit.monotone
    with pytest.raises(ValueError):
        measure_order(get_scheme("BAB"), m, s, 4.0, [0.2, 0.1])


def test_drift_fit_detects_trend_and_no_trend():
    m, s = default_initial_data()
    fit = energy_drift(get_scheme("BAB"), m, s, 50.0, 50000.0, every=5)
    assert fit.consistent_with_zero or fit.drift_over_span < fit.amplitude
    # explicit Euler on the oscillator gains energy every step
    q, p, h = 1.0, 0.0, 0.01
    ts, es = [], []
    for k in range(2000):
        q, p = q + h * p, p - h * q
        ts.append(k * h)
        es.append(0.5 * (q * q + p * p) - 0.5)
    trend = fit_drift(ts, es)
    assert trend.slope_low > 0 and not trend.consistent_with_zero
