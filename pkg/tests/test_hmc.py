import csv

import numpy as np
import pytest

from hfgi.hmc import (HmcConfig, acceptance_erfc, cost_metric, delta_h_scan, derive_rng, jackknife_blocks,
                      nf_per_unit_at_target, optimal_acceptance, run_chain, run_trajectory, scaling_exponent,
                      sigma2_for_acceptance, write_chain_log)
from hfgi.models.schwinger import CGError, SchwingerModel
from hfgi.models.simple import Harmonic, point
from hfgi.phase import MassMetric, U1LatticeState, flip
from hfgi.engine import integrate
from hfgi.schemes import get_scheme


def test_config_validation():
    with pytest.raises(ValueError):
        HmcConfig(tau=0.0)
    with pytest.raises(ValueError):
        HmcConfig(n_steps=0)
    with pytest.raises(ValueError):
        HmcConfig(mode="sideways")
    c = HmcConfig(tau=1.0, n_steps=20, n_traj=500)
    assert c.h == 0.05 and c.therm == 50


def test_acceptance_formulas():
    assert acceptance_erfc(0.0) == 1.0
    assert optimal_acceptance(4) == pytest.approx(0.7788, abs=5e-5)
    assert round(optimal_acceptance(2), 2) == 0.61
    assert sigma2_for_acceptance(0.9) == pytest.approx(0.0632, abs=5e-5)
    assert acceptance_erfc(sigma2_for_acceptance(0.78)) == pytest.approx(0.78, rel=1e-12)
    with pytest.raises(ValueError):
        acceptance_erfc(-1.0)


def test_nf_per_unit_recovers_power_law():
    C, p, n_f, tau = 37.0, 4, 3, 2.0
    scan = [(N, C * N ** (-2 * p)) for N in (4, 6, 8, 12)]
    fit = nf_per_unit_at_target(scan, n_f, tau, 0.9)
    n_star = (C / sigma2_for_acceptance(0.9)) ** (1 / (2 * p))
    assert abs(fit.n_star - n_star) < 1e-10 * n_star
    assert fit.nf_per_unit == pytest.approx(n_f * n_star / tau, rel=1e-10)
    with pytest.raises(ValueError):
        nf_per_unit_at_target(scan[:2], n_f)
    with pytest.raises(ValueError):
        nf_per_unit_at_target([(4, 0.1), (6, 0.2), (8, 0.01)], n_f)


def test_cost_metric_rows():
    assert round(cost_metric(40, 0.923, 2), 2) == 21.67
    assert round(cost_metric(50, 0.975, 2), 2) == 25.64
    assert cost_metric(1.0, 1.0, 1.0) == 1.0
    with pytest.raises(ValueError):
        cost_metric(40, 0.0, 2)


def test_jackknife_iid():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(4000)
    mean, err = jackknife_blocks(x, np.mean, 10)
    assert err == pytest.approx(1 / np.sqrt(4000), rel=0.25)
    assert np.isnan(jackknife_blocks(x[:15], np.mean)[1])


def test_seed_streams():
    a = derive_rng(1, "BAB", 10).standard_normal(3)
    assert np.array_equal(a, derive_rng(1, "BAB", 10).standard_normal(3))
    assert not np.array_equal(a, derive_rng(1, "BAB", 12).standard_normal(3))
    assert not np.array_equal(a, derive_rng(1, "BADAB", 10).standard_normal(3))
    assert not np.array_equal(a, derive_rng(2, "BAB", 10).standard_normal(3))


def test_exact_flow_limit_on_oscillator():
    m = Harmonic(1.0, MassMetric.diagonal([2.0, 0.5]))
    s = point([0.3, -0.2], [0.0, 0.0])
    stats = run_chain(m, HmcConfig(tau=1.0, n_steps=400, scheme="BADAB", n_traj=50, seed=1), s)
    assert np.max(np.abs(stats.delta_H)) < 1e-9 and stats.acceptance == 1.0


def test_rejection_restores_configuration():
    m = Harmonic()
    s = point([0.5], [0.0])
    cfg = HmcConfig(tau=30.0, n_steps=1, scheme="BAB", seed=3)
    rng = derive_rng(0, "BAB", 1)
    for _ in range(20):
        new, dH, acc, _ = run_trajectory(m, cfg, s, rng)
        if not acc:
            assert dH > 0 and np.array_equal(new.q, s.q)
            return
    pytest.fail("no rejection with a wildly unstable step")


def test_md_reversibility_schwinger():
    rng = np.random.default_rng(4)
    m = SchwingerModel(4, 4, solver="lu")
    th = rng.uniform(-0.5, 0.5, (4, 4, 2))
    m.eta = m.heatbath(th, rng)
    s = U1LatticeState(th, rng.standard_normal(th.shape))
    sch = get_scheme("BADAB")
    fwd, _ = integrate(sch, m, s, 0.1, 10)
    back, _ = integrate(sch, m, flip(fwd), 0.1, 10)
    assert np.max(np.abs(back.q - s.q)) < 1e-8 and np.max(np.abs(-back.p - s.p)) < 1e-8


def test_cg_failure_aborts_trajectory():
    m = SchwingerModel(4, 4, solver="cg", cg_maxiter=2)
    cfg = HmcConfig(tau=1.0, n_steps=2, scheme="BAB")
    with pytest.raises(CGError, match="did not converge"):
        run_trajectory(m, cfg, m.state(np.random.default_rng(0).uniform(-1, 1, (4, 4, 2))),
                       np.random.default_rng(1))


def test_chain_is_deterministic_and_logged(tmp_path):
    m = SchwingerModel(4, 4, solver="lu")
    cfg = HmcConfig(tau=1.0, n_steps=6, scheme="BADAB", n_traj=20, seed=9)
    a = run_chain(m, cfg, m.state(m.cold_start()))
    b = run_chain(m, cfg, m.state(m.cold_start()))
    for f in ("delta_H", "accepted", "force_evals", "plaquette"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    assert np.all(a.force_evals == 3 * 6 + 1)
    path = tmp_path / "chain.csv"
    write_chain_log(path, a)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["traj", "dH", "accepted", "plaquette", "force_evals", "seconds"]
    assert len(rows) == 21 and float(rows[5][1]) == a.delta_H[4]
    summ = a.summary()
    assert 0 <= summ["acc"] <= 1 and summ["sigma2"] >= 0


def test_scan_with_common_random_numbers():
    m = SchwingerModel(4, 4, solver="lu")
    rng = np.random.default_rng(5)
    configs = [rng.uniform(-0.7, 0.7, (4, 4, 2)) for _ in range(12)]
    scan = delta_h_scan(m, "BAB", [8, 12, 16], configs, seed=2)
    again = delta_h_scan(m, "BAB", [8, 12, 16], configs, seed=2)
    assert all(np.array_equal(scan[N], again[N]) for N in scan)
    slope, err = scaling_exponent(scan)
    assert abs(slope - 4) < 0.5 and err > 0
