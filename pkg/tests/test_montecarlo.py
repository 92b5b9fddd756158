import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riccati_shooting.equilibrium import EconomyParams, g_value
from riccati_shooting.errors import DomainError, HorizonError, SimulationError
from riccati_shooting.montecarlo import (McEstimate, SimConfig, mc_dividend_integral,
                                         mc_feynman_kac, path_generator, simulate_joint,
                                         summary_csv, wealth_ode_residual, wealth_residuals)
from riccati_shooting.ode import IntegratorConfig
from riccati_shooting.shooting import find_critical

DIV = SimConfig(dt=0.1, horizon=300.0, n_paths=20_000)


def test_sim_config_validation():
    with pytest.raises(DomainError):
        SimConfig(dt=0.0)
    with pytest.raises(DomainError):
        SimConfig(clamp_margin=1e-3)
    with pytest.raises(DomainError):
        SimConfig(n_paths=0)
    with pytest.raises(DomainError):
        SimConfig(seed=-1)
    assert SimConfig().dt <= 1e-3 * SimConfig().horizon


def test_mc_estimate_standard_error():
    x = np.arange(10.0)
    est = McEstimate.from_samples(x, analytic=4.0)
    assert est.std_error == pytest.approx(x.std(ddof=1) / math.sqrt(10))
    assert est.z_score == pytest.approx((4.5 - 4.0) / est.std_error)
    assert McEstimate.from_samples(x).z_score is None


def test_streams_are_disjoint():
    a = path_generator(0, 0).standard_normal(8)
    for other in (path_generator(0, 1), path_generator(1, 0), path_generator(0, 0, 1)):
        assert not np.array_equal(a, other.standard_normal(8))
    assert np.array_equal(a, path_generator(0, 0).standard_normal(8))


@pytest.mark.parametrize("econ,closed", [
    (EconomyParams(0.1, 0.05, 0.2, 0.5), 12.5),
    (EconomyParams(0.025, 0.02, 0.2, 0.5), 50.0),
])
def test_dividend_integral(econ, closed):
    est = mc_dividend_integral(econ, DIV)
    assert est.analytic == pytest.approx(closed, rel=1e-13)
    assert abs(est.z_score) <= 3.0


def test_dividend_integral_near_log_utility():
    econ = EconomyParams(0.1, 0.05, 0.2, 1 - 1e-9)
    est = mc_dividend_integral(econ, SimConfig(dt=0.1, horizon=100.0, n_paths=200))
    assert est.analytic == pytest.approx(1 / 0.1, rel=1e-7)
    assert est.mean == pytest.approx(10.0, rel=1e-3)


def test_dividend_horizon_too_short(econ):
    with pytest.raises(HorizonError):
        mc_dividend_integral(econ, SimConfig(dt=0.1, horizon=50.0, n_paths=10))


@pytest.fixture(scope="module")
def small():
    return SimConfig(n_paths=400, seed=11)


def test_same_seed_bit_identical(critical, econ, small):
    a = simulate_joint(critical, econ, 0.5, small)
    b = simulate_joint(critical, econ, 0.5, small)
    for field in ("integral", "remainder", "Y_T", "D_T"):
        assert np.array_equal(getattr(a, field), getattr(b, field))


def test_path_independent_of_ensemble_size(critical, econ, small):
    a = simulate_joint(critical, econ, 0.5, small)
    b = simulate_joint(critical, econ, 0.5, dataclasses.replace(small, n_paths=50))
    assert np.array_equal(a.integral[:50], b.integral)


def test_zero_vol_is_deterministic(critical, econ, small):
    ens = simulate_joint(critical, econ, 0.3, dataclasses.replace(small, n_paths=50), vol_scale=0.0)
    assert np.ptp(ens.Y_T) == 0.0


def test_near_one_start_stays_inside(critical, econ):
    cfg = SimConfig(n_paths=200, seed=5, record_every=1)
    ens = simulate_joint(critical, econ, 1 - 1e-3, cfg)
    assert ens.clamp_count == 0
    assert np.all((ens.paths_Y > 0) & (ens.paths_Y < 1))
    # mu_Y < 0 near 1, so the state moves down on average
    assert ens.paths_Y[:, 1].mean() < 1 - 1e-3


@pytest.mark.parametrize("y0", [0.1, 0.5, 0.9])
def test_no_clamps_over_a_million_steps(critical, econ, y0):
    cfg = SimConfig(n_paths=1000, seed=2024)
    ens = simulate_joint(critical, econ, y0, cfg)
    assert cfg.n_paths * cfg.n_steps == 1_000_000
    assert ens.clamp_count == 0


def test_clamp_rate_limit(critical, econ):
    with pytest.raises(SimulationError):
        simulate_joint(critical, econ, 0.5, SimConfig(n_paths=2, horizon=2.0), vol_scale=3.0)


def test_dividend_exactness_at_horizon(critical, econ):
    cfg = SimConfig(n_paths=20_000, seed=3, refine=0)
    ens = simulate_joint(critical, econ, 0.5, cfg)
    p, T, mu, s = 0.5, cfg.horizon, econ.mu_D, econ.sigma_D
    closed = math.exp(p * (mu - 0.5 * s * s) * T + 0.5 * (p * s) ** 2 * T)
    est = McEstimate.from_samples(ens.D_T ** p, closed)
    assert abs(est.z_score) <= 3.0


def test_feynman_kac_identity(critical, econ):
    est = mc_feynman_kac(critical, econ, 0.5, SimConfig(n_paths=20_000, seed=1))
    assert est.analytic == pytest.approx(g_value(critical, 0.5))
    assert abs(est.z_score) <= 3.0


def test_feynman_kac_near_one(critical, econ):
    est = mc_feynman_kac(critical, econ, 1 - 1e-6, SimConfig(n_paths=2000, seed=4))
    assert est.analytic < 0.02 * g_value(critical, 0.0)
    assert abs(est.z_score) <= 3.0


def test_disjoint_seed_batches_agree(critical, econ):
    a = mc_feynman_kac(critical, econ, 0.5, SimConfig(n_paths=10_000, seed=100))
    b = mc_feynman_kac(critical, econ, 0.5, SimConfig(n_paths=10_000, seed=200))
    assert abs(a.mean - b.mean) <= 3.0 * math.hypot(a.std_error, b.std_error)


def test_without_tail_needs_long_horizon(critical, econ):
    with pytest.raises(HorizonError):
        mc_feynman_kac(critical, econ, 0.5, SimConfig(n_paths=10), tail="none")


def test_economy_must_match(critical):
    with pytest.raises(DomainError):
        mc_feynman_kac(critical, EconomyParams(0.1, 0.05, 0.2, 0.5), 0.5, SimConfig(n_paths=10))


@pytest.mark.slow
def test_weak_convergence_halving_dt(critical, econ):
    cfg = SimConfig(n_paths=100_000)
    coarse = mc_feynman_kac(critical, econ, 0.5, cfg)
    fine = mc_feynman_kac(critical, econ, 0.5, dataclasses.replace(cfg, refine=cfg.refine + 1))
    assert abs(fine.mean - coarse.mean) < coarse.std_error


def test_wealth_residuals(critical, econ):
    drift, diffusion = wealth_residuals(critical, econ, 0.5)
    scale = g_value(critical, 0.5) * 0.5 ** 0.5
    assert abs(diffusion) <= 1e-8 * scale
    assert abs(drift) <= 1e-6 * scale
    assert wealth_ode_residual(critical, econ, 0.5) == max(abs(drift), abs(diffusion))


def test_wealth_residuals_under_refinement(critical, econ):
    fine = find_critical(0.5, 0.2, 2.0, cfg=IntegratorConfig().refined())
    floor = 1e-13
    for y in (0.1, 0.5, 0.9):
        coarse_res = max(wealth_ode_residual(critical, econ, y), floor)
        fine_res = max(wealth_ode_residual(fine, econ, y), floor)
        assert fine_res < 2.0 * coarse_res


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1 - 1e-3))
def test_wealth_diffusion_vanishes(critical, econ, y):
    _, diffusion = wealth_residuals(critical, econ, y)
    assert abs(diffusion) <= 1e-10 * g_value(critical, 0.0)


def test_summary_csv(critical, econ):
    est = McEstimate(1.0, 0.1, 10, 1.05)
    text = summary_csv({"x": est, "y": McEstimate(2.0, 0.2, 10)})
    lines = text.splitlines()
    assert lines[0] == "quantity,mean,std_error,analytic,z"
    assert lines[2] == "y,2,0.20000000000000001,,"
