import numpy as np
import pytest

from riccati_shooting.errors import DomainError
from riccati_shooting.extrapolate import richardson
from riccati_shooting.ode import IntegratorConfig, ModelParams
from riccati_shooting.shooting import (Indeterminate, Subcritical, Supercritical, classify,
                                       endpoint_exponents, find_critical, initial_bracket,
                                       subcritical_endpoint)

BASE = ModelParams(0.5, 0.2, 2.0, 0.03)

# frozen from an independent run at xi_tol = 1e-12
XI0_A2 = 0.12231868
XI0_A25 = 0.15223249


def test_classify_low_xi_subcritical():
    c = classify(BASE)
    assert isinstance(c, Subcritical)
    assert subcritical_endpoint(c) == pytest.approx(0.25, abs=1e-5)


def test_classify_large_xi_supercritical():
    c = classify(BASE.with_xi(10.0))
    assert isinstance(c, Supercritical) and c.y_end < 1.0


def test_classify_sweep_value_at_a_2_5():
    assert isinstance(classify(ModelParams(0.5, 0.2, 2.5, 0.15)), Subcritical)


@pytest.mark.xfail(strict=True, reason="at A = 2 the critical value is 0.1223, so 0.15 is supercritical")
def test_classify_sweep_value_at_a_2():
    assert isinstance(classify(BASE.with_xi(0.15)), Subcritical)


def test_classify_reports_indeterminate():
    # unreachable tolerance plus a step floor: the integrator gives up with h < 1
    cfg = IntegratorConfig(rel_tol=1e-16, abs_tol=1e-16, min_step=1e-4)
    c = classify(BASE.with_xi(0.1), cfg)
    assert isinstance(c, Indeterminate) and c.y_fail < 1.0


def test_initial_bracket():
    lo, hi = initial_bracket(0.5, 0.2, 2.0)
    assert lo == pytest.approx(0.03)
    assert isinstance(classify(BASE.with_xi(lo)), Subcritical)
    assert isinstance(classify(BASE.with_xi(hi)), Supercritical)
    assert lo < 0.152232 < hi
    assert hi == lo * 2.0 ** round(np.log2(hi / lo))


def test_endpoint_exponents():
    assert endpoint_exponents(0.5, 2.0) == pytest.approx((1.0, -1.5))


def test_critical_value_frozen(critical):
    assert critical.xi0 == pytest.approx(XI0_A2, abs=1e-8)


def test_critical_value_matches_sweep_list_at_a_2_5(critical_a25):
    assert critical_a25.xi0 == pytest.approx(0.152232, abs=1e-5)
    assert critical_a25.xi0 == pytest.approx(XI0_A25, abs=1e-8)


@pytest.mark.xfail(strict=True, reason="0.152232 is the critical value for A = 2.5; for A = 2 it is 0.1223")
def test_critical_value_matches_sweep_list_at_a_2(critical):
    assert critical.xi0 == pytest.approx(0.152232, abs=1e-5)


def test_bisection_history(critical):
    widths = [hi - lo for lo, hi in critical.bracket_history]
    assert all(b < a for a, b in zip(widths, widths[1:]))
    assert widths[-1] <= critical.xi_tol
    for lo, hi in critical.bracket_history[::6]:
        assert isinstance(classify(BASE.with_xi(lo)), Subcritical)
        assert isinstance(classify(BASE.with_xi(hi)), Supercritical)


def test_critical_bounds(critical):
    h = critical.grid.h
    assert np.all(h >= 0.5 - 1e-6) and np.all(h <= 1.0 + 1e-9)
    ys = np.linspace(0.0, 1.0, 2001)
    hs = critical.h_at(ys)
    assert np.all(hs >= 0.5 - 1e-6) and np.all(hs <= 1.0 + 1e-9)
    assert critical.h_at(1.0) == 1.0


def test_critical_L_and_slope(critical):
    assert 0.0 < critical.L < 1.0
    assert critical.L == pytest.approx(0.04 * 1.5 / critical.xi0, rel=1e-3)
    assert critical.hprime1 == pytest.approx(0.75, abs=5e-2)


def test_exp_I_floor(critical):
    floor = critical.L_identity
    assert np.all(critical.grid.exp_I >= floor - 1e-6)


def test_near_boundary_quotients_approach_slope(critical):
    gaps = [abs(q - 0.75) for _, q in critical.quotients]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_certificates(critical, critical_a25):
    assert all(critical.certificates().values())
    assert all(critical_a25.certificates().values())


def test_other_parameter_set():
    c = find_critical(0.3, 0.3, 4.0)
    assert all(c.certificates().values())


def test_stability_under_halved_offsets(critical):
    cfg = IntegratorConfig(start_offset=0.5e-6, end_offset=0.5e-8)
    again = find_critical(0.5, 0.2, 2.0, cfg=cfg)
    assert abs(again.xi0 - critical.xi0) <= 10 * critical.xi_tol


def test_tail_is_continuous(critical):
    yT = critical.trusted_end
    left = critical.grid.h_at(yT)
    right = critical._tail_eval(np.array([yT]))[0][0]
    assert right == pytest.approx(left, abs=1e-12)
    assert critical.I_at(1.0) == pytest.approx(np.log(critical.L), abs=1e-3)


def test_metadata_keys(critical):
    assert list(critical.metadata()) == ["xi0", "L", "hprime1", "gamma", "sigma_D", "A", "xi_tol"]


def test_xi_tol_floor():
    with pytest.raises(DomainError):
        find_critical(0.5, 0.2, 2.0, xi_tol=1e-13)


def test_h_prime_at_matches_difference(critical):
    y, s = 0.5, 1e-5
    fd = (critical.h_at(y + s) - critical.h_at(y - s)) / (2 * s)
    assert critical.h_prime_at(y) == pytest.approx(fd, abs=1e-7)


def test_richardson_removes_known_terms():
    eps = [1e-2, 1e-3, 1e-4]
    vals = [2.0 + 3.0 * e ** 0.5 - 5.0 * e for e in eps]
    assert richardson(eps, vals, (0.5, 1.0)) == pytest.approx(2.0, abs=1e-12)
