"""The twelve acceptance criteria, one test each.

Every test logs a ``[PASS]``/``[FAIL]`` line that is repeated in the
terminal summary.  Tolerances are pinned in ``riccati_shooting.verification``.
"""

import pytest

from riccati_shooting import verification as v


def _check(result, log):
    line = result.line()
    log.append(line)
    print(line)
    assert result.passed, line


def test_criterion_01_critical_parameter(acceptance_log):
    _check(v.criterion_critical_xi(), acceptance_log)


def test_criterion_02_slope_identity(critical, acceptance_log):
    _check(v.criterion_slope_identity(critical), acceptance_log)


def test_criterion_03_L_identity(critical, acceptance_log):
    _check(v.criterion_L_identity(critical), acceptance_log)


def test_criterion_04_subcritical_endpoint(acceptance_log):
    _check(v.criterion_subcritical_endpoint(), acceptance_log)


def test_criterion_05_constant_riccati(acceptance_log):
    _check(v.criterion_constant_riccati(), acceptance_log)


def test_criterion_06_comparison(critical, acceptance_log):
    _check(v.criterion_comparison(critical), acceptance_log)


def test_criterion_07_explosion(acceptance_log):
    _check(v.criterion_explosion(), acceptance_log)


@pytest.mark.slow
def test_criterion_08_dividend_integral(acceptance_log):
    _check(v.criterion_dividend_integral(), acceptance_log)


@pytest.mark.slow
def test_criterion_09_feynman_kac(critical, acceptance_log):
    _check(v.criterion_feynman_kac(critical), acceptance_log)


def test_criterion_10_g_suite(critical, acceptance_log):
    _check(v.criterion_g_suite(critical), acceptance_log)


def test_criterion_11_boundary(critical, acceptance_log):
    _check(v.criterion_boundary(critical), acceptance_log)


def test_criterion_12_appendix(acceptance_log):
    _check(v.criterion_appendix(), acceptance_log)
