"""Constant-coefficient Riccati family used as a ground-truth oracle.

Replacing the path-dependent coefficient by a constant ``a3 <= -gamma`` gives

    f' = a0(y) + a1(y) f / (1 - y) + a3 f^2 / (1 - y),   f(0) = gamma,

whose right endpoint is known in closed form: ``f(1) = -gamma / a3``.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, IntegrationError
from .extrapolate import richardson
from .ode import (AugmentedState, Completed, IntegratorConfig, coeff_a0, coeff_a1,
                  integrate_system, make_rhs)
from .report import Report

__all__ = [
    "ConstantRiccatiParams",
    "solve_constant_riccati",
    "endpoint_value",
    "stationary_value",
    "appendix_diagnostics",
    "ENDPOINT_EPS",
]

# Offsets used to extrapolate f(1); the leading corrections are eps^gamma and eps.
ENDPOINT_EPS = (1e-5, 1e-6, 1e-7)


@dataclass(frozen=True)
class ConstantRiccatiParams:
    gamma: float
    a3: float

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not math.isfinite(self.a3) or self.a3 > -self.gamma:
            raise DomainError(f"a3 must satisfy a3 <= -gamma, got {self.a3}")

    @property
    def endpoint(self) -> float:
        """Closed-form right endpoint ``-gamma / a3``."""
        return -self.gamma / self.a3

    def slope(self) -> float:
        g = self.gamma
        return g * g * (1.0 + self.a3) / (2.0 + g)


def solve_constant_riccati(p: ConstantRiccatiParams, cfg: IntegratorConfig = IntegratorConfig(),
                           start: Optional[AugmentedState] = None):
    """Integrate the constant-coefficient equation with the shared engine.

    ``I`` is carried along but does not feed back (``a2`` is the constant
    ``a3``).  Raises :class:`IntegrationError` unless the run completes.
    """
    # k = 0 and A = -a3 turn k e^I - A into the constant a3
    f = make_rhs(p.gamma, 0.0, -p.a3)
    if start is None:
        d = cfg.start_offset
        start = AugmentedState(d, p.gamma + p.slope() * d, (p.gamma - 1.0) * d)
    outcome = integrate_system(f, start, p, cfg, stop_at_one=False)
    if not isinstance(outcome, Completed):
        raise IntegrationError(f"constant Riccati run did not complete: {outcome!r}")
    return outcome.grid


def endpoint_value(grid, eps: Sequence[float] = ENDPOINT_EPS) -> float:
    """Extrapolate ``f(1)`` from ``f(1 - eps_j)``."""
    if min(eps) < grid.end_offset:
        raise DomainError("extrapolation offsets must not undercut the grid cutoff")
    gamma = grid.params.gamma
    values = [grid.h_at(1.0 - e) for e in eps]
    return richardson(eps, values, (gamma, 1.0))


def stationary_value(gamma: float, a3: float, y: float) -> float:
    """Positive root of ``a0(y)(1-y) + a1(y) f + a3 f^2 = 0``.

    Written as ``2 a0 (1-y) / (-a1 + sqrt(a1^2 - 4 a3 a0 (1-y)))`` which avoids
    cancellation when ``a1 < 0``.
    """
    if not 0.0 < y < 1.0:
        raise DomainError(f"y must lie in (0, 1), got {y}")
    c = coeff_a0(gamma, y) * (1.0 - y)
    b = coeff_a1(gamma, y)
    disc = b * b - 4.0 * a3 * c
    if disc < 0.0:
        raise DomainError(f"negative discriminant {disc} (a3={a3} must be negative)")
    return 2.0 * c / (-b + math.sqrt(disc))


APPENDIX_EPS = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


def _trapezoid_to(grid, values_fn, y_end):
    n = int(np.searchsorted(grid.y, y_end, side="left"))
    ys = np.concatenate(([0.0], grid.y[:n], [y_end]))
    return float(np.trapezoid(values_fn(ys), ys))


def appendix_diagnostics(gamma: float, cfg: IntegratorConfig = IntegratorConfig(),
                         eps: Sequence[float] = APPENDIX_EPS) -> Report:
    """Endpoint behaviour of the borderline case ``a3 = -gamma``.

    The solution rises to ``f(1) = 1`` with a slope that diverges while the
    integrals of ``|f'|`` and ``(1 - f)/(1 - q)`` stay finite.  Reported per
    offset: ``f'(1-eps)``, both integrals (trapezoid on the solver grid and the
    carried ``-I``) and ``f(1-eps)``.

    Checks: ``slope_increasing``, ``integral_stable`` (trapezoid change between
    the two smallest offsets below 1e-3), ``integral_converging`` (successive
    changes shrink), ``abs_slope_integral_bounded``,
    ``endpoint_near_one`` (``|f(1-eps_min) - 1| <= 1e-3``) and
    ``extrapolated_endpoint`` (extrapolated ``f(1)`` within 1e-6 of 1).
    """
    p = ConstantRiccatiParams(gamma, -gamma)
    grid = solve_constant_riccati(p, cfg)
    f = make_rhs(gamma, 0.0, gamma)
    eps = sorted(eps, reverse=True)
    report = Report()
    slopes, trap, absint = [], [], []

    def integrand(ys):
        return (1.0 - grid.h_at(ys)) / (1.0 - ys)

    for e in eps:
        y = 1.0 - e
        fy, iy = grid.h_at(y), grid.I_at(y)
        slope = f(y, fy, iy)[0]
        slopes.append(slope)
        trap.append(_trapezoid_to(grid, integrand, y))
        n = int(np.searchsorted(grid.y, y, side="left"))
        ys = np.concatenate((grid.y[:n], [y]))
        ds = np.concatenate((np.abs(grid.slopes[0][:n]), [abs(slope)]))
        absint.append(float(np.trapezoid(ds, ys)))
        case = f"eps={e:g}"
        report.add(case, "slope", slope)
        report.add(case, "integral_trapezoid", trap[-1])
        report.add(case, "integral_exact", -iy)
        report.add(case, "abs_slope_integral", absint[-1])
        report.add(case, "f", fy, 1.0)

    f1 = endpoint_value(grid)
    report.add("extrapolated", "f(1)", f1, 1.0)
    report.checks["slope_increasing"] = all(b > a for a, b in zip(slopes, slopes[1:]))
    report.checks["integral_stable"] = abs(trap[-1] - trap[-2]) < 1e-3
    diffs = np.abs(np.diff(trap))
    report.checks["integral_converging"] = bool(np.all(diffs[1:] < diffs[:-1]))
    # f is increasing here, so int |f'| cannot exceed the total rise 1 - gamma
    report.checks["abs_slope_integral_bounded"] = max(absint) <= 1.0 - gamma + 1e-6
    report.checks["endpoint_near_one"] = abs(grid.h_at(1.0 - eps[-1]) - 1.0) <= 1e-3
    report.checks["extrapolated_endpoint"] = abs(f1 - 1.0) <= 1e-6
    return report
