"""Equilibrium quantities built from the critical solution.

Everything here is a closed-form function of ``y`` through ``h(y)`` and
``I(y)``.  The value function ``g`` is always evaluated as

    g(y) = (2 / xi0) exp(-I(y)) (1 - y)^(1 - gamma),

which equals ``(2/xi0) exp(-int_0^y h/(1-q) dq) (1-y)^(-gamma)`` but avoids multiplying a
divergent exponent by a vanishing factor near ``y = 1``.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect

from .errors import DomainError
from .extrapolate import richardson
from .report import Report
from .shooting import CriticalSolution

__all__ = [
    "EconomyParams",
    "compute_A",
    "drift_vol",
    "rate_and_mpr",
    "g_value",
    "g_derivatives",
    "g_value_naive",
    "g_ode_residual",
    "solve_Y0",
    "scale_density",
    "scale_function",
    "boundary_diagnostics",
    "EquilibriumFunctions",
    "tabulate",
]


@dataclass(frozen=True)
class EconomyParams:
    """Economy parameters; construction fails unless the implied ``A`` exceeds 1."""

    beta: float
    mu_D: float
    sigma_D: float
    gamma: float
    D0: float = 1.0

    def __post_init__(self):
        if not self.beta > 0.0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not self.sigma_D > 0.0:
            raise DomainError(f"sigma_D must be positive, got {self.sigma_D}")
        if not 0.0 < self.gamma < 1.0:
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.D0 > 0.0:
            raise DomainError(f"D0 must be positive, got {self.D0}")
        bound = 0.5 * (1.0 - self.gamma) * (2.0 * self.mu_D - self.gamma * self.sigma_D ** 2)
        if not self.beta > bound:
            raise DomainError(
                f"need beta > (1-gamma)(2 mu_D - gamma sigma_D^2)/2 = {bound!r} "
                f"(equivalently A > 1), got beta={self.beta!r}")

    @property
    def A(self) -> float:
        return compute_A(self)

    @property
    def discount_rate(self) -> float:
        """Decay rate ``beta - (1-gamma)(mu_D - gamma sigma_D^2/2)`` of ``E[e^{-beta t} D_t^{1-gamma}]``."""
        return self.beta - (1.0 - self.gamma) * (self.mu_D - 0.5 * self.gamma * self.sigma_D ** 2)


def compute_A(econ: EconomyParams) -> float:
    s2 = econ.sigma_D ** 2
    A = (2.0 * econ.beta + s2 - (1.0 - econ.gamma) * (2.0 * econ.mu_D - econ.gamma * s2)) / s2
    if not A > 1.0:
        raise DomainError(f"A = {A!r} must exceed 1")
    return A


def _check_match(critical: CriticalSolution, econ: EconomyParams):
    p = critical.params
    if abs(p.gamma - econ.gamma) > 1e-12 or abs(p.sigma_D - econ.sigma_D) > 1e-12:
        raise DomainError("economy and critical solution disagree on gamma or sigma_D")
    if abs(p.A - econ.A) > 1e-12:
        raise DomainError(f"economy has A={econ.A!r} but the critical solution used A={p.A!r}")


def _as_array(y):
    y = np.asarray(y, dtype=float)
    return y.ndim == 0, np.atleast_1d(y)


def _out(scalar, arr):
    return float(arr[0]) if scalar else arr


def drift_vol(critical: CriticalSolution, y):
    """``(mu_Y(y), sigma_Y(y))`` for ``y`` in ``(0, 1]``."""
    scalar, y = _as_array(y)
    if np.any(y <= 0.0) or np.any(y > 1.0):
        raise DomainError("drift_vol needs y in (0, 1]")
    p = critical.params
    g, s2 = p.gamma, p.sigma_D ** 2
    h = critical.h_at(y)
    z = 1.0 - y
    mu = s2 * z * (1.0 + g + 2.0 * g * y * h - 2.0 * y * (1.0 + g)) / (2.0 * y * h * h)
    sig = p.sigma_D * z / h
    return _out(scalar, mu), _out(scalar, sig)


def rate_and_mpr(critical: CriticalSolution, econ: EconomyParams, y):
    """Interest rate ``r(y)`` and market price of risk ``kappa(y)`` on ``(0, 1)``."""
    _check_match(critical, econ)
    scalar, y = _as_array(y)
    if np.any(y <= 0.0) or np.any(y >= 1.0):
        raise DomainError("rate_and_mpr needs y in (0, 1)")
    g, s2 = econ.gamma, econ.sigma_D ** 2
    h = critical.h_at(y)
    z = 1.0 - y
    r = (econ.beta + g * econ.mu_D - 0.5 * g * (g + 1.0) * s2
         - g * (g + 1.0) * s2 * z / (2.0 * y * h * h))
    kappa = g * econ.sigma_D * (z / (y * h) + 1.0)
    return _out(scalar, r), _out(scalar, kappa)


def g_value(critical: CriticalSolution, y):
    scalar, y = _as_array(y)
    if np.any(y < 0.0) or np.any(y > 1.0):
        raise DomainError("g is defined on [0, 1]")
    gamma = critical.params.gamma
    val = (2.0 / critical.xi0) * np.exp(-critical.I_at(y)) * (1.0 - y) ** (1.0 - gamma)
    return _out(scalar, val)


def g_derivatives(critical: CriticalSolution, y):
    """``(g, g', g'')`` from analytic differentiation, with ``h'`` taken from the ODE."""
    scalar, y = _as_array(y)
    if np.any(y <= 0.0) or np.any(y >= 1.0):
        raise DomainError("derivatives of g need y in (0, 1)")
    gamma = critical.params.gamma
    h = critical.h_at(y)
    dh = critical.h_prime_at(y)
    z = 1.0 - y
    g = g_value(critical, y)
    g1 = g * (gamma - h) / z
    g2 = g1 * (gamma - h) / z + g * (-dh / z + (gamma - h) / (z * z))
    return _out(scalar, g), _out(scalar, g1), _out(scalar, g2)


def g_value_naive(critical: CriticalSolution, y: float, n: int = 2001) -> float:
    """Literal form ``(2/xi0) exp(-int_0^y h/(1-q) dq) (1-y)^(-gamma)`` with the
    integral by the trapezoid rule on ``n`` uniform nodes.

    Comparison baseline only; loses accuracy as ``y -> 1``.
    """
    if not 0.0 <= y < 1.0:
        raise DomainError("naive g needs y in [0, 1)")
    q = np.linspace(0.0, y, n)
    integral = float(np.trapezoid(critical.h_at(q) / (1.0 - q), q))
    return (2.0 / critical.xi0) * math.exp(-integral) * (1.0 - y) ** (-critical.params.gamma)


def g_ode_residual(critical: CriticalSolution, econ: EconomyParams, y: float,
                   margins=(1e-3, 1e-3), form: str = "stable") -> float:
    """Residual of the linear second-order equation for ``g`` at ``y``.

    ``form="naive"`` substitutes the literal quadrature value of ``g`` (and
    rescales ``g'``, ``g''`` accordingly) to show what the stable form buys.
    """
    _check_match(critical, econ)
    lo, hi = margins
    if not lo <= y <= 1.0 - hi:
        raise DomainError(f"y={y!r} outside the interior margins [{lo}, {1.0 - hi}]")
    g, g1, g2 = g_derivatives(critical, y)
    if form == "naive":
        scale = g_value_naive(critical, y) / g
        g, g1, g2 = g * scale, g1 * scale, g2 * scale
    elif form != "stable":
        raise ValueError(f"unknown form {form!r}")
    gamma, s = econ.gamma, econ.sigma_D
    mu, sig = drift_vol(critical, y)
    rhs = ((1.0 - gamma) * econ.mu_D * g - 0.5 * (1.0 - gamma) * gamma * s * s * g
           + mu * g1 + 0.5 * sig * sig * g2 + (1.0 - gamma) * s * sig * g1
           + (1.0 - y) ** (1.0 - gamma))
    return rhs - econ.beta * g


def solve_Y0(critical: CriticalSolution, econ: EconomyParams, theta2: float) -> float:
    """Initial state ``Y0`` matching investor 2's money-market endowment.

    Solves ``g(Y0) D0 (1 - Y0)^gamma = theta2``; the left side decreases from
    ``g(0) D0`` to 0, so ``theta2`` must lie in ``(0, g(0) D0)``.  A bound of
    ``g(0)/D0`` is sometimes quoted; it only agrees with this range when
    ``D0 = 1``.
    """
    _check_match(critical, econ)
    top = g_value(critical, 0.0) * econ.D0
    if not 0.0 < theta2 < top:
        raise DomainError(f"theta2 must lie in (0, g(0) D0) = (0, {top!r}), got {theta2!r}")
    scale = 2.0 / critical.xi0 * econ.D0

    def F(y):
        return scale * math.exp(-critical.I_at(y)) * (1.0 - y) - theta2

    return bisect(F, 0.0, 1.0, xtol=1e-12, rtol=4.0 * np.finfo(float).eps, maxiter=200)


def scale_density(critical: CriticalSolution, y, anchor: float = 0.5):
    """Scale density ``rho(y) = exp(2 int_y^a mu_Y/sigma_Y^2)`` in closed form.

    Since ``2 mu_Y/sigma_Y^2 = (1+gamma)/z - (1-gamma)/(1-z) - 2 gamma (1-h)/(1-z)``,

        rho(y) = (a/y)^(1+gamma) ((1-a)/(1-y))^(1-gamma) exp(2 gamma (I(a) - I(y))).
    """
    scalar, y = _as_array(y)
    if np.any(y <= 0.0) or np.any(y >= 1.0):
        raise DomainError("rho needs y in (0, 1)")
    g, a = critical.params.gamma, anchor
    val = ((a / y) ** (1.0 + g) * ((1.0 - a) / (1.0 - y)) ** (1.0 - g)
           * np.exp(2.0 * g * (critical.I_at(a) - critical.I_at(y))))
    return _out(scalar, val)


def scale_function(critical: CriticalSolution, y: float, anchor: float = 0.5) -> float:
    """``s(y) = -int_y^a rho(z) dz`` (positive for ``y > a``).

    Left of the anchor the integral is taken in ``u = log z``; right of it in
    ``t = (1-z)^gamma``, which absorbs the ``(1-z)^(gamma-1)`` singularity.
    """
    if not 0.0 < y < 1.0:
        raise DomainError("s needs y in (0, 1)")
    a, g = anchor, critical.params.gamma
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=500)
    if y <= a:
        val, _ = quad(lambda u: scale_density(critical, math.exp(u), a) * math.exp(u),
                      math.log(y), math.log(a), **opts)
        return -val

    def integrand(t):
        z = 1.0 - t ** (1.0 / g)
        if z >= 1.0:
            z = 1.0 - 1e-300
        return scale_density(critical, z, a) * (1.0 - z) ** (1.0 - g) / g

    val, _ = quad(integrand, (1.0 - y) ** g, (1.0 - a) ** g, **opts)
    return val


def boundary_diagnostics(critical: CriticalSolution, anchor: float = 0.5,
                         right_eps: Sequence[float] = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
                         dyadic=range(4, 21)) -> Report:
    """Quantitative boundary classification of the state process.

    Checks
    ------
    cauchy_near_one
        ``|s(1-1e-5) - s(1-1e-4)| <= 1e-6 |s(1-1e-4)|``.
    limit_near_one_stable
        Extrapolated ``s(1)`` from two offset triples agree to 1e-6 relative.
    diverges_near_zero
        ``|s(2^-k)|`` strictly increasing over ``dyadic``.
    rho_scaled_bounded
        ``rho(y)(1-y)^(1-gamma)`` stays within a factor 2 band near 1.
    speed_lower_bound
        ``(1-y)(s(1)-s(y))/(rho sigma_Y^2)`` stays above a positive constant,
        so the integral against ``dy`` diverges like ``c/(1-y)``.
    """
    g = critical.params.gamma
    report = Report()
    eps = sorted(right_eps, reverse=True)
    s_right = {e: scale_function(critical, 1.0 - e, anchor) for e in eps}
    for e in eps:
        report.add(f"eps={e:g}", "s(1-eps)", s_right[e])

    s_a, s_b = s_right.get(1e-4), s_right.get(1e-5)
    if s_a is not None and s_b is not None:
        report.add("cauchy", "rel_change_1e-4_1e-5", abs(s_b - s_a) / abs(s_a), 0.0)
        report.checks["cauchy_near_one"] = abs(s_b - s_a) <= 1e-6 * abs(s_a)

    # s(1) - s(1-eps) ~ c eps^gamma + c' eps^(gamma+1)
    triples = [(1e-3, 1e-4, 1e-5), (1e-4, 1e-5, 1e-6)]
    limits = []
    for tri in triples:
        vals = [s_right[e] if e in s_right else scale_function(critical, 1.0 - e, anchor)
                for e in tri]
        limits.append(richardson(tri, vals, (g, g + 1.0)))
        report.add(f"extrapolated eps={tri[0]:g}..{tri[-1]:g}", "s(1)", limits[-1])
    s1 = limits[-1]
    report.checks["limit_near_one_stable"] = abs(limits[0] - limits[1]) <= 1e-6 * abs(s1)

    left = []
    for k in dyadic:
        val = scale_function(critical, 2.0 ** -k, anchor)
        left.append(abs(val))
        report.add(f"k={k}", "|s(2^-k)|", abs(val))
    report.checks["diverges_near_zero"] = all(b > a for a, b in zip(left, left[1:]))

    probe = [10.0 ** -j for j in range(2, 9)]
    scaled = [scale_density(critical, 1.0 - e, anchor) * e ** (1.0 - g) for e in probe]
    for e, v in zip(probe, scaled):
        report.add(f"eps={e:g}", "rho*(1-y)^(1-gamma)", v)
    report.checks["rho_scaled_bounded"] = min(scaled) > 0.0 and max(scaled) <= 2.0 * min(scaled)

    speed = []
    for e in eps:
        y = 1.0 - e
        _, sig = drift_vol(critical, y)
        v = e * (s1 - s_right[e]) / (scale_density(critical, y, anchor) * sig * sig)
        speed.append(v)
        report.add(f"eps={e:g}", "(1-y)(s(1)-s(y))/(rho sigma_Y^2)", v)
    report.checks["speed_lower_bound"] = min(speed) > 0.5 * speed[-1] > 0.0
    return report


class EquilibriumFunctions:
    """Evaluators for ``mu_Y, sigma_Y, r, kappa, g`` over one critical solution."""

    def __init__(self, critical: CriticalSolution, econ: EconomyParams):
        _check_match(critical, econ)
        self.critical = critical
        self.econ = econ

    def mu_Y(self, y):
        return drift_vol(self.critical, y)[0]

    def sigma_Y(self, y):
        return drift_vol(self.critical, y)[1]

    def r(self, y):
        return rate_and_mpr(self.critical, self.econ, y)[0]

    def kappa(self, y):
        return rate_and_mpr(self.critical, self.econ, y)[1]

    def g(self, y):
        return g_value(self.critical, y)


def tabulate(critical: CriticalSolution, econ: EconomyParams, n: int = 101,
             margin: float = 1e-3) -> np.ndarray:
    """Columns ``y, h, mu_Y, sigma_Y, r, kappa, g`` on a uniform interior grid."""
    if n < 2:
        raise DomainError("need at least two table rows")
    y = np.linspace(margin, 1.0 - margin, n)
    mu, sig = drift_vol(critical, y)
    r, kappa = rate_and_mpr(critical, econ, y)
    return np.column_stack([y, critical.h_at(y), mu, sig, r, kappa, g_value(critical, y)])
