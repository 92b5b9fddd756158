"""Shooting on ``xi``: classification, bracketing and bisection to the
critical parameter, plus the critical trajectory with its endpoint data.

Below the critical value trajectories stay under 1 and fall back to
``gamma / A``; above it they reach 1 (or blow up) before ``y = 1``.  The two
bracketing trajectories agree up to a point close to 1 and then separate
along the unstable direction of the endpoint linearisation.  The critical
solution is therefore reported on the region where they still agree and is
continued to ``y = 1`` by the stable-mode tail

    h(y) = 1 - (1-y) q(y),   q(y) = q1 + (q_T - q1) ((1-y)/(1-y_T))^mu,

where ``q1`` is the extrapolated slope ``h'(1)`` and ``mu = |lambda_-| - 1``
comes from ``lambda^2 + gamma lambda - (A - gamma) = 0``.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import BracketError, DomainError
from .extrapolate import richardson
from .ode import (Completed, Exploded, HitOne, IntegrationFailure, IntegratorConfig,
                  ModelParams, SolutionGrid, integrate, make_rhs)

__all__ = [
    "Subcritical",
    "Supercritical",
    "Indeterminate",
    "classify",
    "initial_bracket",
    "find_critical",
    "CriticalSolution",
    "endpoint_exponents",
    "subcritical_endpoint",
]

MAX_DOUBLINGS = 20
# relative agreement |h_lo - h_hi| <= TRUST_TOL (1 - y) defines the trusted region
TRUST_TOL = 1e-3
# extrapolation offsets as multiples of the trusted distance to 1
EXTRAPOLATION_MULTIPLES = (16.0, 4.0, 1.0)


@dataclass(frozen=True)
class Subcritical:
    end_value: float
    grid: SolutionGrid = field(repr=False)


@dataclass(frozen=True)
class Supercritical:
    y_end: float
    kind: str  # "hit_one" or "exploded"
    grid: Optional[SolutionGrid] = field(repr=False, default=None)


@dataclass(frozen=True)
class Indeterminate:
    """The integrator failed without a blow-up signature; tighten tolerances."""

    y_fail: float
    reason: str


def classify(params: ModelParams, cfg: IntegratorConfig = IntegratorConfig()):
    outcome = integrate(params, cfg)
    if isinstance(outcome, Completed):
        grid = outcome.grid
        if float(np.max(grid.h)) < 1.0:
            return Subcritical(float(grid.h[-1]), grid)
        return Supercritical(grid.y_last, "hit_one", grid)
    if isinstance(outcome, HitOne):
        return Supercritical(outcome.y_hit, "hit_one", outcome.grid)
    if isinstance(outcome, Exploded):
        return Supercritical(outcome.y_exp, "exploded", outcome.grid)
    assert isinstance(outcome, IntegrationFailure)
    return Indeterminate(outcome.y_fail, outcome.reason)


def _check_shape(gamma, sigma_D, A):
    # validation piggybacks on ModelParams with a placeholder xi
    ModelParams(gamma, sigma_D, A, 1.0)


def initial_bracket(gamma: float, sigma_D: float, A: float,
                    cfg: IntegratorConfig = IntegratorConfig()) -> Tuple[float, float]:
    """Return ``(xi_lo, xi_hi)`` with ``xi_lo = sigma_D^2 (A - gamma) / 2``.

    ``xi_hi`` doubles from ``xi_lo`` until the trajectory is supercritical,
    at most ``MAX_DOUBLINGS`` times.
    """
    _check_shape(gamma, sigma_D, A)
    xi_lo = sigma_D ** 2 * (A - gamma) / 2.0
    base = ModelParams(gamma, sigma_D, A, xi_lo)
    history = []
    c = classify(base, cfg)
    if not isinstance(c, Subcritical):
        raise BracketError(f"lower bracket end xi={xi_lo} is not subcritical: {c!r}",
                           [(xi_lo, math.nan)])
    xi_hi = xi_lo
    for _ in range(MAX_DOUBLINGS):
        xi_hi *= 2.0
        c = classify(base.with_xi(xi_hi), cfg)
        history.append((xi_lo, xi_hi))
        if isinstance(c, Supercritical):
            return xi_lo, xi_hi
        if not isinstance(c, Subcritical):
            raise BracketError(f"indeterminate classification at xi={xi_hi}: {c.reason}",
                               history)
    raise BracketError(f"no supercritical xi found after {MAX_DOUBLINGS} doublings", history)


def endpoint_exponents(gamma: float, A: float) -> Tuple[float, float]:
    """Roots ``(lambda_+, lambda_-)`` of ``lambda^2 + gamma lambda - (A - gamma) = 0``."""
    root = math.sqrt(gamma * gamma + 4.0 * (A - gamma))
    return (-gamma + root) / 2.0, (-gamma - root) / 2.0


SUBCRITICAL_EPS = (1e-5, 1e-6, 1e-7)


def subcritical_endpoint(result: Subcritical, eps: Sequence[float] = SUBCRITICAL_EPS) -> float:
    """Extrapolated ``h(1)`` of a subcritical trajectory (the limit is ``gamma / A``).

    Linearising at ``c0 = gamma / A`` gives ``h - c0 ~ (1-y)^gamma``, so the
    extrapolation uses exponents ``(gamma, 1)``.
    """
    grid = result.grid
    gamma = grid.params.gamma
    if min(eps) < 1.0 - grid.y_last:
        raise DomainError("extrapolation offsets reach past the end of the grid")
    return richardson(eps, [grid.h_at(1.0 - e) for e in eps], (gamma, 1.0))


@dataclass(frozen=True)
class CriticalSolution:
    """Critical parameter ``xi0`` and trajectory with endpoint diagnostics.

    Attributes
    ----------
    xi0 : float
        Largest subcritical parameter found (lower end of the final bracket).
    xi_hi : float
        Upper end of the final bracket.
    grid : SolutionGrid
        Subcritical trajectory at ``xi0`` restricted to the trusted region.
    raw_grid : SolutionGrid
        The same trajectory on the whole of ``[delta, 1 - epsilon]``.
    L : float
        Extrapolated ``exp(I(1))``.
    hprime1 : float
        Extrapolated ``h'(1)`` from the quotient ``(1 - h(y)) / (1 - y)``.
    quotients : list of (eps, value)
        The quotient at ``y = 1 - eps`` for half decades of ``eps`` inside
        the trusted region, ending at its edge.
    bracket_history : list of (xi_lo, xi_hi)
    """

    xi0: float
    xi_hi: float
    grid: SolutionGrid = field(repr=False)
    raw_grid: SolutionGrid = field(repr=False)
    L: float
    hprime1: float
    quotients: List[Tuple[float, float]]
    bracket_history: List[Tuple[float, float]] = field(repr=False)
    xi_tol: float = 1e-9
    mu: float = 0.5

    @property
    def params(self) -> ModelParams:
        return self.grid.params

    @property
    def trusted_end(self) -> float:
        return self.grid.y_last

    @property
    def L_identity(self) -> float:
        """Right-hand side ``sigma_D^2 (A - gamma) / xi0`` of the limit identity."""
        p = self.params
        return p.sigma_D ** 2 * (p.A - p.gamma) / self.xi0

    @property
    def hprime1_identity(self) -> float:
        p = self.params
        return (1.0 - p.gamma ** 2) / (p.A - 1.0)

    def _tail(self):
        yT = self.grid.y_last
        sT = 1.0 - yT
        qT = (1.0 - float(self.grid.h[-1])) / sT
        return sT, qT, float(self.grid.I[-1])

    def _tail_eval(self, y):
        sT, qT, IT = self._tail()
        q1, mu = self.hprime1, self.mu
        s = 1.0 - y
        r = s / sT
        q = q1 + (qT - q1) * r ** mu
        h = 1.0 - s * q
        I = IT - (q1 * (sT - s) + (qT - q1) * sT / (1.0 + mu) * (1.0 - r ** (1.0 + mu)))
        dh = q1 + (qT - q1) * (1.0 + mu) * r ** mu
        return h, I, dh

    def _split(self, y, which):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        y = np.atleast_1d(y)
        if np.any(y < 0.0) or np.any(y > 1.0):
            raise DomainError("evaluation point outside [0, 1]")
        out = np.empty_like(y)
        inside = y <= self.grid.y_last
        if np.any(inside):
            yi = y[inside]
            if which == 0:
                out[inside] = self.grid.h_at(yi)
            elif which == 1:
                out[inside] = self.grid.I_at(yi)
            else:
                p = self.params
                f = make_rhs(p.gamma, p.k, p.A)
                hs, Is = self.grid.h_at(yi), self.grid.I_at(yi)
                out[inside] = [f(a, b, c)[0] if a > 0.0 else _origin_slope(p)
                               for a, b, c in zip(yi, hs, Is)]
        if np.any(~inside):
            out[~inside] = self._tail_eval(y[~inside])[which]
        return float(out[0]) if scalar else out

    def h_at(self, y):
        """``h`` on ``[0, 1]``; the stable-mode tail is used past the trusted region."""
        return self._split(y, 0)

    def I_at(self, y):
        return self._split(y, 1)

    def h_prime_at(self, y):
        """``h'`` from the ODE on the trusted region and from the tail beyond."""
        return self._split(y, 2)

    def metadata(self) -> dict:
        p = self.params
        return {
            "xi0": self.xi0,
            "L": self.L,
            "hprime1": self.hprime1,
            "gamma": p.gamma,
            "sigma_D": p.sigma_D,
            "A": p.A,
            "xi_tol": self.xi_tol,
        }

    def certificates(self) -> dict:
        """Pass/fail flags for the properties the critical solution must satisfy."""
        p = self.params
        h = self.grid.h
        widths = [hi - lo for lo, hi in self.bracket_history]
        return {
            "lower_bound": bool(np.all(h >= p.gamma - 1e-6)),
            "upper_bound": bool(np.all(h <= 1.0 + 1e-9)),
            "L_in_unit_interval": 0.0 < self.L < 1.0,
            "L_identity": abs(self.L - self.L_identity) <= 1e-2 * self.L_identity,
            "hprime1_identity": abs(self.hprime1 - self.hprime1_identity) <= 5e-2,
            "widths_decreasing": all(b < a for a, b in zip(widths, widths[1:])),
            "final_width": widths[-1] <= self.xi_tol,
        }


def _origin_slope(p):
    g = p.gamma
    return g * g * (1.0 + p.k - p.A) / (2.0 + g)


def _trusted_index(lo: SolutionGrid, hi: SolutionGrid) -> int:
    """Index of the last node of ``lo`` before the two trajectories separate."""
    n = int(np.searchsorted(lo.y, hi.y_last, side="right"))
    ys = lo.y[:n]
    gap = np.abs(hi.h_at(ys) - lo.h[:n])
    bad = np.nonzero(gap > TRUST_TOL * (1.0 - ys))[0]
    return (int(bad[0]) - 1) if bad.size else n - 1


def find_critical(gamma: float, sigma_D: float, A: float, xi_tol: float = 1e-9,
                  cfg: IntegratorConfig = IntegratorConfig()) -> CriticalSolution:
    """Bisect on ``xi`` down to a bracket of width ``xi_tol``.

    ``L`` and ``hprime1`` are Richardson extrapolations over the offsets
    ``EXTRAPOLATION_MULTIPLES * (1 - y_T)``, where ``y_T`` is the end of the
    trusted region.  ``exp(I)`` is extrapolated with exponents (1, |lambda_-|)
    and the quotient ``(1 - h)/(1 - y)`` with (|lambda_-| - 1, 1).
    """
    if not (math.isfinite(xi_tol) and xi_tol >= 1e-12):
        raise DomainError(f"xi_tol must be at least 1e-12, got {xi_tol}")
    lo, hi = initial_bracket(gamma, sigma_D, A, cfg)
    base = ModelParams(gamma, sigma_D, A, lo)
    history = [(lo, hi)]
    lo_class = classify(base, cfg)
    hi_class = classify(base.with_xi(hi), cfg)
    while hi - lo > xi_tol:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break  # floating point resolution reached
        c = classify(base.with_xi(mid), cfg)
        if isinstance(c, Subcritical):
            lo, lo_class = mid, c
        elif isinstance(c, Supercritical):
            hi, hi_class = mid, c
        else:
            raise BracketError(f"indeterminate classification at xi={mid}: {c.reason}", history)
        history.append((lo, hi))

    raw = lo_class.grid
    if hi_class.grid is None:
        raise BracketError("supercritical bracket end produced no trajectory", history)
    iT = _trusted_index(raw, hi_class.grid)
    if iT < 2:
        raise BracketError("bracketing trajectories disagree from the start", history)
    trusted = raw.restricted(float(raw.y[iT]))
    sT = 1.0 - trusted.y_last

    _, lam_minus = endpoint_exponents(gamma, A)
    mu = abs(lam_minus) - 1.0
    eps = [m * sT for m in EXTRAPOLATION_MULTIPLES]
    L = richardson(eps, [math.exp(trusted.I_at(1.0 - e)) for e in eps], (1.0, abs(lam_minus)))
    quotient = [(1.0 - trusted.h_at(1.0 - e)) / e for e in eps]
    hprime1 = richardson(eps, quotient, (mu, 1.0))

    # half decades from 1e-1 down to the trusted end, then the end itself
    offsets = [10.0 ** (-k / 2.0) for k in range(2, 40) if 10.0 ** (-k / 2.0) > sT] + [sT]
    quotients = [(e, (1.0 - trusted.h_at(1.0 - e)) / e) for e in offsets]

    return CriticalSolution(
        xi0=lo, xi_hi=hi, grid=trusted, raw_grid=raw, L=L, hprime1=hprime1,
        quotients=quotients, bracket_history=history, xi_tol=xi_tol, mu=mu,
    )
