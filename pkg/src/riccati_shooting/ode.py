"""Augmented Riccati ODE on (0, 1): right-hand side, series start, integrator
and an independent Picard fixed-point oracle.

The scalar equation

    h' = a0(y) + a1(y) h / (1 - y) + a2(y) h^2 / (1 - y),
    a2(y) = (xi / sigma_D^2) exp(I(y)) - A,   I(y) = int_0^y (h - 1) / (1 - q) dq,

is path dependent through ``I``.  Carrying ``I`` as a second state variable
turns it into an ordinary two-dimensional initial value problem.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from . import _rk
from .errors import ContractionError, DomainError

__all__ = [
    "ModelParams",
    "AugmentedState",
    "IntegratorConfig",
    "SolutionGrid",
    "Completed",
    "HitOne",
    "Exploded",
    "IntegrationFailure",
    "coeff_a0",
    "coeff_a1",
    "rhs",
    "make_rhs",
    "series_slope",
    "series_start",
    "integrate",
    "integrate_system",
    "picard_local",
]


@dataclass(frozen=True)
class ModelParams:
    """ODE-level parameters ``(gamma, sigma_D, A)`` and shooting parameter ``xi``."""

    gamma: float
    sigma_D: float
    A: float
    xi: float

    def __post_init__(self):
        for name in ("gamma", "sigma_D", "A", "xi"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise DomainError(f"{name} must be a finite real number, got {value!r}")
        if not 0.0 < self.gamma < 1.0:
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.sigma_D <= 0.0:
            raise DomainError(f"sigma_D must be positive, got {self.sigma_D}")
        if self.A <= 1.0:
            raise DomainError(f"A must exceed 1, got {self.A}")
        if self.xi <= 0.0:
            raise DomainError(f"xi must be positive, got {self.xi}")

    @property
    def k(self) -> float:
        """The ratio ``xi / sigma_D**2`` multiplying ``exp(I)``."""
        return self.xi / self.sigma_D ** 2

    def with_xi(self, xi: float) -> "ModelParams":
        return replace(self, xi=float(xi))


@dataclass(frozen=True)
class AugmentedState:
    y: float
    h: float
    I: float

    def __post_init__(self):
        if not 0.0 <= self.y < 1.0:
            raise DomainError(f"state position y must lie in [0, 1), got {self.y}")
        if not math.isfinite(self.I):
            raise DomainError("state integral I must be finite")


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and cutoffs for :func:`integrate`.

    ``start_offset`` is the series start point delta and ``end_offset`` the
    right cutoff epsilon; integration covers ``[delta, 1 - epsilon]``.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    min_step: float = 1e-14
    explosion_cap: float = 1e3
    start_offset: float = 1e-6
    end_offset: float = 1e-8

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "min_step", "explosion_cap",
                     "start_offset", "end_offset"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name} must be strictly positive, got {value}")
        if self.start_offset >= 1e-2 or self.end_offset >= 1e-2:
            raise DomainError("start_offset and end_offset must be below 1e-2")
        if self.explosion_cap < 10.0:
            raise DomainError("explosion_cap must be at least 10")

    def refined(self, factor: float = 0.5) -> "IntegratorConfig":
        """Scale tolerances and both offsets by ``factor``."""
        return replace(
            self,
            rel_tol=self.rel_tol * factor,
            abs_tol=self.abs_tol * factor,
            start_offset=self.start_offset * factor,
            end_offset=self.end_offset * factor,
        )


def _limited_slopes(x, v, d):
    """Fritsch-Carlson limiting of given node derivatives so that the cubic
    Hermite interpolant is monotone wherever the data are."""
    d = np.array(d, dtype=float)
    secant = np.diff(v) / np.diff(x)
    for k, s in enumerate(secant):
        if s == 0.0:
            d[k] = d[k + 1] = 0.0
            continue
        a, b = d[k] / s, d[k + 1] / s
        if a < 0.0:
            d[k], a = 0.0, 0.0
        if b < 0.0:
            d[k + 1], b = 0.0, 0.0
        r = a * a + b * b
        if r > 9.0:
            tau = 3.0 / math.sqrt(r)
            d[k], d[k + 1] = tau * a * s, tau * b * s
    return d


class SolutionGrid:
    """Sampled trajectory ``(y, h, I)`` with monotone cubic interpolation.

    When node derivatives are supplied (``slopes=(dh, dI)``, as the integrator
    does) the interpolant is a cubic Hermite spline on those derivatives after
    Fritsch-Carlson limiting; otherwise PCHIP estimates them from the data.
    Between ``y = 0`` and the first node the trajectory is evaluated along the
    straight line from ``(0, gamma, 0)``, which is exactly the series start.
    """

    def __init__(self, y, h, I, params, start_offset, end_offset, slopes=None):
        y = np.array(y, dtype=float)
        h = np.array(h, dtype=float)
        I = np.array(I, dtype=float)
        if y.ndim != 1 or y.shape != h.shape or y.shape != I.shape or y.size < 2:
            raise ValueError("y, h, I must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(y) <= 0.0):
            raise ValueError("grid positions must be strictly increasing")
        for arr in (y, h, I):
            arr.setflags(write=False)
        self.y, self.h, self.I = y, h, I
        self.params = params
        self.start_offset = float(start_offset)
        self.end_offset = float(end_offset)
        if slopes is not None:
            slopes = tuple(np.array(sl, dtype=float) for sl in slopes)
            if len(slopes) != 2 or any(sl.shape != y.shape for sl in slopes):
                raise ValueError("slopes must be a pair of arrays shaped like y")
            for sl in slopes:
                sl.setflags(write=False)
        self.slopes = slopes
        self._interp = None

    def __len__(self):
        return self.y.size

    def __repr__(self):
        return (f"SolutionGrid(n={len(self)}, y=[{self.y[0]:.3g}, {self.y[-1]:.17g}], "
                f"params={self.params!r})")

    @property
    def points(self):
        return [AugmentedState(float(a), float(b), float(c))
                for a, b, c in zip(self.y, self.h, self.I)]

    @property
    def exp_I(self):
        return np.exp(self.I)

    @property
    def y_last(self) -> float:
        return float(self.y[-1])

    def _interpolants(self):
        if self._interp is None:
            if self.slopes is None:
                self._interp = (PchipInterpolator(self.y, self.h, extrapolate=False),
                                PchipInterpolator(self.y, self.I, extrapolate=False))
            else:
                self._interp = tuple(
                    CubicHermiteSpline(self.y, v, _limited_slopes(self.y, v, d),
                                       extrapolate=False)
                    for v, d in zip((self.h, self.I), self.slopes))
        return self._interp

    def _evaluate(self, which, yq):
        yq = np.asarray(yq, dtype=float)
        scalar = yq.ndim == 0
        yq = np.atleast_1d(yq)
        if np.any(yq < 0.0) or np.any(yq > self.y[-1]):
            raise DomainError(
                f"evaluation point outside [0, {self.y[-1]!r}]")
        values = np.empty_like(yq)
        low = yq < self.y[0]
        if np.any(low):
            start = self.params.gamma if which == 0 else 0.0
            end = (self.h if which == 0 else self.I)[0]
            values[low] = start + (end - start) * yq[low] / self.y[0]
        if np.any(~low):
            values[~low] = self._interpolants()[which](yq[~low])
        return float(values[0]) if scalar else values

    def h_at(self, yq):
        return self._evaluate(0, yq)

    def I_at(self, yq):
        return self._evaluate(1, yq)

    def state_at(self, yq: float) -> AugmentedState:
        return AugmentedState(float(yq), self.h_at(yq), self.I_at(yq))

    def restricted(self, y_max: float) -> "SolutionGrid":
        """Copy keeping only the nodes with ``y <= y_max``."""
        n = int(np.searchsorted(self.y, y_max, side="right"))
        if n < 2:
            raise DomainError("restriction would leave fewer than two nodes")
        slopes = None if self.slopes is None else tuple(sl[:n] for sl in self.slopes)
        return SolutionGrid(self.y[:n], self.h[:n], self.I[:n], self.params,
                            self.start_offset, self.end_offset, slopes)

    def to_csv(self, target: Union[str, io.TextIOBase, None] = None):
        """Write ``y,h,I,exp_I`` rows at 17 significant digits.

        Returns the text when ``target`` is None.
        """
        lines = ["y,h,I,exp_I"]
        for a, b, c in zip(self.y, self.h, self.I):
            lines.append(f"{a:.17g},{b:.17g},{c:.17g},{math.exp(c):.17g}")
        text = "\n".join(lines) + "\n"
        if target is None:
            return text
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return None

    @classmethod
    def from_csv(cls, source, params, start_offset, end_offset):
        data = np.loadtxt(source, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], data[:, 2], params, start_offset, end_offset)


@dataclass(frozen=True)
class Completed:
    grid: SolutionGrid


@dataclass(frozen=True)
class HitOne:
    y_hit: float
    grid: SolutionGrid


@dataclass(frozen=True)
class Exploded:
    y_exp: float
    grid: SolutionGrid


@dataclass(frozen=True)
class IntegrationFailure:
    """Step size underflow while ``h`` stayed bounded; tolerances need attention."""

    y_fail: float
    grid: Optional[SolutionGrid]
    reason: str = field(default="step size underflow without growth in h")


def _check_unit_interval(y, closed_right):
    if not math.isfinite(y) or y <= 0.0 or (y > 1.0 if closed_right else y >= 1.0):
        interval = "(0, 1]" if closed_right else "(0, 1)"
        raise DomainError(f"y must lie in {interval}, got {y}")


def coeff_a0(gamma: float, y: float) -> float:
    _check_unit_interval(y, closed_right=True)
    return gamma * (1.0 + gamma) / y


def coeff_a1(gamma: float, y: float) -> float:
    _check_unit_interval(y, closed_right=True)
    return ((2.0 * gamma + 1.0) * y - (1.0 + gamma)) / y


def make_rhs(gamma: float, k: float, A: float) -> Callable:
    """Fast closure ``f(y, h, I) -> (h', I')`` without argument checks.

    Uses the rearrangement

        h' = (1+gamma)(gamma - h)/y + h (gamma + (k e^I - A) h)/(1-y),

    which equals ``a0 + a1 h/(1-y) + a2 h^2/(1-y)`` but keeps the two singular
    pieces separate, so the cancellation at ``y -> 0`` happens in ``gamma - h``.
    """
    c0 = 1.0 + gamma
    exp = math.exp

    def f(y, h, i):
        z = 1.0 - y
        return c0 * (gamma - h) / y + h * (gamma + (k * exp(i) - A) * h) / z, (h - 1.0) / z

    return f


def rhs(params: ModelParams, state: AugmentedState):
    """Return ``(dh/dy, dI/dy)`` at ``state``."""
    _check_unit_interval(state.y, closed_right=False)
    dh, di = make_rhs(params.gamma, params.k, params.A)(state.y, state.h, state.I)
    return dh, di


def series_slope(params: ModelParams) -> float:
    """First-order coefficient ``h'(0) = gamma^2 (1 + xi/sigma_D^2 - A) / (2 + gamma)``."""
    g = params.gamma
    return g * g * (1.0 + params.k - params.A) / (2.0 + g)


def series_start(params: ModelParams, delta: float) -> AugmentedState:
    if not 0.0 < delta <= 1e-3:
        raise DomainError(f"delta must lie in (0, 1e-3], got {delta}")
    g = params.gamma
    return AugmentedState(delta, g + series_slope(params) * delta, (g - 1.0) * delta)


def integrate_system(f, start: AugmentedState, grid_params, cfg: IntegratorConfig,
                     *, stop_at_one: bool = True, y_end: Optional[float] = None):
    """Advance ``f`` from ``start`` and wrap the result in an outcome object.

    Shared by the shooting problem and the constant coefficient family.
    """
    if y_end is None:
        y_end = 1.0 - cfg.end_offset
    cap = cfg.explosion_cap

    def stop(y, h, i):
        if not (math.isfinite(h) and abs(h) < cap):
            return "exploded"
        if stop_at_one and h >= 1.0:
            return "hit_one"
        return None

    first = min(1e-2 * start.y if start.y > 0 else 1e-8, 0.5 * (y_end - start.y))
    ys, hs, Is, status = _rk.dopri5(
        f, start.y, start.h, start.I, y_end,
        rtol=cfg.rel_tol, atol=cfg.abs_tol, min_step=cfg.min_step,
        first_step=first, stop=stop,
    )

    def make_grid():
        if len(ys) < 2:
            return None
        dh = np.empty(len(ys))
        di = np.empty(len(ys))
        for n, (a, b, c) in enumerate(zip(ys, hs, Is)):
            try:
                dh[n], di[n] = f(a, b, c)
            except (OverflowError, ZeroDivisionError):
                dh[n] = di[n] = math.inf
        if not (np.all(np.isfinite(dh)) and np.all(np.isfinite(di))):
            return SolutionGrid(ys, hs, Is, grid_params, cfg.start_offset, cfg.end_offset)
        return SolutionGrid(ys, hs, Is, grid_params, cfg.start_offset, cfg.end_offset,
                            slopes=(dh, di))

    if status == _rk.COMPLETED:
        return Completed(make_grid())
    if status == "hit_one":
        return HitOne(ys[-1], make_grid())
    if status == "exploded":
        return Exploded(ys[-1], make_grid())
    # step underflow: blow-up if h is already past 1 or large, failure otherwise
    if abs(hs[-1]) >= 1.0:
        return Exploded(ys[-1], make_grid())
    return IntegrationFailure(ys[-1], make_grid())


def integrate(params: ModelParams, cfg: IntegratorConfig = IntegratorConfig(), *,
              stop_at_one: bool = True, start: Optional[AugmentedState] = None):
    """Integrate the augmented system on ``[delta, 1 - epsilon]``.

    Parameters
    ----------
    params : ModelParams
    cfg : IntegratorConfig
    stop_at_one : bool
        Stop with :class:`HitOne` as soon as an accepted node has ``h >= 1``.
        Disable to follow supercritical trajectories up to blow-up.
    start : AugmentedState, optional
        Restart point; defaults to the series start at ``cfg.start_offset``.

    Returns
    -------
    Completed | HitOne | Exploded | IntegrationFailure
    """
    if start is None:
        start = series_start(params, cfg.start_offset)
    f = make_rhs(params.gamma, params.k, params.A)
    return integrate_system(f, start, params, cfg, stop_at_one=stop_at_one)


_PICARD_FLOOR = 1e-13


def picard_local(params: ModelParams, delta: float, n_iter: int = 20, n_grid: int = 101,
                 *, degree: int = 24) -> SolutionGrid:
    """Fixed-point iteration of the integral operator on ``[0, delta]``.

    Each iterate is stored as a Chebyshev interpolant of the given degree. With
    ``phi(y) = y^(1+gamma) (1-y)^gamma`` the operator is

        T(f)(y) = (1/phi(y)) int_0^y t^gamma G(t) dt,
        G(t) = gamma(1+gamma)(1-t)^gamma + t (1-t)^(gamma-1) a2(f, t) f(t)^2,

    and the ``t^gamma`` weight is integrated analytically by QUADPACK's
    algebraic-weight rule.  Raises :class:`ContractionError` when the sup
    distance between iterates grows (above a round-off floor).
    """
    if not 0.0 < delta <= 0.5:
        raise DomainError(f"delta must lie in (0, 1/2], got {delta}")
    if n_iter < 1:
        raise DomainError("n_iter must be at least 1")
    g, k, A = params.gamma, params.k, params.A
    domain = [0.0, delta]
    probe = np.linspace(0.0, delta, 4 * degree + 1)

    def make_J(f):
        # interpolate (f - 1)/(1 - q), then integrate the series exactly
        integrand = Chebyshev.interpolate(lambda q: (f(q) - 1.0) / (1.0 - q), degree, domain)
        return integrand.integ(lbnd=0.0)

    def operator(f):
        J = make_J(f)

        def G(t):
            z = 1.0 - t
            ft = f(t)
            return g * (1.0 + g) * z ** g + t * z ** (g - 1.0) * (k * math.exp(J(t)) - A) * ft * ft

        def Tf(ys):
            out = np.empty_like(ys)
            for n, yv in enumerate(ys):
                num, _ = quad(G, 0.0, yv, weight="alg", wvar=(g, 0.0),
                              epsabs=0.0, epsrel=1e-13, limit=200)
                out[n] = num / (yv ** (1.0 + g) * (1.0 - yv) ** g)
            return out

        return Chebyshev.interpolate(Tf, degree, domain)

    f = Chebyshev([g], domain=domain)
    distances = []
    for _ in range(n_iter):
        f_new = operator(f)
        distances.append(float(np.max(np.abs(f_new(probe) - f(probe)))))
        f = f_new
        if (len(distances) >= 2 and distances[-1] > distances[-2]
                and distances[-1] > _PICARD_FLOOR):
            raise ContractionError(
                f"Picard iterates stopped contracting: {distances[-2]:.3e} -> {distances[-1]:.3e}",
                distances)
    ys = np.linspace(0.0, delta, n_grid)
    J = make_J(f)
    return SolutionGrid(ys, f(ys), J(ys), params, 0.0, 1.0 - delta)
