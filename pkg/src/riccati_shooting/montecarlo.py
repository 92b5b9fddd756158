"""Monte Carlo verification of the expectation identities.

The dividend ``D`` is geometric Brownian motion, sampled exactly.  The state
``Y`` follows ``dY = mu_Y(Y) dt + sigma_Y(Y) dB`` with the *same* Brownian
motion and is advanced by Euler-Maruyama.  Near the boundaries a base step
is split so that ``|mu_Y| tau <= drift_fraction * dist(Y, {0, 1})`` and
``sigma_Y sqrt(tau) <= noise_fraction * dist``; the pieces of the Brownian
increment are drawn from the Brownian bridge, so the increment seen by ``D``
is unchanged.

Each path owns a Philox stream with key ``seed`` and the path index in the
top counter word, which makes every path reproducible on its own.
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional

import numba
import numpy as np

from .equilibrium import (EconomyParams, _check_match, drift_vol, g_derivatives,
                          g_value, rate_and_mpr)
from .errors import DomainError, HorizonError, SimulationError
from .shooting import CriticalSolution

__all__ = [
    "SimConfig",
    "McEstimate",
    "JointEnsemble",
    "path_generator",
    "simulate_joint",
    "mc_dividend_integral",
    "mc_feynman_kac",
    "wealth_residuals",
    "wealth_ode_residual",
    "summary_csv",
    "HORIZON_TAIL_LIMIT",
]

HORIZON_TAIL_LIMIT = 0.01


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    The simulation step is ``dt / 2**refine``: coarse Brownian increments
    over ``dt`` come from one stream and are refined by bridge midpoints from
    another, so raising ``refine`` by one halves the step on the *same*
    Brownian path.  ``record_every`` > 0 stores ``(D, Y)`` every that many
    coarse steps for every path (memory grows with ``n_paths``).
    """

    dt: float = 0.02
    horizon: float = 20.0
    n_paths: int = 100_000
    seed: int = 0
    clamp_margin: float = 1e-8
    max_clamp_rate: float = 1e-3
    drift_fraction: float = 0.1
    noise_fraction: float = 1.0 / 6.0
    table_size: int = 2 ** 14 + 1
    record_every: int = 0
    refine: int = 2

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise DomainError(f"dt must be positive, got {self.dt}")
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        if self.dt > self.horizon:
            raise DomainError("dt must not exceed the horizon")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise DomainError(f"n_paths must be a positive integer, got {self.n_paths}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not 0.0 < self.clamp_margin <= 1e-4:
            raise DomainError(f"clamp_margin must lie in (0, 1e-4], got {self.clamp_margin}")
        if not 0.0 < self.drift_fraction <= 1.0:
            raise DomainError("drift_fraction must lie in (0, 1]")
        if not 0.0 < self.noise_fraction <= 1.0:
            raise DomainError("noise_fraction must lie in (0, 1]")
        if self.table_size < 3:
            raise DomainError("table_size must be at least 3")
        if self.record_every < 0:
            raise DomainError("record_every must be non-negative")
        if int(self.refine) != self.refine or not 0 <= self.refine <= 16:
            raise DomainError("refine must be an integer in [0, 16]")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.horizon / self.dt - 1e-9))

    @property
    def step(self) -> float:
        """Coarse step actually used: the horizon divided into ``n_steps`` pieces."""
        return self.horizon / self.n_steps

    @property
    def fine_step(self) -> float:
        return self.step / 2 ** self.refine


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    analytic: Optional[float] = None

    @property
    def z_score(self) -> Optional[float]:
        if self.analytic is None:
            return None
        if self.std_error == 0.0:
            return 0.0 if self.mean == self.analytic else math.copysign(math.inf, self.mean - self.analytic)
        return (self.mean - self.analytic) / self.std_error

    @classmethod
    def from_samples(cls, samples, analytic=None):
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        std = float(samples.std(ddof=1)) if n > 1 else 0.0
        return cls(float(samples.mean()), std / math.sqrt(n), n, analytic)


# stream ids (third counter word) per path
BASE_STREAM, MIDPOINT_STREAM, SUBSTEP_STREAM = 0, 1, 2


def path_generator(seed: int, index: int, stream: int = BASE_STREAM) -> np.random.Generator:
    """Philox stream keyed by ``seed`` for path ``index``.

    The path index sits in the top counter word and ``stream`` in the next
    one, so streams never overlap unless a single one draws 2**128 blocks.
    """
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, stream, index]))


@numba.njit(cache=True)
def _dividend_path(gen, log_d0, drift, vol, beta, power, dt, n_steps):
    sq = math.sqrt(dt)
    log_d = log_d0
    f_prev = math.exp(power * log_d)
    acc = 0.0
    for n in range(1, n_steps + 1):
        log_d += drift * dt + vol * sq * gen.standard_normal()
        f = math.exp(-beta * n * dt + power * log_d)
        acc += 0.5 * (f_prev + f) * dt
        f_prev = f
    return acc, math.exp(log_d)


@numba.njit(cache=True)
def _lookup(table, y):
    u = y * (table.size - 1)
    i = int(u)
    if i >= table.size - 1:
        i = table.size - 2
    w = u - i
    return table[i] * (1.0 - w) + table[i + 1] * w


@numba.njit(cache=True)
def _fine_increments(gen_mid, total, length, refine, out):
    """Split one coarse increment into ``2**refine`` pieces by Brownian bridge midpoints."""
    out[0] = total
    pieces = 1
    tau = length
    for _ in range(refine):
        for j in range(pieces - 1, -1, -1):
            w = out[j]
            left = 0.5 * w + math.sqrt(0.25 * tau) * gen_mid.standard_normal()
            out[2 * j] = left
            out[2 * j + 1] = w - left
        pieces *= 2
        tau *= 0.5


@numba.njit(cache=True)
def _joint_path(gen_base, gen_mid, gen_sub, y0, log_d0, mu_d, sig_d, beta, gamma, dt,
                n_coarse, refine, h_tab, g_tab, eps_c, frac, noise_frac, vol_scale,
                record_every, rec_y, rec_d):
    n_fine = 1 << refine
    step = dt / n_fine
    fine = np.empty(n_fine)
    s2 = sig_d * sig_d
    power = 1.0 - gamma
    y = y0
    log_d = log_d0
    f_prev = math.exp(power * (log_d + math.log(1.0 - y)))
    acc = 0.0
    clamps = 0
    steps = 0
    if record_every > 0:
        rec_y[0] = y
        rec_d[0] = math.exp(log_d)
    for n in range(1, n_coarse + 1):
        _fine_increments(gen_mid, math.sqrt(dt) * gen_base.standard_normal(), dt, refine, fine)
        for m in range(n_fine):
            db_total = fine[m]
            log_d += (mu_d - 0.5 * s2) * step + sig_d * db_total
            rem_t = step
            rem_b = db_total
            while rem_t > 0.0:
                h = _lookup(h_tab, y)
                z = 1.0 - y
                mu = s2 * z * (1.0 + gamma + 2.0 * gamma * y * h - 2.0 * y * (1.0 + gamma)) / (2.0 * y * h * h)
                sig = vol_scale * sig_d * z / h
                dist = y if y < z else z
                tau = rem_t
                if abs(mu) * tau > frac * dist:
                    tau = frac * dist / abs(mu)
                if sig * sig * tau > (noise_frac * dist) ** 2:
                    tau = (noise_frac * dist / sig) ** 2
                if tau < 1e-30:
                    tau = 1e-30
                if tau >= rem_t * (1.0 - 1e-12):
                    tau = rem_t
                    db = rem_b
                else:
                    var = tau * (rem_t - tau) / rem_t
                    db = rem_b * tau / rem_t + math.sqrt(var) * gen_sub.standard_normal()
                y += mu * tau + sig * db
                rem_t -= tau
                rem_b -= db
                steps += 1
                if y < eps_c:
                    y = eps_c
                    clamps += 1
                elif y > 1.0 - eps_c:
                    y = 1.0 - eps_c
                    clamps += 1
            k = (n - 1) * n_fine + m + 1
            f = math.exp(-beta * k * step + power * (log_d + math.log(1.0 - y)))
            acc += 0.5 * (f_prev + f) * step
            f_prev = f
        if record_every > 0 and n % record_every == 0:
            rec_y[n // record_every] = y
            rec_d[n // record_every] = math.exp(log_d)
    # g(y) = G(y) (1-y)^(1-gamma) with G smooth; the power is applied exactly
    remainder = math.exp(-beta * n_coarse * dt + power * (log_d + math.log(1.0 - y))) * _lookup(g_tab, y)
    return acc, remainder, y, math.exp(log_d), clamps, steps


@dataclass(frozen=True)
class JointEnsemble:
    """Per-path results of :func:`simulate_joint`.

    ``integral`` is the trapezoid value of ``int_0^T e^{-beta u} (D_u (1-Y_u))^{1-gamma} du``
    and ``remainder`` is ``e^{-beta T} g(Y_T) D_T^{1-gamma}``, the conditional
    expectation of the rest of the integral given the state at ``T``.
    """

    integral: np.ndarray
    remainder: np.ndarray
    Y_T: np.ndarray
    D_T: np.ndarray
    clamp_count: int
    step_count: int
    times: Optional[np.ndarray] = None
    paths_Y: Optional[np.ndarray] = None
    paths_D: Optional[np.ndarray] = None

    @property
    def clamp_rate(self) -> float:
        return self.clamp_count / self.step_count if self.step_count else 0.0


def _tables(critical: CriticalSolution, size: int):
    """Uniform tables of ``h`` and of the smooth factor ``(2/xi0) e^{-I}`` of ``g``."""
    grid = np.linspace(0.0, 1.0, size)
    return (np.ascontiguousarray(critical.h_at(grid)),
            np.ascontiguousarray(2.0 / critical.xi0 * np.exp(-critical.I_at(grid))))


def simulate_joint(critical: CriticalSolution, econ: EconomyParams, Y0: float,
                   cfg: SimConfig = SimConfig(), *, vol_scale: float = 1.0) -> JointEnsemble:
    """Simulate ``(D, Y)`` on one Brownian driver for ``cfg.n_paths`` paths.

    ``vol_scale`` multiplies ``sigma_Y`` only (``D`` keeps its volatility);
    setting it to 0 gives a deterministic ``Y`` and is meant for tests.
    Raises :class:`SimulationError` when more than ``cfg.max_clamp_rate`` of
    all sub-steps had to be clamped into ``[eps_c, 1 - eps_c]``.
    """
    _check_match(critical, econ)
    if not 0.0 < Y0 < 1.0:
        raise DomainError(f"Y0 must lie in (0, 1), got {Y0}")
    h_tab, g_tab = _tables(critical, cfg.table_size)
    n, n_steps, dt = cfg.n_paths, cfg.n_steps, cfg.step
    n_rec = n_steps // cfg.record_every + 1 if cfg.record_every > 0 else 1
    integral = np.empty(n)
    remainder = np.empty(n)
    y_t = np.empty(n)
    d_t = np.empty(n)
    rec_y = np.zeros((n, n_rec)) if cfg.record_every > 0 else None
    rec_d = np.zeros((n, n_rec)) if cfg.record_every > 0 else None
    scratch = np.zeros(n_rec)
    clamps = steps = 0
    log_d0 = math.log(econ.D0)
    for i in range(n):
        ry = rec_y[i] if rec_y is not None else scratch
        rd = rec_d[i] if rec_d is not None else scratch
        integral[i], remainder[i], y_t[i], d_t[i], c, s = _joint_path(
            path_generator(cfg.seed, i), path_generator(cfg.seed, i, MIDPOINT_STREAM),
            path_generator(cfg.seed, i, SUBSTEP_STREAM), Y0, log_d0, econ.mu_D,
            econ.sigma_D, econ.beta, econ.gamma, dt, n_steps, cfg.refine, h_tab, g_tab,
            cfg.clamp_margin, cfg.drift_fraction, cfg.noise_fraction, float(vol_scale),
            cfg.record_every, ry, rd)
        clamps += c
        steps += s
    if steps and clamps / steps > cfg.max_clamp_rate:
        raise SimulationError(
            f"clamp rate {clamps / steps:.3e} ({clamps} of {steps} steps) exceeds "
            f"{cfg.max_clamp_rate:g}")
    times = (np.arange(n_rec) * cfg.record_every * dt) if cfg.record_every > 0 else None
    return JointEnsemble(integral, remainder, y_t, d_t, clamps, steps, times, rec_y, rec_d)


def _dividend_closed_form(econ: EconomyParams) -> float:
    return econ.D0 ** (1.0 - econ.gamma) / econ.discount_rate


def _check_horizon(econ: EconomyParams, horizon: float) -> float:
    c = econ.discount_rate
    tail = math.exp(-c * horizon) * econ.D0 ** (1.0 - econ.gamma) / c
    total = _dividend_closed_form(econ)
    if tail > HORIZON_TAIL_LIMIT * total:
        raise HorizonError(
            f"truncated tail {tail:.4g} is {tail / total:.2%} of the closed form {total:.6g}; "
            f"need horizon >= {math.log(1.0 / HORIZON_TAIL_LIMIT) / c:.4g}")
    return tail


def mc_dividend_integral(econ: EconomyParams, cfg: SimConfig = SimConfig(dt=0.1, horizon=300.0)
                         ) -> McEstimate:
    """Estimate ``E[int_0^inf e^{-beta t} D_t^{1-gamma} dt]``.

    The path integral runs to ``T`` by the trapezoid rule; the remainder has
    expectation ``e^{-cT} D0^{1-gamma} / c`` exactly and is added as a constant.
    """
    tail = _check_horizon(econ, cfg.horizon)
    power = 1.0 - econ.gamma
    drift = econ.mu_D - 0.5 * econ.sigma_D ** 2
    n_steps, dt = cfg.n_steps, cfg.step
    samples = np.empty(cfg.n_paths)
    log_d0 = math.log(econ.D0)
    for i in range(cfg.n_paths):
        samples[i] = _dividend_path(path_generator(cfg.seed, i), log_d0, drift, econ.sigma_D,
                                    econ.beta, power, dt, n_steps)[0]
    return McEstimate.from_samples(samples + tail, _dividend_closed_form(econ))


def mc_feynman_kac(critical: CriticalSolution, econ: EconomyParams, Y0: float,
                   cfg: SimConfig = SimConfig(), *, tail: str = "markov",
                   ensemble: Optional[JointEnsemble] = None) -> McEstimate:
    """Estimate ``E[int_0^inf e^{-beta u} (D_u (1-Y_u))^{1-gamma} du]`` against ``g(Y0) D0^{1-gamma}``.

    ``tail="markov"`` adds ``e^{-beta T} g(Y_T) D_T^{1-gamma}`` per path, the
    exact conditional expectation of the neglected part, so the horizon only
    affects variance.  ``tail="none"`` drops it and then requires the
    horizon to make the dividend tail bound below 1%.
    """
    _check_match(critical, econ)
    if tail not in ("markov", "none"):
        raise ValueError(f"unknown tail treatment {tail!r}")
    if tail == "none":
        _check_horizon(econ, cfg.horizon)
    if ensemble is None:
        ensemble = simulate_joint(critical, econ, Y0, cfg)
    samples = ensemble.integral + (ensemble.remainder if tail == "markov" else 0.0)
    analytic = g_value(critical, Y0) * econ.D0 ** (1.0 - econ.gamma)
    return McEstimate.from_samples(samples, analytic)


def wealth_residuals(critical: CriticalSolution, econ: EconomyParams, y: float,
                     margins=(1e-3, 1e-3)):
    """Drift and diffusion residuals of ``d(D phi(Y)) = (r D phi(Y) - D (1-Y)) dt``.

    ``phi(y) = g(y)(1-y)^gamma``; both residuals are per unit of ``D``.
    """
    _check_match(critical, econ)
    lo, hi = margins
    if not lo <= y <= 1.0 - hi:
        raise DomainError(f"y={y!r} outside the interior margins [{lo}, {1.0 - hi}]")
    gamma = econ.gamma
    g, g1, g2 = g_derivatives(critical, y)
    z = 1.0 - y
    phi = g * z ** gamma
    phi1 = g1 * z ** gamma - gamma * g * z ** (gamma - 1.0)
    phi2 = (g2 * z ** gamma - 2.0 * gamma * g1 * z ** (gamma - 1.0)
            + gamma * (gamma - 1.0) * g * z ** (gamma - 2.0))
    mu, sig = drift_vol(critical, y)
    r, _ = rate_and_mpr(critical, econ, y)
    s = econ.sigma_D
    drift = econ.mu_D * phi + mu * phi1 + 0.5 * sig * sig * phi2 + s * sig * phi1
    return drift - (r * phi - z), s * phi + sig * phi1


def wealth_ode_residual(critical: CriticalSolution, econ: EconomyParams, y: float,
                        margins=(1e-3, 1e-3)) -> float:
    drift, diffusion = wealth_residuals(critical, econ, y, margins)
    return max(abs(drift), abs(diffusion))


def summary_csv(estimates: Dict[str, McEstimate]) -> str:
    lines = ["quantity,mean,std_error,analytic,z"]
    for name, est in estimates.items():
        analytic = "" if est.analytic is None else f"{est.analytic:.17g}"
        z = "" if est.z_score is None else f"{est.z_score:.17g}"
        lines.append(f"{name},{est.mean:.17g},{est.std_error:.17g},{analytic},{z}")
    return "\n".join(lines) + "\n"
