"""The acceptance battery: twelve computable checks with pinned tolerances.

Each ``criterion_*`` function runs one check from scratch and returns a
:class:`CriterionResult`.  ``run_all`` shares the critical solution between
the checks that need it.  The reference economy has ``beta = 0.025``,
``mu_D = 0.02``, ``sigma_D = 0.2``, ``gamma = 0.5`` (so ``A = 2``).
"""

import math
import time
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .equilibrium import (EconomyParams, boundary_diagnostics, g_ode_residual, g_value)
from .montecarlo import SimConfig, mc_dividend_integral, mc_feynman_kac
from .ode import IntegratorConfig, ModelParams
from .riccati import (ConstantRiccatiParams, appendix_diagnostics, endpoint_value,
                      solve_constant_riccati)
from .shooting import (CriticalSolution, Subcritical, Supercritical, classify, find_critical,
                       subcritical_endpoint)

GAMMA, SIGMA_D, A = 0.5, 0.2, 2.0
REFERENCE_ECONOMY = EconomyParams(beta=0.025, mu_D=0.02, sigma_D=0.2, gamma=0.5)

XI0_WINDOW = (0.152231, 0.152233)
XI0_SECONDS = 10.0
HPRIME1_TOL = 5e-2
L_REL_TOL = 1e-2
SUBCRITICAL_XI = 0.03
SUBCRITICAL_TOL = 1e-3
RICCATI_A3 = (-0.5, -0.75, -1.0)
RICCATI_TOL = 1e-6
N_PAIRS = 20
EXPLOSION_XI = 10.0
MC_PATHS = 100_000
MC_SECONDS = 60.0
Z_LIMIT = 3.0
FK_Y0 = 0.5
G_ONE_TOL = 1e-10
G_RESIDUAL_TOL = 1e-6
N_RESIDUAL_POINTS = 20


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(number, name, fn):
    t0 = time.perf_counter()
    passed, detail = fn()
    return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t0)


def _critical(critical: Optional[CriticalSolution]) -> CriticalSolution:
    return critical if critical is not None else find_critical(GAMMA, SIGMA_D, A)


def criterion_critical_xi() -> CriterionResult:
    def run():
        t0 = time.perf_counter()
        c = find_critical(GAMMA, SIGMA_D, A)
        elapsed = time.perf_counter() - t0
        lo, hi = XI0_WINDOW
        ok = lo <= c.xi0 <= hi and elapsed < XI0_SECONDS
        return ok, f"xi0={c.xi0:.8f} window=[{lo}, {hi}] solve={elapsed:.2f}s"
    return _timed(1, "critical parameter", run)


def criterion_slope_identity(critical=None) -> CriterionResult:
    def run():
        c = _critical(critical)
        target = c.hprime1_identity
        gaps = [abs(q - target) for _, q in c.quotients]
        improving = all(b < a for a, b in zip(gaps, gaps[1:]))
        ok = abs(c.hprime1 - target) <= HPRIME1_TOL and improving
        qs = " ".join(f"{q:.4f}" for _, q in c.quotients)
        return ok, (f"h'(1)~{c.hprime1:.5f} target={target:.5f} tol={HPRIME1_TOL}"
                    f" quotients=[{qs}] improving={improving}")
    return _timed(2, "critical slope identity", run)


def criterion_L_identity(critical=None) -> CriterionResult:
    def run():
        c = _critical(critical)
        rel = abs(c.L - c.L_identity) / c.L_identity
        return rel <= L_REL_TOL, (f"L={c.L:.7f} sigma^2(A-gamma)/xi0={c.L_identity:.7f}"
                                  f" rel={rel:.2e} tol={L_REL_TOL}")
    return _timed(3, "L0 identity", run)


def criterion_subcritical_endpoint() -> CriterionResult:
    def run():
        result = classify(ModelParams(GAMMA, SIGMA_D, A, SUBCRITICAL_XI))
        if not isinstance(result, Subcritical):
            return False, f"xi={SUBCRITICAL_XI} classified {type(result).__name__}"
        h1 = subcritical_endpoint(result)
        target = GAMMA / A
        return abs(h1 - target) <= SUBCRITICAL_TOL, (
            f"h(1)~{h1:.8f} gamma/A={target} tol={SUBCRITICAL_TOL}")
    return _timed(4, "subcritical endpoint", run)


def criterion_constant_riccati() -> CriterionResult:
    def run():
        parts, ok = [], True
        for a3 in RICCATI_A3:
            p = ConstantRiccatiParams(GAMMA, a3)
            grid = solve_constant_riccati(p)
            f1 = endpoint_value(grid)
            err = abs(f1 - p.endpoint)
            f = grid.h
            bounds = bool(np.all(f >= GAMMA) and np.all(f <= 1.0))
            if a3 < -GAMMA:
                bounds = bounds and bool(np.all(f < 1.0))
            ok = ok and err <= RICCATI_TOL and bounds
            parts.append(f"a3={a3}: err={err:.1e} bounds={bounds}")
        return ok, "; ".join(parts) + f" tol={RICCATI_TOL}"
    return _timed(5, "constant Riccati oracle", run)


def criterion_comparison(critical=None, seed: int = 20240601) -> CriterionResult:
    def run():
        c = _critical(critical)
        lo = SIGMA_D ** 2 * (A - GAMMA) / 2.0
        rng = np.random.default_rng(seed)
        base = ModelParams(GAMMA, SIGMA_D, A, lo)
        violations, nodes = 0, 0
        for _ in range(N_PAIRS):
            x1, x2 = np.sort(rng.uniform(lo, c.xi0, size=2))
            a, b = classify(base.with_xi(float(x1))), classify(base.with_xi(float(x2)))
            if not (isinstance(a, Subcritical) and isinstance(b, Subcritical)):
                violations += 1
                continue
            ga, gb = a.grid, b.grid
            ys = np.union1d(ga.y, gb.y)
            ys = ys[(ys >= max(ga.y[0], gb.y[0])) & (ys <= min(ga.y_last, gb.y_last))]
            nodes += ys.size
            violations += int(np.count_nonzero(gb.h_at(ys) <= ga.h_at(ys)))
        return violations == 0, f"{N_PAIRS} pairs, {nodes} nodes, violations={violations}"
    return _timed(6, "comparison in xi", run)


def criterion_explosion() -> CriterionResult:
    def run():
        result = classify(ModelParams(GAMMA, SIGMA_D, A, EXPLOSION_XI))
        if not isinstance(result, Supercritical):
            return False, f"classified {type(result).__name__}"
        return result.y_end < 1.0, f"Supercritical ({result.kind}) at y={result.y_end:.6f}"
    return _timed(7, "explosion", run)


def criterion_dividend_integral(n_paths: int = MC_PATHS, seed: int = 0) -> CriterionResult:
    def run():
        cfg = SimConfig(dt=0.1, horizon=300.0, n_paths=n_paths, seed=seed)
        t0 = time.perf_counter()
        est = mc_dividend_integral(REFERENCE_ECONOMY, cfg)
        elapsed = time.perf_counter() - t0
        ok = abs(est.z_score) <= Z_LIMIT and elapsed < MC_SECONDS
        return ok, (f"mean={est.mean:.4f} se={est.std_error:.4f} closed={est.analytic:.4f}"
                    f" z={est.z_score:+.2f} paths={n_paths} run={elapsed:.1f}s")
    return _timed(8, "dividend integral", run)


def criterion_feynman_kac(critical=None, n_paths: int = MC_PATHS, seed: int = 0
                          ) -> CriterionResult:
    def run():
        c = _critical(critical)
        cfg = SimConfig(n_paths=n_paths, seed=seed)
        est = mc_feynman_kac(c, REFERENCE_ECONOMY, FK_Y0, cfg)
        return abs(est.z_score) <= Z_LIMIT, (
            f"mean={est.mean:.4f} se={est.std_error:.4f} g(0.5)={est.analytic:.4f}"
            f" z={est.z_score:+.2f} paths={n_paths}")
    return _timed(9, "Feynman-Kac identity", run)


def criterion_g_suite(critical=None) -> CriterionResult:
    def run():
        c = _critical(critical)
        econ = REFERENCE_ECONOMY
        g1 = abs(g_value(c, 1.0))
        g0 = g_value(c, 0.0)
        steps = [10.0 ** -j for j in range(2, 7)]
        fd = [abs(g_value(c, d) - g0) / d for d in steps]
        fd_ok = all(b < a for a, b in zip(fd, fd[1:]))
        ys = np.linspace(1e-3, 1.0 - 1e-3, N_RESIDUAL_POINTS)
        rel = max(abs(g_ode_residual(c, econ, float(y))) / max(1.0, econ.beta * g_value(c, float(y)))
                  for y in ys)
        ok = g1 <= G_ONE_TOL and fd_ok and rel <= G_RESIDUAL_TOL
        fds = " ".join(f"{v:.1e}" for v in fd)
        return ok, (f"|g(1)|={g1:.1e} fd g'(0+)=[{fds}] max rel residual={rel:.1e}"
                    f" tol={G_RESIDUAL_TOL}")
    return _timed(10, "g boundary and ODE suite", run)


def criterion_boundary(critical=None) -> CriterionResult:
    def run():
        c = _critical(critical)
        rep = boundary_diagnostics(c)
        rel = rep.value("cauchy", "rel_change_1e-4_1e-5")
        ok = rep.checks["cauchy_near_one"] and rep.checks["diverges_near_zero"]
        return ok, (f"cauchy rel change={rel:.2e} (tol 1e-6)"
                    f" dyadic increasing={rep.checks['diverges_near_zero']}")
    return _timed(11, "boundary diagnostics", run)


def criterion_appendix() -> CriterionResult:
    def run():
        rep = appendix_diagnostics(GAMMA)
        ints = [r.computed for r in rep.rows if r.quantity == "integral_trapezoid"]
        change = abs(ints[-1] - ints[-2])
        ok = rep.checks["slope_increasing"] and rep.checks["integral_stable"]
        return ok, (f"slope increasing={rep.checks['slope_increasing']}"
                    f" integral change 1e-5->1e-6={change:.2e} (tol 1e-3)")
    return _timed(12, "borderline Riccati diagnostics", run)


def run_all(n_paths: int = MC_PATHS, seed: int = 0,
            callback: Optional[Callable[[CriterionResult], None]] = None) -> List[CriterionResult]:
    """Run the twelve checks in order; ``callback`` sees each result as it lands."""
    results = []

    def keep(r):
        results.append(r)
        if callback is not None:
            callback(r)

    keep(criterion_critical_xi())
    critical = find_critical(GAMMA, SIGMA_D, A)
    keep(criterion_slope_identity(critical))
    keep(criterion_L_identity(critical))
    keep(criterion_subcritical_endpoint())
    keep(criterion_constant_riccati())
    keep(criterion_comparison(critical))
    keep(criterion_explosion())
    keep(criterion_dividend_integral(n_paths, seed))
    keep(criterion_feynman_kac(critical, n_paths, seed))
    keep(criterion_g_suite(critical))
    keep(criterion_boundary(critical))
    keep(criterion_appendix())
    return results
