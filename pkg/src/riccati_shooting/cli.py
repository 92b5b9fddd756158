"""Command-line front end.

    riccati-shooting MODE [--config PATH] [--set section.key=value ...] [--out DIR] [--seed N]

Modes: solve-ode, find-critical, equilibrium, simulate, verify-all, sweep.
Without MODE the ``[run] mode`` entry of the configuration is used.  The
output directory defaults to ``$RICCATI_SHOOTING_OUT`` and then to
``riccati-output`` in the working directory.

Exit status: 0 on success, 2 when a verification check fails or the
numerics give up, 1 on usage or configuration errors.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from .equilibrium import EconomyParams, boundary_diagnostics, solve_Y0, tabulate
from .errors import BracketError, ConfigError, ContractionError, DomainError
from .montecarlo import (SimConfig, mc_dividend_integral, mc_feynman_kac, simulate_joint,
                         summary_csv)
from .ode import IntegratorConfig, ModelParams, integrate
from .shooting import Supercritical, classify, find_critical
from .verification import run_all

OUT_ENV = "RICCATI_SHOOTING_OUT"
DEFAULT_OUT = "riccati-output"
EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2
Z_LIMIT = 3.0


def _fmt(v):
    return "" if v is None else f"{v:.17g}"


def _write(path: Path, text: str):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _integrator(cfg) -> IntegratorConfig:
    return IntegratorConfig(**cfg["integrator"])


def _economy(cfg) -> EconomyParams:
    return EconomyParams(**cfg["economy"])


def _critical_for_economy(cfg, econ):
    return find_critical(econ.gamma, econ.sigma_D, econ.A, cfg["shooting"]["xi_tol"],
                         _integrator(cfg))


def _write_critical(out: Path, critical):
    critical.grid.to_csv(out / "critical_grid.csv")
    _write(out / "critical_metadata.json",
           json.dumps(critical.metadata(), indent=2, sort_keys=True) + "\n")


def cmd_solve_ode(cfg, out: Path) -> int:
    params = ModelParams(**cfg["model"])
    icfg = _integrator(cfg)
    result = classify(params, icfg)
    grid = getattr(result, "grid", None)
    if grid is None:
        grid = integrate(params, icfg).grid
    grid.to_csv(out / "trajectory.csv")
    kind = type(result).__name__
    y_end = result.y_end if isinstance(result, Supercritical) else grid.y_last
    h_end = float(grid.h[-1])
    rows = ["xi,classification,y_end,h_end", f"{_fmt(params.xi)},{kind},{_fmt(y_end)},{_fmt(h_end)}"]
    _write(out / "solve_ode.csv", "\n".join(rows) + "\n")
    print(f"xi={params.xi} {kind} y_end={y_end:.10g} h_end={h_end:.10g}")
    return EXIT_OK


def cmd_find_critical(cfg, out: Path) -> int:
    m = cfg["model"]
    critical = find_critical(m["gamma"], m["sigma_D"], m["A"], cfg["shooting"]["xi_tol"],
                             _integrator(cfg))
    _write_critical(out, critical)
    certs = critical.certificates()
    _write(out / "critical_certificates.csv",
           "check,passed\n" + "".join(f"{k},{v}\n" for k, v in certs.items()))
    print(f"xi0={critical.xi0:.12g} L={critical.L:.10g} hprime1={critical.hprime1:.10g}")
    failed = [k for k, v in certs.items() if not v]
    for k in failed:
        print(f"certificate failed: {k}")
    return EXIT_FAILED if failed else EXIT_OK


def cmd_equilibrium(cfg, out: Path) -> int:
    econ = _economy(cfg)
    critical = _critical_for_economy(cfg, econ)
    _write_critical(out, critical)
    e = cfg["equilibrium"]
    table = tabulate(critical, econ, n=e["n"], margin=e["margin"])
    lines = ["y,h,mu_Y,sigma_Y,r,kappa,g"]
    lines += [",".join(_fmt(float(v)) for v in row) for row in table]
    _write(out / "equilibrium.csv", "\n".join(lines) + "\n")
    report = boundary_diagnostics(critical)
    report.to_csv(out / "boundary_diagnostics.csv")
    if e["theta2"] is not None:
        y0 = solve_Y0(critical, econ, e["theta2"])
        _write(out / "initial_state.csv", f"theta2,Y0\n{_fmt(e['theta2'])},{_fmt(y0)}\n")
        print(f"Y0={y0:.12g}")
    print(f"A={econ.A:.12g} xi0={critical.xi0:.12g} rows={len(table)}")
    for name, ok in report.checks.items():
        print(f"boundary {name}: {'pass' if ok else 'FAIL'}")
    return EXIT_OK


def cmd_simulate(cfg, out: Path) -> int:
    econ = _economy(cfg)
    s = cfg["simulation"]
    div_cfg = SimConfig(dt=s["dividend_dt"], horizon=s["dividend_horizon"],
                        n_paths=s["n_paths"], seed=s["seed"])
    critical = _critical_for_economy(cfg, econ)
    sim_cfg = SimConfig(dt=s["dt"], horizon=s["horizon"], n_paths=s["n_paths"], seed=s["seed"],
                        clamp_margin=s["clamp_margin"], max_clamp_rate=s["max_clamp_rate"],
                        refine=s["refine"])
    estimates = {"dividend_integral": mc_dividend_integral(econ, div_cfg)}
    ensemble = simulate_joint(critical, econ, s["Y0"], sim_cfg)
    estimates["feynman_kac"] = mc_feynman_kac(critical, econ, s["Y0"], sim_cfg, ensemble=ensemble)
    _write(out / "mc_summary.csv", summary_csv(estimates))
    _write(out / "mc_clamps.csv", f"clamp_count,step_count\n{ensemble.clamp_count},"
                                  f"{ensemble.step_count}\n")
    if s["dump_paths"]:
        lines = ["path,integral,remainder,Y_T,D_T"]
        for i in range(ensemble.integral.size):
            lines.append(f"{i},{_fmt(ensemble.integral[i])},{_fmt(ensemble.remainder[i])},"
                         f"{_fmt(ensemble.Y_T[i])},{_fmt(ensemble.D_T[i])}")
        _write(out / "mc_paths.csv", "\n".join(lines) + "\n")
    bad = False
    for name, est in estimates.items():
        print(f"{name}: mean={est.mean:.6f} se={est.std_error:.6f} "
              f"analytic={est.analytic:.6f} z={est.z_score:+.3f}")
        bad = bad or abs(est.z_score) > Z_LIMIT
    print(f"clamps={ensemble.clamp_count} steps={ensemble.step_count}")
    return EXIT_FAILED if bad else EXIT_OK


def cmd_verify_all(cfg, out: Path) -> int:
    v = cfg["verify"]
    results = run_all(n_paths=v["n_paths"], seed=v["seed"],
                      callback=lambda r: print(r.line(), flush=True))
    lines = ["criterion,name,passed,detail"]
    lines += [f"{r.number},{r.name},{r.passed},\"{r.detail}\"" for r in results]
    _write(out / "verify_all.csv", "\n".join(lines) + "\n")
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    return EXIT_OK if n_pass == len(results) else EXIT_FAILED


def cmd_sweep(cfg, out: Path) -> int:
    base = ModelParams(**cfg["model"])
    icfg = _integrator(cfg)
    long_rows = ["xi,y,h"]
    summary = ["xi,classification,y_end,h_end"]
    grids = []
    for xi in sorted(cfg["sweep"]["xi"]):
        result = classify(base.with_xi(xi), icfg)
        grid = getattr(result, "grid", None)
        if grid is None:
            print(f"xi={xi}: {result!r}")
            return EXIT_FAILED
        grid.to_csv(out / f"sweep_xi_{xi:.10g}.csv")
        long_rows += [f"{_fmt(xi)},{_fmt(float(a))},{_fmt(float(b))}"
                      for a, b in zip(grid.y, grid.h)]
        y_end = result.y_end if isinstance(result, Supercritical) else grid.y_last
        summary.append(f"{_fmt(xi)},{type(result).__name__},{_fmt(y_end)},"
                       f"{_fmt(float(grid.h[-1]))}")
        grids.append((xi, grid))
        print(f"xi={xi:.10g} {type(result).__name__} y_end={y_end:.8g}")
    _write(out / "sweep_long.csv", "\n".join(long_rows) + "\n")
    _write(out / "sweep_summary.csv", "\n".join(summary) + "\n")

    # consecutive curves must be ordered where both exist
    violations = 0
    for (_, a), (_, b) in zip(grids, grids[1:]):
        ys = a.y[(a.y >= b.y[0]) & (a.y <= b.y_last)]
        violations += int(np.count_nonzero(b.h_at(ys) < a.h_at(ys)))
    if violations:
        print(f"ordering violations: {violations}")
        return EXIT_FAILED
    return EXIT_OK


COMMANDS = {
    "solve-ode": cmd_solve_ode,
    "find-critical": cmd_find_critical,
    "equilibrium": cmd_equilibrium,
    "simulate": cmd_simulate,
    "verify-all": cmd_verify_all,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="riccati-shooting",
                                description="Critical Riccati solutions, equilibrium "
                                            "functions and Monte Carlo checks.")
    p.add_argument("mode", nargs="?", choices=config_mod.MODES,
                   help="what to run (default: [run] mode from the config)")
    p.add_argument("--config", metavar="PATH", help="INI-style configuration file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override section.key=value (repeatable)")
    p.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUT_ENV})")
    p.add_argument("--seed", type=int, help="random seed for simulate and verify-all")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = config_mod.load(args.config, args.overrides)
        if args.seed is not None:
            config_mod.apply_override(cfg, f"simulation.seed={args.seed}")
            config_mod.apply_override(cfg, f"verify.seed={args.seed}")
        mode = args.mode or cfg.mode
        cfg.values["run"]["mode"] = mode
        out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
        out.mkdir(parents=True, exist_ok=True)
        _write(out / "run_config.ini", config_mod.dump(cfg))
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[mode](cfg, out)
    except DomainError as exc:
        print(f"error: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BracketError, ContractionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        detail = getattr(exc, "history", None) or getattr(exc, "distances", None)
        if detail:
            print(f"report: {detail!r}", file=sys.stderr)
        return EXIT_FAILED
    except (RuntimeError, FloatingPointError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
