"""Shooting solver for a singular path-dependent Riccati boundary value problem."""

from .equilibrium import (EconomyParams, EquilibriumFunctions, boundary_diagnostics, drift_vol,
                          g_ode_residual, g_value, rate_and_mpr, solve_Y0, tabulate)
from .errors import (BracketError, ConfigError, ContractionError, DomainError, HorizonError,
                     IntegrationError, SimulationError)
from .montecarlo import (McEstimate, SimConfig, mc_dividend_integral, mc_feynman_kac,
                         simulate_joint, wealth_ode_residual)
from .ode import (AugmentedState, IntegratorConfig, ModelParams, SolutionGrid, integrate,
                  picard_local, rhs, series_start)
from .riccati import (ConstantRiccatiParams, appendix_diagnostics, endpoint_value,
                      solve_constant_riccati)
from .shooting import (CriticalSolution, Subcritical, Supercritical, Indeterminate, classify,
                       find_critical, initial_bracket, subcritical_endpoint)

__version__ = "0.1.0"
