"""Richardson-type extrapolation to a singular endpoint."""

import numpy as np


def richardson(eps, values, exponents):
    """Estimate ``v(0)`` from samples ``v(eps_j)``.

    Fits ``v(eps) = v0 + sum_i c_i eps**p_i`` for the given exponents ``p_i``.
    With ``len(eps) == len(exponents) + 1`` the fit is an exact solve,
    otherwise least squares.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    exponents = list(exponents)
    if eps.ndim != 1 or eps.shape != values.shape:
        raise ValueError("eps and values must be 1-D and of equal length")
    if eps.size < len(exponents) + 1:
        raise ValueError("need at least one more sample than exponents")
    if np.any(eps <= 0.0):
        raise ValueError("eps must be positive")
    # scale columns so the system stays well conditioned for tiny eps
    scale = eps.max()
    cols = [np.ones_like(eps)] + [(eps / scale) ** p for p in exponents]
    M = np.column_stack(cols)
    if eps.size == len(exponents) + 1:
        coef = np.linalg.solve(M, values)
    else:
        coef = np.linalg.lstsq(M, values, rcond=None)[0]
    return float(coef[0])
