"""Dormand-Prince 5(4) stepper for two-component systems.

Written for plain Python floats: the state here is always ``(h, I)`` and the
overhead of numpy arrays dominates for such small systems.
"""

import math

# Butcher tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# 5th minus embedded 4th order weights
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0

COMPLETED = "completed"
UNDERFLOW = "underflow"


def _safe(f):
    def wrapped(y, h, i):
        try:
            return f(y, h, i)
        except (OverflowError, ZeroDivisionError):
            return math.inf, math.inf
    return wrapped


def dopri5(f, y0, h0, i0, y_end, *, rtol, atol, min_step, first_step, stop=None):
    """Integrate ``(h, I)' = f(y, h, I)`` from ``y0`` to ``y_end``.

    Every accepted step is recorded. ``stop(y, h, I)`` is called after each
    accepted step and may return a status string to end integration early.

    Returns
    -------
    ys, hs, Is : list of float
        Accepted nodes, starting with the initial point.
    status : str
        ``"completed"``, ``"underflow"`` or whatever ``stop`` returned.
    """
    f = _safe(f)
    y, h, i = y0, h0, i0
    ys, hs, Is = [y], [h], [i]
    k1h, k1i = f(y, h, i)
    step = first_step
    rejected = False
    while True:
        remaining = y_end - y
        if remaining <= 0.0:
            return ys, hs, Is, COMPLETED
        last = step >= remaining
        s = remaining if last else step

        ah, ai = f(y + _C2 * s, h + s * _A21 * k1h, i + s * _A21 * k1i)
        bh, bi = f(y + _C3 * s, h + s * (_A31 * k1h + _A32 * ah),
                   i + s * (_A31 * k1i + _A32 * ai))
        ch, ci = f(y + _C4 * s, h + s * (_A41 * k1h + _A42 * ah + _A43 * bh),
                   i + s * (_A41 * k1i + _A42 * ai + _A43 * bi))
        dh, di = f(y + _C5 * s,
                   h + s * (_A51 * k1h + _A52 * ah + _A53 * bh + _A54 * ch),
                   i + s * (_A51 * k1i + _A52 * ai + _A53 * bi + _A54 * ci))
        eh, ei = f(y + s,
                   h + s * (_A61 * k1h + _A62 * ah + _A63 * bh + _A64 * ch + _A65 * dh),
                   i + s * (_A61 * k1i + _A62 * ai + _A63 * bi + _A64 * ci + _A65 * di))
        h_new = h + s * (_B1 * k1h + _B3 * bh + _B4 * ch + _B5 * dh + _B6 * eh)
        i_new = i + s * (_B1 * k1i + _B3 * bi + _B4 * ci + _B5 * di + _B6 * ei)
        y_new = y_end if last else y + s
        k7h, k7i = f(y_new, h_new, i_new)

        err_h = s * (_E1 * k1h + _E3 * bh + _E4 * ch + _E5 * dh + _E6 * eh + _E7 * k7h)
        err_i = s * (_E1 * k1i + _E3 * bi + _E4 * ci + _E5 * di + _E6 * ei + _E7 * k7i)
        err = max(
            abs(err_h) / (atol + rtol * max(abs(h), abs(h_new))),
            abs(err_i) / (atol + rtol * max(abs(i), abs(i_new))),
        )
        if not math.isfinite(err):
            err = math.inf

        if err <= 1.0:
            y, h, i = y_new, h_new, i_new
            k1h, k1i = k7h, k7i
            ys.append(y)
            hs.append(h)
            Is.append(i)
            if stop is not None:
                status = stop(y, h, i)
                if status is not None:
                    return ys, hs, Is, status
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(_MAX_FACTOR, _SAFETY * err ** -0.2)
            if rejected:
                factor = min(factor, 1.0)
            rejected = False
            if not last:
                step = s * factor
        else:
            rejected = True
            factor = _MIN_FACTOR if err == math.inf else max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            step = s * factor
            if step < min_step:
                return ys, hs, Is, UNDERFLOW
