"""Adaptive Dormand-Prince 5(4) integration with dense output."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["StepSizeUnderflow", "Trajectory", "dopri5", "integrate"]

# Butcher tableau (Hairer, Norsett & Wanner, Table II.5.2).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_A = [np.array(row) for row in _A]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# Continuous extension: y(t + th*h) = y + h * K^T (P @ [th, th^2, th^3, th^4]).
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


class StepSizeUnderflow(RuntimeError):
    def __init__(self, t: float, h: float, y=None):
        super().__init__(f"step size underflow at t={t!r} (h={h:.3e})")
        self.t = t
        self.h = h
        self.y = None if y is None else np.array(y)


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray  # shape (len(t), n)
    n_steps: int
    n_rejected: int
    n_evals: int
    last_step: float


def _initial_step(f, t0, y0, f0, direction, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = f(t0 + h0 * direction, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def dopri5(f, t_span, y0, t_eval=None, rtol=1e-12, atol=1e-12, h0=None, max_steps=10_000_000):
    """Integrate ``y' = f(t, y)`` over ``t_span`` with local error control.

    Parameters
    ----------
    f : callable
        ``f(t, y) -> dy/dt`` returning an array shaped like ``y``.
    t_span : (float, float)
        Start and end time; integration may run backwards.
    y0 : array_like
        Initial state.
    t_eval : array_like, optional
        Output times inside ``t_span``, monotone in the direction of
        integration. Defaults to the two endpoints.
    rtol, atol : float
        Relative and absolute local error tolerances.
    h0 : float, optional
        First trial step magnitude; estimated when omitted.

    Returns
    -------
    Trajectory
        States sampled at ``t_eval`` through the dense-output interpolant.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not (np.isfinite(t0) and np.isfinite(t1)):
        raise ValueError("t_span must be finite")
    if not (rtol > 0 and atol > 0):
        raise ValueError("tolerances must be positive")
    y = np.array(y0, dtype=float)
    if t_eval is None:
        t_eval = np.array([t0, t1])
    t_eval = np.asarray(t_eval, dtype=float)
    direction = 1.0 if t1 >= t0 else -1.0
    out = np.empty((len(t_eval), y.size))
    k_out = 0
    while k_out < len(t_eval) and t_eval[k_out] == t0:
        out[k_out] = y
        k_out += 1
    if t1 == t0:
        return Trajectory(t_eval.copy(), out, 0, 0, 0, 0.0)

    t = t0
    fy = np.asarray(f(t, y), dtype=float)
    n_evals = 1
    if h0 is None:
        h = _initial_step(f, t, y, fy, direction, rtol, atol)
        n_evals += 1
    else:
        h = abs(float(h0))
    K = np.empty((7, y.size))
    n_steps = n_rejected = 0
    span = abs(t1 - t0)
    err_exp = -1.0 / 5.0
    while direction * (t1 - t) > 0:
        if n_steps + n_rejected >= max_steps:
            raise RuntimeError(f"maximum number of steps exceeded at t={t!r}")
        h_min = 16 * np.spacing(abs(t) + span)
        if h < h_min:
            raise StepSizeUnderflow(t, h, y)
        last = False
        h_full = h
        if h >= abs(t1 - t):
            h = abs(t1 - t)
            last = True
        hs = direction * h
        K[0] = fy
        for i in range(1, 7):
            K[i] = f(t + _C[i] * hs, y + hs * (_A[i] @ K[:i]))
        n_evals += 6
        y_new = y + hs * (_B[:6] @ K[:6])
        err = hs * (_E @ K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = np.sqrt(np.mean((err / scale) ** 2))
        if not np.isfinite(err_norm):
            h *= _MIN_FACTOR
            n_rejected += 1
            continue
        if err_norm <= 1.0:
            t_new = t1 if last else t + hs
            while k_out < len(t_eval) and direction * (t_eval[k_out] - t_new) <= 0:
                if t_eval[k_out] == t_new:
                    out[k_out] = y_new
                else:
                    theta = (t_eval[k_out] - t) / hs
                    out[k_out] = y + hs * ((K.T @ _P) @ (theta ** np.arange(1, 5)))
                k_out += 1
            t = t_new
            y = y_new
            fy = K[6]
            n_steps += 1
            factor = _MAX_FACTOR if err_norm == 0 else min(_MAX_FACTOR, _SAFETY * err_norm**err_exp)
            h = h * factor
            h_next = max(h, h_full) if last else h
        else:
            h = h * max(_MIN_FACTOR, _SAFETY * err_norm**err_exp)
            n_rejected += 1
    while k_out < len(t_eval):
        out[k_out] = y
        k_out += 1
    return Trajectory(t_eval.copy(), out, n_steps, n_rejected, n_evals, h_next)


integrate = dopri5
