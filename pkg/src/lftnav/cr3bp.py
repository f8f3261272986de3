"""Planar circular restricted three-body dynamics in normalized units.

Lengths are scaled by the primary separation ``r12`` and time by
``t_c = sqrt(r12**3 / mu)``, so the primaries sit at ``(-pi2, 0)`` and
``(1 - pi2, 0)`` in the rotating frame. The state is ``(x, y, vx, vy)``.

The equations of motion are written in linear parameter-varying form
``x' = A(rho) x + b(rho)`` with ``rho = (sigma, psi)`` the distances to the two
primaries. This form is exact, not a linearization.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .ode import Trajectory, dopri5

__all__ = [
    "Constants",
    "Rho",
    "PrimarySingularity",
    "SINGULARITY_GUARD",
    "constants_from",
    "EARTH_MOON",
    "sigma_psi",
    "lpv_matrices",
    "truth_deriv",
    "dimensional_deriv",
    "jacobi_constant",
    "propagate",
    "lagrange_points",
    "write_trajectory_csv",
]

# Reject states closer than this (normalized) to either primary.
SINGULARITY_GUARD = 1e-6


class PrimarySingularity(ValueError):
    pass


@dataclass(frozen=True)
class Constants:
    m1: float
    m2: float
    G: float
    r12: float

    @property
    def pi1(self) -> float:
        return self.m1 / (self.m1 + self.m2)

    @property
    def pi2(self) -> float:
        return self.m2 / (self.m1 + self.m2)

    @property
    def mu1(self) -> float:
        return self.G * self.m1

    @property
    def mu2(self) -> float:
        return self.G * self.m2

    @property
    def mu(self) -> float:
        return self.mu1 + self.mu2

    @property
    def Omega(self) -> float:
        return math.sqrt(self.mu / self.r12**3)

    @property
    def T(self) -> float:
        return 2.0 * math.pi / self.Omega

    @property
    def t_c(self) -> float:
        return math.sqrt(self.r12**3 / self.mu)


def constants_from(m1: float, m2: float, G: float, r12: float) -> Constants:
    for name, v in (("m1", m1), ("m2", m2), ("G", G), ("r12", r12)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    if m1 < m2:
        raise ValueError("m1 must be the larger primary (m1 >= m2)")
    return Constants(float(m1), float(m2), float(G), float(r12))


# Standard Earth-Moon values (kg, m^3 kg^-1 s^-2, m).
EARTH_MOON = constants_from(5.9722e24, 7.3463e22, 6.6743e-11, 3.844e8)


class Rho(NamedTuple):
    sigma: float
    psi: float


def sigma_psi(state, pi2: float) -> Rho:
    """Distances from the spacecraft to the first (sigma) and second (psi) primary."""
    x, y = float(state[0]), float(state[1])
    sigma = math.hypot(x + pi2, y)
    psi = math.hypot(x + pi2 - 1.0, y)
    if sigma < SINGULARITY_GUARD or psi < SINGULARITY_GUARD:
        raise PrimarySingularity(f"state ({x}, {y}) is at a primary (sigma={sigma}, psi={psi})")
    return Rho(sigma, psi)


def _a31(sigma, psi, pi2):
    return (pi2 - 1.0) / sigma**3 - pi2 / psi**3 + 1.0


def lpv_matrices(rho, pi2: float):
    """``A(rho)`` (4x4) and ``b(rho)`` (4,) of the exact LPV dynamics."""
    sigma, psi = float(rho[0]), float(rho[1])
    if not (sigma > 0 and psi > 0):
        raise ValueError(f"rho must be positive, got {rho}")
    a = _a31(sigma, psi, pi2)
    A = np.array(
        [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [a, 0.0, 0.0, 2.0],
            [0.0, a, -2.0, 0.0],
        ]
    )
    b = np.array([0.0, 0.0, pi2 * (1.0 - pi2) * (1.0 / psi**3 - 1.0 / sigma**3), 0.0])
    return A, b


def truth_deriv(state, pi2: float, d=(0.0, 0.0)) -> np.ndarray:
    """Normalized CR3BP vector field plus a disturbance acceleration ``d``."""
    x, y, vx, vy = (float(v) for v in state)
    sigma, psi = sigma_psi(state, pi2)
    s3 = sigma**3
    p3 = psi**3
    ax = 2.0 * vy + x - (1.0 - pi2) * (x + pi2) / s3 - pi2 * (x + pi2 - 1.0) / p3
    ay = -2.0 * vx + y - (1.0 - pi2) * y / s3 - pi2 * y / p3
    return np.array([vx, vy, ax + d[0], ay + d[1]])


def dimensional_deriv(state, consts: Constants) -> np.ndarray:
    """Dimensional rotating-frame dynamics, kept as a cross-check of the normalized form.

    ``state`` is ``(x, y, vx, vy)`` in metres and metres per second.
    """
    x, y, vx, vy = (float(v) for v in state)
    W, r12 = consts.Omega, consts.r12
    r13 = math.hypot(x + consts.pi2 * r12, y)
    r23 = math.hypot(x - consts.pi1 * r12, y)
    ax = 2 * W * vy + W**2 * x - consts.mu1 / r13**3 * (x + consts.pi2 * r12) - consts.mu2 / r23**3 * (x - consts.pi1 * r12)
    ay = -2 * W * vx + W**2 * y - consts.mu1 / r13**3 * y - consts.mu2 / r23**3 * y
    return np.array([vx, vy, ax, ay])


def jacobi_constant(state, pi2: float) -> float:
    x, y, vx, vy = (float(v) for v in state)
    sigma, psi = sigma_psi(state, pi2)
    return x * x + y * y + 2.0 * (1.0 - pi2) / sigma + 2.0 * pi2 / psi - (vx * vx + vy * vy)


def propagate(state0, t_span, pi2: float, t_eval=None, rtol=1e-12, atol=1e-12, disturbance=None) -> Trajectory:
    """Integrate the truth dynamics; ``disturbance(t)`` returns a 2-vector if given."""
    if disturbance is None:
        f = lambda t, s: truth_deriv(s, pi2)  # noqa: E731
    else:
        f = lambda t, s: truth_deriv(s, pi2, disturbance(t))  # noqa: E731
    return dopri5(f, t_span, state0, t_eval=t_eval, rtol=rtol, atol=atol)


def lagrange_points(pi2: float) -> dict[str, tuple[float, float]]:
    """Equilibria of the rotating frame for mass ratio ``pi2``."""

    def fx(x):
        s = x + pi2
        p = x + pi2 - 1.0
        return x - (1.0 - pi2) * s / abs(s) ** 3 - pi2 * p / abs(p) ** 3

    eps = 1e-9
    x1 = brentq(fx, -pi2 + eps, 1.0 - pi2 - eps, xtol=1e-15)
    x2 = brentq(fx, 1.0 - pi2 + eps, 2.0, xtol=1e-15)
    x3 = brentq(fx, -2.0, -pi2 - eps, xtol=1e-15)
    h = math.sqrt(3.0) / 2.0
    return {
        "L1": (x1, 0.0),
        "L2": (x2, 0.0),
        "L3": (x3, 0.0),
        "L4": (0.5 - pi2, h),
        "L5": (0.5 - pi2, -h),
    }


TRAJECTORY_COLUMNS = ("t", "x", "y", "vx", "vy", "sigma", "psi", "C_jacobi")


def write_trajectory_csv(path, t, states, pi2: float) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for ti, s in zip(t, states):
            rho = sigma_psi(s, pi2)
            row = [ti, *s, rho.sigma, rho.psi, jacobi_constant(s, pi2)]
            w.writerow([repr(float(v)) for v in row])
