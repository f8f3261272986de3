"""LFT realization of the navigation plant over the scheduling box.

The plant matrices

    x'  = A(rho) x + B_w w + b(rho)
    y_m = C_y(rho) x + D_w(rho) w + d(rho)
    z   = C_z x

depend rationally on ``rho = (sigma, psi)``. Writing ``sigma`` and ``psi`` as
uncertain reals over the box and composing exact LFT operations gives one
constant matrix ``M`` in feedback with ``blkdiag(d_sigma I, d_psi I)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .box import ParameterBox
from .cr3bp import lpv_matrices
from .lft import Lft, lft_eval, lft_matrix, well_posed
from .sensing import NoiseSpec, measurement_matrices, noise_weights, weight_coefficients

__all__ = ["B_W", "C_Z", "PlantLft", "build_plant_lft", "plant_matrices", "noise_input_matrix"]

N_STATE = 4
N_W = 6
N_Y = 4

# Disturbance accelerations enter the velocity rows; sensor noise only the outputs.
B_W = np.zeros((N_STATE, N_W))
B_W[2, 0] = B_W[3, 1] = 1.0
# Only position is estimated.
C_Z = np.hstack([np.eye(2), np.zeros((2, 2))])


def noise_input_matrix(weights) -> np.ndarray:
    """``D_w = [0_{4x2} | diag(W1, W2, W3, W4)]``."""
    D = np.zeros((N_Y, N_W))
    D[:, 2:] = np.diag(weights)
    return D


def plant_matrices(rho, pi2: float, noise: NoiseSpec) -> dict[str, np.ndarray]:
    """Direct (non-LFT) evaluation of every plant matrix at ``rho``."""
    A, b = lpv_matrices(rho, pi2)
    C, d = measurement_matrices(rho, pi2)
    return {"A": A, "b": b, "Bw": B_W.copy(), "Cy": C, "d": d, "Dw": noise_input_matrix(noise_weights(rho, noise))}


@dataclass(frozen=True)
class PlantLft:
    """Plant as a single LFT of the stacked matrix ``[[A, b, B_w], [C_y, d, D_w]]`` (8x11)."""

    model: Lft
    box: ParameterBox
    pi2: float
    error_model: Lft  # [[A, B_w], [C_y, D_w]] (8x10) built without b and d

    @property
    def structure(self):
        return self.model.structure

    def to_delta(self, rho) -> dict[str, float]:
        us, up = self.box.uncertain()
        return {"sigma": float(us.normalize(rho[0])), "psi": float(up.normalize(rho[1]))}

    def evaluate_delta(self, delta) -> dict[str, np.ndarray]:
        M = lft_eval(self.model, delta)
        return {
            "A": M[:4, :4],
            "b": M[:4, 4],
            "Bw": M[:4, 5:],
            "Cy": M[4:, :4],
            "d": M[4:, 4],
            "Dw": M[4:, 5:],
        }

    def evaluate(self, rho) -> dict[str, np.ndarray]:
        return self.evaluate_delta(self.to_delta(rho))

    def error_system(self) -> Lft:
        """The ``[[A, B_w], [C_y, D_w]]`` part (8x10) that drives the estimation error.

        Built separately from ``b`` and ``d`` so the repetition counts stay small.
        """
        return self.error_model


def build_plant_lft(box: ParameterBox, pi2: float, noise: NoiseSpec) -> PlantLft:
    """Exact LFT of the plant over ``box``.

    The noise weights must be affine in the ranges over ``box``; with the
    range-linear model this requires the weighting box to cover ``box``.
    """
    if box.degenerate:
        raise ValueError("an LFT model needs a box with nonzero width in both parameters")
    if noise.weight_model == "linear" and not noise.weight_box.covers(box):
        raise ValueError("noise weighting box must cover the synthesis box for an exact LFT")
    us, up = box.uncertain()
    s, p = us.lft(), up.lft()
    inv_s, inv_p = s**-1, p**-1
    inv_s3, inv_p3 = inv_s**3, inv_p**3

    a = (pi2 - 1.0) * inv_s3 - pi2 * inv_p3 + 1.0
    b3 = pi2 * (1.0 - pi2) * (inv_p3 - inv_s3)
    A = lft_matrix([[0, 0, 1, 0], [0, 0, 0, 1], [a, 0, 0, 2], [0, a, -2, 0]])
    b = lft_matrix([[0], [0], [b3], [0]])
    C = lft_matrix([[0, inv_s, 0, 0], [inv_s, 0, 0, 0], [0, inv_p, 0, 0], [inv_p, 0, 0, 0]])
    d = lft_matrix([[0], [pi2 * inv_s], [0], [(pi2 - 1.0) * inv_p]])

    (c0, c1), (k0, k1) = weight_coefficients(noise)
    W1 = c1 * s + c0
    W2 = k1 * p + k0
    zero = np.zeros((1, 1))
    Dw = lft_matrix(
        [
            [np.zeros((1, 2)), W1, zero, zero, zero],
            [np.zeros((1, 2)), zero, W1, zero, zero],
            [np.zeros((1, 2)), zero, zero, W2, zero],
            [np.zeros((1, 2)), zero, zero, zero, W2],
        ]
    )
    full = lft_matrix([[A, b, B_W], [C, d, Dw]])
    err = lft_matrix([[A, B_W], [C, Dw]])
    for m in (full, err):
        report = well_posed(m)
        if not report.ok:
            raise ArithmeticError(f"plant LFT is not well-posed over the box: {report}")
    return PlantLft(full, box, pi2, err)
