"""Bearing measurements with their range-weighted noise models and generators.

The sensor reports the sine and cosine of the bearing to each primary:

    y1 = y / sigma,  y2 = (x + pi2) / sigma,  y3 = y / psi,  y4 = (x + pi2 - 1) / psi

Angular noise with standard magnitude ``W_k`` radians is added directly to
these channels. For small angles a bearing error ``e`` moves ``(sin, cos)``
by ``(cos, -sin) * e``, a displacement of length ``|e|``, so the channel noise
magnitude matches the angle noise magnitude to first order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .box import ParameterBox
from .cr3bp import Rho, sigma_psi

__all__ = [
    "ARCSEC",
    "NoiseSpec",
    "measure",
    "measurement_matrices",
    "noise_weights",
    "weight_coefficients",
    "range_error_bounds",
    "range_measure",
    "perturb_range",
    "ExogenousGenerator",
    "sample_exogenous",
    "write_measurement_csv",
]

ARCSEC = math.pi / 648000.0


@dataclass(frozen=True)
class NoiseSpec:
    """Noise configuration in internal units.

    Angles are in radians, ranges in normalized length, times in normalized
    time. ``weight_box`` is the interval over which the range-linear weights
    interpolate from their minimum to their maximum.
    """

    eta_min: float
    eta_max: float
    range_err_min: float
    range_err_max: float
    process_bound: float
    weight_box: ParameterBox
    band_limit: float | None = None  # None means white
    hold_dt: float = 1e-3
    weight_model: str = "linear"
    quad_alpha: tuple[float, float] | None = None
    enabled: bool = True  # False keeps the weights but generators emit zeros

    def __post_init__(self):
        if not 0 <= self.eta_min <= self.eta_max:
            raise ValueError("need 0 <= eta_min <= eta_max")
        if not 0 <= self.range_err_min <= self.range_err_max:
            raise ValueError("need 0 <= range_err_min <= range_err_max")
        if not self.process_bound >= 0:
            raise ValueError("process_bound must be nonnegative")
        if self.band_limit is not None and not self.band_limit > 0:
            raise ValueError("band_limit must be positive (or None for white noise)")
        if not self.hold_dt > 0:
            raise ValueError("hold_dt must be positive")
        if self.weight_model not in ("linear", "quadratic"):
            raise ValueError(f"unknown weight model {self.weight_model!r}")

    @classmethod
    def from_units(
        cls,
        eta_min_arcsec: float,
        eta_max_arcsec: float,
        range_err_min_km: float,
        range_err_max_km: float,
        r12_km: float,
        process_bound: float,
        weight_box: ParameterBox,
        **kwargs,
    ) -> "NoiseSpec":
        return cls(
            eta_min=eta_min_arcsec * ARCSEC,
            eta_max=eta_max_arcsec * ARCSEC,
            range_err_min=range_err_min_km / r12_km,
            range_err_max=range_err_max_km / r12_km,
            process_bound=process_bound,
            weight_box=weight_box,
            **kwargs,
        )


def measure(state, pi2: float) -> np.ndarray:
    """Noise-free ``(sin t1, cos t1, sin t2, cos t2)``."""
    sigma, psi = sigma_psi(state, pi2)
    x, y = float(state[0]), float(state[1])
    return np.array([y / sigma, (x + pi2) / sigma, y / psi, (x + pi2 - 1.0) / psi])


def measurement_matrices(rho, pi2: float):
    """``C_y(rho)`` (4x4) and ``d(rho)`` (4,) with ``measure(x) = C_y x + d``."""
    sigma, psi = float(rho[0]), float(rho[1])
    if not (sigma > 0 and psi > 0):
        raise ValueError(f"rho must be positive, got {rho}")
    C = np.array(
        [
            [0.0, 1.0 / sigma, 0.0, 0.0],
            [1.0 / sigma, 0.0, 0.0, 0.0],
            [0.0, 1.0 / psi, 0.0, 0.0],
            [1.0 / psi, 0.0, 0.0, 0.0],
        ]
    )
    d = np.array([0.0, pi2 / sigma, 0.0, (pi2 - 1.0) / psi])
    return C, d


def _interp(r, lo, hi, v_lo, v_hi):
    if hi == lo:
        raise ValueError("degenerate weighting interval (min == max)")
    r = min(max(r, lo), hi)
    return v_lo + (r - lo) / (hi - lo) * (v_hi - v_lo)


def weight_coefficients(spec: NoiseSpec, box: ParameterBox | None = None):
    """Affine weight laws ``W1 = c0 + c1*sigma`` and ``W3 = k0 + k1*psi``.

    Returns ``((c0, c1), (k0, k1))``. For the range-linear model these hold
    inside the weighting box; outside it the weights saturate.
    """
    box = spec.weight_box if box is None else box
    if spec.weight_model == "quadratic":
        alpha = spec.quad_alpha
        if alpha is None:
            # calibrated so both models agree at the far edge of the box
            alpha = ((spec.eta_max / box.sigma_max) ** 2, (spec.eta_max / box.psi_max) ** 2)
        return (0.0, math.sqrt(alpha[0])), (0.0, math.sqrt(alpha[1]))
    out = []
    for lo, hi in ((box.sigma_min, box.sigma_max), (box.psi_min, box.psi_max)):
        if hi == lo:
            raise ValueError("degenerate weighting interval (min == max)")
        slope = (spec.eta_max - spec.eta_min) / (hi - lo)
        out.append((spec.eta_min - slope * lo, slope))
    return tuple(out)


def noise_weights(rho, spec: NoiseSpec, box: ParameterBox | None = None) -> np.ndarray:
    """Range-dependent noise magnitudes ``(W1, W2, W3, W4)`` in radians.

    The default model grows linearly from ``eta_min`` at the near edge of the
    weighting box to ``eta_max`` at the far edge; ``rho`` outside the box is
    clamped. The ``"quadratic"`` model uses ``W_k = sqrt(alpha_k) * r_k``.
    """
    box = spec.weight_box if box is None else box
    sigma, psi = float(rho[0]), float(rho[1])
    if spec.weight_model == "linear":
        sigma, psi = box.clamp((sigma, psi))
    (c0, c1), (k0, k1) = weight_coefficients(spec, box)
    w1 = c0 + c1 * sigma
    w2 = k0 + k1 * psi
    if spec.weight_model == "linear":
        # pin the box edges exactly
        if sigma == box.sigma_min:
            w1 = spec.eta_min
        elif sigma == box.sigma_max:
            w1 = spec.eta_max
        if psi == box.psi_min:
            w2 = spec.eta_min
        elif psi == box.psi_max:
            w2 = spec.eta_max
    return np.array([w1, w1, w2, w2])


def range_error_bounds(rho, spec: NoiseSpec, box: ParameterBox | None = None) -> tuple[float, float]:
    box = spec.weight_box if box is None else box
    e1 = _interp(float(rho[0]), box.sigma_min, box.sigma_max, spec.range_err_min, spec.range_err_max)
    e2 = _interp(float(rho[1]), box.psi_min, box.psi_max, spec.range_err_min, spec.range_err_max)
    return e1, e2


def perturb_range(rho, u, spec: NoiseSpec, box: ParameterBox) -> Rho:
    """``rho + u * bound(rho)`` clamped to ``box``, for unit draws ``u`` in [-1, 1]."""
    e1, e2 = range_error_bounds(rho, spec)
    return Rho(*box.clamp((rho[0] + u[0] * e1, rho[1] + u[1] * e2)))


def range_measure(state, pi2: float, spec: NoiseSpec, rng: np.random.Generator, box: ParameterBox) -> Rho:
    """Noisy ``(sigma, psi)`` clamped to ``box``.

    Each range gets uniform noise whose half-width grows linearly with that
    range between ``range_err_min`` and ``range_err_max``.
    """
    u = rng.uniform(-1.0, 1.0, 2)
    if not spec.enabled:
        u = np.zeros(2)
    return perturb_range(sigma_psi(state, pi2), u, spec, box)


class ExogenousGenerator:
    """Sample-and-hold source of ``w = (d_x, d_y, n1, n2, n3, n4)``.

    Process channels are white uniform in ``+-process_bound``. Sensor channels
    are unit-bounded (they are scaled by the noise weights downstream); in
    band-limited mode they pass through a first-order low-pass with cutoff
    ``band_limit`` discretized at the hold period. The filter output is a
    convex combination of past inputs, so it stays inside [-1, 1].
    """

    def __init__(self, spec: NoiseSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self._state = np.zeros(4)
        if spec.band_limit is None or math.isinf(spec.band_limit):
            self._alpha = 1.0
        else:
            self._alpha = -math.expm1(-spec.band_limit * spec.hold_dt)

    def sample(self, t: float | None = None) -> np.ndarray:
        u = self.rng.uniform(-1.0, 1.0, 6)
        if not self.spec.enabled:
            return np.zeros(6)
        if self._alpha == 1.0:
            self._state = u[2:].copy()
        else:
            self._state = self._state + self._alpha * (u[2:] - self._state)
        return np.concatenate([self.spec.process_bound * u[:2], self._state])


def sample_exogenous(spec: NoiseSpec, t: float, rng: np.random.Generator, generator: ExogenousGenerator | None = None):
    """One exogenous sample; pass a persistent ``generator`` for band-limited sequences."""
    gen = generator if generator is not None else ExogenousGenerator(spec, rng)
    return gen.sample(t)


MEASUREMENT_COLUMNS = ("t", "y_m1", "y_m2", "y_m3", "y_m4", "sigma_meas", "psi_meas")


def write_measurement_csv(path, t, y_m, rho_meas) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MEASUREMENT_COLUMNS)
        for ti, y, r in zip(t, y_m, rho_meas):
            w.writerow([repr(float(v)) for v in (ti, *y, *r)])
