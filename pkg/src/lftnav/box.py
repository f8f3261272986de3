"""Admissible interval of the scheduling parameters ``rho = (sigma, psi)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lft import UncertainReal, make_uncertain

__all__ = ["ParameterBox", "SCENARIO_BOX"]


@dataclass(frozen=True)
class ParameterBox:
    sigma_min: float
    sigma_max: float
    psi_min: float
    psi_max: float

    def __post_init__(self):
        for lo, hi, name in ((self.sigma_min, self.sigma_max, "sigma"), (self.psi_min, self.psi_max, "psi")):
            if not (0 < lo <= hi):
                raise ValueError(f"{name} bounds must satisfy 0 < min <= max, got [{lo}, {hi}]")

    @property
    def degenerate(self) -> bool:
        return self.sigma_min == self.sigma_max or self.psi_min == self.psi_max

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.sigma_min + self.sigma_max), 0.5 * (self.psi_min + self.psi_max))

    def contains(self, rho, tol: float = 0.0) -> bool:
        s, p = rho
        return (self.sigma_min - tol <= s <= self.sigma_max + tol) and (self.psi_min - tol <= p <= self.psi_max + tol)

    def clamp(self, rho) -> tuple[float, float]:
        s, p = rho
        return (min(max(s, self.sigma_min), self.sigma_max), min(max(p, self.psi_min), self.psi_max))

    def grid(self, n: int) -> np.ndarray:
        """``n x n`` tensor grid including the corners, shape (n*n, 2)."""
        if n < 2 and not self.degenerate:
            raise ValueError("grid density must be at least 2 per axis")
        n_s = 1 if self.sigma_min == self.sigma_max else n
        n_p = 1 if self.psi_min == self.psi_max else n
        s = np.linspace(self.sigma_min, self.sigma_max, n_s)
        p = np.linspace(self.psi_min, self.psi_max, n_p)
        return np.array([(si, pj) for si in s for pj in p])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        s = rng.uniform(self.sigma_min, self.sigma_max, n)
        p = rng.uniform(self.psi_min, self.psi_max, n)
        return np.column_stack([s, p])

    def uncertain(self) -> tuple[UncertainReal, UncertainReal]:
        return make_uncertain(self.sigma_min, self.sigma_max, "sigma"), make_uncertain(self.psi_min, self.psi_max, "psi")

    def to_dict(self) -> dict:
        return {"sigma_min": self.sigma_min, "sigma_max": self.sigma_max, "psi_min": self.psi_min, "psi_max": self.psi_max}

    def covers(self, other: "ParameterBox") -> bool:
        return (
            self.sigma_min <= other.sigma_min
            and other.sigma_max <= self.sigma_max
            and self.psi_min <= other.psi_min
            and other.psi_max <= self.psi_max
        )


# Bounds on (sigma, psi) along the surveillance orbit.
SCENARIO_BOX = ParameterBox(0.1289, 0.9005, 0.1218, 1.9005)
