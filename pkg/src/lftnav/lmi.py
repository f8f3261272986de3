"""Small dense LMI feasibility solver.

Finds ``x`` with ``F_j(x) < 0`` for a list of affine symmetric matrix
functions ``F_j(x) = F_j0 + sum_i x_i F_ji``. The phase-I problem

    minimize t  subject to  F_j(x) <= t I,  |x| <= R

is solved by a log-det barrier path-following method with damped Newton
centering. A negative ``t`` is a strictly feasible point. A positive lower
bound ``t - m / tau`` on the optimum certifies infeasibility inside the
ball of radius ``R``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .numkernel import chol_posdef

__all__ = ["AffineLmi", "LmiResult", "affine_from_callable", "solve_feasibility", "max_eig"]

log = logging.getLogger(__name__)

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
FAILED = "failed"


@dataclass
class AffineLmi:
    """Constraints grouped by block size for batched evaluation.

    ``groups`` holds ``(F0, Fi)`` pairs with shapes ``(K, m, m)`` and
    ``(K, n, m, m)``; ``index`` maps each group row back to the original
    constraint position.
    """

    n_vars: int
    groups: list
    index: list

    def evaluate(self, x) -> list[np.ndarray]:
        out = [None] * sum(len(ix) for ix in self.index)
        for (F0, Fi), ix in zip(self.groups, self.index):
            vals = F0 + np.einsum("i,kimn->kmn", x, Fi)
            for k, j in enumerate(ix):
                out[j] = vals[k]
        return out


def affine_from_callable(fn, n_vars: int) -> AffineLmi:
    """Extract the affine data of ``fn(x) -> list of symmetric matrices`` by probing.

    ``fn`` must be affine in ``x``; it is evaluated at the origin and the
    ``n_vars`` unit vectors.
    """
    base = [np.asarray(F, dtype=float) for F in fn(np.zeros(n_vars))]
    coeffs = [[] for _ in base]
    e = np.zeros(n_vars)
    for i in range(n_vars):
        e[i] = 1.0
        for j, F in enumerate(fn(e)):
            coeffs[j].append(np.asarray(F, dtype=float) - base[j])
        e[i] = 0.0
    by_size: dict[int, list[int]] = {}
    for j, F in enumerate(base):
        by_size.setdefault(F.shape[0], []).append(j)
    groups, index = [], []
    for m in sorted(by_size):
        ix = by_size[m]
        F0 = np.stack([0.5 * (base[j] + base[j].T) for j in ix])
        Fi = np.stack([np.stack([0.5 * (c + c.T) for c in coeffs[j]]) if n_vars else np.zeros((0, m, m)) for j in ix])
        groups.append((F0, Fi))
        index.append(ix)
    return AffineLmi(n_vars, groups, index)


@dataclass
class LmiResult:
    status: str  # "feasible" | "infeasible" | "failed"
    x: np.ndarray
    t: float  # max eigenvalue bound at x
    lower_bound: float  # certified lower bound on the phase-I optimum
    newton_steps: int
    message: str = ""
    history: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


def max_eig(lmi: AffineLmi, x) -> float:
    return max(float(np.linalg.eigvalsh(F).max()) for F in lmi.evaluate(x))


def _certify(lmi: AffineLmi, x) -> bool:
    return all(chol_posdef(-F) is not None for F in lmi.evaluate(x))


class _Barrier:
    def __init__(self, lmi: AffineLmi, radius: float):
        self.lmi = lmi
        self.R2 = radius * radius
        self.m_total = sum(F0.shape[0] * F0.shape[1] for F0, _ in lmi.groups) + 1
        # directions dS/dz per group: -F_i for x, I for t
        self.directions = [
            np.concatenate([-Fi, np.broadcast_to(np.eye(F0.shape[1]), (F0.shape[0], 1) + F0.shape[1:])], axis=1)
            for F0, Fi in lmi.groups
        ]

    def slack_factors(self, z):
        """Cholesky factors of ``t I - F_j(x)`` per group, or None if outside."""
        x, t = z[:-1], z[-1]
        if x @ x >= self.R2:
            return None
        out = []
        for F0, Fi in self.lmi.groups:
            S = t * np.eye(F0.shape[1]) - (F0 + np.einsum("i,kimn->kmn", x, Fi))
            try:
                out.append(np.linalg.cholesky(S))
            except np.linalg.LinAlgError:
                return None
        return out

    def value(self, z, tau, factors):
        x = z[:-1]
        phi = -np.log(self.R2 - x @ x)
        for Lk in factors:
            phi -= 2.0 * np.sum(np.log(np.diagonal(Lk, axis1=1, axis2=2)))
        return tau * z[-1] + phi

    def derivatives(self, z, tau, factors):
        n = self.lmi.n_vars
        g = np.zeros(n + 1)
        H = np.zeros((n + 1, n + 1))
        g[-1] = tau
        for (F0, Fi), Lk, D in zip(self.lmi.groups, factors, self.directions):
            K, m = F0.shape[0], F0.shape[1]
            Linv = np.linalg.inv(Lk)
            G = Linv[:, None] @ D @ np.swapaxes(Linv, 1, 2)[:, None]
            g -= np.trace(G, axis1=2, axis2=3).sum(axis=0)
            Gf = np.swapaxes(G.reshape(K, n + 1, m * m), 0, 1).reshape(n + 1, K * m * m)
            H += Gf @ Gf.T
        x = z[:-1]
        s = self.R2 - x @ x
        g[:-1] += 2.0 * x / s
        H[:-1, :-1] += 2.0 * np.eye(n) / s + 4.0 * np.outer(x, x) / s**2
        return g, H


def solve_feasibility(
    lmi: AffineLmi,
    x0=None,
    radius: float = 1e6,
    margin: float = 0.0,
    tau0: float = 1.0,
    mu: float = 8.0,
    tau_max: float = 1e14,
    max_newton: int = 5000,
) -> LmiResult:
    """Search for ``x`` with every ``F_j(x) < -margin * I``.

    Parameters
    ----------
    lmi : AffineLmi
        Constraint data.
    x0 : array_like, optional
        Warm start; must lie inside the ball.
    radius : float
        Ball radius bounding the search.
    margin : float
        Required strict-feasibility margin on the maximum eigenvalue.

    Returns
    -------
    LmiResult
        ``"feasible"`` with a point verified by Cholesky, ``"infeasible"``
        when the duality bound proves the optimum exceeds ``-margin``, or
        ``"failed"`` on numerical breakdown or an unresolved marginal case.
    """
    n = lmi.n_vars
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if x @ x >= 0.25 * radius * radius:
        x = x * (0.5 * radius / np.linalg.norm(x))
    bar = _Barrier(lmi, radius)
    t = max_eig(lmi, x)
    z = np.append(x, t + max(1.0, abs(t)))
    tau = tau0
    steps = 0
    history = []

    def done(status, msg=""):
        xs = z[:-1]
        t_now = max_eig(lmi, xs)
        lb = z[-1] - bar.m_total / tau
        return LmiResult(status, xs.copy(), t_now, lb, steps, msg, history)

    while True:
        # centering
        factors = bar.slack_factors(z)
        f = bar.value(z, tau, factors)
        for _ in range(200):
            g, H = bar.derivatives(z, tau, factors)
            try:
                c = np.linalg.cholesky(H)
                dz = -np.linalg.solve(c.T, np.linalg.solve(c, g))
            except np.linalg.LinAlgError:
                dz = -np.linalg.lstsq(H, g, rcond=None)[0]
            if not np.all(np.isfinite(dz)):
                return done(FAILED, "non-finite Newton direction")
            dec = float(-g @ dz)
            steps += 1
            if dec < 1e-10:
                break
            s = 1.0
            while True:
                zn = z + s * dz
                fac_n = bar.slack_factors(zn)
                if fac_n is not None:
                    fn = bar.value(zn, tau, fac_n)
                    if fn <= f - 0.25 * s * dec:
                        break
                s *= 0.5
                if s < 1e-14:
                    break
            if s < 1e-14:
                # no progress possible at this tau
                break
            z, factors, f = zn, fac_n, fn
            if steps >= max_newton:
                return done(FAILED, "Newton step limit reached")
            if z[-1] < -margin and _certify_margin(lmi, z[:-1], margin):
                return done(FEASIBLE)
        history.append((tau, float(z[-1])))
        if z[-1] < -margin and _certify_margin(lmi, z[:-1], margin):
            return done(FEASIBLE)
        if z[-1] - bar.m_total / tau > -margin:
            return done(INFEASIBLE, "phase-I lower bound above zero")
        if tau >= tau_max:
            return done(FAILED, "marginal: optimum within solver resolution of zero")
        tau *= mu


def _certify_margin(lmi, x, margin):
    if margin <= 0:
        return _certify(lmi, x)
    return all(chol_posdef(-F - margin * np.eye(F.shape[0])) is not None for F in lmi.evaluate(x))
