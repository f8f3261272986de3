"""Robust observer-gain synthesis and its validation oracles.

The estimation error ``e = x - x_hat`` of the observer

    x_hat' = (A + L C_y) x_hat - L (y_m - d) + b

obeys ``e' = (A + L C_y) e + (B_w + L D_w) w`` with performance output
``z = C_z e``. A single gain ``L`` and Lyapunov matrix ``P`` are sought so
that the bounded-real inequality holds at every point of a grid over the
scheduling box. With ``Y = P L`` the inequality is linear in ``(P, Y)`` at
fixed ``gamma``, and ``gamma`` is minimized by bisection.

A disk constraint on the closed-loop poles (radius ``disk_radius``) is
imposed with the same ``P``. Without it the gridded optimum drifts to
arbitrarily high gains whose poles are far too fast to simulate.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .box import SCENARIO_BOX, ParameterBox
from .lmi import FAILED, FEASIBLE, AffineLmi, affine_from_callable, solve_feasibility
from .numkernel import chol_posdef, max_sv_freq_batch
from .plant import B_W, C_Z, build_plant_lft, plant_matrices
from .sensing import NoiseSpec

__all__ = [
    "ParameterBox",
    "SCENARIO_BOX",
    "ErrorSystem",
    "ObserverGain",
    "BrlResult",
    "SynthesisInfeasible",
    "error_dynamics",
    "brl_matrix",
    "brl_certify",
    "synthesize_hinf",
    "dk_iterate",
    "hinf_norm_grid",
    "hurwitz",
    "certify",
    "CertificationReport",
    "write_gain",
    "read_gain",
    "config_hash",
]

log = logging.getLogger(__name__)

DEFAULT_DISK_RADIUS = 100.0
GAMMA_LO = 1e-3
GAMMA_HI = 1e4
REL_GAP = 1e-3


class SynthesisInfeasible(RuntimeError):
    def __init__(self, msg, rho=None):
        super().__init__(msg)
        self.rho = rho


@dataclass(frozen=True)
class ErrorSystem:
    Acl: np.ndarray
    Bcl: np.ndarray
    Cz: np.ndarray


@dataclass
class ObserverGain:
    """A certified observer gain.

    ``gamma`` is feasible for the gridded inequality with certificate ``P``;
    ``gamma_lo`` is the largest level proven infeasible (None if not reached).
    """

    L: np.ndarray
    gamma: float
    P: np.ndarray
    grid: np.ndarray
    method: str
    box: ParameterBox
    pi2: float
    disk_radius: float | None = DEFAULT_DISK_RADIUS
    gamma_lo: float | None = None
    gamma_history: list = field(default_factory=list)
    scales: dict | None = None
    config_hash: str | None = None


def error_dynamics(rho, L, pi2: float, spec: NoiseSpec) -> ErrorSystem:
    m = plant_matrices(rho, pi2, spec)
    L = np.asarray(L, dtype=float)
    return ErrorSystem(m["A"] + L @ m["Cy"], m["Bw"] + L @ m["Dw"], C_Z.copy())


def hurwitz(A, tol: float = 1e-9) -> bool:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("square matrix required")
    return bool(np.all(np.linalg.eigvals(A).real < -tol))


def brl_matrix(Acl, Bcl, Cz, P, gamma: float) -> np.ndarray:
    """``[[Acl'P + P Acl + Cz'Cz, P Bcl], [Bcl'P, -gamma^2 I]]``."""
    PA = P @ Acl
    top = np.hstack([PA + PA.T + Cz.T @ Cz, P @ Bcl])
    bot = np.hstack([Bcl.T @ P, -(gamma**2) * np.eye(Bcl.shape[1])])
    return np.vstack([top, bot])


# -- decision variables -------------------------------------------------------

_N = 4
_IU = np.triu_indices(_N)
N_P = len(_IU[0])


def _unpack_p(v) -> np.ndarray:
    P = np.zeros((_N, _N))
    P[_IU] = v
    return P + np.triu(P, 1).T


def _pack_p(P) -> np.ndarray:
    return np.asarray(P)[_IU].copy()


def _sym(M):
    return M + M.T


@dataclass
class BrlResult:
    status: str  # "feasible" | "infeasible" | "failed"
    P: np.ndarray | None
    max_eig: float

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


def brl_certify(Acl, Bcl, Cz, gamma: float) -> BrlResult:
    """Search for ``P > 0`` satisfying the bounded-real inequality at level ``gamma``.

    ``"infeasible"`` means the barrier method proved no such ``P`` exists
    (within its search ball); ``"failed"`` means the numerics could not decide.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    Acl, Bcl, Cz = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (Acl, Bcl, Cz))
    n = Acl.shape[0]
    iu = np.triu_indices(n)

    def unpack(v):
        P = np.zeros((n, n))
        P[iu] = v
        return P + np.triu(P, 1).T

    def fn(v):
        P = unpack(v)
        PA = P @ Acl
        top = np.hstack([_sym(PA) + Cz.T @ Cz, P @ Bcl / gamma])
        bot = np.hstack([Bcl.T @ P / gamma, -np.eye(Bcl.shape[1])])
        return [np.vstack([top, bot]), -P]

    res = solve_feasibility(affine_from_callable(fn, len(iu[0])))
    if not res.feasible:
        return BrlResult(res.status, None, res.t)
    P = unpack(res.x)
    lam = float(np.linalg.eigvalsh(brl_matrix(Acl, Bcl, Cz, P, gamma)).max())
    return BrlResult(FEASIBLE, P, lam)


# -- gridded synthesis --------------------------------------------------------


def _grid_data(grid, pi2, noise):
    return [plant_matrices(rho, pi2, noise) for rho in grid]


def _hinf_lmi(data, gamma, disk_radius) -> AffineLmi:
    Cz2 = C_Z.T @ C_Z
    I6 = np.eye(B_W.shape[1])

    def fn(v):
        P = _unpack_p(v[:N_P])
        Y = v[N_P:].reshape(_N, -1)
        out = []
        for m in data:
            M = P @ m["A"] + Y @ m["Cy"]
            R = (P @ m["Bw"] + Y @ m["Dw"]) / gamma
            out.append(np.block([[_sym(M) + Cz2, R], [R.T, -I6]]))
            if disk_radius is not None:
                out.append(np.block([[-P, M / disk_radius], [M.T / disk_radius, -P]]))
        out.append(-P)
        return out

    return affine_from_callable(fn, N_P + _N * _N)


def _bisect(make_lmi, gamma_lo, gamma_hi, rel_gap, x0=None):
    """Geometric bisection on gamma. Returns (gamma_hi, x_hi, gamma_lo_certified, n_failed)."""
    res = solve_feasibility(make_lmi(gamma_hi), x0=x0)
    if not res.feasible:
        return None, res, None, 0
    x_hi = res.x
    lo_res = solve_feasibility(make_lmi(gamma_lo), x0=x_hi)
    if lo_res.feasible:
        return gamma_lo, lo_res.x, None, 0
    lo_certified = gamma_lo if lo_res.status != FAILED else None
    n_failed = int(lo_res.status == FAILED)
    lo, hi = gamma_lo, gamma_hi
    while (hi - lo) / hi > rel_gap:
        mid = math.sqrt(lo * hi)
        r = solve_feasibility(make_lmi(mid), x0=x_hi)
        log.debug("gamma=%.6g -> %s (t=%.3g, %d steps)", mid, r.status, r.t, r.newton_steps)
        if r.feasible:
            hi, x_hi = mid, r.x
        else:
            lo = mid
            if r.status == FAILED:
                n_failed += 1
            else:
                lo_certified = mid
    return hi, x_hi, lo_certified, n_failed


def synthesize_hinf(
    box: ParameterBox,
    pi2: float,
    noise: NoiseSpec,
    grid_density: int = 3,
    disk_radius: float | None = DEFAULT_DISK_RADIUS,
    gamma_bounds: tuple[float, float] = (GAMMA_LO, GAMMA_HI),
    rel_gap: float = REL_GAP,
) -> ObserverGain:
    """Common gain minimizing the gridded H-infinity bound over ``box``.

    Parameters
    ----------
    box : ParameterBox
        Scheduling region; a degenerate box gives a single-model design.
    pi2 : float
        Mass ratio.
    noise : NoiseSpec
        Supplies the range-dependent measurement weights.
    grid_density : int
        Points per axis of the tensor grid (corners included).
    disk_radius : float or None
        Closed-loop poles are confined to this disk; None disables it.

    Returns
    -------
    ObserverGain

    Raises
    ------
    SynthesisInfeasible
        If the upper gamma bound is infeasible; ``rho`` names a grid point
        that is infeasible on its own, when one exists.
    """
    grid = box.grid(grid_density)
    data = _grid_data(grid, pi2, noise)
    lo, hi = gamma_bounds
    gamma, x, gamma_lo, n_failed = _bisect(lambda g: _hinf_lmi(data, g, disk_radius), lo, hi, rel_gap)
    if gamma is None:
        for rho, m in zip(grid, data):
            if not solve_feasibility(_hinf_lmi([m], hi, disk_radius)).feasible:
                raise SynthesisInfeasible(f"infeasible at gamma={hi} for grid point rho={tuple(rho)}", tuple(rho))
        raise SynthesisInfeasible(f"jointly infeasible at gamma={hi} although each grid point is feasible")
    if n_failed:
        log.warning("%d bisection steps ended without a numerical decision", n_failed)
    P = _unpack_p(x[:N_P])
    Y = x[N_P:].reshape(_N, _N)
    L = np.linalg.solve(P, Y)
    return ObserverGain(L, gamma, P, grid, "hinf", box, pi2, disk_radius, gamma_lo, [gamma])


# -- frequency-domain oracle --------------------------------------------------

DEFAULT_OMEGAS = np.logspace(-3, 3, 400)


def hinf_norm_grid(Acl, Bcl, Cz, omegas=None, refine: bool = True) -> float:
    """Peak of ``max_sv(Cz (jw I - Acl)^-1 Bcl)`` over a frequency grid.

    The default grid is 400 log-spaced points over [1e-3, 1e3] plus DC; the
    largest local maxima are then refined by repeated local gridding.
    """
    Acl = np.asarray(Acl, dtype=float)
    if not hurwitz(Acl):
        raise ValueError("hinf_norm_grid needs a Hurwitz state matrix")
    w = DEFAULT_OMEGAS if omegas is None else np.asarray(omegas, dtype=float)
    w = np.concatenate([[0.0], w])
    vals = max_sv_freq_batch(Acl, Bcl, Cz, w)
    best = float(vals.max())
    if not refine:
        return best
    # local maxima on the grid, largest first
    peaks = [k for k in range(len(w)) if (k == 0 or vals[k] >= vals[k - 1]) and (k == len(w) - 1 or vals[k] >= vals[k + 1])]
    peaks = sorted(peaks, key=lambda k: -vals[k])[:3]
    for k in peaks:
        lo = w[max(k - 1, 0)]
        hi = w[min(k + 1, len(w) - 1)]
        for _ in range(4):
            ww = np.linspace(lo, hi, 41)
            vv = max_sv_freq_batch(Acl, Bcl, Cz, ww)
            j = int(np.argmax(vv))
            best = max(best, float(vv[j]))
            lo, hi = ww[max(j - 1, 0)], ww[min(j + 1, 40)]
    return best


# -- a-posteriori certification -----------------------------------------------


@dataclass
class CertificationReport:
    gamma: float
    grid_max_eig: list  # BRL max eigenvalue per grid point
    grid_ok: bool
    n_samples: int
    n_pass: int
    failures: list  # (rho, reason, value)
    worst_ratio: float  # max sampled norm / gamma
    # samples where the grid's common P fails the BRL: grid-refinement triggers
    brl_gaps: list = field(default_factory=list)  # (rho, max eigenvalue)

    @property
    def pass_rate(self) -> float:
        return self.n_pass / self.n_samples if self.n_samples else 1.0

    def ok(self, threshold: float = 0.999) -> bool:
        return self.grid_ok and self.pass_rate >= threshold

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "grid_max_eig": self.grid_max_eig,
            "grid_ok": self.grid_ok,
            "n_samples": self.n_samples,
            "n_pass": self.n_pass,
            "pass_rate": self.pass_rate,
            "worst_ratio": self.worst_ratio,
            "failures": [{"rho": list(r), "reason": why, "value": v} for r, why, v in self.failures[:50]],
            "brl_gap_count": len(self.brl_gaps),
            "brl_gap_worst": max((v for _, v in self.brl_gaps), default=None),
            "brl_gaps": [{"rho": list(r), "max_eig": v} for r, v in self.brl_gaps[:50]],
        }


def certify(
    gain: ObserverGain,
    noise: NoiseSpec,
    n_samples: int = 10_000,
    seed: int = 0,
    box: ParameterBox | None = None,
    rtol: float = 1e-6,
) -> CertificationReport:
    """Check the gridded certificate and sample the box densely.

    At each grid point the BRL matrix must be negative definite (Cholesky
    test). At each random ``rho`` the frozen error dynamics must be Hurwitz
    with frequency-grid norm at most ``gamma * (1 + rtol)``. Random points
    where the common ``P`` itself fails the BRL are listed in ``brl_gaps``;
    they do not void the norm bound but indicate the grid should be refined.
    """
    box = gain.box if box is None else box
    lam = []
    grid_ok = chol_posdef(gain.P) is not None
    for rho in gain.grid:
        es = error_dynamics(rho, gain.L, gain.pi2, noise)
        M = brl_matrix(es.Acl, es.Bcl, es.Cz, gain.P, gain.gamma)
        lam.append(float(np.linalg.eigvalsh(M).max()))
        grid_ok &= chol_posdef(-M) is not None
    rng = np.random.default_rng(seed)
    failures = []
    gaps = []
    worst = 0.0
    for rho in box.sample(n_samples, rng):
        es = error_dynamics(rho, gain.L, gain.pi2, noise)
        M = brl_matrix(es.Acl, es.Bcl, es.Cz, gain.P, gain.gamma)
        if chol_posdef(-M) is None:
            gaps.append((tuple(rho), float(np.linalg.eigvalsh(M).max())))
        if not hurwitz(es.Acl):
            failures.append((tuple(rho), "not Hurwitz", float(np.linalg.eigvals(es.Acl).real.max())))
            worst = math.inf
            continue
        nrm = hinf_norm_grid(es.Acl, es.Bcl, es.Cz)
        worst = max(worst, nrm / gain.gamma)
        if nrm > gain.gamma * (1 + rtol):
            failures.append((tuple(rho), "norm above gamma", nrm))
    return CertificationReport(gain.gamma, lam, bool(grid_ok), n_samples, n_samples - len(failures), failures, worst, gaps)


# -- gain artifact ------------------------------------------------------------

ARTIFACT_VERSION = 1


def config_hash(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _hex(M):
    return [[float(v).hex() for v in row] for row in np.atleast_2d(M)]


def _unhex(rows):
    return np.array([[float.fromhex(v) for v in row] for row in rows])


def write_gain(path, gain: ObserverGain) -> None:
    """Write the gain as JSON; matrices are stored as hex floats (bit exact)."""
    doc = {
        "version": ARTIFACT_VERSION,
        "method": gain.method,
        "gamma": float(gain.gamma).hex(),
        "gamma_decimal": repr(float(gain.gamma)),
        "gamma_lo": None if gain.gamma_lo is None else float(gain.gamma_lo).hex(),
        "gamma_history": [float(g).hex() for g in gain.gamma_history],
        "L": _hex(gain.L),
        "P": _hex(gain.P),
        "grid": _hex(gain.grid),
        "box": gain.box.to_dict(),
        "pi2": float(gain.pi2).hex(),
        "disk_radius": gain.disk_radius,
        "scales": gain.scales,
        "config_hash": gain.config_hash,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_gain(path) -> ObserverGain:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != ARTIFACT_VERSION:
        raise ValueError(f"unsupported gain artifact version {doc.get('version')!r}")
    lo = doc["gamma_lo"]
    return ObserverGain(
        L=_unhex(doc["L"]),
        gamma=float.fromhex(doc["gamma"]),
        P=_unhex(doc["P"]),
        grid=_unhex(doc["grid"]),
        method=doc["method"],
        box=ParameterBox(**doc["box"]),
        pi2=float.fromhex(doc["pi2"]),
        disk_radius=doc["disk_radius"],
        gamma_lo=None if lo is None else float.fromhex(lo),
        gamma_history=[float.fromhex(g) for g in doc["gamma_history"]],
        scales=doc["scales"],
        config_hash=doc["config_hash"],
    )


# -- scaled robust-performance iteration ---------------------------------------


@dataclass
class _CellModel:
    """Error-system LFT over one cell with ``Delta`` pulled out.

    ``e' = A0 e + Bq q + Bw0 w`` (plus ``L`` times the output rows),
    ``p = Cp e + Dpq q + Dpw w``, ``q = Delta p``.
    """

    box: ParameterBox
    A0: np.ndarray
    Bw0: np.ndarray
    C0: np.ndarray
    Dw0: np.ndarray
    Bq: np.ndarray
    Cq: np.ndarray
    Cp: np.ndarray
    Dpq: np.ndarray
    Dpw: np.ndarray
    structure: tuple


def _cell_models(box: ParameterBox, pi2, noise, cells: int) -> list[_CellModel]:
    s = np.linspace(box.sigma_min, box.sigma_max, cells + 1)
    p = np.linspace(box.psi_min, box.psi_max, cells + 1)
    out = []
    for i in range(cells):
        for j in range(cells):
            cb = ParameterBox(s[i], s[i + 1], p[j], p[j + 1])
            E = build_plant_lft(cb, pi2, noise).error_system()
            M11, M12, M21, M22 = E.M11, E.M12, E.M21, E.M22
            out.append(
                _CellModel(
                    cb, M22[:4, :4], M22[:4, 4:], M22[4:, :4], M22[4:, 4:], M21[:4], M21[4:], M12[:, :4], M11, M12[:, 4:], E.structure
                )
            )
    return out


def _rp_matrix(c: _CellModel, P, Y, X, gamma):
    """Scaled robust-performance matrix; negative definite certifies the cell."""
    Cz2 = C_Z.T @ C_Z
    CpX = c.Cp.T * X
    DqX = c.Dpq.T * X
    a = _sym(P @ c.A0 + Y @ c.C0) + Cz2 + CpX @ c.Cp
    b = P @ c.Bq + Y @ c.Cq + CpX @ c.Dpq
    w = (P @ c.Bw0 + Y @ c.Dw0 + CpX @ c.Dpw) / gamma
    d = DqX @ c.Dpq - np.diag(X)
    e = DqX @ c.Dpw / gamma
    f = (c.Dpw.T * X) @ c.Dpw / gamma**2 - np.eye(c.Dpw.shape[1])
    return np.block([[a, b, w], [b.T, d, e], [w.T, e.T, f]])


def _disk_blocks(data, P, Y, r):
    if r is None:
        return []
    out = []
    for m in data:
        M = (P @ m["A"] + Y @ m["Cy"]) / r
        out.append(np.block([[-P, M], [M.T, -P]]))
    return out


def _bisect_down(make_lmi, hi, x_hi, lo, rel_gap):
    """Shrink ``[lo, hi]`` with ``hi`` known feasible at ``x_hi``."""
    while (hi - lo) / hi > rel_gap:
        mid = math.sqrt(lo * hi)
        r = solve_feasibility(make_lmi(mid), x0=x_hi)
        if r.feasible:
            hi, x_hi = mid, r.x
        else:
            lo = mid
    return hi, x_hi


def dk_iterate(
    box: ParameterBox,
    pi2: float,
    noise: NoiseSpec,
    initial: ObserverGain | None = None,
    cells: int = 2,
    grid_density: int = 3,
    disk_radius: float | None = DEFAULT_DISK_RADIUS,
    max_rounds: int = 20,
    tol: float = 1e-3,
    rel_gap: float = 5e-3,
) -> ObserverGain:
    """Alternate gain and scaling steps on the robust-performance inequality.

    The box is split into ``cells x cells`` sub-boxes, each with its own
    error-system LFT. With ``Delta`` pulled out, a positive diagonal scale
    ``X`` per cell (commuting with every ``delta_k I`` block) turns the
    robust bound into one matrix inequality per cell; a common ``(P, Y)``
    covers all cells, so the certificate holds for time-varying ``rho``
    anywhere in the box.

    Iterate 0 is the plain H-infinity gain (``initial``, synthesized if not
    given), evaluated under this certificate. Each later step re-solves for
    the gain with the scales fixed, or for the scales with the gain fixed,
    starting its bisection from the previous level, so the recorded
    ``gamma_history`` never increases.

    Parameters
    ----------
    cells : int
        Sub-boxes per axis.
    max_rounds : int
        Upper limit on gain/scale rounds; 0 only evaluates the initial gain.
    tol : float
        Stop once a full round improves gamma by less than this fraction.
    """
    if initial is None:
        initial = synthesize_hinf(box, pi2, noise, grid_density, disk_radius)
    models = _cell_models(box, pi2, noise, cells)
    grid = box.grid(grid_density)
    data = _grid_data(grid, pi2, noise)
    nq = [c.Dpq.shape[0] for c in models]
    offs = np.concatenate([[0], np.cumsum(nq)])

    def d_lmi(L, gamma):
        def fn(v):
            P = _unpack_p(v[:N_P])
            Y = P @ L
            out = [-P] + _disk_blocks(data, P, Y, disk_radius)
            for k, c in enumerate(models):
                X = v[N_P + offs[k] : N_P + offs[k + 1]]
                out += [_rp_matrix(c, P, Y, X, gamma), -np.diag(X)]
            return out

        return affine_from_callable(fn, N_P + int(offs[-1]))

    def k_lmi(Xs, gamma):
        def fn(v):
            P = _unpack_p(v[:N_P])
            Y = v[N_P:].reshape(_N, _N)
            out = [-P] + _disk_blocks(data, P, Y, disk_radius)
            out += [_rp_matrix(c, P, Y, X, gamma) for c, X in zip(models, Xs)]
            return out

        return affine_from_callable(fn, N_P + _N * _N)

    # iterate 0: robust level of the initial gain
    L = initial.L
    lo = initial.gamma_lo or initial.gamma / 2
    hi = 2.0 * initial.gamma
    while True:
        r = solve_feasibility(d_lmi(L, hi))
        if r.feasible:
            break
        if hi >= GAMMA_HI:
            raise SynthesisInfeasible(f"initial gain has no robust certificate up to gamma={GAMMA_HI}")
        lo, hi = hi, min(4.0 * hi, GAMMA_HI)
    gamma, v = _bisect_down(lambda g: d_lmi(L, g), hi, r.x, lo, rel_gap)
    P = _unpack_p(v[:N_P])
    Xs = [v[N_P + offs[k] : N_P + offs[k + 1]].copy() for k in range(len(models))]
    history = [gamma]
    steps = [("initial", gamma)]
    log.info("dk iterate 0 (initial gain): gamma=%.6g", gamma)

    for rnd in range(max_rounds):
        start = gamma
        # gain step: warm start from the current (P, P L)
        x0 = np.concatenate([_pack_p(P), (P @ L).ravel()])
        g_k, v = _bisect_down(lambda g: k_lmi(Xs, g), gamma, x0, gamma / 2, rel_gap)
        P_k = _unpack_p(v[:N_P])
        L_k = np.linalg.solve(P_k, v[N_P:].reshape(_N, _N))
        if g_k < gamma:
            gamma, P, L = g_k, P_k, L_k
        history.append(gamma)
        steps.append(("gain", gamma))
        # scale step
        x0 = np.concatenate([_pack_p(P)] + Xs)
        g_d, v = _bisect_down(lambda g: d_lmi(L, g), gamma, x0, gamma / 2, rel_gap)
        if g_d < gamma:
            gamma = g_d
            P = _unpack_p(v[:N_P])
            Xs = [v[N_P + offs[k] : N_P + offs[k + 1]].copy() for k in range(len(models))]
        history.append(gamma)
        steps.append(("scale", gamma))
        log.info("dk round %d: gamma=%.6g", rnd + 1, gamma)
        if start - gamma <= tol * start:
            break

    scales = {
        "cells": [
            {
                "box": c.box.to_dict(),
                "structure": [list(b) for b in c.structure],
                "scales": {lab: X[o : o + n].tolist() for (lab, n), o in zip(c.structure, np.cumsum([0] + [n for _, n in c.structure]))},
            }
            for c, X in zip(models, Xs)
        ],
        "steps": steps,
    }
    out = ObserverGain(L, gamma, P, grid, "dk-scaled", box, pi2, disk_radius, None, history, scales)
    return out
