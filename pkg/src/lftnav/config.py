"""Run configuration: JSON with unit-suffixed keys, strictly validated.

Angles are in arcsec, ranges in km, times in normalized time units
(``_tu``). Unknown keys are rejected so typos never pass silently.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from importlib import resources

from .box import ParameterBox
from .cr3bp import constants_from
from .sensing import NoiseSpec
from .synthesis import config_hash

__all__ = ["ConfigError", "RunConfig", "load_config", "default_config_dict", "parse_config"]


class ConfigError(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


_SCHEMA = {
    "constants": {"m1_kg": float, "m2_kg": float, "G_m3_per_kg_s2": float, "r12_km": float, "pi2": float},
    "initial_state": list,
    "initial_estimate": list,
    "box": {"sigma_min": float, "sigma_max": float, "psi_min": float, "psi_max": float},
    "noise": {
        "enabled": bool,
        "eta_min_arcsec": float,
        "eta_max_arcsec": float,
        "range_err_min_km": float,
        "range_err_max_km": float,
        "process_bound": float,
        "band_limit_rad_per_tu": (float, str),
        "hold_dt_tu": float,
        "weight_model": str,
        "weight_box": dict,
    },
    "synthesis": {
        "method": str,
        "grid_density": int,
        "disk_radius": (float, type(None)),
        "dk_cells": int,
        "certify_samples": int,
    },
    "simulation": {"t_end_tu": float, "sample_dt_tu": float, "rho_schedule": str, "n_runs": int},
    "seed": int,
}

_REQUIRED_SECTIONS = ("constants", "initial_state", "initial_estimate", "box", "noise")


def default_config_dict() -> dict:
    text = resources.files("lftnav").joinpath("data/scenario.json").read_text()
    return json.loads(text)


def _check_type(key, value, typ):
    types = typ if isinstance(typ, tuple) else (typ,)
    if float in types and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(key, f"expected {typ}, got bool")
    if not isinstance(value, types):
        raise ConfigError(key, f"expected {' or '.join(t.__name__ for t in types)}, got {type(value).__name__}")
    return value


def _validate(doc: dict) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    out = {}
    for key, value in doc.items():
        if key not in _SCHEMA:
            raise ConfigError(key, "unknown key")
        spec = _SCHEMA[key]
        if isinstance(spec, dict):
            if not isinstance(value, dict):
                raise ConfigError(key, "expected an object")
            sec = {}
            for sub, v in value.items():
                if sub not in spec:
                    raise ConfigError(f"{key}.{sub}", "unknown key")
                sec[sub] = _check_type(f"{key}.{sub}", v, spec[sub])
            out[key] = sec
        else:
            out[key] = _check_type(key, value, spec)
    for key in _REQUIRED_SECTIONS:
        if key not in out:
            raise ConfigError(key, "missing")
    return out


@dataclass(frozen=True)
class RunConfig:
    pi2: float
    r12_km: float
    x0: tuple
    xhat0: tuple
    box: ParameterBox
    noise: NoiseSpec
    method: str
    grid_density: int
    disk_radius: float | None
    dk_cells: int
    certify_samples: int
    t_end: float
    sample_dt: float
    rho_schedule: str
    n_runs: int
    seed: int
    raw: dict

    def design_hash(self) -> str:
        """Hash of the parsed values the gain depends on.

        Simulation-only settings (range errors, noise band, seed, horizon,
        certification sample count) are excluded.
        """
        nz = self.noise
        payload = {
            "pi2": self.pi2,
            "box": self.box.to_dict(),
            "noise": {
                "eta": [nz.eta_min, nz.eta_max],
                "process_bound": nz.process_bound,
                "weight_box": nz.weight_box.to_dict(),
                "weight_model": nz.weight_model,
                "quad_alpha": None if nz.quad_alpha is None else list(nz.quad_alpha),
            },
            "synthesis": {
                "method": self.method,
                "grid_density": self.grid_density,
                "disk_radius": self.disk_radius,
                "dk_cells": self.dk_cells if self.method == "dk" else None,
            },
        }
        return config_hash(payload)


def _state(key, v):
    if len(v) != 4 or not all(isinstance(a, (int, float)) and not isinstance(a, bool) for a in v):
        raise ConfigError(key, "expected four numbers")
    return tuple(float(a) for a in v)


def parse_config(doc: dict) -> RunConfig:
    raw = _validate(copy.deepcopy(doc))
    c = raw["constants"]
    try:
        if "pi2" in c:
            extra = set(c) - {"pi2", "r12_km"}
            if extra:
                raise ConfigError(f"constants.{sorted(extra)[0]}", "give either pi2 or the masses, not both")
            pi2 = c["pi2"]
            if not 0 < pi2 <= 0.5:
                raise ConfigError("constants.pi2", "must lie in (0, 0.5]")
            r12_km = c.get("r12_km", 384400.0)
        else:
            for k in ("m1_kg", "m2_kg", "G_m3_per_kg_s2", "r12_km"):
                if k not in c:
                    raise ConfigError(f"constants.{k}", "missing")
            consts = constants_from(c["m1_kg"], c["m2_kg"], c["G_m3_per_kg_s2"], c["r12_km"] * 1e3)
            pi2, r12_km = consts.pi2, c["r12_km"]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("constants", str(exc)) from exc

    b = raw["box"]
    for k in ("sigma_min", "sigma_max", "psi_min", "psi_max"):
        if k not in b:
            raise ConfigError(f"box.{k}", "missing")
    try:
        box = ParameterBox(**b)
    except ValueError as exc:
        raise ConfigError("box", str(exc)) from exc

    n = raw["noise"]
    need = ("eta_min_arcsec", "eta_max_arcsec", "range_err_min_km", "range_err_max_km", "process_bound")
    for k in need:
        if k not in n:
            raise ConfigError(f"noise.{k}", "missing")
    band = n.get("band_limit_rad_per_tu", "white")
    if isinstance(band, str):
        if band != "white":
            raise ConfigError("noise.band_limit_rad_per_tu", "a number or \"white\"")
        band = None
    wbox = box
    if "weight_box" in n:
        try:
            wbox = ParameterBox(**n["weight_box"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("noise.weight_box", str(exc)) from exc
    elif box.degenerate:
        raise ConfigError("noise.weight_box", "required when the box is a single point")
    try:
        noise = NoiseSpec.from_units(
            n["eta_min_arcsec"],
            n["eta_max_arcsec"],
            n["range_err_min_km"],
            n["range_err_max_km"],
            r12_km,
            n["process_bound"],
            wbox,
            band_limit=band,
            hold_dt=n.get("hold_dt_tu", 1e-3),
            weight_model=n.get("weight_model", "linear"),
            enabled=n.get("enabled", True),
        )
    except ValueError as exc:
        raise ConfigError("noise", str(exc)) from exc

    s = raw.get("synthesis", {})
    method = s.get("method", "hinf")
    if method not in ("hinf", "dk"):
        raise ConfigError("synthesis.method", "must be \"hinf\" or \"dk\"")
    grid = s.get("grid_density", 3)
    if grid < 2 and not box.degenerate:
        raise ConfigError("synthesis.grid_density", "must be at least 2")
    disk = s.get("disk_radius", 100.0)
    if disk is not None and not disk > 0:
        raise ConfigError("synthesis.disk_radius", "must be positive or null")
    cells = s.get("dk_cells", 2)
    if cells < 1:
        raise ConfigError("synthesis.dk_cells", "must be at least 1")
    samples = s.get("certify_samples", 10000)
    if samples < 0:
        raise ConfigError("synthesis.certify_samples", "must be nonnegative")

    sim = raw.get("simulation", {})
    t_end = sim.get("t_end_tu", 2 * math.pi)
    if not t_end > 0:
        raise ConfigError("simulation.t_end_tu", "must be positive")
    sample_dt = sim.get("sample_dt_tu", 0.01)
    ratio = sample_dt / noise.hold_dt
    if not sample_dt > 0 or abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ConfigError("simulation.sample_dt_tu", "must be a positive multiple of noise.hold_dt_tu")
    sched = sim.get("rho_schedule", "measured-held")
    if sched not in ("continuous-true", "measured-held"):
        raise ConfigError("simulation.rho_schedule", "must be \"continuous-true\" or \"measured-held\"")
    n_runs = sim.get("n_runs", 1)
    if n_runs < 1:
        raise ConfigError("simulation.n_runs", "must be at least 1")
    seed = raw.get("seed", 0)
    if seed < 0:
        raise ConfigError("seed", "must be nonnegative")

    return RunConfig(
        pi2=pi2,
        r12_km=r12_km,
        x0=_state("initial_state", raw["initial_state"]),
        xhat0=_state("initial_estimate", raw["initial_estimate"]),
        box=box,
        noise=noise,
        method=method,
        grid_density=grid,
        disk_radius=disk,
        dk_cells=cells,
        certify_samples=samples,
        t_end=t_end,
        sample_dt=sample_dt,
        rho_schedule=sched,
        n_runs=n_runs,
        seed=seed,
        raw=raw,
    )


def load_config(path) -> RunConfig:
    """Read and validate a config file; ``ConfigError`` names the offending key."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError("<file>", f"cannot read {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
    return parse_config(doc)
