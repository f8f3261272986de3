"""Command-line front end.

Subcommands: ``synthesize``, ``simulate``, ``validate``, ``lagrange``.
Exit codes: 0 success, 2 configuration error, 3 missing gain artifact,
4 certification failure (including infeasible synthesis and a gain that
does not match the configuration).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, RunConfig, default_config_dict, load_config, parse_config
from .cr3bp import lagrange_points, write_trajectory_csv
from .runtime import IntegrationFailure, SimConfig, metrics, run_batch, run_closed_loop, write_result_csv
from .sensing import write_measurement_csv
from .synthesis import SynthesisInfeasible, certify, dk_iterate, read_gain, synthesize_hinf, write_gain

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_CERT = 4

log = logging.getLogger("lftnav")

TRAJECTORY_PLOT = '''"""Truth and estimated trajectories in the rotating frame."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "result.csv"
with open(path) as fh:
    rows = list(csv.DictReader(fh))
col = lambda k: [float(r[k]) for r in rows]  # noqa: E731
fig, ax = plt.subplots(figsize=(6, 6))
ax.plot(col("x"), col("y"), label="truth")
ax.plot(col("x_hat"), col("y_hat"), "--", label="estimate")
ax.plot([-{pi2!r}, 1 - {pi2!r}], [0, 0], "ko")
ax.set_xlabel("x (normalized)")
ax.set_ylabel("y (normalized)")
ax.set_aspect("equal")
ax.legend()
fig.savefig("trajectory.png", dpi=150)
'''

ERROR_PLOT = '''"""Position estimation error against time."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "result.csv"
with open(path) as fh:
    rows = list(csv.DictReader(fh))
col = lambda k: [float(r[k]) for r in rows]  # noqa: E731
fig, ax = plt.subplots(figsize=(7, 4))
ax.semilogy(col("t"), col("z_err_norm"))
ax.set_xlabel("t (normalized)")
ax.set_ylabel("|z_err| (normalized)")
fig.savefig("errors.png", dpi=150)
'''


def _config(args) -> RunConfig:
    if args.config is None:
        cfg = parse_config(default_config_dict())
    else:
        cfg = load_config(args.config)
    over = {}
    if getattr(args, "method", None):
        over["method"] = args.method
    if getattr(args, "grid", None) is not None:
        if args.grid < 2 and not cfg.box.degenerate:
            raise ConfigError("--grid", "must be at least 2")
        over["grid_density"] = args.grid
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise ConfigError("--seed", "must be nonnegative")
        over["seed"] = args.seed
    return replace(cfg, **over) if over else cfg


def _out_dir(args) -> Path:
    p = Path(args.out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _load_gain(path):
    if path is None or not os.path.exists(path):
        raise FileNotFoundError(path)
    return read_gain(path)


def cmd_synthesize(args) -> int:
    cfg = _config(args)
    out = _out_dir(args)
    try:
        if cfg.method == "dk":
            gain = dk_iterate(cfg.box, cfg.pi2, cfg.noise, cells=cfg.dk_cells, grid_density=cfg.grid_density, disk_radius=cfg.disk_radius)
        else:
            gain = synthesize_hinf(cfg.box, cfg.pi2, cfg.noise, cfg.grid_density, cfg.disk_radius)
    except SynthesisInfeasible as exc:
        print(f"synthesis infeasible: {exc}", file=sys.stderr)
        return EXIT_CERT
    gain.config_hash = cfg.design_hash()
    write_gain(out / "gain.json", gain)
    report = certify(gain, cfg.noise, n_samples=cfg.certify_samples, seed=cfg.seed)
    doc = report.to_dict()
    doc.update(method=gain.method, gamma_history=gain.gamma_history, grid=gain.grid.tolist(), L=gain.L.tolist())
    _write_json(out / "certification.json", doc)
    print(f"method={gain.method} gamma={gain.gamma:.6g} grid={len(gain.grid)} points")
    print(f"grid BRL max eigenvalue: {max(report.grid_max_eig):.3e} ({'ok' if report.grid_ok else 'FAIL'})")
    print(f"random samples: {report.n_pass}/{report.n_samples} pass ({100 * report.pass_rate:.2f}%)")
    if report.brl_gaps:
        print(f"note: common P misses the BRL at {len(report.brl_gaps)} samples; a finer --grid removes this")
    if not report.ok():
        for rho, why, val in report.failures[:10]:
            print(f"  violation at rho={rho}: {why} ({val:.6g}); refine the grid", file=sys.stderr)
        return EXIT_CERT
    return EXIT_OK


def _check_artifact(cfg: RunConfig, gain) -> str | None:
    if gain.config_hash != cfg.design_hash():
        return "gain artifact was synthesized for a different configuration (hash mismatch)"
    if gain.box != cfg.box:
        return "gain artifact box differs from the configured box"
    return None


def cmd_simulate(args) -> int:
    cfg = _config(args)
    try:
        gain = _load_gain(args.gain)
    except FileNotFoundError:
        print(f"gain artifact not found: {args.gain}", file=sys.stderr)
        return EXIT_MISSING
    problem = _check_artifact(cfg, gain)
    if problem:
        print(problem, file=sys.stderr)
        return EXIT_CERT
    out = _out_dir(args)
    sim = SimConfig(
        cfg.pi2, cfg.x0, cfg.xhat0, cfg.box, cfg.noise, gain, cfg.t_end, cfg.sample_dt, cfg.rho_schedule, cfg.seed
    )
    try:
        res = run_closed_loop(sim)
    except IntegrationFailure as exc:
        print(f"integration failed at t={exc.t}: {exc}", file=sys.stderr)
        return EXIT_CERT
    write_result_csv(out / "result.csv", res)
    write_trajectory_csv(out / "trajectory.csv", res.t, res.truth, cfg.pi2)
    write_measurement_csv(out / "measurements.csv", res.t, res.y_m, res.rho_hat)
    summary = {"seed": cfg.seed, "rho_schedule": cfg.rho_schedule, "gamma": gain.gamma, "method": gain.method}
    summary.update(metrics(res))
    if cfg.n_runs > 1:
        batch = run_batch(sim, cfg.n_runs, base_seed=cfg.seed)
        summary["batch"] = batch
        summary["batch_positive_correlation"] = sum(m["corr_range"] > 0 for m in batch)
    _write_json(out / "summary.json", summary)
    (out / "plot_trajectory.py").write_text(TRAJECTORY_PLOT.format(pi2=cfg.pi2))
    (out / "plot_errors.py").write_text(ERROR_PLOT)
    st = summary["settling_time"]
    print(f"rms={summary['rms_error']:.4e} max={summary['max_error']:.4e} settling={st} corr={summary['corr_range']:.3f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _config(args)
    try:
        gain = _load_gain(args.gain)
    except FileNotFoundError:
        print(f"gain artifact not found: {args.gain}", file=sys.stderr)
        return EXIT_MISSING
    n = cfg.certify_samples
    report = certify(gain, cfg.noise, n_samples=n, seed=cfg.seed, box=cfg.box)
    hurwitz_fail = [f for f in report.failures if f[1] == "not Hurwitz"]
    norm_fail = [f for f in report.failures if f[1] != "not Hurwitz"]
    rows = [
        ("grid BRL negative definite", report.grid_ok, f"max eig {max(report.grid_max_eig):.3e}"),
        ("Hurwitz at random rho", not hurwitz_fail, f"{n - len(hurwitz_fail)}/{n}"),
        ("frequency norm <= gamma", not norm_fail, f"{n - len(report.failures)}/{n}, worst ratio {report.worst_ratio:.4g}"),
    ]
    gaps = report.brl_gaps
    gap_detail = f"{n - len(gaps)}/{n}" + (f", worst max eig {max(v for _, v in gaps):.3e} (refine grid)" if gaps else "")
    rows.append(("grid P satisfies BRL at random rho", None if gaps else True, gap_detail))
    width = max(len(r[0]) for r in rows)
    for name, ok, detail in rows:
        mark = "WARN" if ok is None else ("PASS" if ok else "FAIL")
        print(f"{name:<{width}}  {mark}  {detail}")
    if args.out_dir:
        _write_json(_out_dir(args) / "validation.json", report.to_dict())
    if report.failures or not report.grid_ok:
        for rho, why, val in report.failures[:20]:
            print(f"  violating rho=({rho[0]:.6g}, {rho[1]:.6g}): {why} ({val:.6g})", file=sys.stderr)
        return EXIT_CERT
    return EXIT_OK


def cmd_lagrange(args) -> int:
    cfg = _config(args)
    print(f"pi2 = {cfg.pi2!r}")
    for name, (x, y) in lagrange_points(cfg.pi2).items():
        print(f"{name}: x = {x:.12f}  y = {y:.12f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lftnav", description="Robust LFT observer for bearing-only cislunar navigation")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, gain=False, out=True):
        sp.add_argument("--config", help="JSON run configuration (default: built-in scenario)")
        if gain:
            sp.add_argument("--gain", required=True, help="gain artifact (JSON)")
        if out:
            sp.add_argument("--out-dir", default="out", help="output directory")
        sp.add_argument("--seed", type=int, help="override the configured seed")

    sp = sub.add_parser("synthesize", help="design and certify an observer gain")
    common(sp)
    sp.add_argument("--method", choices=("hinf", "dk"))
    sp.add_argument("--grid", type=int, help="grid points per axis")
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("simulate", help="run the closed-loop scenario")
    common(sp, gain=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("validate", help="re-check a gain on dense random samples")
    common(sp, gain=True, out=False)
    sp.add_argument("--out-dir", default=None, help="also write validation.json here")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("lagrange", help="print the equilibrium points")
    common(sp, out=False)
    sp.set_defaults(func=cmd_lagrange)
    return p


def main(argv=None) -> int:
    level = os.environ.get("NAV_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
