"""Batch front end: config files, run registry, verification suites, and
parameter sweeps with plots.

Config files are TOML.  Every run gets a directory runs/<id>/ under the
output root (--out, else $TORUS_STAB_OUT, else ./runs), where <id> is a
content hash of the fully-defaulted config, so identical configs map to
identical run ids and reruns refuse to overwrite without --force.

Artifacts per run: manifest.json (written atomically at run end),
energy.csv (t, E, D, residual at full precision), snapshots.bin (binary
layout documented in SNAPSHOT_MAGIC/write_snapshots below).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import datetime
import hashlib
import json
import math
import os
import struct
import sys
from pathlib import Path

import numpy as np
import tomli

from . import __version__
from .analysis import fit_decay, observability_quotient
from .carleman import (
    SpaceTimeWeight,
    build_psi,
    combined_ratio,
    conjugation_sides,
    elliptic_ratio,
    find_positivity_threshold,
    transport_ratio,
)
from .errors import ConfigError, DivergenceError, TorusStabError, WeightBoundError
from .operators import (
    ModelParams,
    b_apply,
    b_star_apply,
    bump_profile,
    multiply,
)
from .spectral import (
    Field,
    SobolevIndex,
    hs_inner,
    hs_norm_sq,
    make_grid,
    random_field,
)
from .timestepper import RHS_SELECTORS, SimConfig, simulate, simulate_custom, stable_dt

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_VERIFY = 4

SNAPSHOT_MAGIC = b"TSSNAP01"  # 8 bytes, followed by: u32 version, u32 n,
# u64 count, count * f64 times, count * n * f64 values; all little-endian.
SNAPSHOT_VERSION = 1

VERIFY_SUITES = (
    "adjoint",
    "identity",
    "carleman-elliptic",
    "carleman-transport",
    "carleman-combined",
)

_CONFIG_DEFAULTS = {
    "simulation": {
        "n": 256,
        "t_final": 5.0,
        "dt": 0.0,  # 0 means auto (CFL)
        "cfl": 2.5,
        "stride": 10,
        "rhs": "closed_loop",
        "seed": 0,
    },
    "params": {
        "a": 1.0,
        "a1": 1.0,
        "b": 1.0,
        "b1": 1.0,
        "gamma": 7.0 / 48.0,
        "sigma": {"center": math.pi, "width": math.pi, "amplitude": 1.0},
    },
    "initial": {
        "kind": "random",
        "decay": 0.8,
        "kmax": 0,  # 0 means n/2 - 1
        "center": math.pi,
        "width": 2.0,
        "amplitude": 1.0,
        "mode": 3,
        "normalize_h2": 0.0,  # 0 means no normalization
    },
    "weight": {"eta": math.pi / 2.0, "delta": 0.1, "rho": 0.9},
    "sweep": {
        "amplitudes": [0.0, 0.5, 1.0, 2.0],
        "seeds": [0],
        "t_final": 30.0,
        "rhs": "linear_closed_loop",
    },
}


def _merge_defaults(defaults, given, path=""):
    out = {}
    for key, dval in defaults.items():
        if key in given:
            gval = given[key]
            if isinstance(dval, dict):
                if not isinstance(gval, dict):
                    raise ConfigError(f"config field {path}{key} must be a table")
                out[key] = _merge_defaults(dval, gval, f"{path}{key}.")
            else:
                out[key] = gval
        else:
            out[key] = dval
    for key in given:
        if key not in defaults:
            raise ConfigError(f"unknown config field {path}{key}")
    return out


def load_config(path) -> dict:
    """Parse and fully default a TOML config; unknown fields are errors."""
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}")
    if "t_final" not in raw.get("simulation", {}):
        raise ConfigError("missing required field simulation.t_final")
    cfg = _merge_defaults(_CONFIG_DEFAULTS, raw)
    sim = cfg["simulation"]
    if sim["t_final"] <= 0:
        raise ConfigError("simulation.t_final must be positive")
    if sim["rhs"] not in RHS_SELECTORS:
        raise ConfigError(
            f"simulation.rhs must be one of {RHS_SELECTORS}, got {sim['rhs']!r}"
        )
    return cfg


def run_id(cfg: dict) -> str:
    """Stable content hash of the fully-defaulted config."""
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def build_initial(cfg: dict, grid, seed=None) -> Field:
    ini = cfg["initial"]
    sim = cfg["simulation"]
    p = cfg["params"]
    kind = ini["kind"]
    if kind == "random":
        rng = np.random.default_rng(sim["seed"] if seed is None else seed)
        kmax = ini["kmax"] if ini["kmax"] > 0 else None
        u0 = random_field(grid, rng, decay=ini["decay"], kmax=kmax)
    elif kind == "bump":
        u0 = bump_profile(grid, ini["center"], ini["width"], ini["amplitude"])
    elif kind == "cosine":
        u0 = Field.from_function(
            grid, lambda x: ini["amplitude"] * np.cos(ini["mode"] * x)
        )
    else:
        raise ConfigError(f"initial.kind must be random|bump|cosine, got {kind!r}")
    if ini["normalize_h2"] > 0:
        idx = SobolevIndex(2.0, p["b"], p["b1"])
        nrm = math.sqrt(hs_norm_sq(u0, idx))
        if nrm == 0:
            raise ConfigError("cannot normalize a zero initial condition")
        u0 = (ini["normalize_h2"] / nrm) * u0
    return u0


def build_params(cfg: dict, grid, amplitude=None) -> ModelParams:
    p = cfg["params"]
    sg = p["sigma"]
    amp = sg["amplitude"] if amplitude is None else amplitude
    sigma = bump_profile(grid, sg["center"], sg["width"], amp)
    return ModelParams(a=p["a"], a1=p["a1"], b=p["b"], b1=p["b1"],
                       gamma=p["gamma"], sigma=sigma)


def build_sim_config(cfg: dict, seed=None, amplitude=None) -> SimConfig:
    sim = cfg["simulation"]
    grid = make_grid(sim["n"])
    params = build_params(cfg, grid, amplitude=amplitude)
    u0 = build_initial(cfg, grid, seed=seed)
    return SimConfig(
        n=sim["n"],
        params=params,
        u0=u0,
        t_final=sim["t_final"],
        dt=sim["dt"] if sim["dt"] > 0 else None,
        cfl=sim["cfl"],
        stride=sim["stride"],
        rhs=sim["rhs"],
    )


# -------------------------------------------------------------------------
# Artifact IO
# -------------------------------------------------------------------------

def write_snapshots(path, times, snapshots):
    n = snapshots[0].grid.n
    count = len(snapshots)
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<II", SNAPSHOT_VERSION, n))
        fh.write(struct.pack("<Q", count))
        np.asarray(times, dtype="<f8").tofile(fh)
        for snap in snapshots:
            snap.values.astype("<f8").tofile(fh)


def read_snapshots(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != SNAPSHOT_MAGIC:
            raise ConfigError(f"{path}: not a snapshot file (bad magic)")
        version, n = struct.unpack("<II", fh.read(8))
        if version != SNAPSHOT_VERSION:
            raise ConfigError(f"{path}: unsupported snapshot version {version}")
        (count,) = struct.unpack("<Q", fh.read(8))
        times = np.fromfile(fh, dtype="<f8", count=count)
        vals = np.fromfile(fh, dtype="<f8", count=count * n).reshape(count, n)
    return times, vals


def write_energy_csv(path, record):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "E", "D", "residual"])
        for i in range(len(record.times)):
            writer.writerow([
                f"{record.times[i]:.17g}",
                f"{record.E[i]:.17g}",
                f"{record.D[i]:.17g}",
                f"{record.residual[i]:.17g}",
            ])


def read_energy_csv(path):
    data = np.genfromtxt(path, delimiter=",", names=True)
    return data["t"], data["E"], data["D"], data["residual"]


def write_manifest(run_dir: Path, manifest: dict):
    """Atomic write: temp file in the same directory, then rename."""
    tmp = run_dir / "manifest.json.tmp"
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, run_dir / "manifest.json")


def output_root(args) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get("TORUS_STAB_OUT")
    if env:
        return Path(env)
    return Path("runs")


# -------------------------------------------------------------------------
# simulate
# -------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["simulation"]["seed"] = args.seed
    rid = run_id(cfg)
    root = output_root(args)
    run_dir = root / rid
    if (run_dir / "manifest.json").exists() and not args.force:
        print(f"run {rid} already exists at {run_dir}; use --force to redo",
              file=sys.stderr)
        return EXIT_CONFIG
    run_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    sim_cfg = build_sim_config(cfg)
    manifest = {
        "run_id": rid,
        "config": cfg,
        "version": __version__,
        "started": started,
        "status": "incomplete",
        "artifacts": {"energy": "energy.csv", "snapshots": "snapshots.bin"},
        "metrics": {},
    }
    try:
        record = simulate(sim_cfg)
    except DivergenceError as exc:
        manifest["status"] = "diverged"
        manifest["error"] = str(exc)
        manifest["ended"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        write_manifest(run_dir, manifest)
        print(f"run {rid} diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    write_energy_csv(run_dir / "energy.csv", record)
    write_snapshots(run_dir / "snapshots.bin", record.snapshot_times, record.snapshots)
    metrics = {
        "E0": record.E[0],
        "E_final": record.E[-1],
        "max_residual": float(np.max(record.residual)),
        "steps": len(record.times) - 1,
        "dt": record.times[1] - record.times[0],
    }
    if cfg["simulation"]["rhs"] in ("closed_loop", "linear_closed_loop"):
        metrics["beta"] = fit_decay(record).beta
        theta = observability_quotient(record, record.times[-1])
        # inf (vanishing damping integral) is not valid JSON; flag with null
        metrics["theta"] = theta if math.isfinite(theta) else None
    manifest["metrics"] = metrics
    manifest["status"] = "complete"
    manifest["ended"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    write_manifest(run_dir, manifest)
    print(f"run {rid} complete: E0={record.E[0]:.6g} "
          f"E(T)={record.E[-1]:.6g} max residual={np.max(record.residual):.3g}")
    return EXIT_OK


# -------------------------------------------------------------------------
# verify
# -------------------------------------------------------------------------

def _bump_window(x, center, half_width):
    y = (x - center) / half_width
    out = np.zeros_like(x)
    inside = np.abs(y) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - y[inside] ** 2))
    return out


def _suite_adjoint(cfg, rng):
    grid = make_grid(cfg["simulation"]["n"])
    params = build_params(cfg, grid)
    rows, ok = [], True
    worst = 0.0
    for s in (2.0, 3.0, 4.0):
        idx = SobolevIndex(s, params.b, params.b1)
        for _ in range(100):
            f = random_field(grid, rng)
            g = random_field(grid, rng)
            lhs = hs_inner(b_apply(f, params), g, idx)
            rhs = hs_inner(f, b_star_apply(g, s, params), idx)
            scale = max(abs(lhs), abs(rhs), 1e-300)
            worst = max(worst, abs(lhs - rhs) / scale)
    rows.append(("adjoint_max_rel_defect", worst, 1e-10, worst <= 1e-10))
    f = random_field(grid, rng)
    d = (b_star_apply(f, 2.0, params) - multiply(params.sigma, f)).linf()
    rows.append(("b_star2_vs_sigma_product", d, 1e-12, d <= 1e-12))
    ok = all(r[3] for r in rows)
    return rows, ok


def _suite_identity(cfg, rng):
    w = build_psi(cfg["weight"]["eta"], cfg["weight"]["delta"])
    grid = make_grid(4096)
    rows = []
    worst = 0.0
    centers = np.linspace(1.2, 4.8, 5)
    for c in centers:
        base = random_field(grid, rng, decay=0.3, kmax=40)
        u = Field(grid, values=_bump_window(grid.nodes, c, 0.5) * base.values)
        for s in (5.0, 10.0, 20.0):
            lhs, rhs = conjugation_sides(u, w, s)
            worst = max(worst, abs(lhs - rhs) / abs(lhs))
    rows.append(("conjugation_identity_max_rel", worst, 1e-8, worst <= 1e-8))
    return rows, all(r[3] for r in rows)


def _suite_carleman_elliptic(cfg, rng):
    w = build_psi(cfg["weight"]["eta"], cfg["weight"]["delta"])
    grid = make_grid(cfg["simulation"]["n"])
    eta = cfg["weight"]["eta"]
    omega = Field(grid, values=(
        (grid.nodes < eta) | (grid.nodes > 2 * np.pi - eta)).astype(float))
    s0, K, K1 = find_positivity_threshold(w)
    rows = [("s0", s0, None, s0 >= 1.0), ("K", K, None, K > 0), ("K1", K1, None, True)]
    worst = 0.0
    for s in np.linspace(s0, 4 * s0, 4):
        for _ in range(5):
            q = elliptic_ratio(random_field(grid, rng), w, s, omega)
            worst = max(worst, q)
    rows.append(("elliptic_max_quotient", worst, None, math.isfinite(worst)))
    return rows, all(r[3] for r in rows)


def _suite_carleman_transport(cfg, rng):
    wc = cfg["weight"]
    w = build_psi(wc["eta"], wc["delta"])
    grid = make_grid(cfg["simulation"]["n"])
    params = build_params(cfg, grid)
    rho = wc["rho"]
    T = 1.1 * (2 * np.pi + wc["delta"]) * params.b / (rho * params.a)
    stw = SpaceTimeWeight(weight=w, rho=rho, a=params.a, b=params.b, t_final=T)
    eta = wc["eta"]
    omega = Field(grid, values=(
        (grid.nodes < eta) | (grid.nodes > 2 * np.pi - eta)).astype(float))
    f0 = random_field(grid, rng, decay=0.8)
    times = np.linspace(0.0, T, 201)
    speed = params.a / params.b
    fields = [Field(grid, coeffs=f0.coeffs * np.exp(-1j * grid.wavenumbers * speed * t))
              for t in times]
    worst = 0.0
    for s in (1.0, 2.0, 4.0):
        worst = max(worst, transport_ratio((times, fields), stw, s, omega))
    rows = [("transport_max_quotient", worst, None, math.isfinite(worst))]
    return rows, all(r[3] for r in rows)


def _suite_carleman_combined(cfg, rng):
    wc = cfg["weight"]
    w = build_psi(wc["eta"], wc["delta"])
    grid = make_grid(cfg["simulation"]["n"])
    params = build_params(cfg, grid)
    rho = wc["rho"]
    T = 1.1 * (2 * np.pi + wc["delta"]) * params.b / (rho * params.a)
    stw = SpaceTimeWeight(weight=w, rho=rho, a=params.a, b=params.b, t_final=T)
    eta = wc["eta"]
    omega = Field(grid, values=(
        (grid.nodes < eta) | (grid.nodes > 2 * np.pi - eta)).astype(float))
    u0 = random_field(grid, rng, decay=0.8)
    dt = 0.5 * stable_dt(grid, params)
    from .model import closed_loop_rhs

    times, snaps = simulate_custom(
        u0, T, dt, lambda u: closed_loop_rhs(u, params), stride=10)
    worst = 0.0
    for s in (1.0, 2.0):
        worst = max(worst, combined_ratio((times, snaps), stw, s, omega, params))
    rows = [("combined_max_quotient", worst, None, math.isfinite(worst))]
    return rows, all(r[3] for r in rows)


_SUITE_FUNCS = {
    "adjoint": _suite_adjoint,
    "identity": _suite_identity,
    "carleman-elliptic": _suite_carleman_elliptic,
    "carleman-transport": _suite_carleman_transport,
    "carleman-combined": _suite_carleman_combined,
}


def cmd_verify(args) -> int:
    if args.suite not in VERIFY_SUITES:
        print(f"unknown suite {args.suite!r}; choose from {VERIFY_SUITES}",
              file=sys.stderr)
        return EXIT_CONFIG
    cfg = (load_config(args.config) if args.config
           else _merge_defaults(_CONFIG_DEFAULTS, {}))
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    root = output_root(args)
    root.mkdir(parents=True, exist_ok=True)
    try:
        rows, ok = _SUITE_FUNCS[args.suite](cfg, rng)
    except WeightBoundError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    report = root / f"verify-{args.suite}.csv"
    with open(report, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["check", "value", "tolerance", "pass"])
        for name, value, tol, passed in rows:
            writer.writerow([name, f"{value:.17g}",
                             "" if tol is None else f"{tol:g}",
                             "pass" if passed else "FAIL"])
    for name, value, tol, passed in rows:
        status = "pass" if passed else "FAIL"
        bound = "" if tol is None else f" (tol {tol:g})"
        print(f"{status}: {name} = {value:.6g}{bound}")
    print(f"report written to {report}")
    return EXIT_OK if ok else EXIT_VERIFY


# -------------------------------------------------------------------------
# sweep
# -------------------------------------------------------------------------

def _sweep_point(cfg, amplitude, seed):
    """One grid point: simulate the configured flow, fit the decay rate and
    the observability quotient.  Top-level so worker processes can call it."""
    sw = cfg["sweep"]
    sim = dict(cfg["simulation"])
    sim["t_final"] = sw["t_final"]
    sim["rhs"] = sw["rhs"]
    point_cfg = dict(cfg)
    point_cfg["simulation"] = sim
    sim_cfg = build_sim_config(point_cfg, seed=seed, amplitude=amplitude)
    try:
        record = simulate(sim_cfg)
    except DivergenceError as exc:
        return {"amplitude": amplitude, "seed": seed, "status": "diverged",
                "error": str(exc)}
    fit = fit_decay(record)
    theta = observability_quotient(record, record.times[-1])
    return {
        "amplitude": amplitude,
        "seed": seed,
        "status": "undamped" if amplitude == 0.0 else "ok",
        "beta": fit.beta,
        "fit_residual": fit.residual,
        "theta": theta,
        "E0": record.E[0],
        "E_final": record.E[-1],
        "times": record.times,
        "E": record.E,
    }


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    sw = cfg["sweep"]
    points = [(amp, seed) for amp in sw["amplitudes"] for seed in sw["seeds"]]
    root = output_root(args)
    root.mkdir(parents=True, exist_ok=True)
    workers = max(1, args.workers)
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, [cfg] * len(points),
                                    [p[0] for p in points], [p[1] for p in points]))
    else:
        results = [_sweep_point(cfg, amp, seed) for amp, seed in points]

    agg = root / "sweep.csv"
    with open(agg, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["amplitude", "seed", "status", "beta", "theta"])
        for r in results:
            writer.writerow([
                r["amplitude"], r["seed"], r["status"],
                f"{r.get('beta', float('nan')):.17g}",
                f"{r.get('theta', float('nan')):.17g}",
            ])
    _sweep_plots(root, results)
    n_div = sum(1 for r in results if r["status"] == "diverged")
    for r in results:
        if r["status"] == "diverged":
            print(f"amplitude={r['amplitude']} seed={r['seed']} DIVERGED: "
                  f"{r['error']}", file=sys.stderr)
        else:
            print(f"amplitude={r['amplitude']} seed={r['seed']} "
                  f"beta={r['beta']:.4g} theta={r['theta']:.4g} [{r['status']}]")
    print(f"aggregate written to {agg}")
    return EXIT_DIVERGENCE if n_div else EXIT_OK


def _sweep_plots(root: Path, results):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for r in results:
        if r["status"] == "diverged":
            continue
        ax.semilogy(r["times"], r["E"],
                    label=f"amp={r['amplitude']} seed={r['seed']}")
    ax.set_xlabel("t")
    ax.set_ylabel("E(t)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(root / "energy.svg")
    plt.close(fig)

    by_amp = {}
    for r in results:
        if "beta" in r:
            by_amp.setdefault(r["amplitude"], []).append(r["beta"])
    if by_amp:
        amps = sorted(by_amp)
        betas = [float(np.mean(by_amp[a])) for a in amps]
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(amps, betas, "o-")
        ax.set_xlabel("sigma amplitude")
        ax.set_ylabel("fitted beta")
        fig.tight_layout()
        fig.savefig(root / "beta_vs_amplitude.svg")
        plt.close(fig)


# -------------------------------------------------------------------------
# entry point
# -------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="torus-stab",
        description="Pseudospectral simulator and verification suite for the "
                    "damped fifth-order KdV-BBM equation on the torus.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one simulation from a config")
    p_sim.add_argument("--config", required=True)
    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("suite", choices=VERIFY_SUITES)
    p_ver.add_argument("--config")
    p_swp = sub.add_parser("sweep", help="run a parameter sweep from a config")
    p_swp.add_argument("--config", required=True)
    for p in (p_sim, p_ver, p_swp):
        p.add_argument("--out", default=None)
        p.add_argument("--force", action="store_true")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seed", type=int, default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "verify":
            return cmd_verify(args)
        return cmd_sweep(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except TorusStabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
