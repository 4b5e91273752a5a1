"""Command line driver.

Commands
--------
simulate {euclidean|polar|radial|h2|lift}   write trajectory CSVs + manifest
develop                                      develop a flat-space path onto a metric
lift-roughpath                               lift a rescaled path to (X, XX) CSV
verify {interpolation|ergodic|density|escape|angle|h2|chen|moments|develop-law}
                                             run one statistical check

Exit codes: 0 pass, 1 usage/config error, 2 statistical failure,
3 numerical failure.
"""

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from ..errors import ConfigError, KbmLabError, NumericalError, DomainExitError
from ..sde_core import NoiseStream, StepScheme
from ..kbm import (
    PolarState,
    RadialState,
    group_lift_initial,
    simulate_euclidean_ensemble,
    simulate_group_lift_ensemble,
    simulate_hyperbolic_plane,
    simulate_polar_ensemble,
    simulate_radial_ensemble,
    rescale_interpolation,
)
from ..cartan import develop as cartan_develop, radial_frame
from ..roughpath import lift_level2
from .config import RunManifest, SimConfig, load_config_file
from .checks import VERIFY_CHECKS

PATH_BLOCK = 256


def _build_parser():
    p = argparse.ArgumentParser(prog="kbmlab", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", help="config file (key = value lines or JSON)")
    p.add_argument("--sigma", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--metric", dest="metric_family")
    p.add_argument("--beta", dest="metric_beta", type=float)
    p.add_argument("--c", dest="metric_c", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--scheme")
    p.add_argument("--stride", dest="record_stride", type=int)
    p.add_argument("--out", dest="out_dir")
    p.add_argument("--threads", type=int)
    sub = p.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="run an ensemble and write CSVs")
    sim.add_argument("system", choices=["euclidean", "polar", "radial", "h2", "lift"])
    sub.add_parser("develop", help="develop a flat-space path onto the metric")
    lift = sub.add_parser("lift-roughpath", help="lift a rescaled path to level 2")
    lift.add_argument("--grid", type=int, default=1000)
    ver = sub.add_parser("verify", help="run one statistical check")
    ver.add_argument("check", choices=sorted(VERIFY_CHECKS))
    return p


def _resolve_config(args):
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    for f in fields(SimConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return SimConfig(**values)


def _default_initial(system, cfg):
    d = cfg.dim
    e1 = np.zeros(d)
    e1[0] = 1.0
    e2 = np.zeros(d)
    e2[1] = 1.0
    if system == "polar":
        return PolarState(r=10.0, rdot=0.0, theta=e1, v=e2)
    if system == "radial":
        return RadialState(r=10.0, rdot=0.0)
    if system == "lift":
        return group_lift_initial(10.0, 0.0, e1, e2)
    return None


def _run_blocks(runner, paths, threads):
    offsets = list(range(0, paths, PATH_BLOCK))
    if threads <= 1 or len(offsets) == 1:
        return [runner(off, min(PATH_BLOCK, paths - off)) for off in offsets]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futs = [pool.submit(runner, off, min(PATH_BLOCK, paths - off)) for off in offsets]
        return [f.result() for f in futs]


def _cmd_simulate(system, cfg):
    if cfg.seed is None:
        cfg.seed = 0
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=cfg.snapshot(), command=f"simulate {system}")
    scheme = StepScheme(kind=cfg.scheme, dt=cfg.dt)
    initial = _default_initial(system, cfg)

    def block(off, nb):
        if system == "euclidean":
            return simulate_euclidean_ensemble(
                cfg.dim, cfg.sigma, cfg.horizon, scheme, cfg.seed, nb,
                record_stride=cfg.record_stride, path_offset=off)
        if system == "polar":
            return simulate_polar_ensemble(
                cfg.metric(), cfg.dim, cfg.sigma, cfg.horizon, scheme, cfg.seed, nb,
                initial, record_stride=cfg.record_stride, path_offset=off)
        if system == "radial":
            return simulate_radial_ensemble(
                cfg.metric(), cfg.dim, cfg.sigma, cfg.horizon, scheme, cfg.seed, nb,
                initial, record_stride=cfg.record_stride, path_offset=off)
        if system == "lift":
            return simulate_group_lift_ensemble(
                cfg.metric(), cfg.dim, cfg.sigma, cfg.horizon, scheme, cfg.seed, nb,
                initial, record_stride=cfg.record_stride, path_offset=off)
        raise ConfigError(f"unknown system '{system}'")

    if system == "h2":
        ensembles = []
        for k in range(cfg.paths):
            traj = simulate_hyperbolic_plane(
                cfg.sigma, cfg.horizon, scheme, NoiseStream(cfg.seed, k),
                record_stride=cfg.record_stride)
            path = out_dir / f"trajectory_{k}.csv"
            traj.to_csv(path)
            manifest.add_file(path)
    else:
        ensembles = _run_blocks(block, cfg.paths, cfg.threads)
        k = 0
        for ens in ensembles:
            for i in range(ens.n_paths):
                path = out_dir / f"trajectory_{k}.csv"
                ens.trajectory(i).to_csv(path)
                manifest.add_file(path)
                k += 1
    manifest.results.append({"check": f"simulate {system}", "paths": cfg.paths, "pass": True})
    mpath = manifest.finish(out_dir)
    manifest.verify_files(out_dir)
    print(f"wrote {cfg.paths} trajectories and {mpath}")
    return 0


def _cmd_develop(cfg):
    if cfg.seed is None:
        cfg.seed = 0
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=cfg.snapshot(), command="develop")
    scheme = StepScheme(kind=cfg.scheme, dt=cfg.dt)
    metric = cfg.metric()
    ens = simulate_euclidean_ensemble(cfg.dim, cfg.sigma, cfg.horizon, scheme, cfg.seed, 1)
    d = cfg.dim
    theta0 = np.zeros(d)
    theta0[0] = 1.0
    frame0 = radial_frame(metric, 10.0, theta0)
    dev = cartan_develop(metric, frame0, ens.x[0], t=ens.t, record_frames=True)
    base = out_dir / "developed.csv"
    hdr = ["t", "r"] + [f"theta_{i + 1}" for i in range(d)]
    data = np.column_stack([dev.t, dev.r[0]] + [dev.theta[0, :, i] for i in range(d)])
    np.savetxt(base, data, delimiter=",", header=",".join(hdr), comments="", fmt="%.17g")
    manifest.add_file(base)
    fr = out_dir / "frames.csv"
    cols = [dev.t]
    names = ["t"]
    for i in range(d):
        cols.append(dev.frames_a[0, :, i])
        names.append(f"e{i + 1}_r")
        for k in range(d):
            cols.append(dev.frames_w[0, :, k, i])
            names.append(f"e{i + 1}_s{k + 1}")
    np.savetxt(fr, np.column_stack(cols), delimiter=",", header=",".join(names),
               comments="", fmt="%.17g")
    manifest.add_file(fr)
    manifest.results.append({"check": "develop", "pass": True,
                             "max_speed_defect": dev.max_speed_defect})
    manifest.finish(out_dir)
    print(f"developed path onto '{metric.tag}'; wrote {base} and {fr}")
    return 0


def _cmd_lift(cfg, grid):
    if cfg.seed is None:
        cfg.seed = 0
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=cfg.snapshot(), command="lift-roughpath")
    scheme = StepScheme(kind=cfg.scheme, dt=cfg.dt)
    horizon = max(cfg.horizon, cfg.sigma**2)
    n_steps = int(round(horizon / cfg.dt))
    stride = max(n_steps // grid, 1)
    ens = simulate_euclidean_ensemble(
        cfg.dim, cfg.sigma, horizon, scheme, cfg.seed, 1, record_stride=stride)
    traj = rescale_interpolation(ens.trajectory(0), cfg.sigma)
    x = traj.stack([f"x_{i + 1}" for i in range(cfg.dim)])
    lift = lift_level2(x, t=traj.t)
    path = out_dir / "roughpath.csv"
    names = ["t"] + [f"X_{i + 1}" for i in range(cfg.dim)] + [
        f"XX_{i + 1}{j + 1}" for i in range(cfg.dim) for j in range(cfg.dim)
    ]
    data = np.column_stack([lift.t, lift.X, lift.XX.reshape(len(lift), -1)])
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.17g")
    manifest.add_file(path)
    manifest.results.append({"check": "lift-roughpath", "pass": True})
    manifest.finish(out_dir)
    print(f"wrote level-2 lift to {path}")
    return 0


def _strip_arrays(obj):
    if isinstance(obj, dict):
        return {k: _strip_arrays(v) for k, v in obj.items() if not isinstance(v, np.ndarray)
                and not hasattr(v, "columns")}
    if isinstance(obj, (list, tuple)):
        return [_strip_arrays(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _cmd_verify(check_name, cfg):
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=cfg.snapshot(), command=f"verify {check_name}")
    fn = VERIFY_CHECKS[check_name]
    report = fn() if cfg.seed is None else fn(seed=cfg.seed)
    clean = _strip_arrays(report)
    rpath = out_dir / "report.json"
    rpath.write_text(json.dumps(clean, indent=2, sort_keys=True) + "\n")
    manifest.add_file(rpath)
    if "terminals" in report:
        csv = out_dir / "terminals.csv"
        np.savetxt(csv, report["terminals"], delimiter=",",
                   header=",".join(f"x_{i + 1}" for i in range(report["terminals"].shape[1])),
                   comments="", fmt="%.17g")
        manifest.add_file(csv)
    if "trajectory" in report:
        csv = out_dir / "trajectory_0.csv"
        report["trajectory"].to_csv(csv)
        manifest.add_file(csv)
    manifest.results.append(clean)
    manifest.finish(out_dir)
    status = "PASS" if report["pass"] else "FAIL"
    for part in report["parts"]:
        mark = "ok " if part["pass"] else "FAIL"
        print(f"  [{mark}] {part['statistic']}: value={part['value']:.6g}"
              f" target={part['target']} tol={part['tolerance']}")
    print(f"verify {check_name}: {status} (report: {rpath})")
    return 0 if report["pass"] else 2


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        command = args.command
        if command == "simulate":
            cfg.validate(args.system)
            return _cmd_simulate(args.system, cfg)
        if command == "develop":
            cfg.validate("develop")
            return _cmd_develop(cfg)
        if command == "lift-roughpath":
            cfg.validate()
            return _cmd_lift(cfg, args.grid)
        if command == "verify":
            cfg.validate()
            return _cmd_verify(args.check, cfg)
        raise ConfigError(f"unknown command '{command}'")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, DomainExitError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except KbmLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
