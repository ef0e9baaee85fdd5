"""Command line interface.

Subcommands
-----------
run       simulate one docking episode and write the trajectory
sweep     label a grid of initial states by full episodes
fit       fit the feasible-region inequalities to sweep labels
verify    sample the Lyapunov rate inside a fitted region
perceive  run the landmark pipeline on a point cloud
config    resolve and print a configuration

Every artifact-producing command writes a manifest.json describing the
inputs and outputs; nothing in the outputs depends on wall-clock time,
so re-running a command reproduces the files byte for byte.

Exit codes: 0 success/converged, 1 verification reported a violation,
2 bad usage or configuration, 3 other docking errors, and for episode
outcomes 10 fov_violation, 11 timeout, 12 dead_zone_stall, 13 fault.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    DockingConfig,
    config_hash,
    dump_config,
    load_config,
    parse_angle,
    preset_names,
)
from .errors import ConfigError, DockingError
from .estimation import measurement_vector, polar_from_estimate
from .feasible import (
    BoundaryFit,
    StateGrid,
    fit_boundary,
    read_labels_csv,
    sweep,
    verify_lyapunov,
    write_labels_csv,
)
from .geometry import PolarState, robot_pose_from_polar
from .perception import PerceptionParams, run_pipeline, synth_chair_cloud
from .simulator import EpisodeOutcome, run_episode, write_trajectory_csv

_OUTCOME_CODES = {
    EpisodeOutcome.CONVERGED: 0,
    EpisodeOutcome.FOV_VIOLATION: 10,
    EpisodeOutcome.TIMEOUT: 11,
    EpisodeOutcome.DEAD_ZONE_STALL: 12,
    EpisodeOutcome.FAULT: 13,
}


def _angle(text):
    return parse_angle(text)


def _out_dir(args) -> Path:
    out = args.out if args.out is not None else os.environ.get("DOCKSIM_OUT", "out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    args.out_dir = path
    return path


def _write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_manifest(out: Path, command: str, config, parameters, artifacts,
                    seed=None) -> None:
    data = {
        "command": command,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config_hash": config_hash(config) if config is not None else None,
        "seed": seed,
        "parameters": parameters,
        "artifacts": sorted(p.name for p in artifacts),
    }
    _write_json(out / "manifest.json", data)


def _load(args) -> DockingConfig:
    return load_config(args.config)


def _start_state(args) -> PolarState:
    return PolarState(args.rho, args.alpha, args.phi)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default="case1",
                   help="config file path or preset name (default: case1)")
    p.add_argument("--out", default=None,
                   help="output directory (default: $DOCKSIM_OUT or ./out)")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")


def _add_start(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho", type=float, default=1.5,
                   help="initial range to the landmark [m] (default: 1.5)")
    p.add_argument("--alpha", type=_angle, default=0.0,
                   help="initial landmark angle, radians or e.g. 15deg (default: 0)")
    p.add_argument("--phi", type=_angle, default=0.0,
                   help="initial dock-line angle, radians or e.g. -10deg (default: 0)")


def cmd_run(args) -> int:
    out = _out_dir(args)
    config = _load(args)
    if args.rho <= 0.0:
        raise ConfigError("--rho must be > 0", field="rho")
    state = _start_state(args)
    seed = args.seed if args.seed is not None else config.seed
    result = run_episode(
        state,
        config,
        actuator=None if args.ideal else config.actuator,
        estimation=config.estimation if args.estimator else None,
        seed=seed,
        dt=args.dt,
        t_max=args.t_max,
    )
    artifacts = []
    traj = out / "trajectory.csv"
    write_trajectory_csv(result, traj)
    artifacts.append(traj)
    cfg_path = out / "config.yaml"
    cfg_path.write_text(dump_config(config), encoding="utf-8")
    artifacts.append(cfg_path)
    if not args.no_plots:
        from .report import plot_trajectory

        artifacts.extend(plot_trajectory(result, config, out))
    final = result.final
    _write_manifest(
        out, "run", config,
        {
            "rho": args.rho, "alpha": args.alpha, "phi": args.phi,
            "ideal": bool(args.ideal), "estimator": bool(args.estimator),
            "dt": args.dt, "t_max": args.t_max,
        },
        artifacts, seed=seed,
    )
    print(
        f"outcome: {result.outcome.value} at t={final.t:.2f} s, "
        f"final rho={final.state.rho:.4f} m, "
        f"max |alpha*|={result.max_abs_bearing:.4f} rad"
    )
    for p in artifacts:
        print(f"wrote {p}")
    return _OUTCOME_CODES[result.outcome]


def cmd_sweep(args) -> int:
    out = _out_dir(args)
    config = _load(args)
    if args.rho_max <= 0.0:
        raise ConfigError("--rho-max must be > 0", field="rho_max")
    if args.n < 1:
        raise ConfigError("--n must be >= 1", field="n")
    third = math.pi / 3.0
    grid = StateGrid(
        rho=(args.rho_max / args.n, args.rho_max, args.n),
        alpha=(-third, third, args.n),
        phi=(-third, third, args.n),
    )
    total = len(grid)
    tick = max(total // 10, 1)

    def progress(done, total_):
        if done % tick == 0 or done == total_:
            print(f"swept {done}/{total_} states")

    labels = sweep(
        config, grid,
        actuator=config.actuator if args.actuator == "config" else None,
        progress=progress if not args.quiet else None,
    )
    artifacts = []
    csv_path = out / "feasible.csv"
    write_labels_csv(labels, csv_path)
    artifacts.append(csv_path)
    if not args.no_plots:
        from .report import plot_feasible

        artifacts.extend(plot_feasible(labels, config.camera, config.landmark,
                                       out_dir=out))
    n_feas = sum(lb.feasible for lb in labels)
    _write_manifest(
        out, "sweep", config,
        {"n": args.n, "rho_max": args.rho_max, "actuator": args.actuator},
        artifacts, seed=config.seed,
    )
    print(f"feasible: {n_feas}/{total} grid states")
    for p in artifacts:
        print(f"wrote {p}")
    return 0


def cmd_fit(args) -> int:
    out = _out_dir(args)
    config = _load(args)
    labels = read_labels_csv(args.labels)
    fit = fit_boundary(labels, config.camera, config.landmark,
                       gains=config.gains)
    inside = [
        lb for lb in labels
        if bool(_fit_mask(lb, fit, config))
    ]
    covered = sum(lb.feasible for lb in inside)
    artifacts = [_write_json(out / "fit.json", asdict(fit))]
    if not args.no_plots:
        from .report import plot_feasible

        artifacts.extend(
            plot_feasible(labels, config.camera, config.landmark, fit=fit,
                          out_dir=out, stem="fit")
        )
    _write_manifest(out, "fit", config, {"labels": str(args.labels)}, artifacts)
    print(
        f"fit: k4={fit.k4:.4g} k5={fit.k5:.4g} k6={fit.k6:.4g} k7={fit.k7:.4g} "
        f"rho in [{fit.rho_min:.4g}, {fit.rho_max:.4g}]"
    )
    print(f"covers {covered} feasible states, 0 infeasible inside")
    for p in artifacts:
        print(f"wrote {p}")
    return 0


def _fit_mask(lb, fit, config):
    from .feasible import _region_mask

    return _region_mask(lb.rho, lb.alpha, lb.phi, fit, config.camera,
                        config.landmark)


def cmd_verify(args) -> int:
    out = _out_dir(args)
    config = _load(args)
    fit_data = json.loads(Path(args.fit).read_text(encoding="utf-8"))
    try:
        fit = BoundaryFit(**fit_data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad fit file {args.fit}: {exc}") from None
    seed = args.seed if args.seed is not None else config.seed
    report = verify_lyapunov(fit, config, n_samples=args.n_samples, seed=seed)
    artifacts = [
        _write_json(
            out / "verify.json",
            {
                "n_drawn": report.n_drawn,
                "n_inside": report.n_inside,
                "n_positive": report.n_positive,
                "max_rate": report.max_rate,
                "worst": list(report.worst) if report.worst else None,
                "tol": report.tol,
                "passed": report.passed,
            },
        )
    ]
    if not args.no_plots:
        from .report import plot_lyapunov

        artifacts.extend(plot_lyapunov(fit, config, out, seed=seed))
    _write_manifest(
        out, "verify", config,
        {"fit": str(args.fit), "n_samples": args.n_samples},
        artifacts, seed=seed,
    )
    status = "passed" if report.passed else "FAILED"
    print(
        f"verify {status}: max rate {report.max_rate:.3e} over "
        f"{report.n_inside} in-region samples ({report.n_positive} positive)"
    )
    for p in artifacts:
        print(f"wrote {p}")
    return 0 if report.passed else 1


def cmd_perceive(args) -> int:
    out = _out_dir(args)
    config = _load(args)
    artifacts = []
    if args.cloud is not None:
        from .cloud_io import read_cloud

        cloud = read_cloud(args.cloud)
        seed = config.seed
    else:
        if args.rho <= 0.0:
            raise ConfigError("--rho must be > 0", field="rho")
        seed = args.seed if args.seed is not None else config.seed
        robot = robot_pose_from_polar(
            _start_state(args), config.object, config.camera, config.landmark
        )
        cloud = synth_chair_cloud(
            config.object, robot, config.camera,
            noise_sigma=args.noise, seed=seed,
        )
        from .cloud_io import write_xyz

        cloud_path = out / "cloud.xyz"
        write_xyz(cloud, cloud_path)
        artifacts.append(cloud_path)
    params = PerceptionParams()
    pipeline = run_pipeline(cloud, params, config.camera, config.landmark)
    est = pipeline.estimate
    polar = polar_from_estimate(measurement_vector(est), config.landmark)
    artifacts.append(
        _write_json(
            out / "estimate.json",
            {
                "objective_xy": list(est.objective_xy),
                "landmark_xy": list(est.landmark_xy),
                "landmark_heading": est.landmark_heading,
                "polar": {"rho": polar.rho, "alpha": polar.alpha,
                          "phi": polar.phi},
            },
        )
    )
    if args.save_stages:
        from .cloud_io import write_xyz

        for name, c in (("downsampled", pipeline.downsampled),
                        ("bottom", pipeline.bottom), ("back", pipeline.back)):
            p = out / f"{name}.xyz"
            write_xyz(c, p)
            artifacts.append(p)
    if not args.no_plots:
        from .report import plot_perception

        artifacts.extend(plot_perception(pipeline, config.camera, out))
    _write_manifest(
        out, "perceive", config,
        {
            "cloud": str(args.cloud) if args.cloud else None,
            "noise": args.noise, "rho": args.rho, "alpha": args.alpha,
            "phi": args.phi, "save_stages": bool(args.save_stages),
        },
        artifacts, seed=seed,
    )
    print(
        f"estimate: objective ({est.objective_xy[0]:.4f}, {est.objective_xy[1]:.4f}), "
        f"landmark ({est.landmark_xy[0]:.4f}, {est.landmark_xy[1]:.4f}), "
        f"rho={polar.rho:.4f} alpha={polar.alpha:.4f} phi={polar.phi:.4f}"
    )
    for p in artifacts:
        print(f"wrote {p}")
    return 0


def cmd_config(args) -> int:
    if args.list:
        for name in preset_names():
            print(name)
        return 0
    config = _load(args)
    sys.stdout.write(dump_config(config))
    print(f"# sha256: {config_hash(config)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="docksim",
        description="Field-of-view constrained docking: simulate, sweep, "
                    "fit, verify and perceive.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one docking episode")
    _add_common(p)
    _add_start(p)
    p.add_argument("--seed", type=int, default=None, help="estimator noise seed")
    p.add_argument("--ideal", action="store_true",
                   help="ignore the actuator dead zone and limits")
    p.add_argument("--estimator", action="store_true",
                   help="close the loop on the noisy landmark estimator")
    p.add_argument("--dt", type=float, default=None, help="integration step [s]")
    p.add_argument("--t-max", type=float, default=None, help="time budget [s]")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="label a grid of initial states")
    _add_common(p)
    p.add_argument("--n", type=int, default=21, help="grid points per axis")
    p.add_argument("--rho-max", type=float, default=2.0,
                   help="largest initial range [m]")
    p.add_argument("--actuator", choices=("ideal", "config"), default="ideal",
                   help="actuator used for labelling (default: ideal)")
    p.add_argument("--quiet", action="store_true", help="suppress progress lines")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit region inequalities to sweep labels")
    _add_common(p)
    p.add_argument("--labels", required=True, help="feasible.csv from sweep")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("verify", help="sample the Lyapunov rate in a fitted region")
    _add_common(p)
    p.add_argument("--fit", required=True, help="fit.json from fit")
    p.add_argument("--n-samples", type=int, default=100000,
                   help="in-region samples to evaluate")
    p.add_argument("--seed", type=int, default=None, help="sampler seed")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("perceive", help="estimate the landmark from a cloud")
    _add_common(p)
    _add_start(p)
    p.add_argument("--cloud", default=None,
                   help=".xyz or .ply cloud; omit to synthesize one")
    p.add_argument("--noise", type=float, default=0.005,
                   help="synthetic cloud noise sigma [m]")
    p.add_argument("--seed", type=int, default=None, help="synthesis seed")
    p.add_argument("--save-stages", action="store_true",
                   help="also write intermediate clouds")
    p.set_defaults(func=cmd_perceive)

    p = sub.add_parser("config", help="resolve and print a configuration")
    p.add_argument("--config", default="case1",
                   help="config file path or preset name (default: case1)")
    p.add_argument("--list", action="store_true", help="list preset names")
    p.set_defaults(func=cmd_config)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _maybe_error_json(args, exc, 2)
        return 2
    except DockingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _maybe_error_json(args, exc, 3)
        return 3


def _maybe_error_json(args, exc, code) -> None:
    out = getattr(args, "out_dir", None)
    if out is None:
        return
    _write_json(
        Path(out) / "error.json",
        {"error": type(exc).__name__, "message": str(exc), "exit_code": code},
    )


if __name__ == "__main__":
    sys.exit(main())
