"""Figure rendering for episodes, feasibility sweeps and perception.

All functions write PNG files into an output directory and return the
written paths.  Rendering is headless and byte-stable: the Agg backend
is forced and the PNG metadata that would otherwise embed the writer
version is stripped, so re-running a command reproduces identical
files.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .controller import lyapunov_rate
from .feasible import _region_mask, sample_fitted_region
from .geometry import landmark_world_pose, object_corners
from .perception import camera_plan_transform

__all__ = [
    "plot_trajectory",
    "plot_feasible",
    "plot_lyapunov",
    "plot_perception",
]

_SAVE_KW = {"dpi": 120, "metadata": {"Software": None}}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def _sample_arrays(result):
    cols = {}
    s = result.samples
    cols["t"] = np.array([p.t for p in s])
    cols["x"] = np.array([p.pose.x for p in s])
    cols["y"] = np.array([p.pose.y for p in s])
    cols["rho"] = np.array([p.state.rho for p in s])
    cols["alpha"] = np.array([p.state.alpha for p in s])
    cols["phi"] = np.array([p.state.phi for p in s])
    cols["astar"] = np.array([p.alpha_star for p in s])
    cols["v_cmd"] = np.array([p.v_cmd for p in s])
    cols["w_cmd"] = np.array([p.w_cmd for p in s])
    cols["v_act"] = np.array([p.v_act for p in s])
    cols["w_act"] = np.array([p.w_act for p in s])
    return cols


def plot_trajectory(result, config, out_dir, stem: str = "trajectory") -> list:
    """Render plan view, polar states and velocities for an episode."""
    out_dir = Path(out_dir)
    cols = _sample_arrays(result)
    paths = []

    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    corners = object_corners(config.object)
    # perimeter order: front-left, front-right, rear-right, rear-left
    poly = [corners[0], corners[1], corners[3], corners[2], corners[0]]
    ax.plot([p[0] for p in poly], [p[1] for p in poly], "k-", lw=1.5, label="object")
    cpose = landmark_world_pose(config.object, config.landmark)
    ax.plot(config.object.center.x, config.object.center.y, "ks", ms=5)
    ax.plot(cpose.x, cpose.y, "r*", ms=10, label="landmark")
    ax.plot(
        [config.object.center.x, cpose.x],
        [config.object.center.y, cpose.y],
        "r--",
        lw=0.8,
    )
    ax.plot(cols["x"], cols["y"], "b-", lw=1.2, label="path")
    ax.plot(cols["x"][0], cols["y"][0], "g^", ms=8, label="start")
    ax.plot(cols["x"][-1], cols["y"][-1], "bv", ms=8, label="end")
    th0 = result.samples[0].pose.theta
    cam_x = cols["x"][0] + config.camera.l * math.cos(th0)
    cam_y = cols["y"][0] + config.camera.l * math.sin(th0)
    ray = max(0.5 * cols["rho"][0], 0.2)
    for sign in (-1.0, 1.0):
        a = th0 + sign * config.camera.alpha_bar
        ax.plot(
            [cam_x, cam_x + ray * math.cos(a)],
            [cam_y, cam_y + ray * math.sin(a)],
            "g:",
            lw=0.8,
        )
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"plan view ({result.outcome.value})")
    ax.axis("equal")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    paths.append(_save(fig, out_dir / f"{stem}_plan.png"))

    fig, axes = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    axes[0].plot(cols["t"], cols["rho"], "b-")
    axes[0].set_ylabel("rho [m]")
    axes[0].grid(True, alpha=0.3)
    axes[1].plot(cols["t"], cols["alpha"], label="alpha")
    axes[1].plot(cols["t"], cols["phi"], label="phi")
    axes[1].plot(cols["t"], cols["astar"], label="alpha*")
    for sign in (-1.0, 1.0):
        axes[1].axhline(sign * config.camera.alpha_bar, color="r", ls=":", lw=0.8)
    axes[1].set_xlabel("t [s]")
    axes[1].set_ylabel("angle [rad]")
    axes[1].grid(True, alpha=0.3)
    axes[1].legend(loc="best", fontsize=8)
    fig.tight_layout()
    paths.append(_save(fig, out_dir / f"{stem}_states.png"))

    fig, axes = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    axes[0].plot(cols["t"], cols["v_cmd"], "b--", label="commanded")
    axes[0].plot(cols["t"], cols["v_act"], "b-", lw=0.9, label="realized")
    axes[0].set_ylabel("v [m/s]")
    axes[0].grid(True, alpha=0.3)
    axes[0].legend(loc="best", fontsize=8)
    axes[1].plot(cols["t"], cols["w_cmd"], "g--", label="commanded")
    axes[1].plot(cols["t"], cols["w_act"], "g-", lw=0.9, label="realized")
    axes[1].set_xlabel("t [s]")
    axes[1].set_ylabel("w [rad/s]")
    axes[1].grid(True, alpha=0.3)
    axes[1].legend(loc="best", fontsize=8)
    fig.tight_layout()
    paths.append(_save(fig, out_dir / f"{stem}_velocities.png"))
    return paths


def plot_feasible(labels, cam, lm, fit=None, out_dir=".",
                  stem: str = "feasible") -> list:
    """Render phi-slice maps of the sweep labels, optionally with the
    fitted region boundary overlaid."""
    out_dir = Path(out_dir)
    labels = tuple(labels)
    rho = np.array([lb.rho for lb in labels])
    alpha = np.array([lb.alpha for lb in labels])
    phi = np.array([lb.phi for lb in labels])
    feas = np.array([lb.feasible for lb in labels], dtype=bool)

    phis = np.unique(phi)
    n_slices = min(9, len(phis))
    idx = np.unique(np.linspace(0, len(phis) - 1, n_slices).round().astype(int))
    n = len(idx)
    ncols = 3 if n > 4 else 2 if n > 1 else 1
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(3.2 * ncols, 2.9 * nrows),
        sharex=True, sharey=True, squeeze=False,
    )
    rr = np.linspace(rho.min(), rho.max(), 120)
    aa = np.linspace(alpha.min(), alpha.max(), 120)
    rg, ag = np.meshgrid(rr, aa)
    for k, ax in enumerate(axes.ravel()):
        if k >= n:
            ax.set_axis_off()
            continue
        pv = phis[idx[k]]
        sel = np.isclose(phi, pv)
        good = sel & feas
        bad = sel & ~feas
        ax.plot(rho[good], alpha[good], "g.", ms=3, label="feasible")
        ax.plot(rho[bad], alpha[bad], "x", color="0.75", ms=3, label="infeasible")
        if fit is not None:
            mask = _region_mask(rg, ag, np.full_like(rg, pv), fit, cam, lm)
            ax.contour(rg, ag, mask.astype(float), levels=[0.5],
                       colors="b", linewidths=1.0)
        ax.set_title(f"phi = {pv:.3f} rad", fontsize=9)
        ax.grid(True, alpha=0.3)
    for ax in axes[-1]:
        ax.set_xlabel("rho [m]")
    for row in axes:
        row[0].set_ylabel("alpha [rad]")
    fig.tight_layout()
    return [_save(fig, out_dir / f"{stem}_slices.png")]


def plot_lyapunov(fit, config, out_dir, stem: str = "lyapunov",
                  n: int = 20000, seed: int = 0) -> list:
    """Render a histogram of closed-loop Lyapunov rates sampled inside
    the fitted region."""
    out_dir = Path(out_dir)
    states = sample_fitted_region(
        fit, n, config.camera, config.landmark, seed=seed
    )
    rates = np.array(
        [lyapunov_rate(s, config.gains, config.camera, config.landmark)
         for s in states]
    )
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.hist(rates, bins=80, color="steelblue")
    ax.axvline(0.0, color="r", lw=1.0)
    ax.set_yscale("log")
    ax.set_xlabel("dV/dt")
    ax.set_ylabel("count")
    ax.set_title(f"max rate {rates.max():.3e} over {n} samples")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return [_save(fig, out_dir / f"{stem}_rates.png")]


def plot_perception(pipeline, cam, out_dir, stem: str = "perception") -> list:
    """Render the clustered camera view and the plan-frame estimate."""
    out_dir = Path(out_dir)
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(11.0, 5.0))

    down = pipeline.downsampled.xyz
    if len(down):
        ax0.plot(down[:, 0], down[:, 2], ".", color="0.85", ms=2, label="downsampled")
    for i, cluster in enumerate(pipeline.clusters):
        pts = cluster.xyz
        ax0.plot(pts[:, 0], pts[:, 2], ".", ms=3, label=f"cluster {i}")
    ax0.set_xlabel("camera x [m]")
    ax0.set_ylabel("camera z [m]")
    ax0.set_title("clusters (top view)")
    ax0.axis("equal")
    ax0.grid(True, alpha=0.3)
    ax0.legend(loc="best", fontsize=8)

    to_robot = camera_plan_transform(cam)
    tg = math.tan(cam.gamma)
    cg = math.cos(cam.gamma)

    def plan(points):
        if not len(points):
            return np.empty((0, 2))
        t = (points[:, 1] + points[:, 2] * tg) / (1.0 + tg * tg)
        u = points[:, 0]
        v = (points[:, 2] - tg * t) / cg
        return np.stack(
            [np.array(to_robot.apply(ui, vi)) for ui, vi in zip(u, v)]
        )

    bot = plan(pipeline.bottom.xyz)
    back = plan(pipeline.back.xyz)
    if len(bot):
        ax1.plot(bot[:, 0], bot[:, 1], ".", color="tab:blue", ms=3, label="bottom")
    if len(back):
        ax1.plot(back[:, 0], back[:, 1], ".", color="tab:orange", ms=3, label="back")
    est = pipeline.estimate
    dx, dy = est.objective_xy
    cx, cy = est.landmark_xy
    ax1.plot(dx, dy, "ks", ms=8, label="objective")
    ax1.plot(cx, cy, "r*", ms=12, label="landmark")
    arrow = 0.3
    ax1.annotate(
        "",
        xy=(cx + arrow * math.cos(est.landmark_heading),
            cy + arrow * math.sin(est.landmark_heading)),
        xytext=(cx, cy),
        arrowprops={"arrowstyle": "->", "color": "r"},
    )
    ax1.plot(0.0, 0.0, "b^", ms=8, label="robot")
    ax1.set_xlabel("robot x [m]")
    ax1.set_ylabel("robot y [m]")
    ax1.set_title("plan frame estimate")
    ax1.axis("equal")
    ax1.grid(True, alpha=0.3)
    ax1.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return [_save(fig, out_dir / f"{stem}.png")]
