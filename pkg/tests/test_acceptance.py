"""Acceptance suite: nine end-to-end checks at fixed tolerances.

Each test prints one [criterion N] PASS line with its headline numbers;
a failed assert identifies the criterion by test name.  Criteria 3-6
share one sweep+fit pipeline per preset, built once per module.
"""

import filecmp
import json
import math
import subprocess
import sys
import time
from collections import namedtuple

import numpy as np
import pytest

import docksim as d

ABAR = math.radians(40.0)
FIG_BAND_MEAN = math.radians(12.9)
FIG_BAND_STD = math.radians(6.7)

_S = namedtuple("_S", "rho alpha phi")


@pytest.fixture(scope="module")
def pipelines(case1, case2):
    """Sweep labels and fitted boundary for both presets, timed."""
    out = {}
    t0 = time.perf_counter()
    for name, cfg in (("case1", case1), ("case2", case2)):
        labels = d.sweep(cfg)
        fit = d.fit_boundary(labels, cfg.camera, cfg.landmark, gains=cfg.gains)
        out[name] = (cfg, labels, fit)
    out["elapsed"] = time.perf_counter() - t0
    return out


def _random_scene(rng):
    cam = d.CameraSpec(
        l=rng.uniform(0.05, 0.5),
        alpha_bar=rng.uniform(0.3, 1.2),
        gamma=rng.uniform(-0.5, 0.5),
        z_a=rng.uniform(0.3, 1.0),
    )
    lm = d.LandmarkSpec(
        r=rng.uniform(0.2, 2.0), beta=rng.uniform(-1.0, 1.0), lam=rng.uniform(-4, 4)
    )
    k1 = rng.uniform(0.05, 0.5)
    gains = d.Gains(k1, k1 + rng.uniform(0.05, 1.0), rng.uniform(0.05, 3.0))
    return cam, lm, gains


def test_criterion_1_gain_synthesis(case1, case2):
    t0 = time.perf_counter()
    for cfg in (case1, case2):
        k3 = d.design_k3(cfg.gains.k1, cfg.gains.k2, cfg.camera, cfg.landmark)
        gains = d.Gains(cfg.gains.k1, cfg.gains.k2, k3)
        formula = d.jacobian_eigenvalues(gains, cfg.camera, cfg.landmark)
        numeric = np.linalg.eigvals(d.linearized_matrix(gains, cfg.camera, cfg.landmark))
        assert all(ev.real < 0.0 for ev in formula)
        assert np.all(numeric.real < 0.0)
    rng = np.random.default_rng(100)
    worst = 0.0
    for _ in range(100):
        cam, lm, gains = _random_scene(rng)
        formula = np.sort_complex(np.array(d.jacobian_eigenvalues(gains, cam, lm)))
        numeric = np.sort_complex(np.linalg.eigvals(d.linearized_matrix(gains, cam, lm)))
        worst = max(worst, float(np.max(np.abs(formula - numeric))))
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-9
    assert elapsed < 1.0
    print(
        f"[criterion 1] PASS: design eigenvalues stable for both presets, "
        f"formula-vs-numeric max gap {worst:.2e} over 100 configs in {elapsed:.2f}s"
    )


def test_criterion_2_unconstrained_lyapunov_decrease():
    gains = d.Gains(k1=0.2, k2=0.7, k3=0.2)  # k3 = k1
    rng = np.random.default_rng(200)
    n = 1_000_000
    rho = rng.uniform(1e-6, 3.0, n)
    alpha = rng.uniform(-math.pi, math.pi, n)
    phi = rng.uniform(-math.pi, math.pi, n)
    rate_fn = d.lyapunov_rate_unconstrained
    t0 = time.perf_counter()
    worst = -math.inf
    for i in range(n):
        r = rate_fn(_S(rho[i], alpha[i], phi[i]), gains)
        if r > worst:
            worst = r
        if r > -1e-15:
            # near equality: both factors of the decrease must vanish
            assert abs(rho[i] * math.cos(alpha[i])) < 1e-6
            assert abs(math.sin(alpha[i]) * math.cos(alpha[i])) < 1e-6
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-12
    # exact equality states: rho cos(alpha) = sin(alpha) cos(alpha) = 0
    for s in (_S(0.7, math.pi / 2, 0.4), _S(1e-12, 0.0, -2.0), _S(3.0, -math.pi / 2, 1.0)):
        assert abs(rate_fn(s, gains)) < 1e-24
    assert elapsed < 10.0
    print(
        f"[criterion 2] PASS: rate <= 1e-12 at 10^6 states (max {worst:.2e}), "
        f"equality only on the zero set, in {elapsed:.1f}s"
    )


def test_criterion_3_feasible_set_pipeline(pipelines):
    t0 = time.perf_counter()
    reports = {}
    for name in ("case1", "case2"):
        cfg, labels, fit = pipelines[name]
        n_feas = sum(lb.feasible for lb in labels)
        assert len(labels) == 21**3
        assert 0 < n_feas < len(labels), "sweep must produce both classes"
        inside_bad = sum(
            1
            for lb in labels
            if not lb.feasible
            and d.in_fitted_region(
                d.PolarState(lb.rho, lb.alpha, lb.phi), fit, cfg.camera, cfg.landmark
            )
        )
        assert inside_bad == 0, "fitted region must contain no infeasible state"
        report = d.verify_lyapunov(fit, cfg, n_samples=100000, seed=0)
        assert report.n_inside == 100000
        assert report.n_positive == 0
        assert report.max_rate < 0.0
        reports[name] = (n_feas, report)
    elapsed = pipelines["elapsed"] + (time.perf_counter() - t0)
    assert elapsed < 300.0
    print(
        "[criterion 3] PASS: "
        + "; ".join(
            f"{name} {n}/9261 feasible, 0 infeasible inside fit, "
            f"0/100000 positive rates (max {rep.max_rate:.2e})"
            for name, (n, rep) in reports.items()
        )
        + f"; total {elapsed:.0f}s"
    )


def test_criterion_4_convergence_with_fov_guarantee(pipelines):
    t0 = time.perf_counter()
    stats = {}
    for name in ("case1", "case2"):
        cfg, _, fit = pipelines[name]
        starts = d.sample_fitted_region(fit, 50, cfg.camera, cfg.landmark, seed=4)
        worst_bearing = 0.0
        for s in starts:
            res = d.run_episode(s, cfg, actuator=None)
            assert res.outcome is d.EpisodeOutcome.CONVERGED
            assert cfg.safety.contains(res.final.state)
            assert res.max_abs_bearing <= ABAR
            worst_bearing = max(worst_bearing, res.max_abs_bearing)
        stats[name] = worst_bearing
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    print(
        "[criterion 4] PASS: 50/50 episodes per preset reached the safety "
        "region with every corner bearing in view (worst "
        + ", ".join(f"{name} {math.degrees(b):.1f} deg" for name, b in stats.items())
        + f") in {elapsed:.1f}s"
    )


def test_criterion_5_dead_zone_residual(pipelines):
    cfg, _, fit = pipelines["case1"]
    assert cfg.actuator.v_min > 0.0
    starts = d.sample_fitted_region(fit, 20, cfg.camera, cfg.landmark, seed=2)
    t0 = time.perf_counter()
    residuals = []
    for s in starts:
        res = d.run_episode(s, cfg)  # configured actuator with dead zone
        assert res.outcome is d.EpisodeOutcome.CONVERGED
        rho_f = res.final.state.rho
        assert 0.0 < rho_f < 0.15, "residual distance must be nonzero inside the box"
        # plausibility band around the reported ~0.11-0.12 m residuals
        assert rho_f > 0.05
        residuals.append(rho_f)
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    print(
        f"[criterion 5] PASS: 20/20 dead-zone episodes ended inside the box at "
        f"nonzero residual rho in [{min(residuals):.4f}, {max(residuals):.4f}] m "
        f"in {elapsed:.1f}s"
    )


def test_criterion_6_bearing_trace_plausibility(pipelines):
    cfg, _, fit = pipelines["case1"]
    pool = d.sample_fitted_region(fit, 400, cfg.camera, cfg.landmark, seed=2)
    # starts whose initial objective bearing matches the reported runs
    starts = [
        s
        for s in pool
        if math.radians(6) <= abs(d.bearing_angle(s, cfg.camera, cfg.landmark)) <= math.radians(25)
    ][:12]
    assert len(starts) == 12
    peaks = []
    for s in starts:
        res = d.run_episode(s, cfg)
        assert res.outcome is d.EpisodeOutcome.CONVERGED
        trace = [abs(smp.alpha_star) for smp in res.samples]
        peak = max(trace)
        assert peak < ABAR, "objective bearing must stay inside the half FOV"
        # final approach: bearing trend over the last quarter is not rising
        tail = np.array(trace[-(len(trace) // 4):])
        slope = np.polyfit(np.arange(tail.size), tail, 1)[0]
        assert slope <= 2e-5, "bearing trace must be decreasing in the final approach"
        peaks.append(peak)
    mean_peak = float(np.mean(peaks))
    lo, hi = FIG_BAND_MEAN - FIG_BAND_STD, FIG_BAND_MEAN + FIG_BAND_STD
    assert lo <= mean_peak <= hi, "mean peak bearing outside the reported band"
    print(
        f"[criterion 6] PASS: 12 episodes, peak bearing always < 40 deg, "
        f"falling final trace, mean peak {math.degrees(mean_peak):.1f} deg inside "
        f"[{math.degrees(lo):.1f}, {math.degrees(hi):.1f}] deg"
    )


def test_criterion_7_perception_end_to_end(case1):
    cfg = case1
    cam, lm, fp = cfg.camera, cfg.landmark, cfg.object
    params = d.PerceptionParams()

    def episode_error(dist, noise, seed):
        # camera exactly dist from the objective, robot on the approach axis
        robot = d.Pose2D(fp.center.x, fp.center.y - dist - cam.l, math.pi / 2)
        cloud = d.synth_chair_cloud(fp, robot, cam, noise_sigma=noise, seed=seed)
        est = d.estimate_from_cloud(cloud, params, cam, lm)
        ex, ey = est.objective_xy
        # truth in the robot frame: straight ahead at dist + l
        err = math.hypot(ex - 0.0, ey - (dist + cam.l))
        cx, cy = est.landmark_xy
        radius_gap = abs(math.hypot(cx - ex, cy - ey) - lm.r)
        return err, radius_gap

    t0 = time.perf_counter()
    worst_clean = 0.0
    for dist in (0.5, 1.0, 1.5, 2.0, 2.5, 3.0):
        err, radius_gap = episode_error(dist, 0.0, 0)
        assert err <= 0.02, f"noiseless objective error {err:.4f} m at {dist} m"
        assert radius_gap <= 1e-9
        worst_clean = max(worst_clean, err)
    worst_noisy = 0.0
    for seed in range(100):
        err, radius_gap = episode_error(2.0, 0.01, seed)
        assert err <= 0.05, f"noisy objective error {err:.4f} m (seed {seed})"
        assert radius_gap <= 1e-9
        worst_noisy = max(worst_noisy, err)
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    print(
        f"[criterion 7] PASS: noiseless error <= {worst_clean * 100:.2f} cm at "
        f"0.5-3.0 m, 1 cm noise error <= {worst_noisy * 100:.2f} cm over 100 "
        f"seeds, landmark radius exact to 1e-9, in {elapsed:.1f}s"
    )


def test_criterion_8_estimator_consistency(case1):
    cfg = case1
    t0 = time.perf_counter()
    # noiseless filter reproduces ground truth at every recorded step
    clean = d.EstimationParams(meas_sigma=0.0, odom_frac=0.0, switch_threshold=0.8)
    res = d.run_episode(d.PolarState(1.4, 0.15, -0.1), cfg, actuator=None,
                        estimation=clean, seed=0)
    assert res.outcome is d.EpisodeOutcome.CONVERGED
    cpose = d.landmark_world_pose(cfg.object, cfg.landmark)
    for smp in res.samples:
        st, ct = math.sin(smp.pose.theta), math.cos(smp.pose.theta)
        for (px, py), (ex, ey) in (
            ((cfg.object.center.x, cfg.object.center.y), smp.est[:2]),
            ((cpose.x, cpose.y), smp.est[2:]),
        ):
            dx, dy = px - smp.pose.x, py - smp.pose.y
            assert abs(dx * st - dy * ct - ex) <= 1e-9
            assert abs(dx * ct + dy * st - ey) <= 1e-9
    # default noise levels: nearly every seeded episode still docks
    n_ok = 0
    min_eig = math.inf
    for seed in range(100):
        res = d.run_episode(
            d.PolarState(1.4, 0.15, -0.1), cfg, estimation=cfg.estimation, seed=seed
        )
        assert res.min_cov_eig is not None and res.min_cov_eig > 0.0
        min_eig = min(min_eig, res.min_cov_eig)
        n_ok += res.outcome is d.EpisodeOutcome.CONVERGED
    elapsed = time.perf_counter() - t0
    assert n_ok >= 95
    assert elapsed < 120.0
    print(
        f"[criterion 8] PASS: noiseless estimate equals truth to 1e-9, "
        f"{n_ok}/100 noisy episodes docked, covariance eigenvalues >= "
        f"{min_eig:.2e}, in {elapsed:.1f}s"
    )


def _run_cli(args, out_dir):
    proc = subprocess.run(
        [sys.executable, "-m", "docksim.cli", *args, "--out", str(out_dir)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return sorted(p.name for p in out_dir.iterdir())


def test_criterion_9_determinism(tmp_path):
    jobs = (
        ("run", ["run", "--config", "case1", "--rho", "1.3", "--alpha", "8deg",
                 "--estimator", "--seed", "5"]),
        ("perceive", ["perceive", "--config", "case1", "--rho", "2.0",
                      "--noise", "0.01", "--seed", "3"]),
        ("sweep", ["sweep", "--config", "case2", "--n", "5", "--quiet"]),
    )
    n_files = 0
    for name, args in jobs:
        a_dir, b_dir = tmp_path / f"{name}_a", tmp_path / f"{name}_b"
        files_a = _run_cli(args, a_dir)
        files_b = _run_cli(args, b_dir)
        assert files_a == files_b and files_a
        same, diff, funny = filecmp.cmpfiles(a_dir, b_dir, files_a, shallow=False)
        assert not diff and not funny, f"{name}: artifacts differ: {diff or funny}"
        n_files += len(same)
    print(
        f"[criterion 9] PASS: {n_files} artifact files byte-identical across "
        f"repeated seeded runs of run, perceive and sweep"
    )
