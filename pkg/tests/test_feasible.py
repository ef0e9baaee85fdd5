"""Feasibility sweep grid, boundary fitting and region sampling."""

import math

import numpy as np
import pytest

from docksim import (
    BoundaryFit,
    BoundaryFitError,
    CameraSpec,
    FeasibilityLabel,
    LandmarkSpec,
    PolarState,
    StateGrid,
    fit_boundary,
    in_fitted_region,
    read_labels_csv,
    sample_fitted_region,
    sweep,
    verify_lyapunov,
    write_labels_csv,
)

CAM = CameraSpec(l=0.26, alpha_bar=math.radians(40))
LM = LandmarkSpec(r=0.9, beta=0.0, lam=math.radians(270))


def test_state_grid_defaults_and_order():
    grid = StateGrid()
    assert len(grid) == 21**3
    states = list(grid.states())
    assert len(states) == 21**3
    assert states[0].rho == pytest.approx(2.0 / 21.0)
    assert states[-1].rho == pytest.approx(2.0)
    # row-major: phi varies fastest, then alpha, then rho
    assert states[0].phi == pytest.approx(-math.pi / 3)
    assert states[1].phi > states[0].phi
    assert states[0].alpha == states[1].alpha
    assert states[21].alpha > states[0].alpha
    assert states[21 * 21].rho > states[0].rho


def test_state_grid_validation():
    StateGrid(rho=(0.5, 0.5, 1))
    with pytest.raises(ValueError):
        StateGrid(rho=(0.0, 2.0, 21))
    with pytest.raises(ValueError):
        StateGrid(alpha=(1.0, -1.0, 5))
    with pytest.raises(ValueError):
        StateGrid(phi=(-1.0, 1.0, 0))
    with pytest.raises(ValueError):
        StateGrid(phi=(-1.0, 1.0, 2.5))


def test_small_sweep_labels(case1):
    grid = StateGrid(rho=(0.5, 1.5, 3), alpha=(-0.9, 0.9, 3), phi=(0.0, 0.0, 1))
    labels = sweep(case1, grid)
    assert len(labels) == 9
    # straight-ahead starts converge, extreme headings lose the object
    byk = {(round(lb.rho, 3), round(lb.alpha, 3)): lb for lb in labels}
    assert byk[(1.0, 0.0)].feasible
    assert byk[(1.0, 0.0)].outcome == "converged"
    assert not byk[(0.5, 0.9)].feasible
    seen = sorted({lb.outcome for lb in labels})
    assert "converged" in seen and "fov_violation" in seen


def test_sweep_progress_callback(case1):
    grid = StateGrid(rho=(1.0, 1.0, 1), alpha=(0.0, 0.0, 1), phi=(-0.2, 0.2, 2))
    calls = []
    sweep(case1, grid, progress=lambda done, total: calls.append((done, total)))
    assert calls == [(1, 2), (2, 2)]


def test_labels_csv_round_trip(tmp_path):
    labels = (
        FeasibilityLabel(0.5, 0.1, -0.2, True, "converged"),
        FeasibilityLabel(1.0, -0.3, 0.0, False, "fov_violation"),
        FeasibilityLabel(1.5, 0.0, 0.4, False, "timeout"),
    )
    path = tmp_path / "labels.csv"
    write_labels_csv(labels, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "rho,alpha,phi,feasible,outcome"
    assert lines[1] == "0.5,0.1,-0.2,1,converged"
    back = read_labels_csv(path)
    assert back == labels


def test_labels_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("rho,alpha\n")
    with pytest.raises(ValueError):
        read_labels_csv(p)
    p.write_text("rho,alpha,phi,feasible,outcome\n1,2\n")
    with pytest.raises(ValueError, match=":2"):
        read_labels_csv(p)
    p.write_text("rho,alpha,phi,feasible,outcome\n1,2,3,x,converged\n")
    with pytest.raises(ValueError):
        read_labels_csv(p)


def test_boundary_fit_validation():
    BoundaryFit(0.5, 2.0, 0.5, 0.5, 0.1, 2.0)
    with pytest.raises(ValueError):
        BoundaryFit(0.0, 2.0, 0.5, 0.5, 0.1, 2.0)
    with pytest.raises(ValueError):
        BoundaryFit(0.5, 2.0, 0.5, 0.5, 2.0, 0.1)
    with pytest.raises(ValueError):
        BoundaryFit(0.5, 2.0, 0.5, 0.5, 0.0, 2.0)


def test_in_fitted_region_inequalities():
    fit = BoundaryFit(k4=1.0, k5=2.0, k6=0.5, k7=0.8, rho_min=0.2, rho_max=2.0)
    lm = LandmarkSpec(r=0.9, beta=-0.2, lam=0.0)
    span = fit.k5 * (lm.r + CAM.l)

    def reference(s):
        if not fit.rho_min <= s.rho <= fit.rho_max:
            return False
        shifted = abs(s.phi + fit.k4 * lm.beta)
        if shifted * span > s.rho:
            return False
        band = fit.k7 * s.rho * (1.0 - shifted * span / s.rho) * CAM.alpha_bar
        return abs(s.alpha - fit.k6 * s.phi) <= band

    rng = np.random.default_rng(60)
    agree = 0
    for _ in range(2000):
        s = PolarState(
            rng.uniform(0.05, 2.5), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)
        )
        got = in_fitted_region(s, fit, CAM, lm)
        assert got == reference(s)
        agree += got
    assert 0 < agree < 2000  # the region is neither empty nor everything


def test_fit_boundary_recovers_planted_region():
    # labels planted from a known member of the candidate family must be
    # refit soundly, covering every feasible label
    truth = BoundaryFit(k4=0.5, k5=1.8, k6=0.6, k7=0.8, rho_min=0.3, rho_max=1.9)
    lm = LandmarkSpec(r=0.9, beta=-0.35, lam=0.0)
    labels = []
    grid = StateGrid(rho=(0.1, 2.0, 12), alpha=(-1.0, 1.0, 11), phi=(-1.0, 1.0, 11))
    for s in grid.states():
        labels.append(
            FeasibilityLabel(
                s.rho, s.alpha, s.phi, in_fitted_region(s, truth, CAM, lm), "x"
            )
        )
    fit = fit_boundary(labels, CAM, lm)
    inside_feasible = inside_infeasible = 0
    for lb in labels:
        inside = in_fitted_region(PolarState(lb.rho, lb.alpha, lb.phi), fit, CAM, lm)
        if inside and lb.feasible:
            inside_feasible += 1
        if inside and not lb.feasible:
            inside_infeasible += 1
    assert inside_infeasible == 0
    assert inside_feasible == sum(lb.feasible for lb in labels)


def test_fit_boundary_soundness_on_noise():
    # random labels: whatever comes back must contain no infeasible label
    rng = np.random.default_rng(61)
    labels = []
    for _ in range(400):
        rho = rng.uniform(0.1, 2.0)
        alpha, phi = rng.uniform(-1.0, 1.0, 2)
        feas = bool(abs(alpha) < 0.5 and abs(phi) < 0.5 and rng.random() < 0.9)
        labels.append(FeasibilityLabel(rho, alpha, phi, feas, "x"))
    fit = fit_boundary(labels, CAM, LM)
    for lb in labels:
        if not lb.feasible:
            assert not in_fitted_region(PolarState(lb.rho, lb.alpha, lb.phi), fit, CAM, LM)


def test_fit_boundary_needs_feasible_labels():
    with pytest.raises(BoundaryFitError):
        fit_boundary([], CAM, LM)
    only_bad = [FeasibilityLabel(1.0, 0.5, 0.5, False, "timeout")]
    with pytest.raises(BoundaryFitError):
        fit_boundary(only_bad, CAM, LM)


def test_sample_fitted_region_is_inside_and_deterministic():
    fit = BoundaryFit(k4=0.25, k5=3.0, k6=0.6, k7=0.4, rho_min=0.1, rho_max=2.0)
    a = sample_fitted_region(fit, 200, CAM, LM, seed=5)
    b = sample_fitted_region(fit, 200, CAM, LM, seed=5)
    assert a == b
    for s in a:
        assert in_fitted_region(s, fit, CAM, LM)
    c = sample_fitted_region(fit, 200, CAM, LM, seed=6)
    assert c != a


def test_sample_fitted_region_gives_up_on_sliver():
    sliver = BoundaryFit(
        k4=0.25, k5=3.0, k6=0.6, k7=1e-7, rho_min=1.0, rho_max=1.0 + 1e-7
    )
    with pytest.raises(BoundaryFitError):
        sample_fitted_region(sliver, 10, CAM, LM, seed=0)


def test_verify_lyapunov_on_known_good_region(case1):
    fit = BoundaryFit(k4=0.25, k5=3.0, k6=0.6, k7=0.4, rho_min=0.1, rho_max=2.0)
    report = verify_lyapunov(fit, case1, n_samples=2000, seed=1)
    assert report.passed
    assert report.n_inside == 2000
    assert report.n_positive == 0
    assert report.max_rate < 0.0
    assert in_fitted_region(PolarState(*report.worst), fit, case1.camera, case1.landmark)
    with pytest.raises(ValueError):
        verify_lyapunov(fit, case1, n_samples=0)


def test_verify_lyapunov_flags_bad_region(case2):
    # an oversized region for the strongly offset landmark leaks
    # positive-rate states near the lower rho edge
    big = BoundaryFit(k4=1.0, k5=0.6, k6=0.2, k7=2.0, rho_min=0.05, rho_max=2.0)
    report = verify_lyapunov(big, case2, n_samples=4000, seed=0)
    assert not report.passed
    assert report.n_positive > 0
    assert report.max_rate > 0.0
