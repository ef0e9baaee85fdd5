"""Feasible-set sweep, boundary fitting and stability verification.

A grid of initial polar states is swept with closed-loop episodes to
label each state feasible (converges without the objective ever leaving
the field of view) or not.  The labelled set is then enclosed by a
four-parameter family of inequalities

    rho_min <= rho <= rho_max
    |phi + k4*beta| <= rho / (k5 (r + l))
    |alpha - k6*phi| <= k7 rho (1 - |phi + k4*beta| k5 (r + l) / rho) * alpha_bar

fitted so that no infeasible grid state falls inside (soundness) while
as many feasible ones as possible do (coverage).  Finally the Lyapunov
rate of the closed loop is sampled densely inside the fitted region to
confirm it never goes positive.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .controller import lyapunov_rate
from .errors import BoundaryFitError
from .geometry import CameraSpec, LandmarkSpec, PolarState
from .simulator import EpisodeOutcome, run_episode

__all__ = [
    "StateGrid",
    "FeasibilityLabel",
    "BoundaryFit",
    "LyapunovReport",
    "sweep",
    "fit_boundary",
    "in_fitted_region",
    "verify_lyapunov",
    "sample_fitted_region",
    "write_labels_csv",
    "read_labels_csv",
]

_THIRD_PI = math.pi / 3.0


def _check_axis(name, axis, positive=False):
    lo, hi, n = axis
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"{name} axis needs an integer count >= 1")
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ValueError(f"{name} axis needs finite lo <= hi")
    if positive and lo <= 0.0:
        raise ValueError(f"{name} axis must start above 0")
    return (lo, hi, n)


@dataclass(frozen=True)
class StateGrid:
    """Regular grid over the admissible polar box.

    Each axis is (lo, hi, count).  The default covers rho in (0, 2]
    with 21 evenly spaced values and the heading angles alpha, phi over
    [-pi/3, pi/3] with 21 values each.
    """

    rho: tuple = (2.0 / 21.0, 2.0, 21)
    alpha: tuple = (-_THIRD_PI, _THIRD_PI, 21)
    phi: tuple = (-_THIRD_PI, _THIRD_PI, 21)

    def __post_init__(self):
        object.__setattr__(self, "rho", _check_axis("rho", self.rho, positive=True))
        object.__setattr__(self, "alpha", _check_axis("alpha", self.alpha))
        object.__setattr__(self, "phi", _check_axis("phi", self.phi))

    @staticmethod
    def _axis(spec) -> np.ndarray:
        lo, hi, n = spec
        if n == 1:
            return np.array([lo])
        return np.linspace(lo, hi, n)

    @property
    def rho_values(self) -> np.ndarray:
        return self._axis(self.rho)

    @property
    def alpha_values(self) -> np.ndarray:
        return self._axis(self.alpha)

    @property
    def phi_values(self) -> np.ndarray:
        return self._axis(self.phi)

    def __len__(self) -> int:
        return self.rho[2] * self.alpha[2] * self.phi[2]

    def states(self):
        """Yield grid states in row-major (rho, alpha, phi) order."""
        for rho in self.rho_values:
            for alpha in self.alpha_values:
                for phi in self.phi_values:
                    yield PolarState(float(rho), float(alpha), float(phi))


@dataclass(frozen=True)
class FeasibilityLabel:
    rho: float
    alpha: float
    phi: float
    feasible: bool
    outcome: str


def sweep(config, grid: StateGrid | None = None, *, actuator=None,
          estimation=None, progress=None) -> tuple:
    """Label every grid state by simulating a full episode from it.

    A state is feasible when the episode converges and the worst corner
    bearing never exceeded the camera half field of view.  The default
    actuator is ideal (commands realized exactly); pass an actuator
    model to include its dead zone in the labels.  ``progress`` is an
    optional callable invoked as progress(done, total).
    """
    if grid is None:
        grid = StateGrid()
    abar = config.camera.alpha_bar
    labels = []
    total = len(grid)
    for i, state in enumerate(grid.states()):
        result = run_episode(
            state,
            config,
            actuator=actuator,
            estimation=estimation,
            record_every=0,
        )
        feasible = (
            result.outcome is EpisodeOutcome.CONVERGED
            and result.max_abs_bearing <= abar
        )
        labels.append(
            FeasibilityLabel(
                state.rho, state.alpha, state.phi, feasible, result.outcome.value
            )
        )
        if progress is not None:
            progress(i + 1, total)
    return tuple(labels)


@dataclass(frozen=True)
class BoundaryFit:
    """Parameters of the fitted feasible region."""

    k4: float
    k5: float
    k6: float
    k7: float
    rho_min: float
    rho_max: float

    def __post_init__(self):
        if min(self.k4, self.k5, self.k6, self.k7) <= 0.0:
            raise ValueError("k4..k7 must be > 0")
        if not 0.0 < self.rho_min < self.rho_max:
            raise ValueError("need 0 < rho_min < rho_max")


def _region_mask(rho, alpha, phi, fit: BoundaryFit, cam: CameraSpec,
                 lm: LandmarkSpec) -> np.ndarray:
    """Vectorized membership test for the fitted region inequalities."""
    rho = np.asarray(rho, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    phi = np.asarray(phi, dtype=float)
    span = fit.k5 * (lm.r + cam.l)
    shifted = np.abs(phi + fit.k4 * lm.beta)
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = shifted * span / rho
    ok = (rho >= fit.rho_min) & (rho <= fit.rho_max) & (frac <= 1.0)
    band = fit.k7 * rho * (1.0 - frac) * cam.alpha_bar
    ok &= np.abs(alpha - fit.k6 * phi) <= band
    return ok


def in_fitted_region(state: PolarState, fit: BoundaryFit, cam: CameraSpec,
                     lm: LandmarkSpec) -> bool:
    """Whether a polar state satisfies all fitted-region inequalities."""
    return bool(_region_mask(state.rho, state.alpha, state.phi, fit, cam, lm))


_K4_GRID = tuple(0.25 * i for i in range(1, 9))
_K5_GRID = tuple(round(float(x), 10) for x in np.linspace(0.6, 3.0, 13))
_K6_GRID = tuple(round(float(x), 10) for x in np.linspace(0.2, 2.0, 10))
_K7_GRID = tuple(round(float(x), 10) for x in np.linspace(0.2, 2.0, 10))


def _rate_exclusions(gains, cam, lm, rho_min, rho_max, alpha_max, phi_max,
                     margin, n, seed):
    """Low-discrepancy states whose Lyapunov rate is above -margin.

    A sound region must avoid all of them, so that dense later sampling
    inside the region cannot surface a positive rate.
    """
    sampler = qmc.Halton(d=3, scramble=True, seed=seed)
    lo = np.array([rho_min, -alpha_max, -phi_max])
    hi = np.array([rho_max, alpha_max, phi_max])
    pts = lo + sampler.random(n) * (hi - lo)
    keep = []
    for rho, alpha, phi in pts:
        rate = lyapunov_rate(PolarState(rho, alpha, phi), gains, cam, lm)
        if rate > -margin:
            keep.append((rho, alpha, phi))
    return np.array(keep) if keep else np.empty((0, 3))


def fit_boundary(labels, cam: CameraSpec, lm: LandmarkSpec, *, gains=None,
                 rate_margin: float = 1e-4, n_rate: int = 100000,
                 rate_seed: int = 123,
                 k4_grid=_K4_GRID, k5_grid=_K5_GRID, k6_grid=_K6_GRID,
                 k7_grid=_K7_GRID) -> BoundaryFit:
    """Fit the region parameters to sweep labels by exhaustive search.

    The rho range is pinned to the feasible extremes; (k4, k5, k6, k7)
    are chosen from candidate grids to maximize the number of feasible
    states inside the region subject to containing no infeasible state.
    When ``gains`` is given the region must additionally avoid every
    sampled state whose closed-loop Lyapunov rate exceeds -rate_margin,
    so a later dense rate check inside the region holds with a buffer.
    The lower rho bound is searched over the feasible grid values: a
    larger rho_min drops a few near states but can admit much wider
    angle bands.  Raises BoundaryFitError when no feasible label exists
    or no sound candidate covers at least one state.
    """
    labels = tuple(labels)
    if not labels:
        raise BoundaryFitError("no labels to fit")
    rho = np.array([lb.rho for lb in labels])
    alpha = np.array([lb.alpha for lb in labels])
    phi = np.array([lb.phi for lb in labels])
    feas = np.array([lb.feasible for lb in labels], dtype=bool)
    if not feas.any():
        raise BoundaryFitError("no feasible states in the sweep")

    rho_lo = float(rho[feas].min())
    rho_max = float(rho[feas].max())
    if gains is not None:
        bad = _rate_exclusions(
            gains, cam, lm, rho_lo, rho_max,
            float(np.abs(alpha).max()), float(np.abs(phi).max()),
            rate_margin, n_rate, rate_seed,
        )
        if len(bad):
            rho = np.concatenate([rho, bad[:, 0]])
            alpha = np.concatenate([alpha, bad[:, 1]])
            phi = np.concatenate([phi, bad[:, 2]])
            feas = np.concatenate([feas, np.zeros(len(bad), dtype=bool)])

    span0 = lm.r + cam.l
    abar = cam.alpha_bar
    infeas = ~feas

    best = None
    best_cover = 0
    rho_min_candidates = np.unique(rho[feas])
    for rho_min in rho_min_candidates:
        if rho_min >= rho_max:
            break
        in_rho = (rho >= rho_min) & (rho <= rho_max)
        for k4 in k4_grid:
            shifted = np.abs(phi + k4 * lm.beta)
            for k5 in k5_grid:
                frac = shifted * (k5 * span0) / rho
                base = in_rho & (frac <= 1.0)
                width = rho * (1.0 - frac) * abar
                for k6 in k6_grid:
                    offset = np.abs(alpha - k6 * phi)
                    for k7 in k7_grid:
                        inside = base & (offset <= k7 * width)
                        if inside[infeas].any():
                            continue
                        cover = int(np.count_nonzero(inside[feas]))
                        if cover > best_cover:
                            best_cover = cover
                            best = (k4, k5, k6, k7, float(rho_min))
    if best is None:
        raise BoundaryFitError("no sound boundary candidate covers any state")
    return BoundaryFit(
        float(best[0]), float(best[1]), float(best[2]), float(best[3]),
        best[4], rho_max,
    )


@dataclass(frozen=True)
class LyapunovReport:
    """Outcome of sampling the Lyapunov rate inside a fitted region."""

    n_drawn: int
    n_inside: int
    n_positive: int
    max_rate: float
    worst: tuple | None
    tol: float

    @property
    def passed(self) -> bool:
        return self.n_positive == 0


def _halton_states(fit, cam, lm, n, seed, alpha_max, phi_max, max_draws):
    sampler = qmc.Halton(d=3, scramble=True, seed=seed)
    lo = np.array([fit.rho_min, -alpha_max, -phi_max])
    hi = np.array([fit.rho_max, alpha_max, phi_max])
    out = []
    drawn = 0
    chunk = 32768
    while len(out) < n and drawn < max_draws:
        pts = lo + sampler.random(chunk) * (hi - lo)
        drawn += chunk
        keep = _region_mask(pts[:, 0], pts[:, 1], pts[:, 2], fit, cam, lm)
        out.extend(map(tuple, pts[keep]))
    return out[:n], drawn


def verify_lyapunov(fit: BoundaryFit, config, *, n_samples: int = 100000,
                    seed: int = 0, tol: float = 1e-12,
                    alpha_max: float = _THIRD_PI,
                    phi_max: float = _THIRD_PI) -> LyapunovReport:
    """Sample the closed-loop Lyapunov rate inside the fitted region.

    Draws low-discrepancy points in the admissible box, keeps those
    inside the region and evaluates the rate at each.  The report
    passes when no kept sample has a rate above ``tol``.  A warning is
    emitted when no sample lands inside (the check is then vacuous).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    states, drawn = _halton_states(
        fit, config.camera, config.landmark, n_samples, seed,
        alpha_max, phi_max, max_draws=max(64 * n_samples, 1 << 21),
    )
    gains, cam, lm = config.gains, config.camera, config.landmark
    n_positive = 0
    max_rate = -math.inf
    worst = None
    for rho, alpha, phi in states:
        rate = lyapunov_rate(PolarState(rho, alpha, phi), gains, cam, lm)
        if rate > max_rate:
            max_rate = rate
            worst = (rho, alpha, phi)
        if rate > tol:
            n_positive += 1
    if not states:
        warnings.warn("no samples landed inside the fitted region; "
                      "the rate check is vacuous", stacklevel=2)
    return LyapunovReport(drawn, len(states), n_positive, max_rate, worst, tol)


def sample_fitted_region(fit: BoundaryFit, n: int, cam: CameraSpec,
                         lm: LandmarkSpec, *, seed: int = 0,
                         alpha_max: float = _THIRD_PI,
                         phi_max: float = _THIRD_PI) -> tuple:
    """Draw n deterministic states inside the fitted region."""
    if n < 1:
        raise ValueError("n must be >= 1")
    states, _ = _halton_states(
        fit, cam, lm, n, seed, alpha_max, phi_max,
        max_draws=max(4096 * n, 1 << 21),
    )
    if len(states) < n:
        raise BoundaryFitError(
            f"could only place {len(states)} of {n} samples in the region"
        )
    return tuple(PolarState(*s) for s in states)


def write_labels_csv(labels, path) -> None:
    """Write sweep labels as CSV rows rho,alpha,phi,feasible,outcome.

    Rows keep the sweep's row-major (rho, alpha, phi) order; feasible
    is written as 1 or 0.
    """
    lines = ["rho,alpha,phi,feasible,outcome"]
    for lb in labels:
        lines.append(
            "%.9g,%.9g,%.9g,%d,%s"
            % (lb.rho, lb.alpha, lb.phi, int(lb.feasible), lb.outcome)
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_labels_csv(path) -> tuple:
    """Read sweep labels written by write_labels_csv."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "rho,alpha,phi,feasible,outcome":
        raise ValueError(f"{path}: not a feasibility label file")
    out = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise ValueError(f"{path}:{i}: expected 5 fields")
        try:
            rho, alpha, phi = (float(p) for p in parts[:3])
            feasible = bool(int(parts[3]))
        except ValueError:
            raise ValueError(f"{path}:{i}: malformed row") from None
        out.append(FeasibilityLabel(rho, alpha, phi, feasible, parts[4]))
    return tuple(out)
