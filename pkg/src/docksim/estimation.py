"""Kalman estimation of the objective and landmark in the robot frame.

The state is the 4-vector (x_D, y_D, x_C, y_C): robot frame positions
of the objective D and the landmark C.  Both points are fixed in the
world, so robot motion moves them rigidly in the robot frame and the
motion model is exactly linear: for an odometry increment (dx, dy,
dtheta) in the robot frame, every point p maps to R(dtheta)^T (p - t).

Measurements are perceived (D, C) positions with identity measurement
matrix.  Operation is two-phase: the filter fuses measurements while the
estimated robot-to-landmark distance stays above a switch threshold;
once below it the filter latches into dead reckoning, because close-up
clouds clip at the image border and bias the centroids.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PhaseError
from .geometry import LandmarkSpec, PolarState, normalize_angle
from .perception import LandmarkEstimate

__all__ = [
    "Phase",
    "EstimatorState",
    "OdometryDelta",
    "initial_state",
    "predict",
    "update",
    "two_phase_gate",
    "process_noise",
    "measurement_vector",
    "polar_from_estimate",
]

_HALF_PI = 0.5 * math.pi


class Phase(enum.Enum):
    FUSING = "fusing"
    ODOMETRY_ONLY = "odometry_only"


@dataclass(frozen=True)
class EstimatorState:
    """Filter mean (4,), covariance (4, 4) and operating phase."""

    mean: np.ndarray
    cov: np.ndarray
    phase: Phase = Phase.FUSING

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (4,):
            raise ValueError("mean must have shape (4,)")
        if cov.shape != (4, 4):
            raise ValueError("cov must have shape (4, 4)")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("estimator state must be finite")
        mean = mean.copy()
        cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class OdometryDelta:
    """Incremental robot motion over one step, in the robot frame.

    ``dx`` is lateral (+x right), ``dy`` forward, ``dtheta`` the heading
    change.
    """

    dx: float
    dy: float
    dtheta: float

    def __post_init__(self):
        for name in ("dx", "dy", "dtheta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"odometry {name} must be finite")


def measurement_vector(meas: LandmarkEstimate) -> np.ndarray:
    """Stack a perception output into the (x_D, y_D, x_C, y_C) order."""
    return np.array(
        [
            meas.objective_xy[0],
            meas.objective_xy[1],
            meas.landmark_xy[0],
            meas.landmark_xy[1],
        ]
    )


def initial_state(meas: LandmarkEstimate, sigma0: float) -> EstimatorState:
    """Start the filter on the first measurement with isotropic spread."""
    var = max(float(sigma0) ** 2, 1e-12)
    return EstimatorState(measurement_vector(meas), var * np.eye(4), Phase.FUSING)


def _rotation_block(dtheta: float) -> np.ndarray:
    c, s = math.cos(dtheta), math.sin(dtheta)
    r_t = np.array([[c, s], [-s, c]])
    out = np.zeros((4, 4))
    out[:2, :2] = r_t
    out[2:, 2:] = r_t
    return out


def predict(state: EstimatorState, odo: OdometryDelta, q: np.ndarray) -> EstimatorState:
    """Propagate the estimate through one odometry increment.

    The model is exact, not a linearization: points are rigid in the
    world, so a pure translation shifts both means by (-dx, -dy) and the
    covariance transport uses the same rotation for mean and spread.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (4, 4):
        raise ValueError("process noise must have shape (4, 4)")
    g = _rotation_block(odo.dtheta)
    shifted = state.mean.copy()
    shifted[0] -= odo.dx
    shifted[1] -= odo.dy
    shifted[2] -= odo.dx
    shifted[3] -= odo.dy
    mean = g @ shifted
    cov = g @ state.cov @ g.T + q
    return EstimatorState(mean, cov, state.phase)


def update(state: EstimatorState, meas: LandmarkEstimate, rm: np.ndarray) -> EstimatorState:
    """Fuse one perception measurement (identity measurement matrix).

    Joseph-form covariance update keeps the result symmetric positive
    definite.  Raises :class:`PhaseError` outside the fusing phase.
    """
    if state.phase is not Phase.FUSING:
        raise PhaseError("measurement update attempted in dead-reckoning phase")
    rm = np.asarray(rm, dtype=float)
    if rm.shape != (4, 4):
        raise ValueError("measurement noise must have shape (4, 4)")
    z = measurement_vector(meas)
    innovation = z - state.mean
    s = state.cov + rm
    gain = state.cov @ np.linalg.inv(s)
    mean = state.mean + gain @ innovation
    imk = np.eye(4) - gain
    cov = imk @ state.cov @ imk.T + gain @ rm @ gain.T
    return EstimatorState(mean, cov, state.phase)


def two_phase_gate(state: EstimatorState, rho_hat: float, threshold: float) -> EstimatorState:
    """Latch into dead reckoning once the estimated range drops below
    ``threshold``; the switch is one-way."""
    if state.phase is Phase.FUSING and rho_hat < threshold:
        return EstimatorState(state.mean, state.cov, Phase.ODOMETRY_ONLY)
    return state


def process_noise(odo: OdometryDelta, mean: np.ndarray, frac: float) -> np.ndarray:
    """Process noise for one step from fractional odometry error.

    Translation error scales with the step length, rotation error with
    the step heading change times each point's lever arm.
    """
    sig_t = frac * math.hypot(odo.dx, odo.dy)
    sig_r = frac * abs(odo.dtheta)
    mean = np.asarray(mean, dtype=float)
    var_d = sig_t ** 2 + (sig_r * math.hypot(mean[0], mean[1])) ** 2
    var_c = sig_t ** 2 + (sig_r * math.hypot(mean[2], mean[3])) ** 2
    return np.diag([var_d, var_d, var_c, var_c])


def polar_from_estimate(mean: np.ndarray, lm: LandmarkSpec) -> PolarState:
    """Docking state implied by estimated robot frame (D, C) positions."""
    mean = np.asarray(mean, dtype=float)
    xd, yd, xc, yc = mean
    rho = math.hypot(xc, yc)
    if rho < 1e-12:
        raise DomainError("estimated landmark sits on the robot")
    dxd, dyd = xd - xc, yd - yc
    if math.hypot(dxd, dyd) < 1e-12:
        raise DomainError("estimated objective coincides with the landmark")
    psi_oc = math.atan2(yc, xc)
    alpha = normalize_angle(psi_oc - _HALF_PI)
    phi = normalize_angle(math.atan2(dyd, dxd) - psi_oc - lm.beta)
    return PolarState(rho, alpha, phi)
