"""Closed-loop docking episodes for a differential-drive robot.

The plant is the planar unicycle

    dx/dt = v cos(theta),  dy/dt = v sin(theta),  dtheta/dt = w

integrated with an explicit Euler step.  The world pose is the primary
state; the polar docking state is recomputed from it every step, so the
polar kinematics

    drho/dt = -v cos(alpha)
    dalpha/dt = (v / rho) sin(alpha) - w
    dphi/dt = -(v / rho) sin(alpha)

serve as an independent consistency route, not as the integrator.

A wheel-level dead zone models static friction: each wheel speed command
below ``v_min`` produces no motion at all and speeds are clamped to
``v_max``.  An episode ends on the first of: safety region entry
(converged), objective footprint leaving the camera field of view
(fov_violation), both wheels at rest outside the safety region for at
least one second (dead_zone_stall), or the time budget running out
(timeout).  Domain errors surface as a fault outcome.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DomainError
from .estimation import (
    OdometryDelta,
    Phase,
    initial_state,
    polar_from_estimate,
    predict,
    process_noise,
    two_phase_gate,
    update,
)
from .geometry import (
    CameraSpec,
    ObjectFootprint,
    PolarState,
    Pose2D,
    landmark_world_pose,
    normalize_angle,
    object_corners,
    robot_pose_from_polar,
)
from .perception import LandmarkEstimate

if TYPE_CHECKING:  # pragma: no cover
    from .config import DockingConfig, EstimationParams

__all__ = [
    "ActuatorModel",
    "SafetyRegion",
    "EpisodeOutcome",
    "TrajectorySample",
    "EpisodeResult",
    "apply_dead_zone",
    "fov_check",
    "polar_derivatives",
    "run_episode",
    "write_trajectory_csv",
    "TRAJECTORY_COLUMNS",
]

_FROM_CONFIG = object()
_HALF_PI = 0.5 * math.pi

TRAJECTORY_COLUMNS = (
    "t",
    "x",
    "y",
    "theta",
    "rho",
    "alpha",
    "phi",
    "alpha_star",
    "v_cmd",
    "w_cmd",
    "v_act",
    "w_act",
)
_EST_COLUMNS = ("est_xd", "est_yd", "est_xc", "est_yc")


@dataclass(frozen=True)
class ActuatorModel:
    """Differential drive limits: wheel dead zone and saturation.

    ``half_track`` is half the wheel separation, so wheel speeds are
    v -+ half_track * w.
    """

    v_min: float = 0.02
    v_max: float = 1.0
    half_track: float = 0.25

    def __post_init__(self):
        if not 0.0 <= self.v_min < self.v_max:
            raise ValueError("need 0 <= v_min < v_max")
        if self.half_track <= 0.0:
            raise ValueError("half_track must be > 0")


@dataclass(frozen=True)
class SafetyRegion:
    """Docked-successfully box: rho < rho_max, |alpha| < alpha_max,
    |phi| < phi_max (all strict)."""

    rho_max: float = 0.15
    alpha_max: float = math.radians(10.0)
    phi_max: float = math.radians(10.0)

    def __post_init__(self):
        if self.rho_max <= 0.0 or self.alpha_max <= 0.0 or self.phi_max <= 0.0:
            raise ValueError("safety region bounds must be > 0")

    def contains(self, state: PolarState) -> bool:
        return (
            state.rho < self.rho_max
            and abs(state.alpha) < self.alpha_max
            and abs(state.phi) < self.phi_max
        )


class EpisodeOutcome(enum.Enum):
    CONVERGED = "converged"
    FOV_VIOLATION = "fov_violation"
    TIMEOUT = "timeout"
    DEAD_ZONE_STALL = "dead_zone_stall"
    FAULT = "fault"


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    pose: Pose2D
    state: PolarState
    alpha_star: float
    v_cmd: float
    w_cmd: float
    v_act: float
    w_act: float
    est: tuple | None = None


@dataclass(frozen=True)
class EpisodeResult:
    """Recorded episode: samples, outcome and the worst corner bearing."""

    samples: tuple
    outcome: EpisodeOutcome
    max_abs_bearing: float
    fault: str | None = None
    min_cov_eig: float | None = None

    @property
    def final(self) -> TrajectorySample:
        return self.samples[-1]


def apply_dead_zone(v: float, w: float, act: ActuatorModel) -> tuple:
    """Map a velocity command through the wheel dead zone and saturation.

    Each wheel speed of magnitude below ``v_min`` is zeroed (static
    friction holds the wheel), magnitudes above ``v_max`` are clamped.
    Returns the realized (v, w).
    """
    vl = v - act.half_track * w
    vr = v + act.half_track * w
    if vl > act.v_max:
        vl = act.v_max
    elif vl < -act.v_max:
        vl = -act.v_max
    elif -act.v_min < vl < act.v_min:
        vl = 0.0
    if vr > act.v_max:
        vr = act.v_max
    elif vr < -act.v_max:
        vr = -act.v_max
    elif -act.v_min < vr < act.v_min:
        vr = 0.0
    return 0.5 * (vl + vr), (vr - vl) / (2.0 * act.half_track)


def fov_check(robot: Pose2D, footprint: ObjectFootprint, cam: CameraSpec) -> tuple:
    """Whether all footprint corners sit inside the camera field of view.

    Returns (ok, worst) with ``worst`` the signed corner bearing of the
    largest magnitude.
    """
    ax = robot.x + cam.l * math.cos(robot.theta)
    ay = robot.y + cam.l * math.sin(robot.theta)
    worst = 0.0
    for px, py in object_corners(footprint):
        dx, dy = px - ax, py - ay
        if math.hypot(dx, dy) < 1e-12:
            raise DomainError("footprint corner sits on the camera")
        b = normalize_angle(math.atan2(dy, dx) - robot.theta)
        if abs(b) > abs(worst):
            worst = b
    return abs(worst) <= cam.alpha_bar, worst


def polar_derivatives(state: PolarState, v: float, w: float) -> tuple:
    """Time derivatives (drho, dalpha, dphi) under a velocity command."""
    if state.rho < 1e-12:
        raise DomainError("polar kinematics undefined at rho = 0")
    sa = math.sin(state.alpha)
    swing = v / state.rho * sa
    return (-v * math.cos(state.alpha), swing - w, -swing)


def run_episode(
    initial,
    config: "DockingConfig",
    *,
    actuator=_FROM_CONFIG,
    estimation: "EstimationParams | None" = None,
    seed: int | None = None,
    dt: float | None = None,
    t_max: float | None = None,
    safety: SafetyRegion | None = None,
    record_every: int = 1,
) -> EpisodeResult:
    """Simulate one docking episode.

    Parameters
    ----------
    initial : PolarState or Pose2D
        Starting state; a polar state is placed in the world relative to
        the configured object, a pose is used directly.
    config : DockingConfig
        Geometry, gains, actuator, safety region and integration setup.
    actuator : ActuatorModel or None
        ``None`` selects the ideal actuator (commands pass through).
        Defaults to the configured actuator.
    estimation : EstimationParams or None
        When given, control runs on a Kalman estimate fed by simulated
        noisy perception and odometry instead of ground truth.
    seed : int
        Seed for the estimator noise streams; defaults to the config
        seed.  Episodes without estimation are deterministic regardless.
    record_every : int
        Keep every n-th sample (plus first and last); 0 keeps only the
        first and last.
    """
    cam = config.camera
    lm = config.landmark
    fp = config.object
    gains = config.gains
    if actuator is _FROM_CONFIG:
        actuator = config.actuator
    if dt is None:
        dt = config.integration.dt
    if t_max is None:
        t_max = config.integration.t_max
    if dt <= 0.0 or t_max <= 0.0:
        raise ValueError("dt and t_max must be > 0")
    if record_every < 0:
        raise ValueError("record_every must be >= 0")
    if safety is None:
        safety = config.safety
    if seed is None:
        seed = config.seed

    if isinstance(initial, PolarState):
        robot = robot_pose_from_polar(initial, fp, cam, lm)
    elif isinstance(initial, Pose2D):
        robot = initial
    else:
        raise TypeError("initial must be a PolarState or Pose2D")

    cpose = landmark_world_pose(fp, lm)
    cx, cy = cpose.x, cpose.y
    dx_obj, dy_obj = fp.center.x, fp.center.y
    psi_dc = normalize_angle(fp.center.theta + lm.lam + math.pi)
    corners = object_corners(fp)

    k1, k2, k3 = gains.k1, gains.k2, gains.k3
    l, r, beta = cam.l, lm.r, lm.beta
    abar = cam.alpha_bar
    s2abar = math.sin(abar) ** 2
    s_rho, s_al, s_ph = safety.rho_max, safety.alpha_max, safety.phi_max
    max_steps = max(int(round(t_max / dt)), 1)
    stall_steps = max(int(round(1.0 / dt)), 1)

    remainder = math.remainder
    atan2 = math.atan2
    sin, cos, hypot = math.sin, math.cos, math.hypot
    tau, pi = math.tau, math.pi

    ox, oy, th = robot.x, robot.y, robot.theta

    rng = None
    ekf = None
    rm = None
    min_eig = None
    if estimation is not None:
        rng = np.random.default_rng(seed)
        rm = np.diag([estimation.meas_sigma ** 2 + 1e-12] * 4)

    def measure():
        st_, ct_ = sin(th), cos(th)
        ddx, ddy = dx_obj - ox, dy_obj - oy
        cdx, cdy = cx - ox, cy - oy
        z = np.array(
            [
                ddx * st_ - ddy * ct_,
                ddx * ct_ + ddy * st_,
                cdx * st_ - cdy * ct_,
                cdx * ct_ + cdy * st_,
            ]
        )
        z = z + rng.normal(0.0, estimation.meas_sigma, 4)
        heading = normalize_angle(psi_dc - beta - th + _HALF_PI)
        return LandmarkEstimate((z[0], z[1]), (z[2], z[3]), heading)

    if estimation is not None:
        ekf = initial_state(measure(), estimation.meas_sigma)
        min_eig = float(np.linalg.eigvalsh(ekf.cov)[0])

    samples = []
    outcome = None
    fault = None
    max_bearing = 0.0
    zero_run = 0
    step = 0

    while True:
        t = step * dt
        dxc = cx - ox
        dyc = cy - oy
        rho = hypot(dxc, dyc)
        if rho < 1e-12:
            outcome = EpisodeOutcome.FAULT
            fault = "robot reached the landmark point exactly"
            break
        psi_oc = atan2(dyc, dxc)
        alpha = remainder(psi_oc - th, tau)
        if alpha <= -pi:
            alpha += tau
        phi = remainder(psi_dc - psi_oc - beta, tau)
        if phi <= -pi:
            phi += tau

        apb = alpha + phi + beta
        by = -l + rho * cos(alpha) + r * cos(apb)
        bx = -rho * sin(alpha) - r * sin(apb)
        astar = remainder(atan2(by, bx) - _HALF_PI, tau)
        if astar <= -pi:
            astar += tau

        costh = cos(th)
        sinth = sin(th)
        ax = ox + l * costh
        ay = oy + l * sinth
        worst = 0.0
        for px, py in corners:
            b = remainder(atan2(py - ay, px - ax) - th, tau)
            if b <= -pi:
                b += tau
            if b < 0.0:
                b = -b
            if b > worst:
                worst = b
        if worst > max_bearing:
            max_bearing = worst

        in_omega = rho < s_rho and -s_al < alpha < s_al and -s_ph < phi < s_ph

        if ekf is not None:
            try:
                est = polar_from_estimate(ekf.mean, lm)
            except DomainError as exc:
                outcome = EpisodeOutcome.FAULT
                fault = str(exc)
                break
            erho, ealpha, ephi = est.rho, est.alpha, est.phi
            eapb = ealpha + ephi + beta
            eby = -l + erho * cos(ealpha) + r * cos(eapb)
            ebx = -erho * sin(ealpha) - r * sin(eapb)
            estar = remainder(atan2(eby, ebx) - _HALF_PI, tau)
            if estar <= -pi:
                estar += tau
            est_tuple = (ekf.mean[0], ekf.mean[1], ekf.mean[2], ekf.mean[3])
        else:
            erho, ealpha, ephi, estar = rho, alpha, phi, astar
            est_tuple = None

        ca = cos(ealpha)
        sa = sin(ealpha)
        v_cmd = k1 * erho * ca
        w_cmd = k2 * sa * ca - k3 * ephi * (s2abar - sin(estar) ** 2)

        if actuator is None:
            v_act, w_act = v_cmd, w_cmd
        else:
            v_act, w_act = apply_dead_zone(v_cmd, w_cmd, actuator)

        if not in_omega and v_act == 0.0 and w_act == 0.0 and actuator is not None:
            zero_run += 1
        else:
            zero_run = 0

        if in_omega:
            outcome = EpisodeOutcome.CONVERGED
        elif worst > abar:
            outcome = EpisodeOutcome.FOV_VIOLATION
        elif zero_run >= stall_steps:
            outcome = EpisodeOutcome.DEAD_ZONE_STALL
        elif step >= max_steps:
            outcome = EpisodeOutcome.TIMEOUT

        terminal = outcome is not None
        if terminal or record_every == 1 or (record_every > 1 and step % record_every == 0) or step == 0:
            samples.append(
                TrajectorySample(
                    t,
                    Pose2D(ox, oy, th),
                    PolarState(rho, alpha, phi),
                    astar,
                    v_cmd,
                    w_cmd,
                    v_act,
                    w_act,
                    est_tuple,
                )
            )
        if terminal:
            break

        ox += dt * v_act * costh
        oy += dt * v_act * sinth
        th = remainder(th + dt * w_act, tau)
        if th <= -pi:
            th += tau

        if ekf is not None:
            dy_r = dt * v_act
            dth_r = dt * w_act
            frac = estimation.odom_frac
            odo = OdometryDelta(
                rng.normal(0.0, frac * abs(dy_r)),
                dy_r + rng.normal(0.0, frac * abs(dy_r)),
                dth_r + rng.normal(0.0, frac * abs(dth_r)),
            )
            q = process_noise(odo, ekf.mean, frac)
            ekf = predict(ekf, odo, q)
            z = measure()
            if ekf.phase is Phase.FUSING:
                ekf = update(ekf, z, rm)
            rho_hat = hypot(ekf.mean[2], ekf.mean[3])
            ekf = two_phase_gate(ekf, rho_hat, estimation.switch_threshold)
            eig = float(np.linalg.eigvalsh(ekf.cov)[0])
            if eig < min_eig:
                min_eig = eig

        step += 1

    if not samples:
        samples.append(
            TrajectorySample(
                step * dt,
                Pose2D(ox, oy, th),
                PolarState(max(rho, 0.0), 0.0, 0.0),
                0.0,
                0.0,
                0.0,
                0.0,
                0.0,
                None,
            )
        )
    return EpisodeResult(tuple(samples), outcome, max_bearing, fault, min_eig)


def write_trajectory_csv(result: EpisodeResult, path) -> None:
    """Write the recorded samples as CSV with 9 significant digits.

    Columns: t,x,y,theta,rho,alpha,phi,alpha_star,v_cmd,w_cmd,v_act,
    w_act, plus est_xd,est_yd,est_xc,est_yc when an estimator ran.
    """
    has_est = any(s.est is not None for s in result.samples)
    columns = TRAJECTORY_COLUMNS + (_EST_COLUMNS if has_est else ())
    lines = [",".join(columns)]
    for s in result.samples:
        row = [
            s.t,
            s.pose.x,
            s.pose.y,
            s.pose.theta,
            s.state.rho,
            s.state.alpha,
            s.state.phi,
            s.alpha_star,
            s.v_cmd,
            s.w_cmd,
            s.v_act,
            s.w_act,
        ]
        if has_est:
            row.extend(s.est if s.est is not None else (math.nan,) * 4)
        lines.append(",".join("%.9g" % v for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
