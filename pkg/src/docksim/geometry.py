"""Planar geometry for camera-guided docking.

Frames and conventions
----------------------
world
    Fixed inertial frame.  Angles are measured from the +x axis and
    normalized to (-pi, pi].
robot
    Origin at the wheel-axle midpoint O, +y along the heading, +x to the
    right.  The camera optical center A sits on the +y axis at distance
    ``l`` ahead of O, so a robot at world pose (0, 0, pi/2) has a robot
    frame coincident with the world frame.
polar docking state
    (rho, alpha, phi) relative to a landmark point C and an objective
    point D: ``rho`` is the O-to-C distance, ``alpha`` the angle from the
    heading ray through A to the ray OC, and ``phi`` the angle of D-C
    minus the angle of C-O minus the landmark offset ``beta``.  The state
    (rho, 0, 0) means C is straight ahead and the approach is aligned
    with the docking direction.

The landmark C is a virtual point attached to the physical object: it
lies at distance ``r`` from the objective D, rotated by ``lambda`` about
D away from the object centerline.  A docked robot sits on C heading
along the C-to-D direction minus ``beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "Pose2D",
    "CameraSpec",
    "LandmarkSpec",
    "ObjectFootprint",
    "PolarState",
    "normalize_angle",
    "polar_from_world",
    "world_from_polar",
    "landmark_from_polar",
    "bearing_angle",
    "object_corners",
    "landmark_world_pose",
    "robot_pose_from_polar",
]

_HALF_PI = 0.5 * math.pi
_POINT_EPS = 1e-12


def normalize_angle(angle: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi].

    Parameters
    ----------
    angle : float
        Angle in radians.  Must be finite.

    Returns
    -------
    float
        Equivalent angle with -pi < result <= pi.
    """
    if not math.isfinite(angle):
        raise DomainError("angle must be finite")
    wrapped = math.remainder(angle, math.tau)
    if wrapped <= -math.pi:
        wrapped += math.tau
    return wrapped


def _require_finite(obj, names):
    for name in names:
        if not math.isfinite(getattr(obj, name)):
            raise DomainError(f"{type(obj).__name__}.{name} must be finite")


@dataclass(frozen=True)
class Pose2D:
    """Planar pose: position (x, y) in meters, heading ``theta`` in radians.

    ``theta`` is normalized to (-pi, pi] on construction.
    """

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        _require_finite(self, ("x", "y", "theta"))
        object.__setattr__(self, "theta", normalize_angle(self.theta))


@dataclass(frozen=True)
class CameraSpec:
    """Forward camera mounted on the robot centerline.

    Attributes
    ----------
    l : float
        Distance from the wheel-axle midpoint to the optical center [m].
    alpha_bar : float
        Half horizontal field of view [rad], in (0, pi/2).
    gamma : float
        Downward pitch of the optical axis [rad], in (-pi/2, pi/2).
    z_a : float
        Mount height of the optical center above the floor [m].
    """

    l: float
    alpha_bar: float
    gamma: float = 0.0
    z_a: float = 0.6

    def __post_init__(self):
        _require_finite(self, ("l", "alpha_bar", "gamma", "z_a"))
        if self.l < 0.0:
            raise ValueError("camera offset l must be >= 0")
        if not 0.0 < self.alpha_bar < _HALF_PI:
            raise ValueError("alpha_bar must lie in (0, pi/2)")
        if not -_HALF_PI < self.gamma < _HALF_PI:
            raise ValueError("gamma must lie in (-pi/2, pi/2)")
        if self.z_a <= 0.0:
            raise ValueError("mount height z_a must be > 0")


@dataclass(frozen=True)
class LandmarkSpec:
    """Virtual landmark placement relative to the objective.

    Attributes
    ----------
    r : float
        Distance from the objective D to the landmark C [m], > 0.
    beta : float
        Angle from the C-to-D direction to the docked heading [rad].
    lam : float
        Rotation of C about D away from the object centerline [rad].
    """

    r: float
    beta: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        _require_finite(self, ("r", "beta", "lam"))
        if self.r <= 0.0:
            raise ValueError("landmark radius r must be > 0")
        object.__setattr__(self, "beta", normalize_angle(self.beta))
        object.__setattr__(self, "lam", normalize_angle(self.lam))


@dataclass(frozen=True)
class ObjectFootprint:
    """Rectangular plan-view footprint of the physical docking object.

    ``center`` is the objective pose D; its heading is the object
    centerline pointing out of the object front, i.e. from the back part
    toward the bottom part.  ``depth`` extends along the centerline,
    ``width`` across it.
    """

    width: float
    depth: float
    center: Pose2D

    def __post_init__(self):
        _require_finite(self, ("width", "depth"))
        if self.width <= 0.0 or self.depth <= 0.0:
            raise ValueError("footprint width and depth must be > 0")


@dataclass(frozen=True)
class PolarState:
    """Docking state (rho, alpha, phi); angles normalized to (-pi, pi]."""

    rho: float
    alpha: float
    phi: float

    def __post_init__(self):
        _require_finite(self, ("rho", "alpha", "phi"))
        if self.rho < 0.0:
            raise ValueError("rho must be >= 0")
        object.__setattr__(self, "alpha", normalize_angle(self.alpha))
        object.__setattr__(self, "phi", normalize_angle(self.phi))


def polar_from_world(
    robot: Pose2D,
    landmark: Pose2D,
    objective: Pose2D,
    cam: CameraSpec,
    lm: LandmarkSpec,
) -> PolarState:
    """Docking state of ``robot`` relative to world landmark/objective poses.

    Only the positions of ``landmark`` and ``objective`` enter; their
    headings are carried for bookkeeping.  The camera ray leaves O along
    the heading, so ``alpha`` reduces to the landmark bearing minus
    ``robot.theta`` for any camera offset ``l``.
    """
    del cam
    dxc = landmark.x - robot.x
    dyc = landmark.y - robot.y
    rho = math.hypot(dxc, dyc)
    if rho < _POINT_EPS:
        raise DomainError("robot sits on the landmark, polar state undefined")
    dxd = objective.x - landmark.x
    dyd = objective.y - landmark.y
    if math.hypot(dxd, dyd) < _POINT_EPS:
        raise DomainError("objective coincides with the landmark")
    psi_oc = math.atan2(dyc, dxc)
    alpha = normalize_angle(psi_oc - robot.theta)
    phi = normalize_angle(math.atan2(dyd, dxd) - psi_oc - lm.beta)
    return PolarState(rho, alpha, phi)


def world_from_polar(state: PolarState, cam: CameraSpec, lm: LandmarkSpec) -> Pose2D:
    """Objective pose D in the robot frame for a given docking state.

    The returned heading is the object centerline direction.  Composing
    with :func:`polar_from_world` (robot at world pose (0, 0, pi/2), so
    robot frame equals world frame) recovers ``state``.
    """
    del cam
    a = state.alpha + _HALF_PI
    b = state.alpha + state.phi + lm.beta + _HALF_PI
    x = state.rho * math.cos(a) + lm.r * math.cos(b)
    y = state.rho * math.sin(a) + lm.r * math.sin(b)
    return Pose2D(x, y, normalize_angle(b + math.pi - lm.lam))


def landmark_from_polar(state: PolarState, cam: CameraSpec, lm: LandmarkSpec) -> Pose2D:
    """Landmark pose C in the robot frame: position plus docked heading."""
    del cam
    a = state.alpha + _HALF_PI
    return Pose2D(
        state.rho * math.cos(a),
        state.rho * math.sin(a),
        normalize_angle(state.alpha + state.phi + _HALF_PI),
    )


def bearing_angle(state: PolarState, cam: CameraSpec, lm: LandmarkSpec) -> float:
    """Camera bearing of the objective D for a given docking state.

    Zero means D lies on the optical axis; the objective stays visible
    while the magnitude is below ``cam.alpha_bar``.  Reduces to ``alpha``
    as both ``l`` and ``r`` go to zero.
    """
    ab = state.alpha + state.phi + lm.beta
    y = -cam.l + state.rho * math.cos(state.alpha) + lm.r * math.cos(ab)
    x = -state.rho * math.sin(state.alpha) - lm.r * math.sin(ab)
    if math.hypot(x, y) < _POINT_EPS:
        raise DomainError("objective sits on the camera, bearing undefined")
    return normalize_angle(math.atan2(y, x) - _HALF_PI)


def object_corners(footprint: ObjectFootprint) -> tuple:
    """World (x, y) positions of the four footprint corners.

    Order: front-left, front-right, rear-left, rear-right when looking
    along the centerline heading.
    """
    cx, cy = footprint.center.x, footprint.center.y
    ex = math.cos(footprint.center.theta)
    ey = math.sin(footprint.center.theta)
    hd = 0.5 * footprint.depth
    hw = 0.5 * footprint.width
    return (
        (cx + hd * ex - hw * ey, cy + hd * ey + hw * ex),
        (cx + hd * ex + hw * ey, cy + hd * ey - hw * ex),
        (cx - hd * ex - hw * ey, cy - hd * ey + hw * ex),
        (cx - hd * ex + hw * ey, cy - hd * ey - hw * ex),
    )


def landmark_world_pose(footprint: ObjectFootprint, lm: LandmarkSpec) -> Pose2D:
    """World pose of the landmark C derived from the object placement.

    C lies at distance ``r`` from D along the centerline rotated by
    ``lambda``; the heading is the docked robot heading.
    """
    psi = footprint.center.theta
    ang = psi + lm.lam
    return Pose2D(
        footprint.center.x + lm.r * math.cos(ang),
        footprint.center.y + lm.r * math.sin(ang),
        normalize_angle(ang + math.pi - lm.beta),
    )


def robot_pose_from_polar(
    state: PolarState,
    footprint: ObjectFootprint,
    cam: CameraSpec,
    lm: LandmarkSpec,
) -> Pose2D:
    """World robot pose realizing ``state`` for the given object placement.

    Inverse of :func:`polar_from_world` with the landmark and objective
    at their world poses.
    """
    del cam
    if state.rho < _POINT_EPS:
        raise DomainError("rho must be positive to place the robot")
    c = landmark_world_pose(footprint, lm)
    psi_dc = footprint.center.theta + lm.lam + math.pi
    psi_oc = psi_dc - lm.beta - state.phi
    return Pose2D(
        c.x - state.rho * math.cos(psi_oc),
        c.y - state.rho * math.sin(psi_oc),
        normalize_angle(psi_oc - state.alpha),
    )
