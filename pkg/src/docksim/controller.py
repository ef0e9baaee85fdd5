"""Nonlinear docking controller and gain synthesis.

The control law drives the polar docking state (rho, alpha, phi) to the
origin while keeping the objective inside the camera field of view.  It
descends the Lyapunov function

    V = rho**2 / 2 + sin(alpha)**2 / 2 + phi**2 / 2

with commands

    v = k1 * rho * cos(alpha)
    w = k2 * sin(alpha) * cos(alpha) - k3 * phi * (sin(abar)**2 - sin(astar)**2)

where ``astar`` is the objective bearing and ``abar`` the half field of
view.  The gating factor weakens the phi correction exactly when it
would push the objective toward the image edge and flips its sign once
the bearing exceeds the limit.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleGainsError
from .geometry import CameraSpec, LandmarkSpec, PolarState, bearing_angle

__all__ = [
    "Gains",
    "ControlCommand",
    "sigma",
    "design_k3",
    "linearized_matrix",
    "jacobian_eigenvalues",
    "control_law",
    "control_law_unconstrained",
    "lyapunov_value",
    "lyapunov_rate",
    "lyapunov_rate_unconstrained",
]


@dataclass(frozen=True)
class Gains:
    """Controller gains; requires k1 > 0, k2 > k1, k3 > 0."""

    k1: float
    k2: float
    k3: float

    def __post_init__(self):
        for name in ("k1", "k2", "k3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"gain {name} must be finite")
        if self.k1 <= 0.0:
            raise ValueError("k1 must be > 0")
        if self.k2 <= self.k1:
            raise ValueError("k2 must exceed k1")
        if self.k3 <= 0.0:
            raise ValueError("k3 must be > 0")


@dataclass(frozen=True)
class ControlCommand:
    """Linear velocity v [m/s] and angular velocity w [rad/s]."""

    v: float
    w: float


def sigma(cam: CameraSpec, lm: LandmarkSpec) -> float:
    """Docked camera-to-objective distance.

    sigma = sqrt(r**2 sin(beta)**2 + (l - r cos(beta))**2); for beta = 0
    this is |l - r|.
    """
    return math.hypot(lm.r * math.sin(lm.beta), cam.l - lm.r * math.cos(lm.beta))


def _coupling(k3: float, cam: CameraSpec, lm: LandmarkSpec) -> float:
    """phi coupling coefficient of the closed loop linearized at dock."""
    sig2 = sigma(cam, lm) ** 2
    if sig2 == 0.0:
        raise DomainError("sigma is zero, docked camera sits on the objective")
    rb2 = (lm.r * math.sin(lm.beta)) ** 2
    return k3 * (sig2 * math.sin(cam.alpha_bar) ** 2 - rb2) / sig2


def design_k3(k1: float, k2: float, cam: CameraSpec, lm: LandmarkSpec) -> float:
    """Critically damping phi gain for given k1, k2 and geometry.

    Returns the k3 that collapses the two coupled closed-loop poles onto
    (k1 - k2) / 2, so the linearized dock approach neither oscillates
    nor slows down.

    Raises
    ------
    InfeasibleGainsError
        If sigma**2 sin(abar)**2 <= r**2 sin(beta)**2, i.e. the docked
        bearing of the objective already sits at or beyond the field of
        view edge and no positive k3 can damp the approach.
    """
    if not (math.isfinite(k1) and math.isfinite(k2)):
        raise ValueError("gains must be finite")
    if k1 <= 0.0 or k2 <= k1:
        raise ValueError("need k1 > 0 and k2 > k1")
    sig2 = sigma(cam, lm) ** 2
    den = sig2 * math.sin(cam.alpha_bar) ** 2 - (lm.r * math.sin(lm.beta)) ** 2
    if den <= 0.0:
        raise InfeasibleGainsError(
            "docked objective bearing reaches the field of view edge; "
            "no critically damping k3 exists"
        )
    return (k2 - k1) ** 2 * sig2 / (4.0 * k1 * den)


def linearized_matrix(gains, cam: CameraSpec, lm: LandmarkSpec) -> np.ndarray:
    """Closed-loop Jacobian at the docked state, rows d(rho, alpha, phi)."""
    c = _coupling(gains.k3, cam, lm)
    k1, k2 = gains.k1, gains.k2
    return np.array(
        [
            [-k1, 0.0, 0.0],
            [0.0, k1 - k2, c],
            [0.0, -k1, 0.0],
        ]
    )


def jacobian_eigenvalues(gains, cam: CameraSpec, lm: LandmarkSpec) -> tuple:
    """Closed-form eigenvalues of :func:`linearized_matrix`.

    The rho channel decouples with eigenvalue -k1.  The (alpha, phi)
    block has trace k1 - k2 and determinant k1 times the phi coupling,
    giving the root pair ((k1 - k2) +/- sqrt(disc)) / 2 from its
    characteristic polynomial.  Matches a numeric eigensolve of the
    matrix; values may be complex.
    """
    c = _coupling(gains.k3, cam, lm)
    tr = gains.k1 - gains.k2
    root = cmath.sqrt(complex(tr * tr - 4.0 * gains.k1 * c))
    return (complex(-gains.k1), 0.5 * (tr + root), 0.5 * (tr - root))


def control_law(
    state: PolarState, gains: Gains, cam: CameraSpec, lm: LandmarkSpec
) -> ControlCommand:
    """Field-of-view aware docking command for the current state."""
    astar = bearing_angle(state, cam, lm)
    sa = math.sin(state.alpha)
    ca = math.cos(state.alpha)
    gate = math.sin(cam.alpha_bar) ** 2 - math.sin(astar) ** 2
    return ControlCommand(
        gains.k1 * state.rho * ca,
        gains.k2 * sa * ca - gains.k3 * state.phi * gate,
    )


def control_law_unconstrained(state: PolarState, gains: Gains) -> ControlCommand:
    """Docking command ignoring the field of view (plain phi feedback)."""
    sa = math.sin(state.alpha)
    ca = math.cos(state.alpha)
    return ControlCommand(
        gains.k1 * state.rho * ca,
        gains.k2 * sa * ca - gains.k3 * state.phi,
    )


def lyapunov_value(state: PolarState) -> float:
    """V = rho**2 / 2 + sin(alpha)**2 / 2 + phi**2 / 2."""
    return 0.5 * (state.rho ** 2 + math.sin(state.alpha) ** 2 + state.phi ** 2)


def lyapunov_rate(
    state: PolarState, gains: Gains, cam: CameraSpec, lm: LandmarkSpec
) -> float:
    """Time derivative of V along the closed loop under :func:`control_law`.

    Uses the analytic bearing of the current state, not a sensor value.
    """
    astar = bearing_angle(state, cam, lm)
    sa = math.sin(state.alpha)
    ca = math.cos(state.alpha)
    gate = math.sin(cam.alpha_bar) ** 2 - math.sin(astar) ** 2
    k1 = gains.k1
    return (
        -k1 * (state.rho * ca) ** 2
        + (k1 - gains.k2) * (sa * ca) ** 2
        - (k1 - gains.k3 * gate) * state.phi * sa * ca
    )


def lyapunov_rate_unconstrained(state: PolarState, gains: Gains) -> float:
    """Time derivative of V under :func:`control_law_unconstrained`.

    For k3 = k1 the phi cross term cancels and the rate is globally
    nonpositive, vanishing only where both rho cos(alpha) and
    sin(alpha) cos(alpha) vanish.
    """
    sa = math.sin(state.alpha)
    ca = math.cos(state.alpha)
    k1 = gains.k1
    return (
        -k1 * (state.rho * ca) ** 2
        + (k1 - gains.k2) * (sa * ca) ** 2
        + (gains.k3 - k1) * state.phi * sa * ca
    )
