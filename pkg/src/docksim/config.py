"""Configuration for the docking stack.

A configuration bundles camera mounting, landmark geometry, the object
footprint, controller gains, actuator limits, the safety region and
integration/estimation settings.  Configurations load from YAML files or
from named presets shipped with the package; every section and key is
optional and falls back to the defaults below.  Unknown keys are
rejected with the offending dotted path.

Angle-valued keys accept plain numbers (radians) or strings with an
explicit unit suffix such as ``"40deg"`` or ``"0.7rad"``.  ``gains.k3``
may be ``null``, in which case the critically damped value is computed
from the geometry.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .controller import Gains, design_k3
from .errors import ConfigError, InfeasibleGainsError
from .geometry import CameraSpec, LandmarkSpec, ObjectFootprint, Pose2D
from .simulator import ActuatorModel, SafetyRegion

__all__ = [
    "EstimationParams",
    "IntegrationParams",
    "DockingConfig",
    "parse_angle",
    "load_config",
    "dump_config",
    "config_hash",
    "preset_names",
]


@dataclass(frozen=True)
class EstimationParams:
    """Noise model and gating for the landmark estimator.

    meas_sigma is the per-axis standard deviation of simulated landmark
    measurements in metres, odom_frac the odometry error as a fraction
    of the commanded motion, and switch_threshold the estimated range
    below which the filter stops fusing measurements.
    """

    meas_sigma: float = 0.03
    odom_frac: float = 0.01
    switch_threshold: float = 0.8

    def __post_init__(self):
        if self.meas_sigma < 0.0:
            raise ValueError("meas_sigma must be >= 0")
        if self.odom_frac < 0.0:
            raise ValueError("odom_frac must be >= 0")
        if self.switch_threshold <= 0.0:
            raise ValueError("switch_threshold must be > 0")


@dataclass(frozen=True)
class IntegrationParams:
    dt: float = 0.01
    t_max: float = 40.0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be > 0")
        if self.t_max < self.dt:
            raise ValueError("t_max must be >= dt")


@dataclass(frozen=True)
class DockingConfig:
    camera: CameraSpec
    landmark: LandmarkSpec
    object: ObjectFootprint
    gains: Gains
    actuator: ActuatorModel = ActuatorModel()
    safety: SafetyRegion = SafetyRegion()
    integration: IntegrationParams = IntegrationParams()
    estimation: EstimationParams = EstimationParams()
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ValueError("seed must be an integer")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


def parse_angle(value) -> float:
    """Parse an angle given in radians or with a deg/rad suffix.

    Numbers pass through as radians.  Strings must end in ``deg`` or
    ``rad``, e.g. ``"40deg"``, ``"-0.35rad"``.
    """
    if isinstance(value, bool):
        raise ValueError("angle must be a number or a 'deg'/'rad' string")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        text = value.strip().lower()
        try:
            if text.endswith("deg"):
                out = math.radians(float(text[:-3]))
            elif text.endswith("rad"):
                out = float(text[:-3])
            else:
                out = float(text)
        except ValueError:
            raise ValueError(f"cannot parse angle {value!r}") from None
    else:
        raise ValueError("angle must be a number or a 'deg'/'rad' string")
    if not math.isfinite(out):
        raise ValueError(f"angle {value!r} is not finite")
    return out


_FLOAT = "float"
_ANGLE = "angle"
_INT = "int"
_OPT_FLOAT = "opt_float"

_SCHEMA = {
    "camera": {
        "l": (_FLOAT, 0.26),
        "alpha_bar": (_ANGLE, math.radians(40.0)),
        "gamma": (_ANGLE, math.radians(20.0)),
        "z_a": (_FLOAT, 0.6),
    },
    "landmark": {
        "r": (_FLOAT, 0.9),
        "beta": (_ANGLE, 0.0),
        "lambda": (_ANGLE, 0.0),
    },
    "object": {
        "width": (_FLOAT, 0.5),
        "depth": (_FLOAT, 0.5),
        "x": (_FLOAT, 0.0),
        "y": (_FLOAT, 0.0),
        "heading": (_ANGLE, -0.5 * math.pi),
    },
    "gains": {
        "k1": (_FLOAT, 0.15),
        "k2": (_FLOAT, 0.6),
        "k3": (_OPT_FLOAT, None),
    },
    "actuator": {
        "v_min": (_FLOAT, 0.02),
        "v_max": (_FLOAT, 1.0),
        "half_track": (_FLOAT, 0.25),
    },
    "safety": {
        "rho_max": (_FLOAT, 0.15),
        "alpha_max": (_ANGLE, math.radians(10.0)),
        "phi_max": (_ANGLE, math.radians(10.0)),
    },
    "integration": {
        "dt": (_FLOAT, 0.01),
        "t_max": (_FLOAT, 40.0),
    },
    "estimation": {
        "meas_sigma": (_FLOAT, 0.03),
        "odom_frac": (_FLOAT, 0.01),
        "switch_threshold": (_FLOAT, 0.8),
    },
}


def _coerce(kind, value, path):
    if kind == _ANGLE:
        try:
            return parse_angle(value)
        except ValueError as exc:
            raise ConfigError(str(exc), field=path) from None
    if kind == _OPT_FLOAT and value is None:
        return None
    if kind == _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", field=path)
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=path)
    out = float(value)
    if not math.isfinite(out):
        raise ConfigError(f"value {value!r} is not finite", field=path)
    return out


def _parse_section(name, raw):
    spec = _SCHEMA[name]
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section must be a mapping, got {raw!r}", field=name)
    for key in raw:
        if key not in spec:
            raise ConfigError(f"unknown key '{name}.{key}'", field=f"{name}.{key}")
    out = {}
    for key, (kind, default) in spec.items():
        if key in raw:
            out[key] = _coerce(kind, raw[key], f"{name}.{key}")
        else:
            out[key] = default
    return out


def _build(data) -> DockingConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    known = set(_SCHEMA) | {"seed"}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown key '{key}'", field=str(key))

    sections = {name: _parse_section(name, data.get(name)) for name in _SCHEMA}
    seed = _coerce(_INT, data.get("seed", 0), "seed")
    if seed < 0:
        raise ConfigError("seed must be >= 0", field="seed")

    def build(section, ctor, **kwargs):
        try:
            return ctor(**kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc), field=section) from None

    cam = build("camera", CameraSpec, **sections["camera"])
    lmv = sections["landmark"]
    lm = build("landmark", LandmarkSpec, r=lmv["r"], beta=lmv["beta"], lam=lmv["lambda"])
    obj = sections["object"]
    fp = build(
        "object",
        ObjectFootprint,
        width=obj["width"],
        depth=obj["depth"],
        center=Pose2D(obj["x"], obj["y"], obj["heading"]),
    )
    gv = sections["gains"]
    k3 = gv["k3"]
    if k3 is None:
        try:
            k3 = design_k3(gv["k1"], gv["k2"], cam, lm)
        except (ValueError, InfeasibleGainsError) as exc:
            raise ConfigError(str(exc), field="gains.k3") from None
    gains = build("gains", Gains, k1=gv["k1"], k2=gv["k2"], k3=k3)
    actuator = build("actuator", ActuatorModel, **sections["actuator"])
    safety = build("safety", SafetyRegion, **sections["safety"])
    integration = build("integration", IntegrationParams, **sections["integration"])
    estimation = build("estimation", EstimationParams, **sections["estimation"])
    return DockingConfig(
        camera=cam,
        landmark=lm,
        object=fp,
        gains=gains,
        actuator=actuator,
        safety=safety,
        integration=integration,
        estimation=estimation,
        seed=seed,
    )


def preset_names() -> tuple:
    """Names of the configuration presets shipped with the package."""
    root = resources.files("docksim") / "presets"
    names = [p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml")]
    return tuple(sorted(names))


def load_config(source) -> DockingConfig:
    """Load a configuration from a dict, a YAML file, or a preset name."""
    if isinstance(source, dict):
        return _build(source)
    if not isinstance(source, (str, Path)):
        raise TypeError("source must be a mapping, path or preset name")
    path = Path(source)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    else:
        name = str(source)
        if "/" not in name and "\\" not in name:
            res = resources.files("docksim") / "presets" / f"{name}.yaml"
            if res.is_file():
                text = res.read_text(encoding="utf-8")
            else:
                raise ConfigError(
                    f"no config file or preset named {name!r}"
                    f" (presets: {', '.join(preset_names())})"
                )
        else:
            raise ConfigError(f"config file not found: {source}")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    return _build(data)


def dump_config(config: DockingConfig) -> str:
    """Serialize a configuration to canonical YAML.

    All angles are written in radians and the designed gain is written
    out explicitly, so the dump fully pins the run down and loading it
    back reproduces the configuration exactly.
    """
    data = {
        "camera": {
            "l": config.camera.l,
            "alpha_bar": config.camera.alpha_bar,
            "gamma": config.camera.gamma,
            "z_a": config.camera.z_a,
        },
        "landmark": {
            "r": config.landmark.r,
            "beta": config.landmark.beta,
            "lambda": config.landmark.lam,
        },
        "object": {
            "width": config.object.width,
            "depth": config.object.depth,
            "x": config.object.center.x,
            "y": config.object.center.y,
            "heading": config.object.center.theta,
        },
        "gains": {
            "k1": config.gains.k1,
            "k2": config.gains.k2,
            "k3": config.gains.k3,
        },
        "actuator": {
            "v_min": config.actuator.v_min,
            "v_max": config.actuator.v_max,
            "half_track": config.actuator.half_track,
        },
        "safety": {
            "rho_max": config.safety.rho_max,
            "alpha_max": config.safety.alpha_max,
            "phi_max": config.safety.phi_max,
        },
        "integration": {
            "dt": config.integration.dt,
            "t_max": config.integration.t_max,
        },
        "estimation": {
            "meas_sigma": config.estimation.meas_sigma,
            "odom_frac": config.estimation.odom_frac,
            "switch_threshold": config.estimation.switch_threshold,
        },
        "seed": config.seed,
    }
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=False)


def config_hash(config: DockingConfig) -> str:
    """Hex digest identifying a configuration's exact contents."""
    return hashlib.sha256(dump_config(config).encode("utf-8")).hexdigest()
