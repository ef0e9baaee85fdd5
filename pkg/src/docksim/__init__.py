"""Field-of-view constrained docking for a differential drive robot.

The package covers the full stack: perceiving a docking landmark in a
point cloud, a feedback law that keeps the objective inside the camera
field of view while driving range and heading errors to zero, gain
synthesis from the mounting geometry, closed-loop simulation with a
wheel dead zone, feasibility sweeps with a fitted admissible region,
and a two-phase landmark filter.
"""

from .config import (
    DockingConfig,
    EstimationParams,
    IntegrationParams,
    config_hash,
    dump_config,
    load_config,
    parse_angle,
    preset_names,
)
from .controller import (
    ControlCommand,
    Gains,
    control_law,
    control_law_unconstrained,
    design_k3,
    jacobian_eigenvalues,
    linearized_matrix,
    lyapunov_rate,
    lyapunov_rate_unconstrained,
    lyapunov_value,
    sigma,
)
from .errors import (
    BoundaryFitError,
    CloudFormatError,
    ConfigError,
    DockingError,
    DomainError,
    InfeasibleGainsError,
    NoObjectError,
    NotAChairError,
    PhaseError,
)
from .estimation import (
    EstimatorState,
    OdometryDelta,
    Phase,
    initial_state,
    measurement_vector,
    polar_from_estimate,
    predict,
    process_noise,
    two_phase_gate,
    update,
)
from .feasible import (
    BoundaryFit,
    FeasibilityLabel,
    LyapunovReport,
    StateGrid,
    fit_boundary,
    in_fitted_region,
    read_labels_csv,
    sample_fitted_region,
    sweep,
    verify_lyapunov,
    write_labels_csv,
)
from .geometry import (
    CameraSpec,
    LandmarkSpec,
    ObjectFootprint,
    PolarState,
    Pose2D,
    bearing_angle,
    landmark_world_pose,
    normalize_angle,
    object_corners,
    polar_from_world,
    robot_pose_from_polar,
)
from .cloud_io import read_cloud, read_ply, read_xyz, write_cloud, write_ply, write_xyz
from .perception import (
    LandmarkEstimate,
    PerceptionParams,
    PointCloud,
    estimate_from_cloud,
    run_pipeline,
    synth_chair_cloud,
)
from .simulator import (
    ActuatorModel,
    EpisodeOutcome,
    EpisodeResult,
    SafetyRegion,
    TrajectorySample,
    apply_dead_zone,
    fov_check,
    polar_derivatives,
    run_episode,
    write_trajectory_csv,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # geometry
    "Pose2D", "PolarState", "CameraSpec", "LandmarkSpec", "ObjectFootprint",
    "normalize_angle", "polar_from_world", "robot_pose_from_polar",
    "bearing_angle", "object_corners", "landmark_world_pose",
    # controller
    "Gains", "ControlCommand", "sigma", "design_k3", "control_law",
    "control_law_unconstrained", "linearized_matrix", "jacobian_eigenvalues",
    "lyapunov_value", "lyapunov_rate", "lyapunov_rate_unconstrained",
    # simulator
    "ActuatorModel", "SafetyRegion", "EpisodeOutcome", "TrajectorySample",
    "EpisodeResult", "apply_dead_zone", "fov_check", "polar_derivatives",
    "run_episode", "write_trajectory_csv",
    # feasible
    "StateGrid", "FeasibilityLabel", "BoundaryFit", "LyapunovReport",
    "sweep", "fit_boundary", "in_fitted_region", "verify_lyapunov",
    "sample_fitted_region", "write_labels_csv", "read_labels_csv",
    # perception
    "PointCloud", "PerceptionParams", "LandmarkEstimate", "run_pipeline",
    "estimate_from_cloud", "synth_chair_cloud",
    # cloud io
    "read_xyz", "write_xyz", "read_ply", "write_ply", "read_cloud", "write_cloud",
    # estimation
    "Phase", "EstimatorState", "OdometryDelta", "initial_state",
    "measurement_vector", "predict", "update", "two_phase_gate",
    "process_noise", "polar_from_estimate",
    # config
    "DockingConfig", "EstimationParams", "IntegrationParams", "parse_angle",
    "load_config", "dump_config", "config_hash", "preset_names",
    # errors
    "DockingError", "DomainError", "ConfigError", "InfeasibleGainsError",
    "NoObjectError", "NotAChairError", "CloudFormatError", "BoundaryFitError",
    "PhaseError",
]
