"""Point cloud perception: from a depth camera cloud to a landmark estimate.

Camera frame convention (standard optical): x right, y down in the
image, z along the optical axis.  The camera sits ``l`` ahead of the
wheel-axle midpoint at height ``z_a`` and is pitched down by ``gamma``,
so the world height of a camera frame point (x, y, z) is

    h = z_a - (y * cos(gamma) + z * sin(gamma))

and the horizontal plane through the optical center is
y + z * tan(gamma) = 0.

Pipeline: passthrough box filter, voxel downsample, Euclidean
clustering, closest-cluster selection, bottom/back height split,
centroid projection onto the horizontal plane, landmark construction at
distance ``r`` from the bottom centroid along the back-to-bottom
direction rotated by ``lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import DomainError, NoObjectError, NotAChairError
from .geometry import CameraSpec, LandmarkSpec, ObjectFootprint, Pose2D, normalize_angle

__all__ = [
    "PointCloud",
    "PerceptionParams",
    "PlanarTransform",
    "LandmarkEstimate",
    "camera_plan_transform",
    "passthrough_filter",
    "voxel_downsample",
    "euclidean_clusters",
    "select_object",
    "split_bottom_back",
    "project_to_horizontal",
    "estimate_landmark",
    "estimate_from_cloud",
    "run_pipeline",
    "PipelineResult",
    "synth_chair_planes",
    "synth_chair_cloud",
    "robot_from_camera_xyz",
    "camera_from_robot_xyz",
]


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Immutable set of 3D points, shape (n, 3), float64, finite."""

    xyz: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.xyz, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            if pts.size == 0:
                pts = pts.reshape(0, 3)
            else:
                raise ValueError("point cloud must have shape (n, 3)")
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValueError("point cloud coordinates must be finite")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "xyz", pts)

    def __len__(self):
        return self.xyz.shape[0]

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.empty((0, 3)))


@dataclass(frozen=True)
class PerceptionParams:
    """Tunable pipeline parameters; defaults suit a desk-scale scene.

    The cluster tolerance must bridge the vertical gap between the seat
    plane and the lowest back points so one object forms one cluster.
    """

    passthrough_lo: tuple = (-2.0, -2.0, 0.2)
    passthrough_hi: tuple = (2.0, 2.0, 4.0)
    voxel_size: float = 0.02
    cluster_tolerance: float = 0.2
    min_points: int = 50
    max_points: int = 50000
    height_threshold: float = 0.55

    def __post_init__(self):
        lo = tuple(float(v) for v in self.passthrough_lo)
        hi = tuple(float(v) for v in self.passthrough_hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("passthrough bounds must have 3 components")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("passthrough_lo must not exceed passthrough_hi")
        object.__setattr__(self, "passthrough_lo", lo)
        object.__setattr__(self, "passthrough_hi", hi)
        if self.voxel_size <= 0.0:
            raise ValueError("voxel_size must be > 0")
        if self.cluster_tolerance <= 0.0:
            raise ValueError("cluster_tolerance must be > 0")
        if not 0 < self.min_points <= self.max_points:
            raise ValueError("need 0 < min_points <= max_points")
        if self.height_threshold <= 0.0:
            raise ValueError("height_threshold must be > 0")


@dataclass(frozen=True)
class PlanarTransform:
    """Rigid transform from camera plan coordinates to the robot plane."""

    theta: float = 0.0
    tx: float = 0.0
    ty: float = 0.0

    def apply(self, u: float, v: float) -> tuple:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (c * u - s * v + self.tx, s * u + c * v + self.ty)


@dataclass(frozen=True)
class LandmarkEstimate:
    """Perceived objective and landmark, planar robot frame coordinates."""

    objective_xy: tuple
    landmark_xy: tuple
    landmark_heading: float

    def __post_init__(self):
        object.__setattr__(self, "objective_xy", tuple(map(float, self.objective_xy)))
        object.__setattr__(self, "landmark_xy", tuple(map(float, self.landmark_xy)))
        object.__setattr__(self, "landmark_heading", normalize_angle(self.landmark_heading))


def camera_plan_transform(cam: CameraSpec) -> PlanarTransform:
    """Plan transform for the standard centerline mount: shift by ``l``."""
    return PlanarTransform(0.0, 0.0, cam.l)


def passthrough_filter(cloud: PointCloud, lo, hi) -> PointCloud:
    """Keep points inside the closed axis-aligned box [lo, hi]."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != (3,) or hi.shape != (3,):
        raise ValueError("box bounds must have 3 components")
    if len(cloud) == 0:
        return PointCloud.empty()
    keep = np.all((cloud.xyz >= lo) & (cloud.xyz <= hi), axis=1)
    return PointCloud(cloud.xyz[keep])


def voxel_downsample(cloud: PointCloud, voxel_size: float) -> PointCloud:
    """Replace all points in each voxel by their centroid.

    Voxels are cubes of side ``voxel_size`` anchored at the origin
    (integer key floor(coord / voxel_size)).  Output order follows the
    first input point seen in each voxel.
    """
    if voxel_size <= 0.0:
        raise ValueError("voxel_size must be > 0")
    n = len(cloud)
    if n == 0:
        return PointCloud.empty()
    keys = np.floor(cloud.xyz / voxel_size).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    groups = rank[inverse]
    sums = np.zeros((order.size, 3))
    np.add.at(sums, groups, cloud.xyz)
    counts = np.bincount(groups, minlength=order.size).astype(float)
    return PointCloud(sums / counts[:, None])


def euclidean_clusters(
    cloud: PointCloud, tolerance: float, min_points: int, max_points: int
) -> list:
    """Connected components of the neighbor graph with edge length <= tolerance.

    Components outside [min_points, max_points] are dropped.  Clusters
    are ordered by ascending centroid distance to the origin, ties by
    the lowest original point index; points inside a cluster keep input
    order.
    """
    if tolerance <= 0.0:
        raise ValueError("tolerance must be > 0")
    n = len(cloud)
    if n == 0:
        return []
    pairs = cKDTree(cloud.xyz).query_pairs(tolerance, output_type="ndarray")
    graph = coo_matrix(
        (np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])),
        shape=(n, n),
    )
    _, roots = connected_components(graph, directed=False)
    out = []
    for root in np.unique(roots):
        idx = np.nonzero(roots == root)[0]
        if min_points <= idx.size <= max_points:
            pts = cloud.xyz[idx]
            centroid = pts.mean(axis=0)
            out.append((float(np.linalg.norm(centroid)), int(idx[0]), PointCloud(pts)))
    out.sort(key=lambda item: (item[0], item[1]))
    return [item[2] for item in out]


def select_object(clusters: list) -> PointCloud:
    """Cluster whose centroid is closest to the origin; ties keep the
    earliest cluster in the list."""
    if not clusters:
        raise NoObjectError("no clusters to select from")
    best = None
    best_d = math.inf
    for cluster in clusters:
        d = float(np.linalg.norm(cluster.xyz.mean(axis=0)))
        if d < best_d:
            best, best_d = cluster, d
    return best


def _world_heights(cloud: PointCloud, cam: CameraSpec) -> np.ndarray:
    cg, sg = math.cos(cam.gamma), math.sin(cam.gamma)
    return cam.z_a - (cloud.xyz[:, 1] * cg + cloud.xyz[:, 2] * sg)


def split_bottom_back(cloud: PointCloud, cam: CameraSpec, threshold: float):
    """Partition a cluster by world height: bottom <= threshold < back."""
    if len(cloud) == 0:
        raise NotAChairError("empty cluster")
    h = _world_heights(cloud, cam)
    low = h <= threshold
    if not low.any():
        raise NotAChairError("no points at or below the height threshold")
    if low.all():
        raise NotAChairError("no points above the height threshold")
    return PointCloud(cloud.xyz[low]), PointCloud(cloud.xyz[~low])


def project_to_horizontal(point, gamma: float) -> np.ndarray:
    """Orthogonal projection of a camera frame point onto the horizontal
    plane through the optical center (y + z tan(gamma) = 0)."""
    p = np.asarray(point, dtype=float)
    if p.shape != (3,):
        raise ValueError("point must have 3 components")
    tg = math.tan(gamma)
    t = (p[1] + p[2] * tg) / (1.0 + tg * tg)
    return np.array([p[0], p[1] - t, p[2] - tg * t])


def _plan_position(point_cam, cam: CameraSpec, to_robot: PlanarTransform) -> tuple:
    """Plan (x, y) of a camera frame point in the robot frame."""
    proj = project_to_horizontal(point_cam, cam.gamma)
    u = proj[0]
    v = proj[2] / math.cos(cam.gamma)
    return to_robot.apply(u, v)


def estimate_landmark(
    bottom: PointCloud,
    back: PointCloud,
    cam: CameraSpec,
    lm: LandmarkSpec,
    cam_to_robot: PlanarTransform | None = None,
) -> LandmarkEstimate:
    """Build the landmark from bottom and back centroids.

    The centroids are projected to the horizontal plane and mapped to
    the robot frame; the landmark sits ``r`` from the bottom centroid
    along the back-to-bottom direction rotated by ``lambda`` about it.
    The heading is the landmark-to-objective direction minus ``beta``,
    i.e. the heading a docked robot ends up with.
    """
    if len(bottom) == 0 or len(back) == 0:
        raise NotAChairError("bottom and back clouds must be nonempty")
    if cam_to_robot is None:
        cam_to_robot = camera_plan_transform(cam)
    mx, my = _plan_position(bottom.xyz.mean(axis=0), cam, cam_to_robot)
    kx, ky = _plan_position(back.xyz.mean(axis=0), cam, cam_to_robot)
    d = math.hypot(mx - kx, my - ky)
    if d < 1e-6:
        raise DomainError("bottom and back centroids coincide in plan view")
    ux, uy = (mx - kx) / d, (my - ky) / d
    cl, sl = math.cos(lm.lam), math.sin(lm.lam)
    vx, vy = lm.r * ux, lm.r * uy
    cx = mx + cl * vx - sl * vy
    cy = my + sl * vx + cl * vy
    heading = normalize_angle(math.atan2(my - cy, mx - cx) - lm.beta)
    return LandmarkEstimate((mx, my), (cx, cy), heading)


@dataclass(frozen=True)
class PipelineResult:
    """Intermediate products of :func:`run_pipeline`."""

    filtered: PointCloud
    downsampled: PointCloud
    clusters: list
    selected: PointCloud
    bottom: PointCloud
    back: PointCloud
    estimate: LandmarkEstimate


def run_pipeline(
    cloud: PointCloud,
    params: PerceptionParams,
    cam: CameraSpec,
    lm: LandmarkSpec,
) -> PipelineResult:
    """Full perception pipeline from a raw camera frame cloud."""
    filtered = passthrough_filter(cloud, params.passthrough_lo, params.passthrough_hi)
    down = voxel_downsample(filtered, params.voxel_size)
    clusters = euclidean_clusters(
        down, params.cluster_tolerance, params.min_points, params.max_points
    )
    selected = select_object(clusters)
    bottom, back = split_bottom_back(selected, cam, params.height_threshold)
    estimate = estimate_landmark(bottom, back, cam, lm)
    return PipelineResult(filtered, down, clusters, selected, bottom, back, estimate)


def estimate_from_cloud(
    cloud: PointCloud,
    params: PerceptionParams,
    cam: CameraSpec,
    lm: LandmarkSpec,
) -> LandmarkEstimate:
    """Convenience wrapper returning only the landmark estimate."""
    return run_pipeline(cloud, params, cam, lm).estimate


def camera_from_robot_xyz(pts, cam: CameraSpec) -> np.ndarray:
    """Robot frame points (n, 3) to camera frame points (n, 3)."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    cg, sg = math.cos(cam.gamma), math.sin(cam.gamma)
    v = pts[:, 1] - cam.l
    w = pts[:, 2] - cam.z_a
    out = np.empty_like(pts)
    out[:, 0] = pts[:, 0]
    out[:, 1] = -v * sg - w * cg
    out[:, 2] = v * cg - w * sg
    return out


def robot_from_camera_xyz(pts, cam: CameraSpec) -> np.ndarray:
    """Camera frame points (n, 3) to robot frame points (n, 3)."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    cg, sg = math.cos(cam.gamma), math.sin(cam.gamma)
    out = np.empty_like(pts)
    out[:, 0] = pts[:, 0]
    out[:, 1] = cam.l - pts[:, 1] * sg + pts[:, 2] * cg
    out[:, 2] = cam.z_a - pts[:, 1] * cg - pts[:, 2] * sg
    return out


def _robot_frame_from_world(pts_world, robot: Pose2D) -> np.ndarray:
    pts = np.asarray(pts_world, dtype=float).reshape(-1, 3)
    st, ct = math.sin(robot.theta), math.cos(robot.theta)
    dx = pts[:, 0] - robot.x
    dy = pts[:, 1] - robot.y
    out = np.empty_like(pts)
    out[:, 0] = dx * st - dy * ct
    out[:, 1] = dx * ct + dy * st
    out[:, 2] = pts[:, 2]
    return out


def synth_chair_planes(
    footprint: ObjectFootprint,
    robot: Pose2D,
    cam: CameraSpec,
    *,
    seat_height: float = 0.45,
    back_height: float = 0.9,
    back_gap: float = 0.15,
    density: float = 4000.0,
    noise_sigma: float = 0.0,
    seed: int = 0,
    vfov_half: float = math.radians(29.0),
    min_range: float = 0.05,
):
    """Sample a two-plane chair as seen by the robot camera.

    The seat is a horizontal rectangle matching the footprint at
    ``seat_height``; the back is a vertical rectangle on the rear edge
    spanning heights [seat_height + back_gap, back_height].  ``density``
    is points per square meter.  Points outside the camera field of view
    (half angles ``cam.alpha_bar`` horizontally, ``vfov_half``
    vertically) or closer than ``min_range`` are dropped, then Gaussian
    noise of scale ``noise_sigma`` is added in the camera frame.

    Returns (seat_cloud, back_cloud) in the camera frame; the true
    objective is the footprint center.
    """
    if back_height <= seat_height + back_gap:
        raise ValueError("back_height must exceed seat_height + back_gap")
    rng = np.random.default_rng(seed)
    center = footprint.center
    ex, ey = math.cos(center.theta), math.sin(center.theta)
    px, py = -ey, ex

    def finish(pts_world):
        pts_robot = _robot_frame_from_world(pts_world, robot)
        pts_cam = camera_from_robot_xyz(pts_robot, cam)
        z = pts_cam[:, 2]
        with np.errstate(invalid="ignore"):
            keep = (
                (z >= min_range)
                & (np.abs(np.arctan2(pts_cam[:, 0], z)) <= cam.alpha_bar)
                & (np.abs(np.arctan2(pts_cam[:, 1], z)) <= vfov_half)
            )
        pts_cam = pts_cam[keep]
        pts_cam = pts_cam + rng.normal(0.0, noise_sigma, pts_cam.shape)
        return PointCloud(pts_cam)

    n_seat = max(int(round(density * footprint.width * footprint.depth)), 1)
    a = rng.uniform(-0.5 * footprint.depth, 0.5 * footprint.depth, n_seat)
    b = rng.uniform(-0.5 * footprint.width, 0.5 * footprint.width, n_seat)
    seat_world = np.column_stack(
        [center.x + a * ex + b * px, center.y + a * ey + b * py, np.full(n_seat, seat_height)]
    )

    back_lo = seat_height + back_gap
    n_back = max(int(round(density * footprint.width * (back_height - back_lo))), 1)
    b2 = rng.uniform(-0.5 * footprint.width, 0.5 * footprint.width, n_back)
    h2 = rng.uniform(back_lo, back_height, n_back)
    rx = center.x - 0.5 * footprint.depth * ex
    ry = center.y - 0.5 * footprint.depth * ey
    back_world = np.column_stack([rx + b2 * px, ry + b2 * py, h2])

    return finish(seat_world), finish(back_world)


def synth_chair_cloud(footprint, robot, cam, **kwargs) -> PointCloud:
    """Seat and back planes of :func:`synth_chair_planes` as one cloud."""
    seat, back = synth_chair_planes(footprint, robot, cam, **kwargs)
    return PointCloud(np.vstack([seat.xyz, back.xyz]))
