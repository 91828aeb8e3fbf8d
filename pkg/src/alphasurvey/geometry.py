"""Point-cloud environment, cylindrical robot decomposition, pose validity.

The robot is modelled as a set of world-vertical cylinders (body and sensor
tagged separately) plus an off-center rectangular sensor footprint.  A robot
pose is valid when no cloud point falls inside any cylinder; boundary contact
counts as a collision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels

TWO_PI = 2.0 * math.pi

DEFAULT_Z_FLOOR = 0.02


def normalize_angle(theta: float) -> float:
    """Wrap an angle to [0, 2*pi)."""
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    if theta >= TWO_PI:  # fmod artifacts near 2*pi
        theta = 0.0
    return theta


def wrap_to_pi(delta: float) -> float:
    """Wrap an angle difference to (-pi, pi]."""
    delta = math.fmod(delta, TWO_PI)
    if delta > math.pi:
        delta -= TWO_PI
    elif delta <= -math.pi:
        delta += TWO_PI
    return delta


@dataclass(frozen=True)
class Pose2D:
    """Planar pose; heading is normalized to [0, 2*pi) on construction."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)
                and math.isfinite(self.theta)):
            raise ValueError("pose coordinates must be finite")
        object.__setattr__(self, "theta", normalize_angle(self.theta))


@dataclass(frozen=True)
class CollisionCylinder:
    """World-vertical cylinder in the robot frame, one collision entity."""

    offset_x: float
    offset_y: float
    radius: float
    z_min: float
    z_max: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("cylinder radius must be positive")
        if self.z_min >= self.z_max:
            raise ValueError("cylinder requires z_min < z_max")

    @property
    def reach(self) -> float:
        """Horizontal distance from the base origin to the far cylinder edge."""
        return math.hypot(self.offset_x, self.offset_y) + self.radius


class PointCloud:
    """Immutable collection of 3D obstacle points with a bounds cache."""

    def __init__(self, points: np.ndarray | Sequence[Sequence[float]]):
        arr = np.ascontiguousarray(points, dtype=np.float64)
        if arr.size == 0:
            arr = np.empty((0, 3), dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError("points must be an (N, 3) array")
        if not np.isfinite(arr).all():
            raise ValueError("point coordinates must be finite")
        arr.setflags(write=False)
        self._points = arr
        self._bounds = None

    @property
    def points(self) -> np.ndarray:
        return self._points

    def __len__(self) -> int:
        return self._points.shape[0]

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray] | None:
        """(min_xyz, max_xyz), or None for an empty cloud."""
        if len(self) == 0:
            return None
        if self._bounds is None:
            self._bounds = (self._points.min(axis=0), self._points.max(axis=0))
        return self._bounds

    def crop_xy(self, x: float, y: float, radius: float) -> np.ndarray:
        """Points within the axis-aligned square of half-width ``radius``.

        A pure prefilter: every point within horizontal distance ``radius``
        of (x, y) is retained, so collision results are unchanged.
        """
        p = self._points
        if p.shape[0] == 0:
            return p
        m = ((np.abs(p[:, 0] - x) <= radius)
             & (np.abs(p[:, 1] - y) <= radius))
        return np.ascontiguousarray(p[m])


def load_pointcloud(path: str | Path, z_floor: float = DEFAULT_Z_FLOOR) -> PointCloud:
    """Load an ASCII ``x y z`` cloud, dropping floor returns at z <= z_floor.

    Lines starting with ``#`` and blank lines are ignored.
    """
    pts = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split()
            if len(fields) != 3:
                raise ValueError(
                    f"{path}:{lineno}: expected 'x y z', got {stripped!r}")
            try:
                x, y, z = (float(v) for v in fields)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if z > z_floor:
                pts.append((x, y, z))
    return PointCloud(np.array(pts, dtype=np.float64).reshape(-1, 3))


def save_pointcloud(cloud: PointCloud, path: str | Path,
                    header: str | None = None) -> None:
    """Write a cloud in the ASCII ``x y z`` format."""
    with open(path, "w", encoding="ascii") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for x, y, z in cloud.points:
            fh.write(f"{x:.6f} {y:.6f} {z:.6f}\n")


@dataclass(frozen=True)
class RobotModel:
    """Cylinder decomposition of the robot plus the off-center sensor."""

    body_cylinders: tuple[CollisionCylinder, ...]
    sensor_cylinders: tuple[CollisionCylinder, ...]
    sensor_offset: tuple[float, float]
    sensor_footprint: tuple[float, float]  # (length along travel, width), m
    max_linear_speed: float = 1.0
    max_angular_speed: float = 1.0
    _cyl_array: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        body = tuple(self.body_cylinders)
        sensor = tuple(self.sensor_cylinders)
        object.__setattr__(self, "body_cylinders", body)
        object.__setattr__(self, "sensor_cylinders", sensor)
        if not body or not sensor:
            raise ValueError("robot needs at least one BODY and one SENSOR cylinder")
        length, width = self.sensor_footprint
        if length <= 0.0 or width <= 0.0:
            raise ValueError("sensor footprint dimensions must be positive")
        if self.max_linear_speed <= 0.0 or self.max_angular_speed <= 0.0:
            raise ValueError("speed limits must be positive")
        arr = np.array(
            [[c.offset_x, c.offset_y, c.radius, c.z_min, c.z_max]
             for c in body + sensor],
            dtype=np.float64,
        )
        arr.setflags(write=False)
        object.__setattr__(self, "_cyl_array", arr)
        self._check_footprint_coverage()

    def _check_footprint_coverage(self):
        # Sensor cylinder disks must cover the footprint rectangle; checked
        # on a coarse sample grid at construction.
        dx, dy = self.sensor_offset
        length, width = self.sensor_footprint
        us = np.linspace(-length / 2.0, length / 2.0, 9)
        vs = np.linspace(-width / 2.0, width / 2.0, 9)
        for u in us:
            for v in vs:
                px, py = dx + u, dy + v
                if not any(math.hypot(px - c.offset_x, py - c.offset_y)
                           <= c.radius + 1e-12
                           for c in self.sensor_cylinders):
                    raise ValueError(
                        "sensor cylinders do not cover the sensor footprint "
                        f"(uncovered sample at robot-frame ({px:.3f}, {py:.3f}))")

    @property
    def cylinders(self) -> tuple[CollisionCylinder, ...]:
        return self.body_cylinders + self.sensor_cylinders

    @property
    def cylinder_array(self) -> np.ndarray:
        """(M, 5) rows of (offset_x, offset_y, radius, z_min, z_max)."""
        return self._cyl_array

    @property
    def body_array(self) -> np.ndarray:
        return self._cyl_array[: len(self.body_cylinders)]

    @property
    def reach_radius(self) -> float:
        """Max horizontal extent of any cylinder from the base origin."""
        return max(c.reach for c in self.cylinders)


def point_in_cylinder(p: Sequence[float], cyl: CollisionCylinder,
                      base: Pose2D) -> bool:
    """Brute-force definition of the point test; boundary counts as inside."""
    x, y, z = p
    if z < cyl.z_min or z > cyl.z_max:
        return False
    c = math.cos(base.theta)
    s = math.sin(base.theta)
    cx = base.x + c * cyl.offset_x - s * cyl.offset_y
    cy = base.y + s * cyl.offset_x + c * cyl.offset_y
    dx = x - cx
    dy = y - cy
    return dx * dx + dy * dy <= cyl.radius * cyl.radius


def pose_valid(base: Pose2D, robot: RobotModel, cloud: PointCloud) -> bool:
    """True iff no cloud point lies inside any robot cylinder at ``base``."""
    local = cloud.crop_xy(base.x, base.y, robot.reach_radius)
    pose = np.array([[base.x, base.y, base.theta]], dtype=np.float64)
    return _kernels.all_poses_valid(local, robot.cylinder_array, pose)


def poses_valid_near(poses: np.ndarray, robot: RobotModel, cloud: PointCloud,
                     center: tuple[float, float], crop_radius: float) -> np.ndarray:
    """Validity mask for a batch of poses sharing one crop region.

    ``crop_radius`` must cover every pose position; the robot reach is added
    internally, so the crop never changes results.
    """
    local = cloud.crop_xy(center[0], center[1],
                          crop_radius + robot.reach_radius)
    return _kernels.poses_valid(local, robot.cylinder_array,
                                np.ascontiguousarray(poses, dtype=np.float64))


def all_poses_valid_near(poses: np.ndarray, robot: RobotModel, cloud: PointCloud,
                         center: tuple[float, float], crop_radius: float) -> bool:
    local = cloud.crop_xy(center[0], center[1],
                          crop_radius + robot.reach_radius)
    return _kernels.all_poses_valid(local, robot.cylinder_array,
                                    np.ascontiguousarray(poses, dtype=np.float64))


def sensor_pose_to_base_pose(sensor_center: tuple[float, float], theta: float,
                             robot: RobotModel) -> Pose2D:
    """Base pose that places the sensor footprint center at ``sensor_center``.

    Rigid inverse of the sensor offset: base = sensor - R(theta) * offset.
    """
    c = math.cos(theta)
    s = math.sin(theta)
    dx, dy = robot.sensor_offset
    return Pose2D(sensor_center[0] - (c * dx - s * dy),
                  sensor_center[1] - (s * dx + c * dy),
                  theta)


def base_pose_to_sensor_pose(base: Pose2D, robot: RobotModel) -> Pose2D:
    """Forward transform: world pose of the sensor footprint center."""
    c = math.cos(base.theta)
    s = math.sin(base.theta)
    dx, dy = robot.sensor_offset
    return Pose2D(base.x + c * dx - s * dy,
                  base.y + s * dx + c * dy,
                  base.theta)


def default_robot_model() -> RobotModel:
    """Documented example decomposition: 5 body + 2 sensor cylinders.

    A differential-drive base (tall cylinders, a sensor mast raises the body
    envelope to 0.8 m) towing a low, wide detector trailer 0.6 m ahead of the
    base origin.  The cylinder count and dimensions are an example
    configuration, not a measured robot.
    """
    body = (
        CollisionCylinder(0.0, 0.0, 0.22, 0.0, 0.8),
        CollisionCylinder(0.10, 0.10, 0.12, 0.0, 0.8),
        CollisionCylinder(0.10, -0.10, 0.12, 0.0, 0.8),
        CollisionCylinder(-0.10, 0.10, 0.12, 0.0, 0.8),
        CollisionCylinder(-0.10, -0.10, 0.12, 0.0, 0.8),
    )
    sensor = (
        CollisionCylinder(0.60, 0.14, 0.29, 0.0, 0.25),
        CollisionCylinder(0.60, -0.14, 0.29, 0.0, 0.25),
    )
    return RobotModel(
        body_cylinders=body,
        sensor_cylinders=sensor,
        sensor_offset=(0.60, 0.0),
        sensor_footprint=(0.5, 0.5),
        max_linear_speed=1.0,
        max_angular_speed=1.5,
    )
