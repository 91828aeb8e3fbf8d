import math

import numpy as np
import pytest

from alphasurvey.geometry import (CollisionCylinder, PointCloud,
                                  RobotModel, default_robot_model,
                                  pose_valid, sensor_pose_to_base_pose)
from alphasurvey.partitions import GridSpec
from alphasurvey.scene import BoxPrim, PillarPrim, SceneSpec, TablePrim

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def robot():
    return default_robot_model()


@pytest.fixture(scope="session")
def simple_robot():
    """One body and one sensor cylinder, easy to reason about by hand."""
    return RobotModel(
        body_cylinders=(CollisionCylinder(0.0, 0.0, 0.2, 0.0, 1.0),),
        sensor_cylinders=(CollisionCylinder(0.5, 0.0, 0.2, 0.0, 0.3),),
        sensor_offset=(0.5, 0.0),
        sensor_footprint=(0.28, 0.28),
    )


@pytest.fixture(scope="session")
def empty_cloud():
    return PointCloud(np.empty((0, 3)))


def make_under_table_scene():
    """Canonical under-table scene: 10x10 grid over [0, 5]^2, a 2.0 x 1.5 m
    table with its top at 0.7 m (slab 0.68-0.70), legs at inset corners."""
    table = TablePrim(2.0, 2.0, 2.0, 1.5, 0.7, 0.02, 0.04, 0.1)
    scene = SceneSpec([table], density=40.0)
    spec = GridSpec(0.0, 0.0, 0.5, 10, 10)
    return scene.rasterize(), spec


def make_obstacle_scene(seed, nx=10, ny=10, cell=0.5, n_pillars=3, n_boxes=1,
                        density=25.0):
    """Random pillar/box scene inside an nx x ny grid, seeded."""
    rng = np.random.default_rng(seed)
    w, h = nx * cell, ny * cell
    prims = []
    for _ in range(n_pillars):
        r = rng.uniform(0.15, 0.35)
        x = rng.uniform(1.2, w - 1.2)
        y = rng.uniform(1.2, h - 1.2)
        prims.append(PillarPrim(x, y, r, rng.uniform(0.4, 1.0)))
    for _ in range(n_boxes):
        sx, sy = rng.uniform(0.4, 1.0, 2)
        x = rng.uniform(1.2, w - 1.2 - sx)
        y = rng.uniform(1.2, h - 1.2 - sy)
        prims.append(BoxPrim(x, y, 0.0, sx, sy, rng.uniform(0.3, 0.9)))
    scene = SceneSpec(prims, density=density)
    spec = GridSpec(0.0, 0.0, cell, nx, ny)
    return scene.rasterize(), spec


def dense_valid_headings(cell_center, robot, cloud, dtheta):
    """Independent heading oracle: direct pose_valid sweep at dtheta."""
    n = round(TWO_PI / dtheta)
    out = np.zeros(n, dtype=bool)
    for k in range(n):
        base = sensor_pose_to_base_pose(cell_center, k * dtheta, robot)
        out[k] = pose_valid(base, robot, cloud)
    return out
