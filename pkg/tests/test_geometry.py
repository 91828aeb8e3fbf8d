import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alphasurvey.geometry import (CollisionCylinder, PointCloud, Pose2D,
                                  base_pose_to_sensor_pose, load_pointcloud,
                                  normalize_angle, point_in_cylinder,
                                  pose_valid, save_pointcloud,
                                  sensor_pose_to_base_pose)

MID = 0.5  # midpoint z of a 0-1 cylinder


def cyl(ox=0.0, oy=0.0, r=0.1, z0=0.0, z1=1.0):
    return CollisionCylinder(ox, oy, r, z0, z1)


class TestPointInCylinder:
    def test_axis_point_inside(self):
        assert point_in_cylinder((0.0, 0.0, MID), cyl(), Pose2D(0, 0, 0))

    def test_above_vertical_extent(self):
        assert not point_in_cylinder((0.0, 0.0, 1.01), cyl(), Pose2D(0, 0, 0))

    def test_rotated_offset(self):
        # 90 deg base rotation carries offset (1, 0) to (0, 1).
        c = cyl(ox=1.0, oy=0.0, r=0.1)
        assert point_in_cylinder((0.0, 1.0, MID), c,
                                 Pose2D(0, 0, math.pi / 2))
        assert not point_in_cylinder((1.0, 0.0, MID), c,
                                     Pose2D(0, 0, math.pi / 2))

    def test_boundary_counts_as_collision(self):
        assert point_in_cylinder((0.1, 0.0, MID), cyl(r=0.1), Pose2D(0, 0, 0))

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 6.28),
           st.floats(-1, 1), st.floats(-1, 1), st.floats(0.05, 1.0))
    def test_rigid_invariance(self, tx, ty, alpha, px, py, r):
        # Applying one rigid transform to both point and base is a no-op.
        c = cyl(ox=0.3, oy=-0.2, r=r)
        base = Pose2D(0.1, 0.2, 0.7)
        p = (px, py, MID)
        before = point_in_cylinder(p, c, base)
        ca, sa = math.cos(alpha), math.sin(alpha)
        p2 = (ca * px - sa * py + tx, sa * px + ca * py + ty, MID)
        base2 = Pose2D(ca * base.x - sa * base.y + tx,
                       sa * base.x + ca * base.y + ty,
                       base.theta + alpha)
        # Boundary cases can flip under floating-point rotation; skip them.
        dist = math.hypot(px - (base.x + math.cos(base.theta) * 0.3
                                - math.sin(base.theta) * -0.2),
                          py - (base.y + math.sin(base.theta) * 0.3
                                + math.cos(base.theta) * -0.2))
        if abs(dist - r) > 1e-9:
            assert point_in_cylinder(p2, c, base2) == before


class TestPoseValid:
    def test_empty_cloud(self, robot):
        assert pose_valid(Pose2D(3, -7, 1.2), robot,
                          PointCloud(np.empty((0, 3))))

    def test_point_in_body(self, robot):
        cloud = PointCloud(np.array([[0.0, 0.0, 0.4]]))
        assert not pose_valid(Pose2D(0, 0, 0), robot, cloud)

    def test_under_table_slab(self, simple_robot):
        # Slab at z = 0.7 ahead of the robot: low sensor fits, tall body
        # advanced under it does not.
        slab = PointCloud(np.array(
            [[x, y, 0.7] for x in np.linspace(1.0, 2.0, 11)
             for y in np.linspace(-0.5, 0.5, 11)]))
        # Sensor (z <= 0.3) under the slab, body clear of it.
        assert pose_valid(Pose2D(0.6, 0.0, 0.0), simple_robot, slab)
        # Body (z <= 1.0) advanced under the slab.
        assert not pose_valid(Pose2D(1.5, 0.0, 0.0), simple_robot, slab)

    def test_union_is_conjunction(self, robot):
        a = np.array([[0.0, 0.0, 0.4]])
        b = np.array([[5.0, 5.0, 0.4]])
        base = Pose2D(0, 0, 0)
        both = PointCloud(np.vstack([a, b]))
        assert pose_valid(base, robot, both) == (
            pose_valid(base, robot, PointCloud(a))
            and pose_valid(base, robot, PointCloud(b)))

    def test_removing_point_never_invalidates(self, robot):
        rng = np.random.default_rng(3)
        pts = rng.uniform(-1, 1, size=(50, 3))
        pts[:, 2] = np.abs(pts[:, 2])
        base = Pose2D(0.1, -0.2, 0.4)
        full = pose_valid(base, robot, PointCloud(pts))
        if full:
            for k in range(0, 50, 7):
                sub = np.delete(pts, k, axis=0)
                assert pose_valid(base, robot, PointCloud(sub))


class TestSensorBaseTransform:
    def test_identity_offset(self, robot):
        r = robot
        # Build a variant with zero offset via the simple formula instead.
        base = sensor_pose_to_base_pose((2.0, 3.0), 0.0, r)
        assert base.x == pytest.approx(2.0 - r.sensor_offset[0])

    def test_pure_translation(self, simple_robot):
        base = sensor_pose_to_base_pose((1.0, 0.0), 0.0, simple_robot)
        assert (base.x, base.y, base.theta) == pytest.approx((0.5, 0.0, 0.0))

    def test_rotated_offset(self, simple_robot):
        base = sensor_pose_to_base_pose((0.0, 0.0), math.pi / 2, simple_robot)
        assert base.x == pytest.approx(0.0, abs=1e-12)
        assert base.y == pytest.approx(-0.5)
        assert base.theta == pytest.approx(math.pi / 2)

    @settings(max_examples=50, deadline=None)
    @given(x=st.floats(-5, 5), y=st.floats(-5, 5), theta=st.floats(0, 6.28))
    def test_roundtrip(self, robot, x, y, theta):
        base = sensor_pose_to_base_pose((x, y), theta, robot)
        sensor = base_pose_to_sensor_pose(base, robot)
        assert abs(sensor.x - x) < 1e-9
        assert abs(sensor.y - y) < 1e-9
        assert abs(normalize_angle(sensor.theta - theta)) < 1e-9 or \
            abs(normalize_angle(sensor.theta - theta) - 2 * math.pi) < 1e-9


class TestPointCloudIO:
    def test_roundtrip(self, tmp_path):
        pts = np.array([[0.1, 0.2, 0.3], [1.0, -2.0, 0.5]])
        cloud = PointCloud(pts)
        path = tmp_path / "c.xyz"
        save_pointcloud(cloud, path, header="test")
        loaded = load_pointcloud(path)
        assert np.allclose(loaded.points, pts)

    def test_floor_filter(self, tmp_path):
        path = tmp_path / "c.xyz"
        path.write_text("# floor test\n0 0 0.01\n0 0 0.5\n")
        loaded = load_pointcloud(path)  # default z_floor 0.02
        assert len(loaded) == 1
        assert loaded.points[0, 2] == 0.5

    def test_parse_error_has_line_number(self, tmp_path):
        path = tmp_path / "c.xyz"
        path.write_text("0 0 0.5\n0 banana 1\n")
        with pytest.raises(ValueError, match=":2"):
            load_pointcloud(path)

    def test_bounds_cache_contains_points(self):
        pts = np.array([[0.0, 1.0, 2.0], [-1.0, 5.0, 0.5]])
        cloud = PointCloud(pts)
        lo, hi = cloud.bounds
        assert (pts >= lo).all() and (pts <= hi).all()
