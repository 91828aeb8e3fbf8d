# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled collision kernel: robot poses tested against a point cloud.

The robot is a set of vertical cylinders given in the robot frame as rows
``(offset_x, offset_y, radius, z_min, z_max)``.  A pose is ``(x, y, theta)``.
A pose is invalid when any cloud point falls inside any cylinder transformed
by the pose.  Boundary contact counts as collision.
"""

from libc.math cimport cos, sin

import numpy as np


cdef inline bint _pose_ok(const double[:, ::1] points,
                          const double[:, ::1] cyls,
                          double x, double y, double theta) nogil:
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t m = cyls.shape[0]
    cdef Py_ssize_t i, j
    cdef double c = cos(theta)
    cdef double s = sin(theta)
    cdef double cx, cy, r2, zmin, zmax, dx, dy, pz
    for j in range(m):
        cx = x + c * cyls[j, 0] - s * cyls[j, 1]
        cy = y + s * cyls[j, 0] + c * cyls[j, 1]
        r2 = cyls[j, 2] * cyls[j, 2]
        zmin = cyls[j, 3]
        zmax = cyls[j, 4]
        for i in range(n):
            pz = points[i, 2]
            if pz < zmin or pz > zmax:
                continue
            dx = points[i, 0] - cx
            dy = points[i, 1] - cy
            if dx * dx + dy * dy <= r2:
                return False
    return True


def poses_valid(const double[:, ::1] points,
                const double[:, ::1] cylinders,
                const double[:, ::1] poses):
    """Validity mask for each pose in ``poses`` against ``points``."""
    cdef Py_ssize_t k = poses.shape[0]
    cdef Py_ssize_t ik
    out = np.empty(k, dtype=np.uint8)
    cdef unsigned char[::1] ov = out
    with nogil:
        for ik in range(k):
            ov[ik] = _pose_ok(points, cylinders,
                              poses[ik, 0], poses[ik, 1], poses[ik, 2])
    return out.view(bool)


def all_poses_valid(const double[:, ::1] points,
                    const double[:, ::1] cylinders,
                    const double[:, ::1] poses):
    """True iff every pose is collision-free.  Stops at the first failure."""
    cdef Py_ssize_t k = poses.shape[0]
    cdef Py_ssize_t ik
    cdef bint ok = True
    with nogil:
        for ik in range(k):
            if not _pose_ok(points, cylinders,
                            poses[ik, 0], poses[ik, 1], poses[ik, 2]):
                ok = False
                break
    return bool(ok)
