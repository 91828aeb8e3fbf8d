"""Pure-Python (numpy) collision kernel.

Fallback for environments where the compiled extension is unavailable.
Arithmetic mirrors the compiled kernel operation for operation so both
backends return bit-identical results.
"""

import math

import numpy as np


def _pose_ok(points: np.ndarray, cylinders: np.ndarray,
             x: float, y: float, theta: float) -> bool:
    if points.shape[0] == 0:
        return True
    c = math.cos(theta)
    s = math.sin(theta)
    px = points[:, 0]
    py = points[:, 1]
    pz = points[:, 2]
    for ox, oy, r, zmin, zmax in cylinders:
        zmask = (pz >= zmin) & (pz <= zmax)
        if not zmask.any():
            continue
        cx = x + c * ox - s * oy
        cy = y + s * ox + c * oy
        dx = px[zmask] - cx
        dy = py[zmask] - cy
        if np.any(dx * dx + dy * dy <= r * r):
            return False
    return True


def poses_valid(points: np.ndarray, cylinders: np.ndarray,
                poses: np.ndarray) -> np.ndarray:
    """Validity mask for each pose in ``poses`` against ``points``."""
    out = np.empty(poses.shape[0], dtype=bool)
    for ik in range(poses.shape[0]):
        out[ik] = _pose_ok(points, cylinders,
                           poses[ik, 0], poses[ik, 1], poses[ik, 2])
    return out


def all_poses_valid(points: np.ndarray, cylinders: np.ndarray,
                    poses: np.ndarray) -> bool:
    """True iff every pose is collision-free.  Stops at the first failure."""
    for ik in range(poses.shape[0]):
        if not _pose_ok(points, cylinders,
                        poses[ik, 0], poses[ik, 1], poses[ik, 2]):
            return False
    return True
