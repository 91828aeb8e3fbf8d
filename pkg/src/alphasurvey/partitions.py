"""Orientation-partitioned grid over the workspace.

Each grid cell stores the maximal heading ranges for which placing the
sensor footprint center over the cell center leaves the whole robot
collision-free.  Ranges are found by sampling headings at a fixed angular
resolution and merging maximal runs of valid samples (including across the
0 / 2*pi seam).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .geometry import (TWO_PI, PointCloud, RobotModel, normalize_angle,
                       poses_valid_near, sensor_pose_to_base_pose)

DEFAULT_DTHETA = math.radians(5.0)


@dataclass(frozen=True)
class GridSpec:
    """Regular 2D grid: origin is the outer corner of cell (0, 0)."""

    origin_x: float
    origin_y: float
    cell_size: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.cell_size <= 0.0:
            raise ValueError("cell_size must be positive")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one cell per axis")

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return (self.origin_x + (ix + 0.5) * self.cell_size,
                self.origin_y + (iy + 0.5) * self.cell_size)

    def cell_index(self, x: float, y: float) -> tuple[int, int] | None:
        ix = math.floor((x - self.origin_x) / self.cell_size)
        iy = math.floor((y - self.origin_y) / self.cell_size)
        if 0 <= ix < self.nx and 0 <= iy < self.ny:
            return ix, iy
        return None

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.nx and 0 <= iy < self.ny


@dataclass(frozen=True)
class OrientationRange:
    """Closed heading interval [phi1, phi2]; may wrap across 2*pi.

    A full circle is stored as phi1 = 0, phi2 = 2*pi (the one case where
    phi2 is allowed to equal 2*pi).  A single valid sampled heading yields
    the degenerate range [phi, phi].
    """

    phi1: float
    phi2: float
    wraps: bool = False

    def __post_init__(self):
        if not (0.0 <= self.phi1 < TWO_PI):
            raise ValueError("phi1 must be in [0, 2*pi)")
        if not (0.0 <= self.phi2 <= TWO_PI):
            raise ValueError("phi2 must be in [0, 2*pi]")
        if self.width < 0.0 or self.width > TWO_PI:
            raise ValueError("range width must be in [0, 2*pi]")

    @classmethod
    def full_circle(cls) -> "OrientationRange":
        return cls(0.0, TWO_PI, wraps=False)

    @property
    def is_full(self) -> bool:
        return self.phi1 == 0.0 and self.phi2 == TWO_PI

    @property
    def width(self) -> float:
        if self.wraps:
            return TWO_PI - self.phi1 + self.phi2
        return self.phi2 - self.phi1

    @property
    def midpoint(self) -> float:
        return normalize_angle(self.phi1 + self.width / 2.0)

    def contains(self, theta: float, tol: float = 1e-12) -> bool:
        if self.is_full:
            return True
        theta = normalize_angle(theta)
        if self.wraps:
            return theta >= self.phi1 - tol or theta <= self.phi2 + tol
        return self.phi1 - tol <= theta <= self.phi2 + tol

    def angular_distance(self, theta: float) -> float:
        """Smallest absolute heading change from theta into the range."""
        if self.contains(theta):
            return 0.0
        theta = normalize_angle(theta)
        d1 = abs(math.remainder(theta - self.phi1, TWO_PI))
        d2 = abs(math.remainder(theta - self.phi2, TWO_PI))
        return min(d1, d2)


@dataclass(frozen=True)
class Partition:
    """i-th valid orientation range of one grid cell."""

    cell: tuple[int, int]
    index: int
    range: OrientationRange

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.cell[0], self.cell[1], self.index)


def _check_dtheta(dtheta: float) -> int:
    if not (0.0 < dtheta <= math.pi / 8.0 + 1e-12):
        raise ValueError("dtheta must be in (0, pi/8]")
    n = round(TWO_PI / dtheta)
    if abs(n * dtheta - TWO_PI) > 1e-9:
        raise ValueError("dtheta must evenly divide 2*pi")
    return n


def _merge_runs(valid: np.ndarray, dtheta: float) -> list[OrientationRange]:
    n = valid.shape[0]
    if valid.all():
        return [OrientationRange.full_circle()]
    if not valid.any():
        return []
    # Maximal circular runs of consecutive valid samples.
    ranges = []
    idx = np.flatnonzero(valid)
    breaks = np.flatnonzero(np.diff(idx) > 1)
    runs = np.split(idx, breaks + 1)
    # Join the run touching index 0 with the run touching index n-1.
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][-1] == n - 1:
        first, last = runs[0], runs.pop()
        ranges.append(OrientationRange(
            phi1=last[0] * dtheta, phi2=first[-1] * dtheta, wraps=True))
        runs = runs[1:]
    for run in runs:
        ranges.append(OrientationRange(
            phi1=run[0] * dtheta, phi2=run[-1] * dtheta, wraps=False))
    ranges.sort(key=lambda r: r.phi1)
    return ranges


def compute_cell_ranges(cell_center: tuple[float, float], robot: RobotModel,
                        cloud: PointCloud, dtheta: float = DEFAULT_DTHETA
                        ) -> list[OrientationRange]:
    """Valid heading ranges for the sensor-over-cell-center placement.

    Headings are sampled at multiples of dtheta over [0, 2*pi); maximal runs
    of valid samples become ranges whose endpoints are the outermost valid
    samples (a conservative bias of at most dtheta per side).
    """
    n = _check_dtheta(dtheta)
    thetas = np.arange(n) * dtheta
    offset = math.hypot(*robot.sensor_offset)
    poses = np.empty((n, 3), dtype=np.float64)
    for k, theta in enumerate(thetas):
        base = sensor_pose_to_base_pose(cell_center, theta, robot)
        poses[k] = (base.x, base.y, base.theta)
    valid = poses_valid_near(poses, robot, cloud, cell_center, offset)
    return _merge_runs(valid, dtheta)


class PartitionGrid:
    """Dense grid of per-cell orientation ranges (the partitions)."""

    def __init__(self, spec: GridSpec,
                 cells: list[list[list[OrientationRange]]],
                 angular_resolution: float):
        self.spec = spec
        self.cells = cells
        self.angular_resolution = angular_resolution

    def ranges(self, ix: int, iy: int) -> list[OrientationRange]:
        return self.cells[ix][iy]

    def partitions(self) -> Iterator[Partition]:
        """All partitions in deterministic row-major (iy, ix, i) order."""
        for iy in range(self.spec.ny):
            for ix in range(self.spec.nx):
                for i, rng in enumerate(self.cells[ix][iy]):
                    yield Partition((ix, iy), i, rng)

    def partition(self, ix: int, iy: int, i: int) -> Partition:
        return Partition((ix, iy), i, self.cells[ix][iy][i])

    def coverable_cells(self) -> set[tuple[int, int]]:
        return {(ix, iy) for iy in range(self.spec.ny)
                for ix in range(self.spec.nx) if self.cells[ix][iy]}

    def uncoverable_cells(self) -> set[tuple[int, int]]:
        return {(ix, iy) for iy in range(self.spec.ny)
                for ix in range(self.spec.nx) if not self.cells[ix][iy]}

    def export_csv(self, path: str | Path) -> None:
        """Write `x_index,y_index,i,phi1_deg,phi2_deg` rows.

        Wrapping ranges keep phi1 > phi2; the full circle is written as
        0,360.
        """
        spec = self.spec
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"# origin=({spec.origin_x:.6f},{spec.origin_y:.6f}) "
                     f"cell_size={spec.cell_size:.6f} nx={spec.nx} ny={spec.ny} "
                     f"dtheta_deg={math.degrees(self.angular_resolution):.6f}\n")
            fh.write("x_index,y_index,i,phi1_deg,phi2_deg\n")
            for p in self.partitions():
                fh.write(f"{p.cell[0]},{p.cell[1]},{p.index},"
                         f"{math.degrees(p.range.phi1):.4f},"
                         f"{math.degrees(p.range.phi2):.4f}\n")


def build_partition_grid(spec: GridSpec, robot: RobotModel, cloud: PointCloud,
                         dtheta: float = DEFAULT_DTHETA) -> PartitionGrid:
    """Compute orientation ranges at every cell center."""
    _check_dtheta(dtheta)
    cells: list[list[list[OrientationRange]]] = [
        [[] for _ in range(spec.ny)] for _ in range(spec.nx)]
    for ix in range(spec.nx):
        for iy in range(spec.ny):
            cells[ix][iy] = compute_cell_ranges(
                spec.cell_center(ix, iy), robot, cloud, dtheta)
    return PartitionGrid(spec, cells, dtheta)
