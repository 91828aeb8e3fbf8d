"""Declarative scene primitives rasterized to obstacle point clouds.

Scene files are line-oriented:

    # comment
    density 40
    bounds 0 0 5 5
    box     x y z  sx sy sz
    pillar  x y radius height
    table   x y width depth top_z thickness leg_radius leg_inset

``box`` takes the min corner and sizes; ``pillar`` and ``table`` take the
min corner (pillar: center) on the floor.  Rasterization is deterministic:
box surfaces on an inclusive grid, pillar lateral surface as stacked rings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import PointCloud


class SceneError(Exception):
    """Malformed scene file or out-of-bounds primitive."""


def _surface_count(size: float, density: float) -> int:
    return int(round(size * density)) + 1


@dataclass(frozen=True)
class BoxPrim:
    x: float
    y: float
    z: float
    sx: float
    sy: float
    sz: float

    def raster(self, density: float) -> np.ndarray:
        nx = _surface_count(self.sx, density)
        ny = _surface_count(self.sy, density)
        nz = _surface_count(self.sz, density)
        xs = np.linspace(self.x, self.x + self.sx, nx)
        ys = np.linspace(self.y, self.y + self.sy, ny)
        zs = np.linspace(self.z, self.z + self.sz, nz)
        pts = []
        for x0 in (self.x, self.x + self.sx):           # two yz faces
            yy, zz = np.meshgrid(ys, zs, indexing="ij")
            pts.append(np.column_stack([np.full(yy.size, x0),
                                        yy.ravel(), zz.ravel()]))
        for y0 in (self.y, self.y + self.sy):           # two xz faces
            xx, zz = np.meshgrid(xs, zs, indexing="ij")
            pts.append(np.column_stack([xx.ravel(),
                                        np.full(xx.size, y0), zz.ravel()]))
        for z0 in (self.z, self.z + self.sz):           # two xy faces
            xx, yy = np.meshgrid(xs, ys, indexing="ij")
            pts.append(np.column_stack([xx.ravel(), yy.ravel(),
                                        np.full(xx.size, z0)]))
        return np.vstack(pts)

    def expected_point_count(self, density: float) -> int:
        nx = _surface_count(self.sx, density)
        ny = _surface_count(self.sy, density)
        nz = _surface_count(self.sz, density)
        return 2 * (nx * ny + nx * nz + ny * nz)

    def xy_extent(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.x + self.sx, self.y + self.sy)


@dataclass(frozen=True)
class PillarPrim:
    x: float
    y: float
    radius: float
    height: float

    def raster(self, density: float) -> np.ndarray:
        nz = _surface_count(self.height, density)
        zs = np.linspace(0.0, self.height, nz)
        nring = max(1, math.ceil(2.0 * math.pi * self.radius * density))
        angles = 2.0 * math.pi * np.arange(nring) / nring
        ring_x = self.x + self.radius * np.cos(angles)
        ring_y = self.y + self.radius * np.sin(angles)
        pts = [np.column_stack([ring_x, ring_y, np.full(nring, z)])
               for z in zs]
        return np.vstack(pts)

    def xy_extent(self) -> tuple[float, float, float, float]:
        return (self.x - self.radius, self.y - self.radius,
                self.x + self.radius, self.y + self.radius)


@dataclass(frozen=True)
class TablePrim:
    x: float
    y: float
    width: float
    depth: float
    top_z: float
    thickness: float
    leg_radius: float
    leg_inset: float

    def parts(self) -> list:
        top = BoxPrim(self.x, self.y, self.top_z - self.thickness,
                      self.width, self.depth, self.thickness)
        legs = [
            PillarPrim(self.x + self.leg_inset, self.y + self.leg_inset,
                       self.leg_radius, self.top_z - self.thickness),
            PillarPrim(self.x + self.width - self.leg_inset,
                       self.y + self.leg_inset,
                       self.leg_radius, self.top_z - self.thickness),
            PillarPrim(self.x + self.leg_inset,
                       self.y + self.depth - self.leg_inset,
                       self.leg_radius, self.top_z - self.thickness),
            PillarPrim(self.x + self.width - self.leg_inset,
                       self.y + self.depth - self.leg_inset,
                       self.leg_radius, self.top_z - self.thickness),
        ]
        return [top] + legs

    def raster(self, density: float) -> np.ndarray:
        return np.vstack([p.raster(density) for p in self.parts()])

    def xy_extent(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.x + self.width, self.y + self.depth)


@dataclass
class SceneSpec:
    primitives: list
    density: float = 40.0  # points per meter
    bounds: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if self.density <= 0.0:
            raise SceneError("density must be positive")
        if self.bounds is not None:
            self._check_bounds()

    def _check_bounds(self):
        bx0, by0, bx1, by1 = self.bounds
        for k, prim in enumerate(self.primitives):
            x0, y0, x1, y1 = prim.xy_extent()
            if x0 < bx0 or y0 < by0 or x1 > bx1 or y1 > by1:
                kind = type(prim).__name__.removesuffix("Prim").lower()
                raise SceneError(
                    f"primitive #{k} ({kind}) extends "
                    f"outside bounds {self.bounds}")

    def rasterize(self) -> PointCloud:
        if not self.primitives:
            return PointCloud(np.empty((0, 3)))
        pts = np.vstack([p.raster(self.density) for p in self.primitives])
        return PointCloud(pts)


_ARITY = {"box": 6, "pillar": 4, "table": 8}


def parse_scene(path: str | Path) -> SceneSpec:
    prims = []
    density = 40.0
    bounds = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split()
            kind = fields[0].lower()
            try:
                args = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise SceneError(f"{path}:{lineno}: {exc}") from None
            if kind == "density":
                if len(args) != 1:
                    raise SceneError(f"{path}:{lineno}: density takes 1 value")
                density = args[0]
            elif kind == "bounds":
                if len(args) != 4:
                    raise SceneError(f"{path}:{lineno}: bounds takes 4 values")
                bounds = tuple(args)
            elif kind in _ARITY:
                if len(args) != _ARITY[kind]:
                    raise SceneError(
                        f"{path}:{lineno}: {kind} takes {_ARITY[kind]} values")
                if kind == "box":
                    prims.append(BoxPrim(*args))
                elif kind == "pillar":
                    prims.append(PillarPrim(*args))
                else:
                    prims.append(TablePrim(*args))
            else:
                raise SceneError(f"{path}:{lineno}: unknown directive {kind!r}")
    return SceneSpec(primitives=prims, density=density, bounds=bounds)
