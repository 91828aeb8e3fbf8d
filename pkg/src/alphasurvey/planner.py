"""Coverage planners over the partition navigation graph.

Both planners (graph-adapted Path Transform and Backtracking Spiral) walk the
navigation graph so that every step is a validated transition, and terminate
once every reachable coverable cell has been swept by the sensor footprint.
"""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from shapely import affinity
from shapely.geometry import box

from .geometry import Pose2D, RobotModel, sensor_pose_to_base_pose
from .navgraph import DEFAULT_KAPPA, NavGraph
from .partitions import PartitionGrid

DEFAULT_MIN_OVERLAP = 0.6


class PlanningError(Exception):
    """Raised when the requested plan cannot be started."""


class Algorithm(Enum):
    PATH_TRANSFORM = "PATH_TRANSFORM"
    BSA = "BSA"


@dataclass(frozen=True)
class PlannerConfig:
    algorithm: Algorithm
    start: Pose2D  # sensor pose
    obstacle_weight: float = 1.0
    contamination_penalty: float = 0.0
    revisit_penalty: float = 0.0
    min_overlap: float = DEFAULT_MIN_OVERLAP
    kappa: float = DEFAULT_KAPPA
    velocity: float = 0.05

    def __post_init__(self):
        if self.obstacle_weight < 0.0:
            raise ValueError("obstacle_weight must be >= 0")
        if self.contamination_penalty < 0.0 or self.revisit_penalty < 0.0:
            raise ValueError("penalties must be >= 0")
        if not (0.0 < self.min_overlap <= 1.0):
            raise ValueError("min_overlap must be in (0, 1]")
        if self.velocity <= 0.0:
            raise ValueError("velocity must be positive")

    def digest(self) -> str:
        text = (f"{self.algorithm.value}|{self.start}|{self.obstacle_weight}|"
                f"{self.contamination_penalty}|{self.revisit_penalty}|"
                f"{self.min_overlap}|{self.kappa}|{self.velocity}")
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PlanStep:
    node: tuple[int, int, int]  # (cell_x, cell_y, partition index)
    sensor: Pose2D
    base: Pose2D
    velocity: float


@dataclass
class CoveragePlan:
    steps: list[PlanStep]
    covered_cells: set[tuple[int, int]]
    algorithm: str
    config_hash: str
    total_length: float
    total_turn: float
    backtracks: int = 0

    def export_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("step,cell_x,cell_y,i,sensor_x,sensor_y,theta_deg,"
                     "base_x,base_y,velocity_mps\n")
            for k, s in enumerate(self.steps):
                fh.write(f"{k},{s.node[0]},{s.node[1]},{s.node[2]},"
                         f"{s.sensor.x:.6f},{s.sensor.y:.6f},"
                         f"{math.degrees(s.sensor.theta):.4f},"
                         f"{s.base.x:.6f},{s.base.y:.6f},"
                         f"{s.velocity:.6f}\n")


@dataclass
class CoverageReport:
    coverable_cells: int
    covered_cells: int
    coverage_fraction: float
    uncoverable_cells: list[tuple[int, int]]
    unreachable_cells: list[tuple[int, int]]
    revisit_count: int
    path_length: float
    contamination_violations: int

    def to_text(self) -> str:
        def cells(lst):
            return ";".join(f"{x}:{y}" for x, y in sorted(lst, key=lambda c: (c[1], c[0])))
        lines = [
            f"coverable_cells {self.coverable_cells}",
            f"covered_cells {self.covered_cells}",
            f"coverage_fraction {self.coverage_fraction:.6f}",
            f"uncoverable_cells {cells(self.uncoverable_cells)}",
            f"unreachable_cells {cells(self.unreachable_cells)}",
            f"revisit_count {self.revisit_count}",
            f"path_length {self.path_length:.6f}",
            f"contamination_violations {self.contamination_violations}",
        ]
        return "\n".join(lines) + "\n"

    def export(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="ascii")


def footprint_polygon(sensor: Pose2D, footprint: tuple[float, float]):
    """Rotated rectangle of the sensor footprint at a sensor pose."""
    length, width = footprint
    rect = box(sensor.x - length / 2.0, sensor.y - width / 2.0,
               sensor.x + length / 2.0, sensor.y + width / 2.0)
    return affinity.rotate(rect, math.degrees(sensor.theta),
                           origin=(sensor.x, sensor.y))


def footprint_cells(sensor: Pose2D, footprint: tuple[float, float],
                    grid: PartitionGrid,
                    min_overlap: float = DEFAULT_MIN_OVERLAP
                    ) -> set[tuple[int, int]]:
    """Cells whose area is overlapped by >= min_overlap of the footprint."""
    poly = footprint_polygon(sensor, footprint)
    spec = grid.spec
    minx, miny, maxx, maxy = poly.bounds
    cell_area = spec.cell_size * spec.cell_size
    ix0 = max(0, math.floor((minx - spec.origin_x) / spec.cell_size))
    ix1 = min(spec.nx - 1, math.floor((maxx - spec.origin_x) / spec.cell_size))
    iy0 = max(0, math.floor((miny - spec.origin_y) / spec.cell_size))
    iy1 = min(spec.ny - 1, math.floor((maxy - spec.origin_y) / spec.cell_size))
    out = set()
    for ix in range(ix0, ix1 + 1):
        for iy in range(iy0, iy1 + 1):
            cx0 = spec.origin_x + ix * spec.cell_size
            cy0 = spec.origin_y + iy * spec.cell_size
            cell = box(cx0, cy0, cx0 + spec.cell_size, cy0 + spec.cell_size)
            if poly.intersection(cell).area >= min_overlap * cell_area:
                out.add((ix, iy))
    return out


def resolve_start(grid: PartitionGrid, start: Pose2D) -> tuple[tuple[int, int, int], float]:
    """Map a start sensor pose to (partition key, start heading).

    Picks the partition at the start cell containing the heading; when none
    contains it, the nearest partition by heading distance is used with the
    heading clamped to its closest endpoint.
    """
    idx = grid.spec.cell_index(start.x, start.y)
    if idx is None:
        raise PlanningError(f"start pose ({start.x:.3f}, {start.y:.3f}) "
                            "is outside the grid")
    ix, iy = idx
    ranges = grid.ranges(ix, iy)
    if not ranges:
        raise PlanningError(f"start cell ({ix}, {iy}) has no valid orientation "
                            "range (uncoverable)")
    for i, rng in enumerate(ranges):
        if rng.contains(start.theta):
            return (ix, iy, i), start.theta
    best = min(range(len(ranges)),
               key=lambda i: (ranges[i].angular_distance(start.theta), i))
    rng = ranges[best]
    d1 = abs(math.remainder(start.theta - rng.phi1, 2.0 * math.pi))
    d2 = abs(math.remainder(start.theta - rng.phi2, 2.0 * math.pi))
    theta = rng.phi1 if d1 <= d2 else rng.phi2
    return (ix, iy, best), theta


class _PlanBuilder:
    """Shared machinery: step emission, coverage tracking, shortest paths."""

    def __init__(self, graph: NavGraph, grid: PartitionGrid,
                 robot: RobotModel, cfg: PlannerConfig):
        self.graph = graph
        self.grid = grid
        self.robot = robot
        self.cfg = cfg
        self.rows, self.cols, self.base_w = graph.edge_arrays(cfg.kappa)
        self.edge_info = {}
        for u, v, info in graph.edges():
            self.edge_info[(u, v)] = info
        self.head_cells = np.array(
            [graph.nodes[v].cell for v in self.cols], dtype=np.int64
        ).reshape(-1, 2) if len(self.cols) else np.empty((0, 2), dtype=np.int64)
        self.dynamic = (cfg.contamination_penalty > 0.0
                        or cfg.revisit_penalty > 0.0)
        if cfg.contamination_penalty > 0.0:
            self._node_body_cells = [
                self._body_cells_at(n) for n in range(graph.num_nodes)]
        self.covered: set[tuple[int, int]] = set()
        self.steps: list[PlanStep] = []
        self.total_length = 0.0
        self.total_turn = 0.0
        self._static_mat = None

    def _body_cells_at(self, node_id: int) -> set[tuple[int, int]]:
        node = self.graph.nodes[node_id]
        center = self.grid.spec.cell_center(*node.cell)
        base = sensor_pose_to_base_pose(center, node.range.midpoint, self.robot)
        return body_overlapped_cells(base, self.robot, self.grid)

    def _matrix(self):
        n = self.graph.num_nodes
        if not self.dynamic:
            if self._static_mat is None:
                self._static_mat = csr_matrix(
                    (self.base_w, (self.rows, self.cols)), shape=(n, n))
            return self._static_mat
        w = self.base_w.copy()
        if self.cfg.revisit_penalty > 0.0 and self.covered:
            for k in range(len(w)):
                if tuple(self.head_cells[k]) in self.covered:
                    w[k] += self.cfg.revisit_penalty
        if self.cfg.contamination_penalty > 0.0:
            for k in range(len(w)):
                v = self.cols[k]
                dirty = sum(
                    1 for c in self._node_body_cells[v]
                    if c not in self.covered and c != tuple(self.head_cells[k]))
                w[k] += self.cfg.contamination_penalty * dirty
        return csr_matrix((w, (self.rows, self.cols)), shape=(n, n))

    def shortest_paths(self, source: int) -> tuple[np.ndarray, np.ndarray]:
        dist, pred = dijkstra(self._matrix(), indices=source,
                              return_predecessors=True)
        return dist, pred

    def emit(self, node_id: int, theta: float) -> None:
        node = self.graph.nodes[node_id]
        center = self.grid.spec.cell_center(*node.cell)
        sensor = Pose2D(center[0], center[1], theta)
        base = sensor_pose_to_base_pose(center, theta, self.robot)
        self.steps.append(PlanStep(node.key, sensor, base, self.cfg.velocity))
        self.covered |= footprint_cells(sensor, self.robot.sensor_footprint,
                                        self.grid, self.cfg.min_overlap)

    def walk_path(self, pred: np.ndarray, source: int, target: int) -> int:
        """Emit steps along the predecessor path source -> target."""
        chain = []
        v = target
        while v != source:
            chain.append(v)
            v = int(pred[v])
        chain.reverse()
        u = source
        for v in chain:
            info = self.edge_info[(u, v)]
            self.emit(v, info.theta_to)
            self.total_length += info.length
            self.total_turn += info.turn
            u = v
        return target

    def finish(self, algorithm: Algorithm, backtracks: int = 0) -> CoveragePlan:
        return CoveragePlan(
            steps=self.steps,
            covered_cells=self.covered,
            algorithm=algorithm.value,
            config_hash=self.cfg.digest(),
            total_length=self.total_length,
            total_turn=self.total_turn,
            backtracks=backtracks,
        )


def _obstacle_proximity(grid: PartitionGrid) -> np.ndarray:
    """4-connected grid distance (in cells) to the nearest uncoverable cell."""
    spec = grid.spec
    dist = np.full((spec.nx, spec.ny), np.inf)
    queue = deque()
    for (ix, iy) in grid.uncoverable_cells():
        dist[ix, iy] = 0.0
        queue.append((ix, iy))
    while queue:
        ix, iy = queue.popleft()
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            jx, jy = ix + dx, iy + dy
            if spec.in_bounds(jx, jy) and np.isinf(dist[jx, jy]):
                dist[jx, jy] = dist[ix, iy] + 1.0
                queue.append((jx, jy))
    return dist


def path_transform_plan(graph: NavGraph, grid: PartitionGrid,
                        robot: RobotModel, cfg: PlannerConfig) -> CoveragePlan:
    """Greedy coverage by minimum path-transform score.

    Score of a candidate node = shortest-path distance from the current node
    plus obstacle_weight / (1 + grid distance to the nearest uncoverable
    cell), so routes near obstacles are deprioritized.  Ties break on lowest
    (cell_y, cell_x, partition index).
    """
    b = _PlanBuilder(graph, grid, robot, cfg)
    start_key, start_theta = resolve_start(grid, cfg.start)
    cur = graph.node_ids[start_key]
    allowed = graph.mutually_reachable_with(cur)
    b.emit(cur, start_theta)
    d_obs = _obstacle_proximity(grid)
    coverable = grid.coverable_cells()

    while True:
        dist, pred = b.shortest_paths(cur)
        best = None
        best_score = None
        for v, node in enumerate(graph.nodes):
            cell = node.cell
            if v not in allowed or cell in b.covered or cell not in coverable:
                continue
            if not np.isfinite(dist[v]):
                continue
            prox = cfg.obstacle_weight / (1.0 + d_obs[cell[0], cell[1]])
            score = (dist[v] + prox, cell[1], cell[0], node.index)
            if best_score is None or score < best_score:
                best_score = score
                best = v
        if best is None:
            break
        cur = b.walk_path(pred, cur, best)
    return b.finish(Algorithm.PATH_TRANSFORM)


_DIRS = {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}
_FALLBACK_ORDER = ("N", "E", "S", "W")


def _quantize_heading(theta: float) -> tuple[int, int]:
    c, s = math.cos(theta), math.sin(theta)
    if abs(c) >= abs(s):
        return (1, 0) if c >= 0 else (-1, 0)
    return (0, 1) if s >= 0 else (0, -1)


def _right_of(d: tuple[int, int]) -> tuple[int, int]:
    return (d[1], -d[0])


def _left_of(d: tuple[int, int]) -> tuple[int, int]:
    return (-d[1], d[0])


def bsa_plan(graph: NavGraph, grid: PartitionGrid, robot: RobotModel,
             cfg: PlannerConfig) -> CoveragePlan:
    """Backtracking-spiral coverage over the navigation graph.

    Spiral rule: hug the boundary on the robot's right by preferring the
    right, straight, then left neighbor relative to the current travel
    direction; otherwise fall back to any uncovered neighbor in N-E-S-W
    order.  At a dead end, backtrack along the shortest graph path to the
    nearest node over an uncovered coverable cell.
    """
    b = _PlanBuilder(graph, grid, robot, cfg)
    start_key, start_theta = resolve_start(grid, cfg.start)
    cur = graph.node_ids[start_key]
    allowed = graph.mutually_reachable_with(cur)
    b.emit(cur, start_theta)
    direction = _quantize_heading(start_theta)
    coverable = grid.coverable_cells()
    backtracks = 0

    def move_target(cell: tuple[int, int]) -> tuple[int, object] | None:
        """Lowest-index partition of ``cell`` reachable by one edge."""
        cands = [(graph.nodes[v].index, v, info)
                 for v, info in graph.adjacency[cur]
                 if graph.nodes[v].cell == cell and v in allowed]
        if not cands:
            return None
        _, v, info = min(cands, key=lambda t: t[0])
        return v, info

    while True:
        cell = graph.nodes[cur].cell
        moved = False
        tried: list[tuple[int, int]] = []
        for d in (_right_of(direction), direction, _left_of(direction)):
            if d not in tried:
                tried.append(d)
        for name in _FALLBACK_ORDER:
            if _DIRS[name] not in tried:
                tried.append(_DIRS[name])
        for d in tried:
            nxt = (cell[0] + d[0], cell[1] + d[1])
            if (not grid.spec.in_bounds(*nxt) or nxt in b.covered
                    or nxt not in coverable):
                continue
            hit = move_target(nxt)
            if hit is None:
                continue
            v, info = hit
            b.emit(v, info.theta_to)
            b.total_length += info.length
            b.total_turn += info.turn
            cur = v
            direction = d
            moved = True
            break
        if moved:
            continue
        # Dead end: shortest path to the nearest frontier node.
        dist, pred = b.shortest_paths(cur)
        best = None
        best_score = None
        for v, node in enumerate(graph.nodes):
            ncell = node.cell
            if v not in allowed or ncell in b.covered or ncell not in coverable:
                continue
            if not np.isfinite(dist[v]):
                continue
            score = (dist[v], ncell[1], ncell[0], node.index)
            if best_score is None or score < best_score:
                best_score = score
                best = v
        if best is None:
            break
        prev_cell = graph.nodes[cur].cell
        cur = b.walk_path(pred, cur, best)
        backtracks += 1
        new_cell = graph.nodes[cur].cell
        delta = (new_cell[0] - prev_cell[0], new_cell[1] - prev_cell[1])
        if delta in _DIRS.values():
            direction = delta
    return b.finish(Algorithm.BSA, backtracks=backtracks)


def plan_coverage(graph: NavGraph, grid: PartitionGrid, robot: RobotModel,
                  cfg: PlannerConfig) -> CoveragePlan:
    if cfg.algorithm is Algorithm.PATH_TRANSFORM:
        return path_transform_plan(graph, grid, robot, cfg)
    return bsa_plan(graph, grid, robot, cfg)


def body_overlapped_cells(base: Pose2D, robot: RobotModel,
                          grid: PartitionGrid) -> set[tuple[int, int]]:
    """Cells overlapped (positive area) by any BODY cylinder disk at ``base``."""
    spec = grid.spec
    out = set()
    c, s = math.cos(base.theta), math.sin(base.theta)
    for ox, oy, r, _, _ in robot.body_array:
        cx = base.x + c * ox - s * oy
        cy = base.y + s * ox + c * oy
        ix0 = max(0, math.floor((cx - r - spec.origin_x) / spec.cell_size))
        ix1 = min(spec.nx - 1, math.floor((cx + r - spec.origin_x) / spec.cell_size))
        iy0 = max(0, math.floor((cy - r - spec.origin_y) / spec.cell_size))
        iy1 = min(spec.ny - 1, math.floor((cy + r - spec.origin_y) / spec.cell_size))
        for ix in range(ix0, ix1 + 1):
            for iy in range(iy0, iy1 + 1):
                x0 = spec.origin_x + ix * spec.cell_size
                y0 = spec.origin_y + iy * spec.cell_size
                # Distance from disk center to the cell rectangle.
                dx = max(x0 - cx, 0.0, cx - (x0 + spec.cell_size))
                dy = max(y0 - cy, 0.0, cy - (y0 + spec.cell_size))
                if dx * dx + dy * dy < r * r:
                    out.add((ix, iy))
    return out


def validate_contamination_safety(plan: CoveragePlan, robot: RobotModel,
                                  grid: PartitionGrid,
                                  min_overlap: float = DEFAULT_MIN_OVERLAP
                                  ) -> list[tuple[int, tuple[int, int]]]:
    """Replay the plan; list (step index, cell) body incursions.

    A violation is a cell overlapped by the robot body that is neither
    sensor-covered by an earlier-or-current step nor part of the clean start
    zone (cells the body overlaps at step 0).
    """
    violations: list[tuple[int, tuple[int, int]]] = []
    covered: set[tuple[int, int]] = set()
    clean_zone: set[tuple[int, int]] = set()
    for k, step in enumerate(plan.steps):
        covered |= footprint_cells(step.sensor, robot.sensor_footprint,
                                   grid, min_overlap)
        body = body_overlapped_cells(step.base, robot, grid)
        if k == 0:
            clean_zone = set(body)
            continue
        for cell in sorted(body, key=lambda c: (c[1], c[0])):
            if cell not in covered and cell not in clean_zone:
                violations.append((k, cell))
    return violations


def coverage_metrics(plan: CoveragePlan, grid: PartitionGrid, graph: NavGraph,
                     start: Pose2D, robot: RobotModel) -> CoverageReport:
    """Recount coverage from the plan and graph reachability from the start."""
    coverable = grid.coverable_cells()
    uncoverable = grid.uncoverable_cells()
    covered = set()
    for step in plan.steps:
        covered |= footprint_cells(step.sensor, robot.sensor_footprint, grid)
    covered &= coverable

    unreachable: list[tuple[int, int]] = []
    try:
        start_key, _ = resolve_start(grid, start)
        reached = graph.mutually_reachable_with(graph.node_ids[start_key])
        reachable_cells = {graph.nodes[v].cell for v in reached}
        unreachable = sorted(coverable - reachable_cells,
                             key=lambda c: (c[1], c[0]))
    except PlanningError:
        unreachable = sorted(coverable, key=lambda c: (c[1], c[0]))

    seen: set[tuple[int, int]] = set()
    revisits = 0
    for step in plan.steps:
        cell = (step.node[0], step.node[1])
        if cell in seen:
            revisits += 1
        seen.add(cell)

    n_cov = len(coverable)
    fraction = (len(covered) / n_cov) if n_cov else 1.0
    return CoverageReport(
        coverable_cells=n_cov,
        covered_cells=len(covered),
        coverage_fraction=fraction,
        uncoverable_cells=sorted(uncoverable, key=lambda c: (c[1], c[0])),
        unreachable_cells=unreachable,
        revisit_count=revisits,
        path_length=plan.total_length,
        contamination_violations=len(
            validate_contamination_safety(plan, robot, grid)),
    )
