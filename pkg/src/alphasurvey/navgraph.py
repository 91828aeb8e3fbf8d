"""Navigation graph over grid partitions.

Nodes are partitions; a directed edge exists when the turn-drive-turn
transition between the two partitions' representative poses passes forward
simulation against the point cloud.  Edges are direction-dependent, so the
graph is stored directed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import (Pose2D, PointCloud, RobotModel,
                       all_poses_valid_near, sensor_pose_to_base_pose,
                       wrap_to_pi)
from .partitions import OrientationRange, Partition, PartitionGrid

DEFAULT_STEP_ANG = math.radians(5.0)
DEFAULT_KAPPA = 0.1

# Neighbor cell offsets in the fixed evaluation order: east, west, north, south.
NEIGHBOR_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class EdgeInfo:
    """Representative transition that validated this edge."""

    theta_from: float
    theta_to: float
    length: float
    turn: float

    def weight(self, kappa: float = DEFAULT_KAPPA) -> float:
        w = self.length + kappa * self.turn
        # Sparse-graph backends treat zero weights as missing edges.
        return w if w > 0.0 else 1e-12


def _transition_poses(start: Pose2D, end: Pose2D,
                      step_lin: float, step_ang: float) -> np.ndarray:
    """Sampled poses of the rotate / translate / rotate decomposition."""
    poses: list[tuple[float, float, float]] = [(start.x, start.y, start.theta)]
    dx = end.x - start.x
    dy = end.y - start.y
    dist = math.hypot(dx, dy)
    if dist < 1e-12:
        # Coincident positions: single in-place rotation.
        _append_rotation(poses, start.x, start.y, start.theta, end.theta, step_ang)
    else:
        travel = math.atan2(dy, dx)
        _append_rotation(poses, start.x, start.y, start.theta, travel, step_ang)
        n = max(1, math.ceil(dist / step_lin))
        for k in range(1, n + 1):
            t = k / n
            poses.append((start.x + t * dx, start.y + t * dy, travel))
        _append_rotation(poses, end.x, end.y, travel, end.theta, step_ang)
    return np.array(poses, dtype=np.float64)


def _append_rotation(poses: list, x: float, y: float,
                     theta_from: float, theta_to: float, step_ang: float) -> None:
    delta = wrap_to_pi(theta_to - theta_from)
    if delta == 0.0:
        return
    n = max(1, math.ceil(abs(delta) / step_ang))
    for k in range(1, n + 1):
        poses.append((x, y, theta_from + delta * k / n))


def transition_turn_total(start: Pose2D, end: Pose2D) -> float:
    """Total absolute rotation of the turn-drive-turn decomposition."""
    dx = end.x - start.x
    dy = end.y - start.y
    if math.hypot(dx, dy) < 1e-12:
        return abs(wrap_to_pi(end.theta - start.theta))
    travel = math.atan2(dy, dx)
    return (abs(wrap_to_pi(travel - start.theta))
            + abs(wrap_to_pi(end.theta - travel)))


def simulate_transition(start: Pose2D, end: Pose2D, robot: RobotModel,
                        cloud: PointCloud, step_lin: float,
                        step_ang: float = DEFAULT_STEP_ANG) -> bool:
    """Forward-simulate turn, straight drive, turn; all samples must be valid."""
    if step_lin <= 0.0 or step_ang <= 0.0:
        raise ValueError("step_lin and step_ang must be positive")
    poses = _transition_poses(start, end, step_lin, step_ang)
    cx = (start.x + end.x) / 2.0
    cy = (start.y + end.y) / 2.0
    crop = math.hypot(end.x - start.x, end.y - start.y) / 2.0
    return all_poses_valid_near(poses, robot, cloud, (cx, cy), crop)


def candidate_orientations(rng: OrientationRange) -> list[float]:
    """Candidate headings for a partition, in the documented trial order:
    midpoint, then lower endpoint, then upper endpoint (full circle: 0)."""
    if rng.is_full:
        return [0.0]
    cands = [rng.midpoint, rng.phi1, rng.phi2]
    out: list[float] = []
    for c in cands:
        if not any(abs(c - o) < 1e-12 for o in out):
            out.append(c)
    return out


def feasible_edge(a: Partition, b: Partition, grid: PartitionGrid,
                  robot: RobotModel, cloud: PointCloud,
                  step_lin: float | None = None,
                  step_ang: float = DEFAULT_STEP_ANG) -> EdgeInfo | None:
    """First candidate orientation pair whose transition simulates clean.

    Pairs are tried lexicographically over (candidates of a, candidates of b).
    Returns None when every candidate pair fails.
    """
    if step_lin is None:
        step_lin = grid.spec.cell_size / 4.0
    center_a = grid.spec.cell_center(*a.cell)
    center_b = grid.spec.cell_center(*b.cell)
    for tf in candidate_orientations(a.range):
        base_f = sensor_pose_to_base_pose(center_a, tf, robot)
        for tt in candidate_orientations(b.range):
            base_t = sensor_pose_to_base_pose(center_b, tt, robot)
            if simulate_transition(base_f, base_t, robot, cloud,
                                   step_lin, step_ang):
                length = math.hypot(base_t.x - base_f.x, base_t.y - base_f.y)
                turn = transition_turn_total(base_f, base_t)
                return EdgeInfo(theta_from=base_f.theta, theta_to=base_t.theta,
                                length=length, turn=turn)
    return None


class NavGraph:
    """Directed graph of partitions with validated transition edges."""

    def __init__(self, grid: PartitionGrid):
        self.grid = grid
        self.nodes: list[Partition] = list(grid.partitions())
        self.node_ids: dict[tuple[int, int, int], int] = {
            p.key: idx for idx, p in enumerate(self.nodes)}
        self.adjacency: list[list[tuple[int, EdgeInfo]]] = [
            [] for _ in self.nodes]

    def add_edge(self, u: int, v: int, info: EdgeInfo) -> None:
        self.adjacency[u].append((v, info))

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adjacency)

    def edges(self) -> list[tuple[int, int, EdgeInfo]]:
        return [(u, v, info)
                for u, adj in enumerate(self.adjacency)
                for v, info in adj]

    def edge_arrays(self, kappa: float = DEFAULT_KAPPA
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, weights) for sparse shortest-path backends."""
        rows, cols, w = [], [], []
        for u, v, info in self.edges():
            rows.append(u)
            cols.append(v)
            w.append(info.weight(kappa))
        return (np.array(rows, dtype=np.int32),
                np.array(cols, dtype=np.int32),
                np.array(w, dtype=np.float64))

    def reachable_from(self, start: int) -> set[int]:
        """Node ids reachable by directed BFS."""
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v, _ in self.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    def coreachable_to(self, goal: int) -> set[int]:
        """Node ids from which ``goal`` is reachable (backward BFS)."""
        rev: list[list[int]] = [[] for _ in self.nodes]
        for u, adj in enumerate(self.adjacency):
            for v, _ in adj:
                rev[v].append(u)
        seen = {goal}
        stack = [goal]
        while stack:
            u = stack.pop()
            for v in rev[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    def mutually_reachable_with(self, start: int) -> set[int]:
        """Strongly-connected component of ``start``.

        Edges are direction-dependent, so a node that can be entered but not
        left would strand the robot; planners traverse only this set.  Any
        path between two members stays inside the set.
        """
        return self.reachable_from(start) & self.coreachable_to(start)

    def export_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("from_cell_x,from_cell_y,from_i,to_cell_x,to_cell_y,to_i,"
                     "theta_from_deg,theta_to_deg,length_m,turn_rad\n")
            for u, v, info in self.edges():
                pa, pb = self.nodes[u], self.nodes[v]
                fh.write(f"{pa.cell[0]},{pa.cell[1]},{pa.index},"
                         f"{pb.cell[0]},{pb.cell[1]},{pb.index},"
                         f"{math.degrees(info.theta_from):.4f},"
                         f"{math.degrees(info.theta_to):.4f},"
                         f"{info.length:.6f},{info.turn:.6f}\n")


def neighbor_pairs(grid: PartitionGrid, node: Partition
                   ) -> list[Partition]:
    """Candidate destination partitions in deterministic order:
    same-cell partitions by index, then E/W/N/S neighbor cells."""
    ix, iy = node.cell
    out = []
    for i, rng in enumerate(grid.cells[ix][iy]):
        if i != node.index:
            out.append(Partition((ix, iy), i, rng))
    for dx, dy in NEIGHBOR_OFFSETS:
        jx, jy = ix + dx, iy + dy
        if grid.spec.in_bounds(jx, jy):
            for i, rng in enumerate(grid.cells[jx][jy]):
                out.append(Partition((jx, jy), i, rng))
    return out


def build_nav_graph(grid: PartitionGrid, robot: RobotModel, cloud: PointCloud,
                    step_lin: float | None = None,
                    step_ang: float = DEFAULT_STEP_ANG) -> NavGraph:
    """Evaluate feasible_edge for every same-cell / 4-adjacent partition pair."""
    graph = NavGraph(grid)
    for u, node in enumerate(graph.nodes):
        for other in neighbor_pairs(grid, node):
            info = feasible_edge(node, other, grid, robot, cloud,
                                 step_lin, step_ang)
            if info is not None:
                graph.add_edge(u, graph.node_ids[other.key], info)
    return graph
