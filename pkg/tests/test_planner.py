import math

import numpy as np
import pytest

from alphasurvey.geometry import PointCloud, Pose2D
from alphasurvey.navgraph import build_nav_graph
from alphasurvey.partitions import GridSpec, build_partition_grid
from alphasurvey.planner import (Algorithm, PlannerConfig, PlanningError,
                                 body_overlapped_cells, coverage_metrics,
                                 footprint_cells, plan_coverage,
                                 resolve_start, validate_contamination_safety)

DT = math.radians(5.0)


def build_world(robot, cloud, nx, ny, cell=0.5, origin=(0.0, 0.0)):
    spec = GridSpec(origin[0], origin[1], cell, nx, ny)
    grid = build_partition_grid(spec, robot, cloud, DT)
    graph = build_nav_graph(grid, robot, cloud)
    return spec, grid, graph


def wall_points(x0, y0, x1, y1, n=60, z_levels=8):
    ts = np.linspace(0.0, 1.0, n)
    zs = np.linspace(0.05, 0.8, z_levels)
    return np.array([[x0 + (x1 - x0) * t, y0 + (y1 - y0) * t, z]
                     for t in ts for z in zs])


class TestFootprintCells:
    def test_axis_aligned_exact_cell(self, robot, empty_cloud):
        spec, grid, _ = build_world(robot, empty_cloud, 3, 3)
        sensor = Pose2D(0.75, 0.75, 0.0)  # footprint == cell (1, 1)
        assert footprint_cells(sensor, robot.sensor_footprint, grid) == {(1, 1)}

    def test_rotation_invariance_at_center(self, robot, empty_cloud):
        spec, grid, _ = build_world(robot, empty_cloud, 3, 3)
        for theta in (0.0, math.pi / 2, math.pi, 3 * math.pi / 2):
            sensor = Pose2D(0.75, 0.75, theta)
            assert footprint_cells(sensor, robot.sensor_footprint,
                                   grid) == {(1, 1)}

    def test_diagonal_footprint_covers_nothing_at_60pct(self, robot,
                                                        empty_cloud):
        # A 45-degree square over a cell corner leaves < 60% in each cell.
        spec, grid, _ = build_world(robot, empty_cloud, 2, 2)
        sensor = Pose2D(0.5, 0.5, math.pi / 4)
        assert footprint_cells(sensor, robot.sensor_footprint, grid) == set()


class TestResolveStart:
    def test_in_range_heading_kept(self, robot, empty_cloud):
        _, grid, _ = build_world(robot, empty_cloud, 2, 2)
        key, theta = resolve_start(grid, Pose2D(0.3, 0.3, 1.0))
        assert key == (0, 0, 0)
        assert theta == 1.0

    def test_outside_grid_raises(self, robot, empty_cloud):
        _, grid, _ = build_world(robot, empty_cloud, 2, 2)
        with pytest.raises(PlanningError):
            resolve_start(grid, Pose2D(5.0, 5.0, 0.0))

    def test_uncoverable_cell_raises(self, robot):
        # Point at the cell center at sensor height: the sensor disks sit
        # over the center for every heading, so no orientation is valid.
        cloud = PointCloud(np.array([[0.25, 0.25, 0.1]]))
        _, grid, _ = build_world(robot, cloud, 1, 1)
        assert grid.ranges(0, 0) == []
        with pytest.raises(PlanningError):
            resolve_start(grid, Pose2D(0.25, 0.25, 0.0))

    def test_heading_clamped_to_nearest_range(self, robot):
        # A wall east of the cell blocks headings near west (the trailing
        # body swings into it); ask for a blocked heading and expect a clamp.
        cloud = PointCloud(wall_points(1.0, -1.0, 1.0, 2.0))
        _, grid, _ = build_world(robot, cloud, 1, 1)
        ranges = grid.ranges(0, 0)
        assert ranges and not any(r.contains(math.pi) for r in ranges)
        key, theta = resolve_start(grid, Pose2D(0.25, 0.25, math.pi))
        assert any(r.contains(theta, tol=1e-9) for r in ranges)


@pytest.mark.parametrize("algorithm", [Algorithm.PATH_TRANSFORM,
                                       Algorithm.BSA])
class TestFullCoverage:
    def test_single_cell(self, robot, empty_cloud, algorithm):
        _, grid, graph = build_world(robot, empty_cloud, 1, 1)
        cfg = PlannerConfig(algorithm=algorithm,
                            start=Pose2D(0.25, 0.25, 0.0))
        plan = plan_coverage(graph, grid, robot, cfg)
        assert [s.node[:2] for s in plan.steps] == [(0, 0)]
        assert plan.covered_cells == {(0, 0)}

    def test_3x3_empty_full_coverage(self, robot, empty_cloud, algorithm):
        _, grid, graph = build_world(robot, empty_cloud, 3, 3)
        cfg = PlannerConfig(algorithm=algorithm,
                            start=Pose2D(0.25, 0.25, 0.0))
        plan = plan_coverage(graph, grid, robot, cfg)
        metrics = coverage_metrics(plan, grid, graph, cfg.start, robot)
        assert metrics.coverage_fraction == 1.0
        assert metrics.unreachable_cells == []

    def test_steps_are_graph_moves(self, robot, algorithm):
        cloud = PointCloud(wall_points(1.25, 1.0, 1.25, 2.0))
        _, grid, graph = build_world(robot, cloud, 5, 4)
        cfg = PlannerConfig(algorithm=algorithm,
                            start=Pose2D(0.25, 0.25, 0.0))
        plan = plan_coverage(graph, grid, robot, cfg)
        keys = [s.node for s in plan.steps]
        edge_keys = {(graph.nodes[u].key, graph.nodes[v].key)
                     for u, v, _ in graph.edges()}
        for a, b in zip(keys, keys[1:]):
            assert a == b or (a, b) in edge_keys

    def test_covered_set_matches_replay(self, robot, algorithm):
        cloud = PointCloud(wall_points(1.25, 1.0, 1.25, 2.0))
        _, grid, graph = build_world(robot, cloud, 5, 4)
        cfg = PlannerConfig(algorithm=algorithm,
                            start=Pose2D(0.25, 0.25, 0.0))
        plan = plan_coverage(graph, grid, robot, cfg)
        replay = set()
        for s in plan.steps:
            replay |= footprint_cells(s.sensor, robot.sensor_footprint,
                                      grid, cfg.min_overlap)
        assert plan.covered_cells == replay & grid.coverable_cells()

    def test_deterministic(self, robot, algorithm):
        cloud = PointCloud(wall_points(1.25, 1.0, 1.25, 2.0))
        _, grid, graph = build_world(robot, cloud, 5, 4)
        cfg = PlannerConfig(algorithm=algorithm,
                            start=Pose2D(0.25, 0.25, 0.0))
        p1 = plan_coverage(graph, grid, robot, cfg)
        p2 = plan_coverage(graph, grid, robot, cfg)
        assert [s.node for s in p1.steps] == [s.node for s in p2.steps]
        assert p1.total_length == p2.total_length

    def test_wall_isolates_far_side(self, robot, algorithm):
        # Full-height wall at x = 1.5 splits the 6x3 grid; cells beyond are
        # coverable but unreachable from the left half.
        cloud = PointCloud(wall_points(1.5, 0.0, 1.5, 1.5, n=80, z_levels=10))
        _, grid, graph = build_world(robot, cloud, 6, 3)
        cfg = PlannerConfig(algorithm=algorithm,
                            start=Pose2D(0.25, 0.25, math.pi / 2))
        plan = plan_coverage(graph, grid, robot, cfg)
        metrics = coverage_metrics(plan, grid, graph, cfg.start, robot)
        far = {(4, 0), (5, 0), (4, 1), (5, 1), (4, 2), (5, 2)}
        assert set(metrics.unreachable_cells) == far
        assert plan.covered_cells.isdisjoint(far)
        assert plan.covered_cells == (grid.coverable_cells() - far)


class TestBsa:
    def test_corridor_monotone_no_backtracks(self, robot, empty_cloud):
        _, grid, graph = build_world(robot, empty_cloud, 1, 3)
        cfg = PlannerConfig(algorithm=Algorithm.BSA,
                            start=Pose2D(0.25, 0.25, math.pi / 2))
        plan = plan_coverage(graph, grid, robot, cfg)
        assert [s.node[:2] for s in plan.steps] == [(0, 0), (0, 1), (0, 2)]
        assert plan.backtracks == 0

    def test_4x4_spiral_order(self, robot, empty_cloud):
        # Hand-derived inward spiral with the right/straight/left rule from
        # (0, 0) heading east.
        _, grid, graph = build_world(robot, empty_cloud, 4, 4)
        cfg = PlannerConfig(algorithm=Algorithm.BSA,
                            start=Pose2D(0.25, 0.25, 0.0))
        plan = plan_coverage(graph, grid, robot, cfg)
        expected = [(0, 0), (1, 0), (2, 0), (3, 0), (3, 1), (3, 2), (3, 3),
                    (2, 3), (1, 3), (0, 3), (0, 2), (0, 1), (1, 1), (2, 1),
                    (2, 2), (1, 2)]
        assert [s.node[:2] for s in plan.steps] == expected
        assert plan.backtracks == 0

    def test_dead_end_needs_backtrack(self, robot):
        cloud = PointCloud(wall_points(1.25, 1.0, 1.25, 2.0))
        _, grid, graph = build_world(robot, cloud, 5, 4)
        cfg = PlannerConfig(algorithm=Algorithm.BSA,
                            start=Pose2D(0.25, 0.25, 0.0))
        plan = plan_coverage(graph, grid, robot, cfg)
        assert plan.backtracks >= 1
        # Backtracking may revisit cells but never loses coverage.
        metrics = coverage_metrics(plan, grid, graph, cfg.start, robot)
        assert metrics.covered_cells == metrics.coverable_cells - len(
            metrics.unreachable_cells)


class TestContaminationSafety:
    def _corridor_world(self, robot, ncells=6):
        cloud = PointCloud(np.empty((0, 3)))
        spec = GridSpec(0.0, 0.0, 0.5, ncells, 1)
        grid = build_partition_grid(spec, robot, cloud, DT)
        return spec, grid

    def _straight_plan(self, robot, grid, theta):
        from alphasurvey.geometry import sensor_pose_to_base_pose
        from alphasurvey.planner import CoveragePlan, PlanStep
        steps = []
        covered = set()
        for ix in range(grid.spec.nx):
            cx, cy = grid.spec.cell_center(ix, 0)
            sensor = Pose2D(cx, cy, theta)
            base = sensor_pose_to_base_pose((cx, cy), theta, robot)
            steps.append(PlanStep((ix, 0, 0), sensor, base, 0.05))
            covered |= footprint_cells(sensor, robot.sensor_footprint, grid)
        return CoveragePlan(steps, covered, "manual", "0" * 16, 0.0, 0.0)

    def test_sensor_leading_clean(self, robot):
        _, grid = self._corridor_world(robot)
        plan = self._straight_plan(robot, grid, theta=0.0)
        assert validate_contamination_safety(plan, robot, grid) == []

    def test_body_leading_violates(self, robot):
        # Heading west while marching east: the body enters cells the sensor
        # has not covered yet.
        _, grid = self._corridor_world(robot)
        plan = self._straight_plan(robot, grid, theta=math.pi)
        violations = validate_contamination_safety(plan, robot, grid)
        assert len(violations) >= 1
        for k, cell in violations:
            assert k >= 1 and grid.spec.in_bounds(*cell)

    def test_step0_body_cells_are_clean_zone(self, robot):
        _, grid = self._corridor_world(robot, ncells=2)
        plan = self._straight_plan(robot, grid, theta=0.0)
        first = plan.steps[0]
        clean = body_overlapped_cells(first.base, robot, grid)
        # Re-running from step 1 only, with the clean zone removed, flags
        # exactly those cells the zone used to excuse (if the body still
        # touches them uncovered).
        violations = validate_contamination_safety(plan, robot, grid)
        for _, cell in violations:
            assert cell not in clean


class TestBodyOverlappedCells:
    def test_single_disk_center_of_cell(self, simple_robot, empty_cloud):
        spec, grid, _ = build_world(simple_robot, empty_cloud, 3, 3)
        base = Pose2D(0.75, 0.75, 0.0)
        cells = body_overlapped_cells(base, simple_robot, grid)
        # Body disk r=0.2 at the center of cell (1,1) pokes into no
        # neighbour: 0.2 < 0.25 half-cell.
        assert cells == {(1, 1)}

    def test_disk_on_boundary_touches_both(self, simple_robot, empty_cloud):
        spec, grid, _ = build_world(simple_robot, empty_cloud, 3, 3)
        base = Pose2D(0.5, 0.75, 0.0)  # centered on the x = 0.5 cell edge
        cells = body_overlapped_cells(base, simple_robot, grid)
        assert {(0, 1), (1, 1)} <= cells


class TestCoverageMetrics:
    def test_revisits_counted(self, robot, empty_cloud):
        _, grid, graph = build_world(robot, empty_cloud, 3, 3)
        cfg = PlannerConfig(algorithm=Algorithm.PATH_TRANSFORM,
                            start=Pose2D(0.25, 0.25, 0.0))
        plan = plan_coverage(graph, grid, robot, cfg)
        metrics = coverage_metrics(plan, grid, graph, cfg.start, robot)
        cells = [s.node[:2] for s in plan.steps]
        assert metrics.revisit_count == len(cells) - len(set(cells))

    def test_report_text_roundtrip_keys(self, robot, empty_cloud, tmp_path):
        _, grid, graph = build_world(robot, empty_cloud, 2, 2)
        cfg = PlannerConfig(algorithm=Algorithm.BSA,
                            start=Pose2D(0.25, 0.25, 0.0))
        plan = plan_coverage(graph, grid, robot, cfg)
        metrics = coverage_metrics(plan, grid, graph, cfg.start, robot)
        path = tmp_path / "report.txt"
        metrics.export(path)
        text = path.read_text()
        for key in ("coverable_cells", "coverage_fraction",
                    "contamination_violations"):
            assert key in text

    def test_plan_csv_format(self, robot, empty_cloud, tmp_path):
        _, grid, graph = build_world(robot, empty_cloud, 2, 1)
        cfg = PlannerConfig(algorithm=Algorithm.PATH_TRANSFORM,
                            start=Pose2D(0.25, 0.25, 0.0))
        plan = plan_coverage(graph, grid, robot, cfg)
        path = tmp_path / "plan.csv"
        plan.export_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == ("step,cell_x,cell_y,i,sensor_x,sensor_y,"
                            "theta_deg,base_x,base_y,velocity_mps")
        assert len(lines) == 1 + len(plan.steps)
        assert lines[1].startswith("0,0,0,")
