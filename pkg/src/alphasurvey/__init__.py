"""Coverage-survey planning and simulation for a mobile robot carrying an
off-center alpha detector."""

from ._kernels import BACKEND as collision_backend
from .geometry import (CollisionCylinder, PointCloud, Pose2D, RobotModel,
                       default_robot_model, load_pointcloud, point_in_cylinder,
                       pose_valid, save_pointcloud, sensor_pose_to_base_pose)
from .navgraph import NavGraph, build_nav_graph, feasible_edge, simulate_transition
from .partitions import (GridSpec, OrientationRange, Partition, PartitionGrid,
                         build_partition_grid, compute_cell_ranges)
from .planner import (Algorithm, CoveragePlan, CoverageReport, PlannerConfig,
                      PlanningError, bsa_plan, coverage_metrics,
                      path_transform_plan, plan_coverage,
                      validate_contamination_safety)
from .survey import (DetectorConfig, DiskSource, SourceField, SurveyHeatmap,
                     Verdict, compare_heatmaps, count_threshold,
                     optimal_velocity, run_survey, simulate_measurement)

__version__ = "0.1.0"
