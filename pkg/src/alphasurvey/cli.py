"""Command-line entry point.

Subcommands:
    scene      rasterize a scene spec file to an ASCII point cloud
    partition  build the orientation-partitioned grid and export it
    plan       full pipeline partition -> graph -> coverage plan + report
    survey     run the plan, simulate measurements, write the heat map

Exit codes: 0 success, 1 config/parse error, 2 planning infeasibility,
3 IO error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_robot_model, load_run_config
from .geometry import load_pointcloud, save_pointcloud
from .navgraph import build_nav_graph
from .partitions import build_partition_grid
from .planner import (PlanningError, coverage_metrics, plan_coverage)
from .scene import SceneError, parse_scene
from .survey import (GridMismatchError, compare_heatmaps, count_threshold,
                     load_heatmap_csv, run_survey)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PLANNING = 2
EXIT_IO = 3


def _load_inputs(cfg: RunConfig):
    robot = load_robot_model(cfg.robot_path)
    cloud = load_pointcloud(cfg.cloud_path, z_floor=cfg.z_floor)
    return robot, cloud


def _build_grid(cfg: RunConfig, robot, cloud):
    return build_partition_grid(cfg.grid, robot, cloud, cfg.dtheta)


def cmd_scene(args) -> int:
    spec = parse_scene(args.scenefile)
    cloud = spec.rasterize()
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "cloud.xyz"
    save_pointcloud(cloud, out,
                    header=f"scene={args.scenefile} density={spec.density}")
    print(f"wrote {out} ({len(cloud)} points)")
    return EXIT_OK


def cmd_partition(args) -> int:
    cfg = _config(args)
    robot, cloud = _load_inputs(cfg)
    grid = _build_grid(cfg, robot, cloud)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.out_dir / "partitions.csv"
    grid.export_csv(out)
    n_cov = len(grid.coverable_cells())
    n_unc = len(grid.uncoverable_cells())
    print(f"wrote {out}")
    print(f"coverable: {n_cov}")
    print(f"uncoverable: {n_unc}")
    return EXIT_OK


def _plan_pipeline(cfg: RunConfig):
    robot, cloud = _load_inputs(cfg)
    grid = _build_grid(cfg, robot, cloud)
    graph = build_nav_graph(grid, robot, cloud, cfg.step_lin, cfg.step_ang)
    planner_cfg = cfg.planner
    if planner_cfg.velocity > robot.max_linear_speed:
        planner_cfg = type(planner_cfg)(
            algorithm=planner_cfg.algorithm, start=planner_cfg.start,
            obstacle_weight=planner_cfg.obstacle_weight,
            contamination_penalty=planner_cfg.contamination_penalty,
            revisit_penalty=planner_cfg.revisit_penalty,
            min_overlap=planner_cfg.min_overlap, kappa=planner_cfg.kappa,
            velocity=robot.max_linear_speed)
    plan = plan_coverage(graph, grid, robot, planner_cfg)
    return robot, cloud, grid, graph, plan, planner_cfg


def cmd_plan(args) -> int:
    cfg = _config(args)
    try:
        robot, _, grid, graph, plan, planner_cfg = _plan_pipeline(cfg)
    except PlanningError as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    plan.export_csv(cfg.out_dir / "plan.csv")
    report = coverage_metrics(plan, grid, graph, planner_cfg.start, robot)
    report.export(cfg.out_dir / "report.txt")
    print(f"wrote {cfg.out_dir / 'plan.csv'}")
    print(f"coverage_fraction: {report.coverage_fraction:.4f}")
    if report.unreachable_cells:
        cells = " ".join(f"{x}:{y}" for x, y in report.unreachable_cells)
        print(f"unreachable cells: {cells}")
    return EXIT_OK


def cmd_survey(args) -> int:
    cfg = _config(args)
    try:
        robot, _, grid, graph, plan, planner_cfg = _plan_pipeline(cfg)
    except PlanningError as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    from .survey import SourceField
    field = _load_field(args)
    heatmap = run_survey(plan, field, cfg.detector, grid, cfg.seed,
                         footprint=robot.sensor_footprint,
                         min_overlap=planner_cfg.min_overlap)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    plan.export_csv(cfg.out_dir / "plan.csv")
    heatmap.export_csv(cfg.out_dir / "heatmap.csv")
    heatmap.export_metadata(cfg.out_dir / "heatmap_meta.txt")
    if cfg.write_pgm:
        heatmap.export_pgm(cfg.out_dir / "heatmap.pgm",
                           count_threshold(cfg.detector))
    print(f"wrote {cfg.out_dir / 'heatmap.csv'}")
    if args.baseline:
        baseline = load_heatmap_csv(args.baseline, grid.spec)
        diff = compare_heatmaps(baseline, heatmap)
        diff.export(cfg.out_dir / "diff.txt")
        print(f"wrote {cfg.out_dir / 'diff.txt'} "
              f"({diff.total_changes} verdict changes)")
    return EXIT_OK


def _load_field(args):
    """Source field from a sidecar sources file, if given."""
    from .survey import DiskSource, SourceField
    if not getattr(args, "sources", None):
        return SourceField()
    sources = []
    background = 0.0
    with open(args.sources, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split()
            if fields[0] == "disk" and len(fields) == 5:
                sources.append(DiskSource(*(float(v) for v in fields[1:])))
            elif fields[0] == "background" and len(fields) == 2:
                background = float(fields[1])
            else:
                raise ConfigError(f"{args.sources}:{lineno}: bad source line")
    return SourceField(sources=tuple(sources), background_emission=background)


def _config(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    cfg = load_run_config(args.config)
    if args.out:
        cfg.out_dir = Path(args.out)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alphasurvey",
        description="Plan and simulate floor-coverage radiation surveys.")
    parser.add_argument("--config", help="run configuration file")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, default=None,
                        help="random seed (overrides config)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_scene = sub.add_parser("scene", help="rasterize a scene spec")
    p_scene.add_argument("scenefile")
    p_scene.set_defaults(func=cmd_scene)

    p_part = sub.add_parser("partition", help="build the partition grid")
    p_part.set_defaults(func=cmd_partition)

    p_plan = sub.add_parser("plan", help="compute a coverage plan")
    p_plan.set_defaults(func=cmd_plan)

    p_surv = sub.add_parser("survey", help="simulate a survey")
    p_surv.add_argument("--baseline", help="prior heat map CSV to diff against")
    p_surv.add_argument("--sources", help="source field file")
    p_surv.set_defaults(func=cmd_survey)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SceneError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GridMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PlanningError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
