"""Run configuration and robot model file parsing.

Config files are INI-style sections of key = value pairs; all angles are in
degrees, all lengths in meters except the [detector] section, which uses cm
to match the count-threshold policy units.  See the README for the full key
list.

Robot model files are line-oriented:

    BODY   offset_x offset_y radius z_min z_max
    SENSOR offset_x offset_y radius z_min z_max
    sensor_offset dx dy
    sensor_footprint length width
    max_linear_speed v
    max_angular_speed w
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path

from .geometry import (DEFAULT_Z_FLOOR, CollisionCylinder, Pose2D, RobotModel)
from .navgraph import DEFAULT_STEP_ANG
from .partitions import DEFAULT_DTHETA, GridSpec
from .planner import Algorithm, PlannerConfig
from .survey import DetectorConfig


class ConfigError(Exception):
    """Malformed configuration or robot model file."""


def load_robot_model(path: str | Path) -> RobotModel:
    body: list[CollisionCylinder] = []
    sensor: list[CollisionCylinder] = []
    params: dict[str, list[float]] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split()
            tag = fields[0]
            try:
                vals = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
            if tag in ("BODY", "SENSOR"):
                if len(vals) != 5:
                    raise ConfigError(
                        f"{path}:{lineno}: cylinder lines take 5 values")
                try:
                    cyl = CollisionCylinder(*vals)
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: {exc}") from None
                (body if tag == "BODY" else sensor).append(cyl)
            elif tag in ("sensor_offset", "sensor_footprint",
                         "max_linear_speed", "max_angular_speed"):
                params[tag] = vals
            else:
                raise ConfigError(f"{path}:{lineno}: unknown tag {tag!r}")
    try:
        return RobotModel(
            body_cylinders=tuple(body),
            sensor_cylinders=tuple(sensor),
            sensor_offset=tuple(params.get("sensor_offset", (0.0, 0.0))),
            sensor_footprint=tuple(params.get("sensor_footprint", (0.5, 0.5))),
            max_linear_speed=params.get("max_linear_speed", [1.0])[0],
            max_angular_speed=params.get("max_angular_speed", [1.0])[0],
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def save_robot_model(robot: RobotModel, path: str | Path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for cyl in robot.body_cylinders:
            fh.write(f"BODY {cyl.offset_x} {cyl.offset_y} {cyl.radius} "
                     f"{cyl.z_min} {cyl.z_max}\n")
        for cyl in robot.sensor_cylinders:
            fh.write(f"SENSOR {cyl.offset_x} {cyl.offset_y} {cyl.radius} "
                     f"{cyl.z_min} {cyl.z_max}\n")
        fh.write(f"sensor_offset {robot.sensor_offset[0]} "
                 f"{robot.sensor_offset[1]}\n")
        fh.write(f"sensor_footprint {robot.sensor_footprint[0]} "
                 f"{robot.sensor_footprint[1]}\n")
        fh.write(f"max_linear_speed {robot.max_linear_speed}\n")
        fh.write(f"max_angular_speed {robot.max_angular_speed}\n")


@dataclass
class RunConfig:
    cloud_path: Path
    robot_path: Path
    out_dir: Path
    grid: GridSpec
    planner: PlannerConfig
    detector: DetectorConfig
    dtheta: float = DEFAULT_DTHETA
    step_ang: float = DEFAULT_STEP_ANG
    step_lin: float | None = None
    z_floor: float = DEFAULT_Z_FLOOR
    seed: int = 0
    write_pgm: bool = False


def load_run_config(path: str | Path) -> RunConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    try:
        return _parse_run_config(parser, Path(path))
    except (configparser.Error, KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _parse_run_config(parser: configparser.ConfigParser, path: Path) -> RunConfig:
    base = path.parent
    paths = parser["paths"]
    grid_s = parser["grid"]
    grid = GridSpec(
        origin_x=grid_s.getfloat("origin_x", 0.0),
        origin_y=grid_s.getfloat("origin_y", 0.0),
        cell_size=grid_s.getfloat("cell_size", 0.5),
        nx=grid_s.getint("nx"),
        ny=grid_s.getint("ny"),
    )
    pl = parser["planner"]
    algorithm = Algorithm(pl.get("algorithm", "BSA").upper())
    start = Pose2D(pl.getfloat("start_x"), pl.getfloat("start_y"),
                   math.radians(pl.getfloat("start_theta_deg", 0.0)))
    det = parser["detector"]
    detector = DetectorConfig(
        policy_limit=det.getfloat("policy_limit_dps_cm2"),
        area=det.getfloat("area_cm2"),
        efficiency=det.getfloat("efficiency"),
        length_along_travel=det.getfloat("length_cm"),
        background_rate=det.getfloat("background_cps", 0.5),
        precision_target=det.getfloat("precision_target", 0.1),
    )
    build = parser["build"] if parser.has_section("build") else {}
    surv = parser["survey"] if parser.has_section("survey") else {}

    def getf(section, key, default):
        if hasattr(section, "getfloat"):
            return section.getfloat(key, default)
        return default

    # Planner velocity: precision-optimal, capped by the robot later in the
    # pipeline (the robot file is loaded by the command, not here).
    from .survey import optimal_velocity

    planner = PlannerConfig(
        algorithm=algorithm,
        start=start,
        obstacle_weight=pl.getfloat("obstacle_weight", 1.0),
        contamination_penalty=pl.getfloat("contamination_penalty", 0.0),
        revisit_penalty=pl.getfloat("revisit_penalty", 0.0),
        min_overlap=pl.getfloat("min_overlap", 0.6),
        kappa=pl.getfloat("kappa", 0.1),
        velocity=pl.getfloat("velocity", optimal_velocity(detector)),
    )
    out_dir = Path(paths.get("out", "out"))
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    cloud = Path(paths["cloud"])
    if not cloud.is_absolute():
        cloud = base / cloud
    robot = Path(paths["robot"])
    if not robot.is_absolute():
        robot = base / robot
    return RunConfig(
        cloud_path=cloud,
        robot_path=robot,
        out_dir=out_dir,
        grid=grid,
        planner=planner,
        detector=detector,
        dtheta=math.radians(getf(build, "dtheta_deg", 5.0)),
        step_ang=math.radians(getf(build, "step_ang_deg", 5.0)),
        step_lin=(getf(build, "step_lin", 0.0) or None),
        z_floor=getf(build, "z_floor", DEFAULT_Z_FLOOR),
        seed=int(getf(surv, "seed", 0)),
        write_pgm=bool(int(getf(surv, "write_pgm", 0))),
    )
