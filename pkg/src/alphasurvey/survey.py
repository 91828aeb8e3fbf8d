"""Detection statistics and survey simulation.

Count threshold CT = policy limit * detector area * efficiency (counts/s).
The survey velocity is sized so that the expected count at the threshold
rate over one detector-length dwell meets the requested Poisson relative
precision: dwell t = L_t / v, N = CT * t, and 1/sqrt(N) <= eps_rel requires
v <= L_t * CT * eps_rel^2.  The closed form is verified against a Monte
Carlo oracle in the test suite.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .geometry import Pose2D
from .partitions import GridSpec, PartitionGrid
from .planner import CoveragePlan, footprint_cells

DEFAULT_BACKGROUND_CPS = 0.5
MANUAL_SWIPE_SPEED_MPS = 0.0508  # 2 in/s, the manual-reading comparison point


class GridMismatchError(Exception):
    """Heat maps with different grid specs cannot be compared."""


@dataclass(frozen=True)
class DetectorConfig:
    """Detector and policy parameters.  Lengths/areas in cm (policy units)."""

    policy_limit: float        # L_D, dps/cm^2
    area: float                # A_d, cm^2
    efficiency: float          # eps_d in (0, 1]
    length_along_travel: float  # L_t, cm
    background_rate: float = DEFAULT_BACKGROUND_CPS  # counts/s
    precision_target: float = 0.1                    # relative std target

    def __post_init__(self):
        if self.area <= 0.0:
            raise ValueError("detector area must be positive")
        if not (0.0 < self.efficiency <= 1.0):
            raise ValueError("efficiency must be in (0, 1]")
        if self.policy_limit < 0.0:
            raise ValueError("policy limit must be >= 0")
        if self.length_along_travel <= 0.0:
            raise ValueError("detector length must be positive")
        if self.background_rate < 0.0:
            raise ValueError("background rate must be >= 0")
        if not (0.0 < self.precision_target < 1.0):
            raise ValueError("precision target must be in (0, 1)")

    @property
    def width_cm(self) -> float:
        return self.area / self.length_along_travel

    @property
    def length_m(self) -> float:
        return self.length_along_travel / 100.0


def count_threshold(cfg: DetectorConfig) -> float:
    """Contamination count threshold in counts/s."""
    return cfg.policy_limit * cfg.area * cfg.efficiency


def optimal_velocity(cfg: DetectorConfig) -> float:
    """Fastest speed meeting the Poisson precision target at the threshold rate.

    Returns meters/second; the caller caps at the robot's speed limit.
    """
    ct = count_threshold(cfg)
    if ct <= 0.0:
        raise ValueError("count threshold must be positive to bound velocity")
    return cfg.length_m * ct * cfg.precision_target ** 2


@dataclass(frozen=True)
class DiskSource:
    center_x: float
    center_y: float
    radius: float
    rate: float  # surface emission, dps/cm^2

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("source radius must be positive")
        if self.rate < 0.0:
            raise ValueError("source rate must be >= 0")


@dataclass(frozen=True)
class SourceField:
    """Disk sources over a uniform background emission (dps/cm^2)."""

    sources: tuple[DiskSource, ...] = ()
    background_emission: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if self.background_emission < 0.0:
            raise ValueError("background emission must be >= 0")

    def emission_at(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Local emission (dps/cm^2) at world points; overlapping disks add."""
        out = np.full_like(x, self.background_emission, dtype=np.float64)
        for s in self.sources:
            inside = ((x - s.center_x) ** 2 + (y - s.center_y) ** 2
                      <= s.radius ** 2)
            out[inside] += s.rate
        return out


def footprint_rate(sensor_pose: Pose2D, field_: SourceField,
                   cfg: DetectorConfig, quad_step_cm: float = 1.0) -> float:
    """Expected count rate (counts/s) with the detector at ``sensor_pose``.

    Midpoint quadrature over the detector rectangle (L_t along travel by
    A_d / L_t across), plus the instrument background.
    """
    if quad_step_cm <= 0.0:
        raise ValueError("quadrature step must be positive")
    lcm = cfg.length_along_travel
    wcm = cfg.width_cm
    nu = max(1, round(lcm / quad_step_cm))
    nv = max(1, round(wcm / quad_step_cm))
    du = lcm / nu
    dv = wcm / nv
    u = (np.arange(nu) + 0.5) * du - lcm / 2.0
    v = (np.arange(nv) + 0.5) * dv - wcm / 2.0
    uu, vv = np.meshgrid(u, v, indexing="ij")
    c, s = math.cos(sensor_pose.theta), math.sin(sensor_pose.theta)
    # Local cm coordinates to world meters.
    xs = sensor_pose.x + (c * uu - s * vv) / 100.0
    ys = sensor_pose.y + (s * uu + c * vv) / 100.0
    emission = field_.emission_at(xs, ys)
    return cfg.efficiency * float(emission.sum()) * du * dv + cfg.background_rate


def simulate_measurement(sensor_pose: Pose2D, field_: SourceField,
                         cfg: DetectorConfig, dwell: float, rng_seed: int,
                         quad_step_cm: float = 1.0) -> int:
    """One Poisson count draw for a dwell at a fixed sensor pose."""
    if dwell <= 0.0:
        raise ValueError("dwell must be positive")
    rate = footprint_rate(sensor_pose, field_, cfg, quad_step_cm)
    rng = np.random.default_rng(rng_seed)
    return int(rng.poisson(rate * dwell))


class Verdict(IntEnum):
    NOT_SURVEYED = 0
    CLEAN = 1
    CONTAMINATED = 2


@dataclass
class SurveyHeatmap:
    spec: GridSpec
    rate: np.ndarray     # (nx, ny) counts/s, NaN where not surveyed
    dwell: np.ndarray    # (nx, ny) seconds, NaN where not surveyed
    verdict: np.ndarray  # (nx, ny) Verdict values
    metadata: dict = field(default_factory=dict)

    def export_csv(self, path: str | Path) -> None:
        """`cell_x,cell_y,rate_cps,dwell_s,verdict`; unsurveyed cells carry
        empty rate and dwell fields."""
        with open(path, "w", encoding="ascii") as fh:
            fh.write("cell_x,cell_y,rate_cps,dwell_s,verdict\n")
            for iy in range(self.spec.ny):
                for ix in range(self.spec.nx):
                    v = Verdict(int(self.verdict[ix, iy]))
                    if v is Verdict.NOT_SURVEYED:
                        fh.write(f"{ix},{iy},,,{v.name}\n")
                    else:
                        fh.write(f"{ix},{iy},{self.rate[ix, iy]:.6f},"
                                 f"{self.dwell[ix, iy]:.6f},{v.name}\n")

    def export_metadata(self, path: str | Path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            for key in sorted(self.metadata):
                fh.write(f"{key} {self.metadata[key]}\n")

    def export_pgm(self, path: str | Path, count_thresh: float) -> None:
        """8-bit PGM: gray = rate / (2 * CT) clamped to [0, 1], linear;
        unsurveyed cells are 0.  Row 0 of the image is the top grid row."""
        scale = 2.0 * count_thresh
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"P2\n{self.spec.nx} {self.spec.ny}\n255\n")
            for iy in range(self.spec.ny - 1, -1, -1):
                row = []
                for ix in range(self.spec.nx):
                    r = self.rate[ix, iy]
                    if math.isnan(r) or scale <= 0.0:
                        row.append(0)
                    else:
                        row.append(int(round(255.0 * min(r, scale) / scale)))
                fh.write(" ".join(str(v) for v in row) + "\n")


def plan_hash(plan: CoveragePlan) -> str:
    text = "|".join(f"{s.node}{s.sensor}{s.velocity}" for s in plan.steps)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def run_survey(plan: CoveragePlan, field_: SourceField, cfg: DetectorConfig,
               grid: PartitionGrid, rng_seed: int,
               footprint: tuple[float, float] | None = None,
               min_overlap: float = 0.6,
               quad_step_cm: float = 1.0) -> SurveyHeatmap:
    """Simulate the survey along a plan; one Poisson draw per step.

    Each step dwells L_t / velocity seconds; the measured rate is assigned to
    every cell the sensor ``footprint`` covers at that step (the same
    rectangle used for coverage accounting; defaults to the detector
    rectangle), keeping the maximum across visits.  Deterministic for a
    given seed.
    """
    spec = grid.spec
    rate = np.full((spec.nx, spec.ny), np.nan)
    dwell_arr = np.full((spec.nx, spec.ny), np.nan)
    verdict = np.full((spec.nx, spec.ny), int(Verdict.NOT_SURVEYED),
                      dtype=np.int8)
    if footprint is None:
        footprint = (cfg.length_m, cfg.width_cm / 100.0)
    ct = count_threshold(cfg)
    rng = np.random.default_rng(rng_seed)
    for step in plan.steps:
        if step.velocity <= 0.0:
            raise ValueError("plan velocities must be positive")
        dwell = cfg.length_m / step.velocity
        true_rate = footprint_rate(step.sensor, field_, cfg, quad_step_cm)
        counts = int(rng.poisson(true_rate * dwell))
        measured = counts / dwell
        for (ix, iy) in footprint_cells(step.sensor, footprint, grid,
                                        min_overlap):
            if math.isnan(rate[ix, iy]) or measured > rate[ix, iy]:
                rate[ix, iy] = measured
                dwell_arr[ix, iy] = dwell
            verdict[ix, iy] = int(
                Verdict.CONTAMINATED if rate[ix, iy] > ct else Verdict.CLEAN)
    return SurveyHeatmap(
        spec=spec, rate=rate, dwell=dwell_arr, verdict=verdict,
        metadata={
            "seed": rng_seed,
            "count_threshold_cps": ct,
            "policy_limit_dps_cm2": cfg.policy_limit,
            "detector_area_cm2": cfg.area,
            "detector_efficiency": cfg.efficiency,
            "detector_length_cm": cfg.length_along_travel,
            "background_rate_cps": cfg.background_rate,
            "precision_target": cfg.precision_target,
            "plan_hash": plan_hash(plan),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        })


@dataclass
class HeatmapDiff:
    transitions: dict[str, int]
    changed_cells: list[tuple[int, int, str]]
    max_rate_delta: float
    mean_rate_delta: float

    @property
    def total_changes(self) -> int:
        return len(self.changed_cells)

    def to_text(self) -> str:
        lines = [f"total_changes {self.total_changes}",
             f"max_rate_delta {self.max_rate_delta:.6f}",
             f"mean_rate_delta {self.mean_rate_delta:.6f}"]
        for key in sorted(self.transitions):
            lines.append(f"transition {key} {self.transitions[key]}")
        for ix, iy, label in self.changed_cells:
            lines.append(f"cell {ix} {iy} {label}")
        return "\n".join(lines) + "\n"

    def export(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="ascii")


def compare_heatmaps(a: SurveyHeatmap, b: SurveyHeatmap) -> HeatmapDiff:
    """Per-cell verdict transitions and rate deltas between two surveys."""
    if a.spec != b.spec:
        raise GridMismatchError(
            f"grid specs differ: {a.spec} vs {b.spec}")
    transitions: dict[str, int] = {}
    changed: list[tuple[int, int, str]] = []
    deltas: list[float] = []
    for iy in range(a.spec.ny):
        for ix in range(a.spec.nx):
            va = Verdict(int(a.verdict[ix, iy])).name
            vb = Verdict(int(b.verdict[ix, iy])).name
            if va != vb:
                key = f"{va}->{vb}"
                transitions[key] = transitions.get(key, 0) + 1
                changed.append((ix, iy, key))
            ra, rb = a.rate[ix, iy], b.rate[ix, iy]
            if not (math.isnan(ra) or math.isnan(rb)):
                deltas.append(rb - ra)
    return HeatmapDiff(
        transitions=transitions,
        changed_cells=changed,
        max_rate_delta=max((abs(d) for d in deltas), default=0.0),
        mean_rate_delta=(sum(deltas) / len(deltas)) if deltas else 0.0,
    )


def load_heatmap_csv(path: str | Path, spec: GridSpec) -> SurveyHeatmap:
    """Read a heat map CSV written by export_csv (metadata not restored)."""
    rate = np.full((spec.nx, spec.ny), np.nan)
    dwell = np.full((spec.nx, spec.ny), np.nan)
    verdict = np.full((spec.nx, spec.ny), int(Verdict.NOT_SURVEYED),
                      dtype=np.int8)
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        if not header.startswith("cell_x,cell_y"):
            raise ValueError(f"{path}: not a heat map CSV")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 fields")
            ix, iy = int(parts[0]), int(parts[1])
            if not (0 <= ix < spec.nx and 0 <= iy < spec.ny):
                raise GridMismatchError(
                    f"{path}:{lineno}: cell ({ix}, {iy}) outside grid")
            verdict[ix, iy] = int(Verdict[parts[4]])
            if parts[2]:
                rate[ix, iy] = float(parts[2])
                dwell[ix, iy] = float(parts[3])
    return SurveyHeatmap(spec=spec, rate=rate, dwell=dwell, verdict=verdict)
