"""Configuration blocks shared by the offline build, the CLI and the service.

Defaults here are the shipped operating point.  The corridor half-width
``d_max`` defaults to 5 m and acts like the usable track half-width;
grid nodes whose start state cannot physically hold it get a relaxed
per-node corridor (see :func:`emompc.maneuver.effective_corridor`), so
the full published ranges stay feasible.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .mocp import Horizon
from .solver import SolverOptions
from .vehicle import VehicleParams

DEFAULT_D_MAX = 5.0


@dataclass
class VehicleConfig:
    c_alpha_f: float = 65100.0
    c_alpha_r: float = 54100.0
    l_f: float = 1.0
    l_r: float = 1.45
    mass: float = 1275.0
    i_z: float = 1627.0
    v_x: float = 30.0
    u_min: float = -0.5
    u_max: float = 0.5
    d_max: float = DEFAULT_D_MAX
    kappa_tol: float = 1e-6

    def params(self) -> VehicleParams:
        return VehicleParams(
            self.c_alpha_f, self.c_alpha_r, self.l_f, self.l_r, self.mass, self.i_z, self.v_x
        )


@dataclass
class HorizonConfig:
    t0: float = 0.0
    te: float = 0.5
    steps: int = 10

    def horizon(self) -> Horizon:
        return Horizon(self.t0, self.te, self.steps)


@dataclass
class SolverConfig:
    g_tol: float = 1e-6
    c_tol: float = 1e-6
    max_outer: int = 30
    max_inner: int = 400
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    fd_rel: float = 1e-6
    fd_abs: float = 1e-7

    def options(self) -> SolverOptions:
        return SolverOptions(
            g_tol=self.g_tol,
            c_tol=self.c_tol,
            max_outer=self.max_outer,
            max_inner=self.max_inner,
            penalty_init=self.penalty_init,
            penalty_growth=self.penalty_growth,
            fd_rel=self.fd_rel,
            fd_abs=self.fd_abs,
        )


@dataclass
class TracerConfig:
    n_targets: int = 18
    d_e_frac: float = 0.1      # target-ellipse offset as a fraction of front extent
    proper_eps: float = 0.01   # tail-trimming threshold for library fronts
    # absolute extents below which a node's trade-off is an artifact of
    # the constant-longitudinal-speed model rather than geometry
    degenerate_j1_floor: float = 0.05   # m^2 s
    degenerate_j2_floor: float = 0.25   # m


@dataclass
class GridDimConfig:
    name: str
    min: float
    max: float
    count: int

    @property
    def step(self) -> float:
        if self.count == 1:
            return 0.0
        return (self.max - self.min) / (self.count - 1)


@dataclass
class BuildConfig:
    """Everything that determines an offline library, bit for bit."""

    vehicle: VehicleConfig = field(default_factory=VehicleConfig)
    horizon: HorizonConfig = field(default_factory=HorizonConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    tracer: TracerConfig = field(default_factory=TracerConfig)
    grid: list[GridDimConfig] = field(default_factory=lambda: desk_grid_dims())

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1)

    @classmethod
    def from_dict(cls, raw: dict) -> "BuildConfig":
        cfg = cls()
        if "vehicle" in raw:
            cfg.vehicle = VehicleConfig(**raw["vehicle"])
        if "horizon" in raw:
            cfg.horizon = HorizonConfig(**raw["horizon"])
        if "solver" in raw:
            cfg.solver = SolverConfig(**raw["solver"])
        if "tracer" in raw:
            cfg.tracer = TracerConfig(**raw["tracer"])
        if "grid" in raw:
            cfg.grid = [GridDimConfig(**dim) for dim in raw["grid"]]
        return cfg

    @classmethod
    def load(cls, path) -> "BuildConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


# Reduced-parameter ranges of the full-scale library.  The published
# table prints the heading row with the 0..10 range and the offset row
# with the angular one; the physically coherent assignment (an angle in
# radians, a distance in meters, offsets one-sided thanks to the mirror)
# swaps them, and that is what every shipped grid uses.
TABLE_RANGES = {
    "v_y": (-3.0, 3.0),
    "r": (-6.0, 6.0),
    "xi": (-math.pi / 4.0, math.pi / 4.0),
    "d": (0.0, 10.0),
    "kappa": (-0.1, 0.1),
}

# counts as printed in the source table, used for the grid-arithmetic check
TABLE_PRINTED_COUNTS = (13, 13, 21, 7, 9)
# counts under the physically coherent (swapped) reading
TABLE_PHYSICAL_COUNTS = (13, 13, 7, 21, 9)

DIM_ORDER = ("v_y", "r", "xi", "d", "kappa")


def grid_dims(counts) -> list[GridDimConfig]:
    return [
        GridDimConfig(name, TABLE_RANGES[name][0], TABLE_RANGES[name][1], int(n))
        for name, n in zip(DIM_ORDER, counts)
    ]


def desk_grid_dims() -> list[GridDimConfig]:
    """Scaled-down default grid: 5 points per dimension, full-table ranges."""
    return grid_dims((5, 5, 5, 5, 5))


def full_grid_dims() -> list[GridDimConfig]:
    """The full-scale grid under the physically coherent reading."""
    return grid_dims(TABLE_PHYSICAL_COUNTS)


# Closed-loop operating envelope: the ranges a controlled lap on the
# bundled tracks actually visits, with the offset axis matching the
# corridor so the grid never teaches the loop to ride beyond it, and
# curvature resolved finely around the tracks' gentle values.
OPERATING_RANGES = {
    "v_y": (-9.0, 9.0),
    "r": (-3.5, 3.5),
    "xi": (-0.5, 0.5),
    "d": (0.0, 5.0),
    "kappa": (-0.02, 0.02),
}


def operating_grid_dims(counts=(5, 5, 5, 5, 5)) -> list[GridDimConfig]:
    return [
        GridDimConfig(name, OPERATING_RANGES[name][0], OPERATING_RANGES[name][1], int(n))
        for name, n in zip(DIM_ORDER, counts)
    ]


def operating_config() -> "BuildConfig":
    """Build configuration for the closed-loop operating library."""
    return BuildConfig(grid=operating_grid_dims())
