"""Online phase: library lookup, control interpolation, and the MPC loop.

Each step reduces the plant state to the library coordinates (applying
the mirror when the state lies on the unstored side), gathers the
axis-neighbor grid nodes, selects one compromise per neighbor front
according to the preference, interpolates by inverse distance, and
applies the first control value for one sample time.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import EmptySetError
from .library import GridSpec, Library
from .maneuver import reduce_state
from .mocp import Horizon, integrate_rk4
from .pareto import ParetoSet, select_by_weight, select_index
from .track import GlobalPolyline
from .vehicle import VehicleParams, bicycle_rhs, mirror_control

D_ZERO_TOL = 1e-9     # parameter-space distance treated as "exactly on a node"
EPS_KAPPA = 0.01      # curvature threshold of the preference heuristic, 1/m
RHO_FLOOR = 0.25
RHO_CEIL = 0.90
D_ABORT_FACTOR = 3.0


def clamp_rho(rho: float) -> float:
    return min(max(float(rho), 0.0), 1.0)


def neighbor_lookup(grid: GridSpec, q) -> list[tuple[tuple[int, ...], float]]:
    """Axis neighbors of a query in the reduced-parameter grid.

    The base node takes the nearest grid coordinate per component; for
    each dimension the two grid values bracketing the query replace that
    coordinate.  Queries outside the ranges are clamped first (with a
    warning).  Distances are Euclidean in raw parameter units.
    """
    q = np.asarray(q, dtype=float)
    clamped, was_clamped = grid.clamp(q)
    if was_clamped:
        warnings.warn(f"query {q} outside grid ranges; clamped", stacklevel=2)
    q = clamped

    base = []
    brackets = []
    for axis in range(len(grid.dims)):
        values = grid.values(axis)
        pos = float(q[axis])
        nearest = int(np.argmin(np.abs(values - pos)))
        base.append(nearest)
        hi = int(np.searchsorted(values, pos, side="left"))
        hi = min(hi, len(values) - 1)
        lo = hi if values[hi] <= pos else max(hi - 1, 0)
        if values[lo] > pos:
            lo = hi
        brackets.append((lo, hi if values[hi] >= pos else lo))
    base = tuple(base)

    seen = {}
    for axis, (lo, hi) in enumerate(brackets):
        for j in (lo, hi):
            node = base[:axis] + (j,) + base[axis + 1 :]
            if node not in seen:
                point = grid.node_value(node)
                seen[node] = float(np.linalg.norm(point - q))
    return sorted(seen.items(), key=lambda kv: (kv[1], kv[0]))


def interpolate_control(
    neighbors: Sequence[tuple[ParetoSet, float]],
    rho: float,
    u_min: float,
    u_max: float,
    d_zero_tol: float = D_ZERO_TOL,
) -> np.ndarray:
    """Select per-front compromises and blend them by inverse distance.

    A neighbor at (numerically) zero distance short-circuits to its own
    control.  The blend is a convex combination, then clipped to the
    control bounds for safety.
    """
    if not neighbors:
        raise EmptySetError("interpolate_control needs at least one neighbor")
    selected = [(select_by_weight(front, rho).control, dist) for front, dist in neighbors]
    for control, dist in selected:
        if dist <= d_zero_tol:
            return np.array(control, copy=True)
    weights = np.array([1.0 / dist for _, dist in selected])
    stacked = np.array([control for control, _ in selected])
    blended = (weights[:, None] * stacked).sum(axis=0) / weights.sum()
    return np.clip(blended, u_min, u_max)


def heuristic_rho(prev_rho: float, kappa: float, eps_kappa: float = EPS_KAPPA) -> float:
    """Curvature-driven preference: relax on straights, push in curves.

    Steps are exactly +-0.05 within [0.25, 0.90]; the arithmetic runs in
    integer hundredths so repeated updates cannot drift.
    """
    cents = round(prev_rho * 100)
    if abs(kappa) < eps_kappa:
        cents = max(25, cents - 5)
    else:
        cents = min(90, cents + 5)
    return cents / 100.0


@dataclass
class StepRecord:
    time: float
    state: np.ndarray
    reduced: np.ndarray
    mirrored: bool
    rho: float
    control: float
    neighbor_indices: list[tuple[int, ...]]
    weights: list[float]
    clamped: bool
    s_progress: float
    front_index: tuple[int, ...]
    selected_index: int


@dataclass
class LapSummary:
    lap_time: Optional[float]
    integrated_distance: float
    constraint_max: float
    completed: bool
    aborted: bool
    steps: int


@dataclass
class MpcTrace:
    records: list[StepRecord] = field(default_factory=list)
    summary: Optional[LapSummary] = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time", "p1", "p2", "theta", "v_y", "r", "xi", "d", "kappa", "rho", "u"])
        for rec in self.records:
            p1, p2, theta, v_y, r = rec.state
            vy_red, r_red, xi, d, kappa = rec.reduced
            sign = -1.0 if rec.mirrored else 1.0
            writer.writerow(
                [
                    f"{rec.time:.6f}",
                    repr(float(p1)),
                    repr(float(p2)),
                    repr(float(theta)),
                    repr(float(v_y)),
                    repr(float(r)),
                    repr(float(sign * xi)),
                    repr(float(sign * d)),
                    repr(float(sign * kappa)),
                    repr(float(rec.rho)),
                    repr(float(rec.control)),
                ]
            )
        if self.summary is not None:
            s = self.summary
            lap = "nan" if s.lap_time is None else f"{s.lap_time:.6f}"
            buf.write(
                f"# lap_time={lap} integrated_distance={s.integrated_distance!r} "
                f"constraint_max={s.constraint_max!r} completed={s.completed} aborted={s.aborted}\n"
            )
        return buf.getvalue()


class SimulationSession:
    """One vehicle on one track, stepped one control interval at a time.

    The preference mailbox (`push_rho`, `push_mode`) is drained at the
    start of each step, so an update is in effect no later than the next
    applied control.  Both the headless batch runner and the streaming
    service drive this same object.
    """

    def __init__(
        self,
        library: Library,
        track: GlobalPolyline,
        x_init,
        rho: float = 0.5,
        mode: str = "manual",
        schedule: Optional[Sequence[tuple[float, float]]] = None,
        t_max: float = 120.0,
        stop_after_laps: int = 1,
    ):
        self.library = library
        self.track = track
        self.params: VehicleParams = library.config.vehicle.params()
        self.horizon: Horizon = library.config.horizon.horizon()
        self.u_min = library.config.vehicle.u_min
        self.u_max = library.config.vehicle.u_max
        self.d_max = library.config.vehicle.d_max
        self.state = np.asarray(x_init, dtype=float).copy()
        self.rho = clamp_rho(rho)
        self.mode = mode
        self.schedule = sorted(schedule) if schedule else None
        self.t_max = t_max
        self.stop_after_laps = stop_after_laps

        self.time = 0.0
        self.trace = MpcTrace()
        self.status = "running"
        self._mailbox: list[tuple[str, object]] = []
        proj = track.project(self.state[:2])
        self._s_prev = proj.s
        self._progress = 0.0
        # a "lap" on an open track means reaching its far end
        self._target_progress = track.length if track.closed else track.length - proj.s
        self._d_prev = proj.distance
        self._d2_integral = 0.0
        self._d_abs_max = abs(proj.distance)
        self._lap_time: Optional[float] = None
        self._laps_done = 0

    # -- mailbox -----------------------------------------------------------
    def push_rho(self, rho: float) -> None:
        self._mailbox.append(("rho", float(rho)))

    def push_mode(self, mode: str) -> None:
        self._mailbox.append(("mode", str(mode)))

    def _drain_mailbox(self) -> None:
        for kind, value in self._mailbox:
            if kind == "rho":
                self.rho = clamp_rho(value)  # latest value wins
            elif kind == "mode" and value in ("manual", "heuristic", "schedule"):
                self.mode = value
        self._mailbox.clear()

    # -- stepping ----------------------------------------------------------
    def _policy_rho(self, kappa: float) -> float:
        if self.mode == "heuristic":
            self.rho = heuristic_rho(self.rho, kappa)
        elif self.mode == "schedule" and self.schedule:
            applicable = [r for t, r in self.schedule if t <= self.time + 1e-12]
            if applicable:
                self.rho = clamp_rho(applicable[-1])
        return self.rho

    def step(self) -> StepRecord:
        if self.status != "running":
            raise RuntimeError(f"session is {self.status}")
        self._drain_mailbox()

        rp, mirrored, _frame = reduce_state(self.track, self.state)
        q = rp.as_array()
        rho = self._policy_rho(rp.kappa if not mirrored else -rp.kappa)

        _, was_clamped = self.library.grid.clamp(q)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            neighbors = neighbor_lookup(self.library.grid, q)
        fronts = [(self.library.front_at(idx), dist) for idx, dist in neighbors]
        control_seq = interpolate_control(fronts, rho, self.u_min, self.u_max)
        if mirrored:
            control_seq = mirror_control(control_seq)
        u0 = float(control_seq[0])

        one_step = Horizon(0.0, self.horizon.h, 1)
        states = integrate_rk4(
            lambda x, u: bicycle_rhs(x, float(u[0]), self.params),
            self.state,
            np.array([[u0]]),
            one_step,
        )
        next_state = states[-1]

        proj = self.track.project(next_state[:2])
        ds = self.track.arc_length_between(self._s_prev, proj.s)
        h = self.horizon.h
        prev_progress = self._progress
        self._progress += ds
        self._d2_integral += 0.5 * h * (self._d_prev**2 + proj.distance**2)
        self._d_abs_max = max(self._d_abs_max, abs(proj.distance))

        record = StepRecord(
            time=self.time,
            state=self.state.copy(),
            reduced=q,
            mirrored=mirrored,
            rho=rho,
            control=u0,
            neighbor_indices=[idx for idx, _ in neighbors],
            weights=[dist for _, dist in neighbors],
            clamped=was_clamped,
            s_progress=self._progress,
            front_index=neighbors[0][0],
            selected_index=select_index(len(fronts[0][0]), rho),
        )
        self.trace.records.append(record)

        self.time += h
        self.state = next_state
        self._s_prev = proj.s
        self._d_prev = proj.distance

        if self._lap_time is None and self._progress >= self._target_progress:
            # linear interpolation of the crossing instant inside the step
            frac = (self._target_progress - prev_progress) / max(
                self._progress - prev_progress, 1e-12
            )
            self._lap_time = self.time - h + frac * h
            self._laps_done += 1

        if abs(proj.distance) > D_ABORT_FACTOR * self.d_max:
            self.status = "aborted"
        elif self._lap_time is not None and self._laps_done >= self.stop_after_laps:
            self.status = "finished"
        elif self.time >= self.t_max - 1e-12:
            self.status = "finished" if not self.track.closed else "timeout"
        return record

    def run(self) -> MpcTrace:
        while self.status == "running":
            self.step()
        self.trace.summary = self.lap_metrics()
        return self.trace

    def lap_metrics(self) -> LapSummary:
        return LapSummary(
            lap_time=self._lap_time,
            integrated_distance=self._d2_integral,
            constraint_max=self._d_abs_max,
            completed=self._lap_time is not None,
            aborted=self.status == "aborted",
            steps=len(self.trace.records),
        )


def centered_start(track: GlobalPolyline, s: float = 0.0) -> np.ndarray:
    """A state on the centerline at arc position ``s``, aligned, settled."""
    point = track.point_at(s)
    proj = track.project(point)
    return np.array([point[0], point[1], proj.alpha, 0.0, 0.0])


def run_closed_loop(
    library: Library,
    track: GlobalPolyline,
    x_init=None,
    policy: float | Sequence[tuple[float, float]] | str = 0.5,
    t_max: float = 120.0,
) -> MpcTrace:
    """Drive the MPC loop until a lap completes (closed tracks), the end
    of an open track is reached, or ``t_max`` elapses.

    ``policy`` is a fixed preference value, a ``[(time, rho), ...]``
    schedule, or the string ``"heuristic"``.
    """
    if x_init is None:
        x_init = centered_start(track)
    if isinstance(policy, str):
        if policy != "heuristic":
            raise ValueError(f"unknown policy {policy!r}")
        session = SimulationSession(library, track, x_init, rho=RHO_FLOOR, mode="heuristic", t_max=t_max)
    elif isinstance(policy, (int, float)):
        session = SimulationSession(library, track, x_init, rho=float(policy), mode="manual", t_max=t_max)
    else:
        schedule = [(float(t), float(r)) for t, r in policy]
        session = SimulationSession(
            library, track, x_init, rho=schedule[0][1], mode="schedule", schedule=schedule, t_max=t_max
        )
    return session.run()


def lap_metrics(trace: MpcTrace) -> LapSummary:
    if trace.summary is None:
        raise ValueError("trace has no summary; run the session to completion")
    return trace.summary
