"""Offline phase: grid the reduced parameter, trace every node, persist.

Nodes are enumerated lexicographically in ``(v_y, r, xi, d, kappa)``
with the last index fastest.  Every node is an independent problem (no
cross-node warm starts), so workers can split the grid arbitrarily and
the assembled library is identical for any worker count.
"""

from __future__ import annotations

import itertools
import json
import multiprocessing
import os
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .config import BuildConfig, GridDimConfig
from .errors import EmompcError, FrontTraceError, LibraryFormatError, ScanError
from .maneuver import ReducedParameter, build_reduced_mocp
from .mocp import MocpDefinition, trace_front_full
from .pareto import ParetoEntry, ParetoSet, dominates, hausdorff_curve
from .vehicle import Se2Action, mirror_control, se2_apply

FORMAT_VERSION = 1


@dataclass(frozen=True)
class GridSpec:
    dims: tuple[GridDimConfig, ...]

    def __post_init__(self):
        for dim in self.dims:
            if dim.count < 1 or dim.max < dim.min:
                raise ValueError(f"bad grid dimension {dim}")

    @classmethod
    def from_dims(cls, dims: Sequence[GridDimConfig]) -> "GridSpec":
        return cls(tuple(dims))

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(dim.count for dim in self.dims)

    def values(self, axis: int) -> np.ndarray:
        dim = self.dims[axis]
        if dim.count == 1:
            return np.array([dim.min])
        return dim.min + dim.step * np.arange(dim.count)

    def node_value(self, index: Sequence[int]) -> np.ndarray:
        return np.array([self.values(i)[j] for i, j in enumerate(index)])

    def indices(self):
        return itertools.product(*(range(c) for c in self.counts))

    def clamp(self, q) -> tuple[np.ndarray, bool]:
        q = np.asarray(q, dtype=float)
        lo = np.array([d.min for d in self.dims])
        hi = np.array([d.max for d in self.dims])
        clamped = np.clip(q, lo, hi)
        return clamped, bool(np.any(clamped != q))


def grid_count(spec: GridSpec) -> int:
    """Total number of grid nodes, the product of per-dimension counts."""
    n = 1
    for c in spec.counts:
        n *= c
    return n


@dataclass
class Library:
    grid: GridSpec
    config: BuildConfig
    entries: dict[tuple[int, ...], ParetoSet] = field(default_factory=dict)
    failures: list[tuple[int, ...]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return not self.failures and len(self.entries) == grid_count(self.grid)

    def front_at(self, index: Sequence[int]) -> ParetoSet:
        return self.entries[tuple(index)]


def _node_parameter(spec: GridSpec, index) -> ReducedParameter:
    return ReducedParameter.from_array(spec.node_value(index))


def solve_node(config: BuildConfig, rp: ReducedParameter) -> ParetoSet:
    """Trace one grid node; retries once from a nudged start on failure."""
    definition = build_reduced_mocp(
        rp,
        params=config.vehicle.params(),
        horizon=config.horizon.horizon(),
        d_max=config.vehicle.d_max,
        kappa_tol=config.vehicle.kappa_tol,
    )
    opts = config.solver.options()
    tracer = config.tracer
    floors = (tracer.degenerate_j1_floor, tracer.degenerate_j2_floor)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = trace_front_full(
                definition, tracer.n_targets, None, tracer.proper_eps, opts,
                degenerate_extent=floors,
            )
    except (FrontTraceError, EmompcError):
        nudged = np.full(definition.n_controls, 0.01)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = trace_front_full(
                definition, tracer.n_targets, None, tracer.proper_eps, opts, start=nudged,
                degenerate_extent=floors,
            )
    return result.front


def _worker(task):
    config_dict, index, values = task
    os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
    config = BuildConfig.from_dict(config_dict)
    rp = ReducedParameter.from_array(values)
    try:
        front = solve_node(config, rp)
        payload = [(e.control.tolist(), e.objectives.tolist()) for e in front]
        return index, payload, None
    except Exception as exc:  # noqa: BLE001 - workers must report, not die
        return index, None, repr(exc)


def build_library(
    config: BuildConfig,
    workers: int = 1,
    progress: Optional[Callable[[int, int, int], None]] = None,
) -> Library:
    """Trace a front for every grid node, in parallel, deterministically.

    Results are keyed by node index so the outcome does not depend on
    worker count or scheduling.  Nodes whose retry also fails are
    recorded in the failure manifest and the library is incomplete.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    from dataclasses import asdict

    spec = GridSpec.from_dims(config.grid)
    config_dict = asdict(config)
    tasks = [
        (config_dict, tuple(index), spec.node_value(index).tolist()) for index in spec.indices()
    ]
    total = len(tasks)
    t_start = time.time()

    results: dict[tuple[int, ...], list] = {}
    failures: list[tuple[int, ...]] = []
    done = 0

    def record(index, payload, error):
        nonlocal done
        done += 1
        if error is None:
            results[index] = payload
        else:
            failures.append(index)
        if progress is not None:
            progress(done, total, len(failures))

    if workers == 1:
        for task in tasks:
            record(*_worker(task))
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(workers) as pool:
            for index, payload, error in pool.imap(_worker, tasks, chunksize=4):
                record(index, payload, error)

    entries = {
        index: ParetoSet([ParetoEntry(np.array(u), np.array(j)) for u, j in payload])
        for index, payload in results.items()
    }
    failures.sort()
    return Library(
        grid=spec,
        config=config,
        entries=entries,
        failures=failures,
        metadata={
            "built_seconds": time.time() - t_start,
            "workers": workers,
            "nodes": total,
        },
    )


def fnv1a64(data: bytes) -> str:
    """64-bit FNV-1a checksum, hex encoded."""
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


def _entries_json(lib: Library) -> tuple[list, str]:
    entries = []
    for index in sorted(lib.entries):
        front = lib.entries[index]
        entries.append(
            {
                "index": list(index),
                "front": [
                    {
                        "u": [float(v) for v in e.control],
                        "J": [float(v) for v in e.objectives],
                    }
                    for e in front
                ],
            }
        )
    canonical = json.dumps(entries, separators=(",", ":"), allow_nan=False)
    return entries, fnv1a64(canonical.encode("utf-8"))


def save_library(lib: Library, path) -> None:
    """Write the library file; numeric fields round-trip exactly."""
    entries, checksum = _entries_json(lib)
    vehicle = lib.config.vehicle
    solver = lib.config.solver
    tracer = lib.config.tracer
    doc = {
        "format_version": FORMAT_VERSION,
        "checksum": checksum,
        "grid": {
            "dims": [
                {
                    "name": d.name,
                    "min": float(d.min),
                    "max": float(d.max),
                    "step": float(d.step),
                    "count": int(d.count),
                }
                for d in lib.grid.dims
            ]
        },
        "horizon": {
            "t0": float(lib.config.horizon.t0),
            "te": float(lib.config.horizon.te),
            "steps": int(lib.config.horizon.steps),
        },
        "vehicle": {
            "c_alpha_f": vehicle.c_alpha_f,
            "c_alpha_r": vehicle.c_alpha_r,
            "l_f": vehicle.l_f,
            "l_r": vehicle.l_r,
            "mass": vehicle.mass,
            "i_z": vehicle.i_z,
            "v_x": vehicle.v_x,
            "u_min": vehicle.u_min,
            "u_max": vehicle.u_max,
            "d_max": vehicle.d_max,
            "kappa_tol": vehicle.kappa_tol,
        },
        "solver": {
            "g_tol": solver.g_tol,
            "c_tol": solver.c_tol,
            "max_outer": solver.max_outer,
            "max_inner": solver.max_inner,
            "penalty_init": solver.penalty_init,
            "penalty_growth": solver.penalty_growth,
            "fd_rel": solver.fd_rel,
            "fd_abs": solver.fd_abs,
            "n_targets": tracer.n_targets,
            "d_e_frac": tracer.d_e_frac,
            "proper_eps": tracer.proper_eps,
            "degenerate_j1_floor": tracer.degenerate_j1_floor,
            "degenerate_j2_floor": tracer.degenerate_j2_floor,
        },
        "entries": entries,
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":"), allow_nan=False))


def load_library(path) -> Library:
    """Read and validate a library file (version, checksum, grid shape)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise LibraryFormatError(f"unreadable library file {path}: {exc}") from exc
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise LibraryFormatError(f"unsupported library format version {version!r}")

    canonical = json.dumps(doc["entries"], separators=(",", ":"), allow_nan=False)
    checksum = fnv1a64(canonical.encode("utf-8"))
    if checksum != doc.get("checksum"):
        raise LibraryFormatError(
            f"checksum mismatch: file says {doc.get('checksum')}, entries hash to {checksum}"
        )

    from .config import HorizonConfig, SolverConfig, TracerConfig, VehicleConfig

    solver_doc = dict(doc["solver"])
    tracer = TracerConfig(
        n_targets=solver_doc.pop("n_targets", 18),
        d_e_frac=solver_doc.pop("d_e_frac", 0.1),
        proper_eps=solver_doc.pop("proper_eps", 0.01),
        degenerate_j1_floor=solver_doc.pop("degenerate_j1_floor", 0.05),
        degenerate_j2_floor=solver_doc.pop("degenerate_j2_floor", 0.25),
    )
    config = BuildConfig(
        vehicle=VehicleConfig(**doc["vehicle"]),
        horizon=HorizonConfig(**doc["horizon"]),
        solver=SolverConfig(**solver_doc),
        tracer=tracer,
        grid=[
            GridDimConfig(d["name"], d["min"], d["max"], d["count"])
            for d in doc["grid"]["dims"]
        ],
    )
    spec = GridSpec.from_dims(config.grid)
    entries = {}
    for item in doc["entries"]:
        index = tuple(int(i) for i in item["index"])
        entries[index] = ParetoSet(
            [ParetoEntry(np.array(e["u"]), np.array(e["J"])) for e in item["front"]]
        )
    missing = [i for i in spec.indices() if i not in entries]
    return Library(
        grid=spec,
        config=config,
        entries=entries,
        failures=missing,
        metadata={"loaded_from": str(path)},
    )


@dataclass
class VerificationIssue:
    index: tuple[int, ...]
    message: str


@dataclass
class VerificationReport:
    checked: int
    issues: list[VerificationIssue] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.issues


def verify_library(lib: Library, spot_checks: int = 8) -> VerificationReport:
    """Audit every entry, then spot-check the symmetry contracts.

    Per entry: nonempty, mutually nondominated, strictly sorted, controls
    within bounds, knot feasibility within tolerance.  On a sample of
    nodes the stored controls are re-evaluated on a transformed and on a
    mirrored instance and must reproduce the stored objectives.
    """
    issues: list[VerificationIssue] = []
    spec = lib.grid
    cfg = lib.config
    c_tol = cfg.solver.c_tol
    u_min, u_max = cfg.vehicle.u_min, cfg.vehicle.u_max

    for index in spec.indices():
        front = lib.entries.get(tuple(index))
        if front is None or len(front) == 0:
            issues.append(VerificationIssue(tuple(index), "missing or empty front"))
            continue
        objs = front.objectives_array()
        if len(front) >= 2 and not np.all(np.diff(objs[:, 0]) > 0):
            issues.append(VerificationIssue(tuple(index), "front not strictly sorted by J1"))
        for i in range(len(objs)):
            for j in range(len(objs)):
                if i != j and dominates(objs[i], objs[j]):
                    issues.append(
                        VerificationIssue(tuple(index), f"entry {j} dominated by entry {i}")
                    )
        controls = front.controls_array()
        if controls.size and (controls.min() < u_min - 1e-12 or controls.max() > u_max + 1e-12):
            issues.append(VerificationIssue(tuple(index), "control outside bounds"))

        rp = _node_parameter(spec, index)
        definition = build_reduced_mocp(
            rp, cfg.vehicle.params(), cfg.horizon.horizon(), cfg.vehicle.d_max, cfg.vehicle.kappa_tol
        )
        j_all, c_all = definition.batch_eval(controls)
        if np.max(c_all) > c_tol:
            issues.append(
                VerificationIssue(tuple(index), f"knot violation {np.max(c_all):.2e} > c_tol")
            )
        if not np.allclose(j_all, objs, rtol=1e-9, atol=1e-9):
            issues.append(VerificationIssue(tuple(index), "stored objectives do not re-evaluate"))

    # symmetry spot checks on a deterministic sample of solved nodes
    solved = sorted(lib.entries)
    if solved:
        rng = np.random.default_rng(2024)
        sample_idx = rng.choice(len(solved), size=min(spot_checks, len(solved)), replace=False)
        for k in sorted(sample_idx):
            index = solved[k]
            front = lib.entries[index]
            if len(front) == 0:
                continue
            rp = _node_parameter(spec, index)
            controls = front.controls_array()
            objs = front.objectives_array()
            # SE(2): evaluate on a shifted and rotated copy of the problem
            g = Se2Action(0.7, (25.0, -40.0))
            from .maneuver import build_maneuver_mocp
            from .track import local_track, se2_apply_track

            x0 = np.array([0.0, rp.d, rp.xi, rp.v_y, rp.r])
            transformed = build_maneuver_mocp(
                se2_apply(g, x0),
                se2_apply_track(g, local_track(rp.kappa, cfg.vehicle.kappa_tol)),
                cfg.vehicle.params(),
                cfg.horizon.horizon(),
                cfg.vehicle.d_max,
            )
            j_t, _ = transformed.batch_eval(controls)
            if not np.allclose(j_t, objs, rtol=0, atol=1e-8):
                issues.append(VerificationIssue(index, "SE(2) invariance spot check failed"))
            # mirror: negated parameter with negated controls
            mirrored_def = build_reduced_mocp(
                rp.mirrored(), cfg.vehicle.params(), cfg.horizon.horizon(),
                cfg.vehicle.d_max, cfg.vehicle.kappa_tol,
            )
            j_m, _ = mirrored_def.batch_eval(mirror_control(controls))
            if not np.allclose(j_m, objs, rtol=0, atol=1e-8):
                issues.append(VerificationIssue(index, "mirror invariance spot check failed"))

    return VerificationReport(checked=len(lib.entries), issues=issues)


@dataclass
class ScanResult:
    max_distance: float
    invariant: bool
    pairs: list[tuple[int, int, float]] = field(default_factory=list)


def symmetry_scan(
    problem_family: Callable[[float], MocpDefinition] | Callable[..., MocpDefinition],
    values: Sequence,
    eps: float = 1e-3,
    n_targets: int = 18,
    opts=None,
) -> ScanResult:
    """Probe whether the Pareto set is invariant across parameter values.

    Each parameter's front is traced and the decision-space sets are
    compared pairwise with a curve-based Hausdorff distance (points of
    one set against the polyline through the other), since the sample
    placement along an invariant set legitimately shifts with the
    parameter.  Verdict: invariant iff the largest pairwise distance is
    at most ``eps``.
    """
    if len(values) < 2:
        raise ScanError("symmetry_scan needs at least two parameter values")
    sets = []
    for value in values:
        try:
            definition = problem_family(value)
            result = trace_front_full(definition, n_targets=n_targets, opts=opts)
        except EmompcError as exc:
            raise ScanError(f"front trace failed at parameter {value!r}: {exc}") from exc
        sets.append(result.nondominated.controls_array())
    pairs = []
    worst = 0.0
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            dist = hausdorff_curve(sets[i], sets[j])
            pairs.append((i, j, dist))
            worst = max(worst, dist)
    return ScanResult(max_distance=worst, invariant=worst <= eps, pairs=pairs)
