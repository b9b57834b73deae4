"""Two-objective optimal control transcription and the automated front tracer.

A problem is rolled out with classical RK4 (one stage group per control
interval, piecewise-constant control), objectives are functionals of the
knot sequence, and path constraints are enforced knot-wise.  The tracer
solves the two scalar problems, spreads targets on an ellipse between
their images, solves a squared-distance reference-point problem per
target, and filters the result.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegenerateFrontError, DivergenceError, FrontTraceError
from .pareto import ParetoEntry, ParetoSet, nondominated_filter, proper_filter
from .solver import NlpProblem, SolverOptions, SolverResult, minimize

# relative objective extent below which a traced front counts as one point
DEGENERATE_RTOL = 1e-3


@dataclass(frozen=True)
class Horizon:
    t0: float = 0.0
    te: float = 0.5
    steps: int = 10

    def __post_init__(self):
        if self.te <= self.t0:
            raise ValueError("te must exceed t0")
        if self.steps < 1:
            raise ValueError("steps must be positive")

    @property
    def h(self) -> float:
        return (self.te - self.t0) / self.steps


@dataclass
class MocpDefinition:
    """A two-objective control problem over a fixed horizon.

    ``objectives`` are callables ``(states, controls, horizon) -> float``
    over the full rollout (running costs enter through
    :func:`trapezoid_cost`, terminal terms through :func:`mayer_cost`).
    ``path_constraint`` maps one knot ``(state, control)`` to a vector of
    values that are feasible when ``<= 0``; it is applied at every knot.
    ``path_constraint_tail`` works the same but skips the initial knot,
    for guards the fixed start state may not satisfy.  ``batch_eval`` is
    an optional fused fast path returning objective rows and stacked
    knot constraint values for a batch of flattened control vectors;
    when present it must agree with the generic path.
    """

    dynamics: Callable[[np.ndarray, np.ndarray], np.ndarray]
    objectives: tuple
    horizon: Horizon
    initial_state: np.ndarray
    n_u: int = 1
    u_min: float = -0.5
    u_max: float = 0.5
    path_constraint: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    path_constraint_tail: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    batch_eval: Optional[Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]] = None
    label: str = ""

    def __post_init__(self):
        self.initial_state = np.asarray(self.initial_state, dtype=float)

    @property
    def n_controls(self) -> int:
        return self.horizon.steps * self.n_u

    def control_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.n_controls
        return np.full(n, self.u_min), np.full(n, self.u_max)

    def reshape_controls(self, u_flat) -> np.ndarray:
        return np.asarray(u_flat, dtype=float).reshape(self.horizon.steps, self.n_u)


def trapezoid_cost(running: Callable[[np.ndarray, np.ndarray], float]):
    """Objective functional integrating a running cost by the trapezoid rule.

    The running cost is sampled at every knot; the final knot reuses the
    last control value.
    """

    def objective(states, controls, horizon: Horizon) -> float:
        p = horizon.steps
        vals = np.empty(p + 1)
        for k in range(p + 1):
            u_k = controls[min(k, p - 1)]
            vals[k] = running(states[k], u_k)
        return float(horizon.h * (0.5 * vals[0] + vals[1:-1].sum() + 0.5 * vals[-1]))

    return objective


def mayer_cost(terminal: Callable[[np.ndarray], float]):
    """Objective functional evaluating a terminal cost at the final knot."""

    def objective(states, controls, horizon: Horizon) -> float:
        return float(terminal(states[-1]))

    return objective


def sum_costs(*parts):
    def objective(states, controls, horizon: Horizon) -> float:
        return sum(part(states, controls, horizon) for part in parts)

    return objective


def integrate_rk4(dynamics, x0, controls, horizon: Horizon) -> np.ndarray:
    """Classical RK4 rollout, one step per control interval.

    Returns the ``(steps + 1, n_x)`` knot states.  Raises
    :class:`DivergenceError` with the offending step index when a state
    goes non-finite.
    """
    x0 = np.asarray(x0, dtype=float)
    controls = np.atleast_2d(np.asarray(controls, dtype=float))
    if controls.shape[0] != horizon.steps:
        controls = controls.reshape(horizon.steps, -1)
    h = horizon.h
    states = np.empty((horizon.steps + 1, x0.size))
    states[0] = x0
    x = x0
    for k in range(horizon.steps):
        u = controls[k]
        k1 = dynamics(x, u)
        k2 = dynamics(x + 0.5 * h * k1, u)
        k3 = dynamics(x + 0.5 * h * k2, u)
        k4 = dynamics(x + h * k3, u)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"state diverged at step {k + 1}", k + 1, controls.ravel())
        states[k + 1] = x
    return states


def evaluate_objectives(definition: MocpDefinition, u_flat) -> np.ndarray:
    """Objective vector for one flattened control sequence."""
    u_flat = np.asarray(u_flat, dtype=float).ravel()
    if definition.batch_eval is not None:
        j, _ = definition.batch_eval(u_flat[None, :])
        return np.asarray(j[0], dtype=float)
    controls = definition.reshape_controls(u_flat)
    states = integrate_rk4(definition.dynamics, definition.initial_state, controls, definition.horizon)
    return np.array([obj(states, controls, definition.horizon) for obj in definition.objectives])


def constraint_values(definition: MocpDefinition, u_flat) -> np.ndarray:
    """Stacked knot-wise path-constraint values for one control sequence."""
    u_flat = np.asarray(u_flat, dtype=float).ravel()
    if definition.batch_eval is not None:
        _, c = definition.batch_eval(u_flat[None, :])
        return np.asarray(c[0], dtype=float)
    if definition.path_constraint is None and definition.path_constraint_tail is None:
        return np.zeros(0)
    controls = definition.reshape_controls(u_flat)
    states = integrate_rk4(definition.dynamics, definition.initial_state, controls, definition.horizon)
    rows = []
    p = definition.horizon.steps
    if definition.path_constraint is not None:
        for k in range(p + 1):
            rows.append(np.atleast_1d(definition.path_constraint(states[k], controls[min(k, p - 1)])))
    if definition.path_constraint_tail is not None:
        for k in range(1, p + 1):
            rows.append(
                np.atleast_1d(definition.path_constraint_tail(states[k], controls[min(k, p - 1)]))
            )
    return np.concatenate(rows)


def _nlp_for(definition: MocpDefinition, scalarize: Callable[[np.ndarray], np.ndarray]) -> NlpProblem:
    """Wrap a definition into an NlpProblem minimizing ``scalarize(J)``."""
    lo, hi = definition.control_bounds()
    has_con = (
        definition.path_constraint is not None
        or definition.path_constraint_tail is not None
        or definition.batch_eval is not None
    )

    if definition.batch_eval is not None:
        batch = definition.batch_eval

        def objective_batch(u_rows):
            j, _ = batch(u_rows)
            return scalarize(np.asarray(j))

        def inequality_batch(u_rows):
            _, c = batch(u_rows)
            return c

        return NlpProblem(
            objective=lambda u: float(objective_batch(u[None, :])[0]),
            lower=lo,
            upper=hi,
            inequality=(lambda u: inequality_batch(u[None, :])[0]) if has_con else None,
            objective_batch=objective_batch,
            inequality_batch=inequality_batch if has_con else None,
        )

    def objective(u):
        return float(scalarize(evaluate_objectives(definition, u)[None, :])[0])

    return NlpProblem(
        objective=objective,
        lower=lo,
        upper=hi,
        inequality=(lambda u: constraint_values(definition, u)) if has_con else None,
    )


@dataclass
class TracedSolution:
    entry: ParetoEntry
    converged: bool
    result: SolverResult
    target: Optional[np.ndarray] = None


def solve_scalar(
    definition: MocpDefinition,
    which: int,
    start,
    opts: SolverOptions | None = None,
) -> TracedSolution:
    """Minimize a single objective (1 or 2) subject to the path constraints.

    The objective is normalized by its magnitude at the start point, so
    the gradient tolerance acts scale-free across problem instances.
    """
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    idx = which - 1
    start = np.asarray(start, dtype=float).ravel()
    scale = max(1.0, abs(float(evaluate_objectives(definition, start)[idx])))
    problem = _nlp_for(definition, lambda j_rows: j_rows[:, idx] / scale)
    result = minimize(problem, start, opts)
    entry = ParetoEntry(result.minimizer, evaluate_objectives(definition, result.minimizer))
    return TracedSolution(entry, result.converged, result)


def distribute_targets(a_img, b_img, d_e, n_t: int) -> list[np.ndarray]:
    """Spread ``n_t`` targets on the ellipse arc between the shifted endpoints.

    With ``A = a_img - (d_e1, 0)`` and ``B = b_img - (0, d_e2)``, the
    axis-aligned ellipse is centered at ``C = (B_x, A_y)`` with semi-axes
    reaching A and B; targets sit at angles strictly between ``pi`` (at
    A) and ``3 pi / 2`` (at B), so the arc bows toward the utopian point.
    ``d_e`` may be a scalar or a per-objective pair.
    """
    a_img = np.asarray(a_img, dtype=float)
    b_img = np.asarray(b_img, dtype=float)
    if n_t < 1:
        raise ValueError("n_t must be at least 1")
    from .pareto import dominates

    if dominates(a_img, b_img) or dominates(b_img, a_img) or np.array_equal(a_img, b_img):
        raise DegenerateFrontError("scalar minimizers do not span a trade-off")
    d_e = np.broadcast_to(np.asarray(d_e, dtype=float), (2,))
    a = a_img - np.array([d_e[0], 0.0])
    b = b_img - np.array([0.0, d_e[1]])
    center = np.array([b[0], a[1]])
    semi_x = center[0] - a[0]
    semi_y = center[1] - b[1]
    targets = []
    for j in range(1, n_t + 1):
        theta = math.pi + (math.pi / 2.0) * j / (n_t + 1)
        targets.append(center + np.array([semi_x * math.cos(theta), semi_y * math.sin(theta)]))
    return targets


def solve_reference_point(
    definition: MocpDefinition,
    target,
    start,
    opts: SolverOptions | None = None,
    scale=None,
) -> TracedSolution:
    """Minimize the squared distance between the objective image and ``target``.

    ``scale`` optionally preconditions the distance per objective (the
    tracer passes the front extents); targets below the attainable
    region land on the front regardless of the weighting.
    """
    target = np.asarray(target, dtype=float)
    sc = np.ones_like(target) if scale is None else np.asarray(scale, dtype=float)
    sc = np.where(sc > 0, sc, 1.0)

    def scalarize(j_rows):
        z = (j_rows - target[None, :]) / sc[None, :]
        return np.sum(z * z, axis=1)

    problem = _nlp_for(definition, scalarize)
    result = minimize(problem, np.asarray(start, dtype=float).ravel(), opts)
    entry = ParetoEntry(result.minimizer, evaluate_objectives(definition, result.minimizer))
    return TracedSolution(entry, result.converged, result, target)


def warm_start_predictor(u_prev, u_curr, u_min: float, u_max: float) -> np.ndarray:
    """Linear extrapolation ``2 u_curr - u_prev``, clipped to the bounds."""
    u_prev = np.asarray(u_prev, dtype=float)
    u_curr = np.asarray(u_curr, dtype=float)
    if u_prev.shape != u_curr.shape:
        raise ValueError("control shapes differ")
    return np.clip(2.0 * u_curr - u_prev, u_min, u_max)


@dataclass
class TraceResult:
    front: ParetoSet                       # nondominated and properly filtered
    nondominated: ParetoSet                # before the proper-efficiency trim
    solutions: list[TracedSolution] = field(default_factory=list)
    targets: list[np.ndarray] = field(default_factory=list)
    degenerate: bool = False


def trace_front_full(
    definition: MocpDefinition,
    n_targets: int = 18,
    d_e=None,
    proper_eps: float = 0.05,
    opts: SolverOptions | None = None,
    start=None,
    degenerate_extent=None,
) -> TraceResult:
    """Run the full automated tracing procedure on a two-objective problem.

    Steps: solve both scalar problems from ``u = 0``; if their images
    coincide or dominate one another the front is the single best point.
    Otherwise distribute targets on the ellipse (``d_e`` defaults to 0.1
    of the per-objective extent), solve each reference-point problem
    warm-started from the solution of the nearest previously solved
    target, filter dominated points and trim improper tails.
    """
    opts = opts or SolverOptions()
    if start is None:
        start = np.zeros(definition.n_controls)
    start = np.asarray(start, dtype=float).ravel()

    # the scalar landscapes carry shallow local minima; a small fixed
    # multistart (zero first) keeps the endpoints on the true front, and
    # a wider rescue fan runs only when the primary fan fails outright
    mid = 0.5 * (definition.u_min + definition.u_max)
    width = definition.u_max - definition.u_min
    primary = [start] + [np.full_like(start, mid + f * width) for f in (0.25, -0.25)]
    rescue = [np.full_like(start, mid + f * width) for f in (0.45, -0.45)]

    def best_scalar(which: int) -> TracedSolution:
        candidates = [solve_scalar(definition, which, s, opts) for s in primary]
        converged = [c for c in candidates if c.converged]
        if not converged:
            candidates = [solve_scalar(definition, which, s, opts) for s in rescue]
            converged = [c for c in candidates if c.converged]
        if not converged:
            raise FrontTraceError(
                f"{'first' if which == 1 else 'second'} scalar solve did not converge"
            )
        values = [c.entry.objectives[which - 1] for c in converged]
        return converged[int(np.argmin(values))]

    s1 = best_scalar(1)
    s2 = best_scalar(2)

    a_img, b_img = s1.entry.objectives, s2.entry.objectives
    extent = np.abs(b_img - a_img)
    degenerate_scale = np.maximum(np.maximum(np.abs(a_img), np.abs(b_img)), 1.0)
    from .pareto import dominates

    # a front whose whole extent is below meaningful resolution collapses
    # to a single compromise; ties resolve to the first scalar solution.
    # ``degenerate_extent`` optionally supplies absolute per-objective
    # floors for problem families whose tiny trade-offs are artifacts.
    below_floor = degenerate_extent is not None and np.all(
        extent <= np.asarray(degenerate_extent, dtype=float)
    )
    if (
        dominates(a_img, b_img)
        or dominates(b_img, a_img)
        or np.all(extent <= DEGENERATE_RTOL * degenerate_scale)
        or below_floor
    ):
        best = s1.entry if not dominates(b_img, a_img) else s2.entry
        front = ParetoSet([best])
        return TraceResult(front, front, [s1, s2], [], degenerate=True)

    if d_e is None:
        d_e = 0.1 * extent
    d_e_vec = np.broadcast_to(np.asarray(d_e, dtype=float), (2,))
    targets = distribute_targets(a_img, b_img, d_e_vec, n_targets)

    # warm-start anchors: the ellipse endpoints stand in for the scalar solves
    solved: list[tuple[np.ndarray, np.ndarray]] = [
        (a_img - np.array([d_e_vec[0], 0.0]), s1.entry.control),
        (b_img - np.array([0.0, d_e_vec[1]]), s2.entry.control),
    ]
    solutions = [s1, s2]
    entries = [s1.entry, s2.entry]
    for target in targets:
        dists = [float(np.linalg.norm(target - t_point)) for t_point, _ in solved]
        warm = solved[int(np.argmin(dists))][1]
        sol = solve_reference_point(definition, target, warm, opts, scale=extent)
        solutions.append(sol)
        if sol.converged:
            entries.append(sol.entry)
            solved.append((target, sol.entry.control))
        else:
            warnings.warn(
                f"reference-point solve failed for target {np.round(target, 6)}; dropping",
                stacklevel=2,
            )
    nondominated = nondominated_filter(entries)
    front = proper_filter(nondominated, proper_eps)
    return TraceResult(front, nondominated, solutions, targets)


def trace_front(
    definition: MocpDefinition,
    n_targets: int = 18,
    d_e=None,
    proper_eps: float = 0.05,
    opts: SolverOptions | None = None,
) -> ParetoSet:
    """The filtered Pareto front of :func:`trace_front_full`."""
    return trace_front_full(definition, n_targets, d_e, proper_eps, opts).front
