"""Box-constrained nonlinear minimizer with inequality constraints.

Augmented Lagrangian (Powell-Hestenes-Rockafellar) outer loop over the
inequalities, projected BFGS with central-difference gradients on the
box inside.  Everything is plain deterministic float arithmetic: the
same inputs produce the same :class:`SolverResult` bit for bit, which
the offline library build relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EvaluationError


@dataclass
class SolverOptions:
    g_tol: float = 1e-6
    c_tol: float = 1e-6
    max_outer: int = 30
    max_inner: int = 200
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    fd_rel: float = 1e-6
    fd_abs: float = 1e-7


@dataclass
class NlpProblem:
    """Minimize ``objective`` on a box subject to ``inequality(u) <= 0``.

    ``objective_batch``/``inequality_batch`` are optional vectorized
    forms taking an ``(m, n)`` array; when absent the scalar callables
    are looped.  The solver evaluates objective and constraints together,
    so both forms must stay consistent.
    """

    objective: Callable[[np.ndarray], float]
    lower: np.ndarray
    upper: np.ndarray
    inequality: Optional[Callable[[np.ndarray], np.ndarray]] = None
    objective_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    inequality_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != self.upper.shape:
            raise ValueError("bound shapes differ")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def dimension(self) -> int:
        return self.lower.size

    def eval_batch(self, u_batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Objective values ``(m,)`` and constraint values ``(m, l)``; l may be 0."""
        u_batch = np.atleast_2d(np.asarray(u_batch, dtype=float))
        m = u_batch.shape[0]
        if self.objective_batch is not None:
            f = np.asarray(self.objective_batch(u_batch), dtype=float).reshape(m)
        else:
            f = np.array([float(self.objective(u)) for u in u_batch])
        if self.inequality_batch is not None:
            c = np.atleast_2d(np.asarray(self.inequality_batch(u_batch), dtype=float))
            c = c.reshape(m, -1)
        elif self.inequality is not None:
            c = np.array(
                [np.atleast_1d(np.asarray(self.inequality(u), dtype=float)) for u in u_batch]
            ).reshape(m, -1)
        else:
            c = np.zeros((m, 0))
        if not np.all(np.isfinite(f)) or not np.all(np.isfinite(c)):
            bad = np.where(~np.isfinite(f))[0]
            if bad.size == 0:
                bad = np.where(~np.all(np.isfinite(c), axis=1))[0]
            raise EvaluationError("non-finite objective or constraint value", u_batch[bad[0]])
        return f, c


@dataclass
class SolverResult:
    minimizer: np.ndarray
    objective_value: float
    max_violation: float
    iterations: int
    converged: bool
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))


def fd_gradient(
    f: Callable[[np.ndarray], float], x, h_rel: float = 1e-6, h_abs: float = 1e-7
) -> np.ndarray:
    """Central-difference gradient with per-coordinate step ``max(h_rel*|x_i|, h_abs)``."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        h = max(h_rel * abs(x[i]), h_abs)
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = float(f(xp))
        fm = float(f(xm))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise EvaluationError(
                "non-finite sample in finite differences", xp if not np.isfinite(fp) else xm
            )
        g[i] = (fp - fm) / (2.0 * h)
    return g


class _Incumbent:
    """Best feasible point seen so far, by raw objective value."""

    def __init__(self, c_tol: float):
        self.c_tol = c_tol
        self.x: Optional[np.ndarray] = None
        self.f = np.inf
        self.viol = np.inf

    def offer(self, x, f, viol):
        if viol <= self.c_tol and f < self.f:
            self.x = np.array(x, copy=True)
            self.f = float(f)
            self.viol = float(viol)


def _stencil(x: np.ndarray, h_rel: float, h_abs: float):
    """Perturbation points and steps for one central-difference gradient."""
    n = x.size
    steps = np.maximum(h_rel * np.abs(x), h_abs)
    pts = np.repeat(x[None, :], 2 * n, axis=0)
    for i in range(n):
        pts[2 * i, i] += steps[i]
        pts[2 * i + 1, i] -= steps[i]
    return pts, steps


def minimize(problem: NlpProblem, start, opts: SolverOptions | None = None) -> SolverResult:
    """Run the augmented Lagrangian / projected BFGS scheme from ``start``.

    The start is projected into the box.  ``converged`` requires both the
    projected gradient of the final Lagrangian and the constraint
    violation within tolerance; an exhausted iteration budget returns
    ``converged=False`` rather than raising.  If the final iterate is
    infeasible or worse than the best feasible point visited, that
    incumbent is returned instead.
    """
    opts = opts or SolverOptions()
    lo, hi = problem.lower, problem.upper
    x = np.clip(np.asarray(start, dtype=float), lo, hi)
    n = x.size

    f0, c0 = problem.eval_batch(x[None, :])
    n_con = c0.shape[1]
    lam = np.zeros(n_con)
    mu = opts.penalty_init
    incumbent = _Incumbent(opts.c_tol)

    def raw_viol(c_row):
        return float(max(np.max(c_row), 0.0)) if c_row.size else 0.0

    def eval_al(points):
        f, c = problem.eval_batch(points)
        if n_con:
            t = np.maximum(0.0, lam[None, :] + mu * c)
            vals = f + np.sum(t * t - lam[None, :] * lam[None, :], axis=1) / (2.0 * mu)
        else:
            vals = f
        for k in range(points.shape[0]):
            p = points[k]
            # finite-difference stencils step slightly outside the box;
            # those samples must never become the returned minimizer
            if np.all(p >= lo) and np.all(p <= hi):
                incumbent.offer(p, f[k], raw_viol(c[k]))
        return vals, f, c

    def fd_grad_al(point):
        pts, steps = _stencil(point, opts.fd_rel, opts.fd_abs)
        samples, _, _ = eval_al(pts)
        return (samples[0::2] - samples[1::2]) / (2.0 * steps)

    viol = raw_viol(c0[0])
    incumbent.offer(x, f0[0], viol)
    total_iters = 0
    stationary = False
    prev_outer_viol = np.inf
    n_outer = opts.max_outer if n_con else 1

    bound_eps = 1e-12

    for _outer in range(n_outer):
        # early outer iterations only need a rough stationary point
        inner_tol = max(opts.g_tol, 1e-2 * 0.2**_outer) if n_con else opts.g_tol
        vals, _, _ = eval_al(x[None, :])
        L = float(vals[0])
        g = fd_grad_al(x)
        H = np.eye(n)
        first_update = True
        active_prev = None

        for _ in range(opts.max_inner):
            pg = x - np.clip(x - g, lo, hi)
            if np.max(np.abs(pg)) <= inner_tol:
                break
            active = ((x <= lo + bound_eps) & (g > 0)) | ((x >= hi - bound_eps) & (g < 0))
            if active_prev is None or not np.array_equal(active, active_prev):
                H = np.eye(n)
                first_update = True
            active_prev = active

            accepted = False
            for attempt in range(2):
                g_eff = np.where(active, 0.0, g)
                d = -H @ g_eff
                d[active] = 0.0
                if float(d @ g) >= 0.0:
                    H = np.eye(n)
                    first_update = True
                    d = -g_eff
                alpha = 1.0
                x_new, L_new = x, L
                for _ls in range(50):
                    cand = np.clip(x + alpha * d, lo, hi)
                    step = cand - x
                    if np.max(np.abs(step)) < 1e-16:
                        break
                    cand_vals, _, _ = eval_al(cand[None, :])
                    if cand_vals[0] <= L + 1e-4 * float(g @ step):
                        x_new, L_new = cand, float(cand_vals[0])
                        accepted = True
                        break
                    alpha *= 0.5
                if accepted or attempt == 1:
                    break
                # failed with the quasi-Newton direction: retry as steepest descent
                H = np.eye(n)
                first_update = True
            total_iters += 1
            if not accepted:
                break

            g_new = fd_grad_al(x_new)
            s = x_new - x
            y = g_new - g
            sy = float(s @ y)
            if sy > 1e-10 * float(np.linalg.norm(s) * np.linalg.norm(y) + 1e-300):
                if first_update:
                    H = (sy / float(y @ y)) * np.eye(n)
                    first_update = False
                rho = 1.0 / sy
                Hy = H @ y
                H = H + np.outer(s, s) * ((sy + float(y @ Hy)) * rho * rho)
                H -= (np.outer(Hy, s) + np.outer(s, Hy)) * rho
            x, g, L = x_new, g_new, L_new

        f_cur, c_cur = problem.eval_batch(x[None, :])
        viol = raw_viol(c_cur[0])
        incumbent.offer(x, f_cur[0], viol)
        pg = x - np.clip(x - g, lo, hi)
        stationary = bool(np.max(np.abs(pg)) <= opts.g_tol)

        if n_con == 0 or (stationary and viol <= opts.c_tol):
            break
        lam = np.maximum(0.0, lam + mu * c_cur[0])
        # stiffen only while genuinely infeasible and not improving
        if viol > opts.c_tol and viol > 0.25 * prev_outer_viol:
            mu *= opts.penalty_growth
        prev_outer_viol = viol

    f_final, c_final = problem.eval_batch(x[None, :])
    xr = x
    fr = float(f_final[0])
    vr = raw_viol(c_final[0])
    if incumbent.x is not None and (vr > opts.c_tol or incumbent.f < fr):
        xr, fr, vr = incumbent.x, incumbent.f, incumbent.viol
    return SolverResult(
        minimizer=np.asarray(xr),
        objective_value=fr,
        max_violation=vr,
        iterations=total_iters,
        converged=bool(stationary and vr <= opts.c_tol),
        multipliers=lam,
    )
