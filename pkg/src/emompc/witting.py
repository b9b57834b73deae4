"""Parametric two-objective benchmark with a translation-invariant Pareto set.

The decision-space solution is the line ``u1 + u2 = 0`` regardless of
the parameter ``gamma``: the shared square-root term is minimized at
``u1 + u2 = 0`` for any fixed ``u1 - u2``, and along that line the
objectives are strictly monotone in opposite directions for
``gamma in [0, 1]``.  The fronts themselves shift with ``gamma``, which
makes the family a sharp test for a scanner that compares Pareto sets
rather than front images.
"""

from __future__ import annotations

import numpy as np

from .mocp import Horizon, MocpDefinition

BOX = 5.0


def objective_pair(u, gamma: float) -> np.ndarray:
    """Both objective values at decision vector ``u = (u1, u2)``."""
    u = np.asarray(u, dtype=float)
    a = u[..., 0] + u[..., 1]
    b = u[..., 0] - u[..., 1]
    base = 0.5 * (np.sqrt(1.0 + a * a) + np.sqrt(1.0 + b * b)) + gamma * np.exp(-b * b)
    return np.stack([base + b, base - b], axis=-1)


def witting_mocp(gamma: float) -> MocpDefinition:
    """The benchmark wrapped as a degenerate one-step control problem.

    The two decision variables enter as a single control interval with a
    frozen scalar state; the tracer does not care that nothing moves.
    """

    def dynamics(x, u):
        return np.zeros(1)

    def make_objective(idx):
        def objective(states, controls, horizon):
            return float(objective_pair(controls[0], gamma)[idx])

        return objective

    def batch_eval(u_rows):
        u_rows = np.atleast_2d(np.asarray(u_rows, dtype=float))
        return objective_pair(u_rows, gamma), np.zeros((u_rows.shape[0], 0))

    return MocpDefinition(
        dynamics=dynamics,
        objectives=(make_objective(0), make_objective(1)),
        horizon=Horizon(0.0, 1.0, 1),
        initial_state=np.zeros(1),
        n_u=2,
        u_min=-BOX,
        u_max=BOX,
        batch_eval=batch_eval,
        label=f"witting(gamma={gamma})",
    )
