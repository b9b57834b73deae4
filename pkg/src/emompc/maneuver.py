"""The vehicle maneuvering problem: stay near the centerline, drive far.

Objectives over the prediction horizon are the integrated squared
centerline offset and the negative driven distance measured along the
track between the projections of the initial and final positions.  The
corridor constraint ``|d| <= d_max`` is enforced knot-wise in the
smooth dimensionless form ``d^2 / d_max^2 - 1 <= 0``.

Near an arc's center the projection degenerates: the driven-distance
objective would wind around the center with unbounded gradients, and
the published grid itself contains start states at the center.  Each
step's swept angle is therefore attenuated smoothly to zero as the
step's closest center distance drops through ``[_ATT_LO, _ATT_HI]``;
outside that disk (every regular driving situation) the objective is
untouched, and inside it the landscape stays smooth because steps that
could jump the angle branch cut are exactly the fully attenuated ones.

The symmetry-reduced coordinates ``(v_y, r, xi, d, kappa)`` index the
offline library: lateral velocity, yaw rate, heading relative to the
track tangent, signed lateral offset and local curvature.  A problem
instance is recovered from them on the normalized local track with
``x0 = (0, d, xi, v_y, r)``.  Only ``d >= 0`` is stored; the other side
is reached through the horizontal reflection, which negates the whole
tuple and the steering.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .mocp import Horizon, MocpDefinition
from .track import Arc, GlobalPolyline, Line, local_track, KAPPA_TOL
from .vehicle import Se2Action, VehicleParams, mirror_state, se2_apply, wrap_angle

_CENTER_TOL = 1e-12  # fraction of the radius below which a knot sits on the arc center
_CORRIDOR_T = 0.4    # s; lateral-settling window behind the corridor relaxation
_ATT_LO = 0.85  # m; below this center distance a step's sweep counts as zero
_ATT_HI = 1.2   # m; beyond it the sweep is exact; the band width keeps branch cuts out


def _eval_maneuver_numpy(
    u_rows,
    x0,
    kind,
    kappa,
    ax,
    ay,
    phi0,
    caf,
    car,
    lf,
    lr,
    mass,
    iz,
    vx,
    d_max,
    h,
    steps,
):
    """Reference implementation, vectorized over the batch dimension."""
    m = u_rows.shape[0]
    p1 = np.full(m, x0[0])
    p2 = np.full(m, x0[1])
    th = np.full(m, x0[2])
    vy = np.full(m, x0[3])
    r = np.full(m, x0[4])

    if kind == 1:
        radius = 1.0 / abs(kappa)
        sgn = 1.0 if kappa > 0 else -1.0
        cx = ax - math.sin(phi0) / kappa
        cy = ay + math.cos(phi0) / kappa
        w0x, w0y = ax - cx, ay - cy
    else:
        tx, ty = math.cos(phi0), math.sin(phi0)

    d_knots = np.empty((m, steps + 1))
    s_knots = np.empty((m, steps + 1))
    dist_knots = np.empty((m, steps + 1))

    def project(k):
        if kind == 1:
            wx = p1 - cx
            wy = p2 - cy
            dist = np.sqrt(wx * wx + wy * wy)
            dist_knots[:, k] = dist
            central = dist < _CENTER_TOL * radius
            d = sgn * (radius - dist)
            s_raw = np.arctan2(w0x * wy - w0y * wx, w0x * wx + w0y * wy)
            if k == 0:
                s = np.where(central, 0.0, s_raw)
            else:
                prev = s_knots[:, k - 1]
                turns = np.floor((prev - s_raw) / (2.0 * math.pi) + 0.5)
                s = s_raw + 2.0 * math.pi * turns
                s = np.where(central, prev, s)
        else:
            wx = p1 - ax
            wy = p2 - ay
            s = wx * tx + wy * ty
            d = tx * wy - ty * wx
        d_knots[:, k] = d
        s_knots[:, k] = s

    def derivs(p1v, p2v, thv, vyv, rv, u):
        cu = np.cos(u)
        c1 = -(caf * cu + car) / (mass * vx)
        c2 = (-lf * caf * cu + lr * car) / (iz * vx)
        c3 = caf * cu / mass
        c4 = (-lf * caf * cu + lr * car) / (mass * vx) - vx
        c5 = -(lf * lf * caf * cu + lr * lr * car) / (iz * vx)
        c6 = lf * caf * cu / iz
        st = np.sin(thv)
        ct = np.cos(thv)
        return (
            vx * ct - vyv * st,
            vx * st + vyv * ct,
            rv,
            c1 * vyv + c4 * rv + c3 * u,
            c2 * vyv + c5 * rv + c6 * u,
        )

    project(0)
    for k in range(steps):
        u = u_rows[:, k]
        a1, b1, c1_, d1, e1 = derivs(p1, p2, th, vy, r, u)
        a2, b2, c2_, d2, e2 = derivs(
            p1 + 0.5 * h * a1, p2 + 0.5 * h * b1, th + 0.5 * h * c1_, vy + 0.5 * h * d1, r + 0.5 * h * e1, u
        )
        a3, b3, c3_, d3, e3 = derivs(
            p1 + 0.5 * h * a2, p2 + 0.5 * h * b2, th + 0.5 * h * c2_, vy + 0.5 * h * d2, r + 0.5 * h * e2, u
        )
        a4, b4, c4_, d4, e4 = derivs(
            p1 + h * a3, p2 + h * b3, th + h * c3_, vy + h * d3, r + h * e3, u
        )
        p1 = p1 + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        p2 = p2 + (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        th = th + (h / 6.0) * (c1_ + 2.0 * c2_ + 2.0 * c3_ + c4_)
        vy = vy + (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        r = r + (h / 6.0) * (e1 + 2.0 * e2 + 2.0 * e3 + e4)
        project(k + 1)

    d2_knots = d_knots * d_knots
    j1 = h * (0.5 * d2_knots[:, 0] + d2_knots[:, 1:-1].sum(axis=1) + 0.5 * d2_knots[:, -1])
    corridor = d2_knots / (d_max * d_max) - 1.0
    if kind == 1:
        deltas = s_knots[:, 1:] - s_knots[:, :-1]
        wlo = np.minimum(dist_knots[:, 1:], dist_knots[:, :-1])
        t = np.clip((wlo - _ATT_LO) / (_ATT_HI - _ATT_LO), 0.0, 1.0)
        sigma = t * t * (3.0 - 2.0 * t)
        j2 = -(sigma * deltas).sum(axis=1) / kappa
    else:
        j2 = -(s_knots[:, -1] - s_knots[:, 0])
    return np.stack([j1, j2], axis=1), corridor


try:  # numba accelerates the hot offline path; the numpy fallback is equivalent
    if os.environ.get("EMOMPC_NO_NUMBA"):
        raise ImportError("numba disabled by EMOMPC_NO_NUMBA")
    from numba import njit

    @njit(cache=True)
    def _eval_maneuver_numba(
        u_rows, x0, kind, kappa, ax, ay, phi0, caf, car, lf, lr, mass, iz, vx, d_max, h, steps
    ):  # pragma: no cover - exercised through the dispatcher
        m = u_rows.shape[0]
        out_j = np.empty((m, 2))
        out_c = np.empty((m, steps + 1))
        two_pi = 2.0 * math.pi

        if kind == 1:
            radius = 1.0 / abs(kappa)
            sgn = 1.0 if kappa > 0 else -1.0
            cx = ax - math.sin(phi0) / kappa
            cy = ay + math.cos(phi0) / kappa
            w0x = ax - cx
            w0y = ay - cy
        else:
            radius = 0.0
            sgn = 0.0
            cx = 0.0
            cy = 0.0
            # for lines w0 doubles as the unit tangent
            w0x = math.cos(phi0)
            w0y = math.sin(phi0)

        for row in range(m):
            p1 = x0[0]
            p2 = x0[1]
            th = x0[2]
            vy = x0[3]
            rr = x0[4]
            s_prev = 0.0
            s_first = 0.0
            j1_acc = 0.0
            dist_prev = 0.0
            sweep = 0.0
            for k in range(steps + 1):
                if k > 0:
                    u = u_rows[row, k - 1]
                    cu = math.cos(u)
                    c1 = -(caf * cu + car) / (mass * vx)
                    c2 = (-lf * caf * cu + lr * car) / (iz * vx)
                    c3 = caf * cu / mass
                    c4 = (-lf * caf * cu + lr * car) / (mass * vx) - vx
                    c5 = -(lf * lf * caf * cu + lr * lr * car) / (iz * vx)
                    c6 = lf * caf * cu / iz
                    # four RK stages on (p1, p2, th, vy, r)
                    st = math.sin(th)
                    ct = math.cos(th)
                    a1 = vx * ct - vy * st
                    b1 = vx * st + vy * ct
                    t1 = rr
                    d1 = c1 * vy + c4 * rr + c3 * u
                    e1 = c2 * vy + c5 * rr + c6 * u
                    th2 = th + 0.5 * h * t1
                    vy2 = vy + 0.5 * h * d1
                    r2 = rr + 0.5 * h * e1
                    st = math.sin(th2)
                    ct = math.cos(th2)
                    a2 = vx * ct - vy2 * st
                    b2 = vx * st + vy2 * ct
                    t2 = r2
                    d2 = c1 * vy2 + c4 * r2 + c3 * u
                    e2 = c2 * vy2 + c5 * r2 + c6 * u
                    th3 = th + 0.5 * h * t2
                    vy3 = vy + 0.5 * h * d2
                    r3 = rr + 0.5 * h * e2
                    st = math.sin(th3)
                    ct = math.cos(th3)
                    a3 = vx * ct - vy3 * st
                    b3 = vx * st + vy3 * ct
                    t3 = r3
                    d3 = c1 * vy3 + c4 * r3 + c3 * u
                    e3 = c2 * vy3 + c5 * r3 + c6 * u
                    th4 = th + h * t3
                    vy4 = vy + h * d3
                    r4 = rr + h * e3
                    st = math.sin(th4)
                    ct = math.cos(th4)
                    a4 = vx * ct - vy4 * st
                    b4 = vx * st + vy4 * ct
                    t4 = r4
                    d4 = c1 * vy4 + c4 * r4 + c3 * u
                    e4 = c2 * vy4 + c5 * r4 + c6 * u
                    p1 = p1 + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
                    p2 = p2 + (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                    th = th + (h / 6.0) * (t1 + 2.0 * t2 + 2.0 * t3 + t4)
                    vy = vy + (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
                    rr = rr + (h / 6.0) * (e1 + 2.0 * e2 + 2.0 * e3 + e4)

                if kind == 1:
                    wx = p1 - cx
                    wy = p2 - cy
                    dist = math.sqrt(wx * wx + wy * wy)
                    if dist < _CENTER_TOL * radius:
                        d = sgn * radius
                        s = s_prev if k > 0 else 0.0
                    else:
                        d = sgn * (radius - dist)
                        s_raw = math.atan2(w0x * wy - w0y * wx, w0x * wx + w0y * wy)
                        if k == 0:
                            s = s_raw
                        else:
                            s = s_raw + two_pi * math.floor((s_prev - s_raw) / two_pi + 0.5)
                    if k > 0:
                        wlo = dist if dist < dist_prev else dist_prev
                        t_att = (wlo - _ATT_LO) / (_ATT_HI - _ATT_LO)
                        if t_att < 0.0:
                            t_att = 0.0
                        elif t_att > 1.0:
                            t_att = 1.0
                        sigma = t_att * t_att * (3.0 - 2.0 * t_att)
                        sweep += sigma * (s - s_prev)
                    dist_prev = dist
                else:
                    wx = p1 - ax
                    wy = p2 - ay
                    s = wx * w0x + wy * w0y
                    d = w0x * wy - w0y * wx

                out_c[row, k] = d * d / (d_max * d_max) - 1.0
                if k == 0:
                    s_first = s
                    j1_acc += 0.5 * d * d
                elif k == steps:
                    j1_acc += 0.5 * d * d
                else:
                    j1_acc += d * d
                s_prev = s

            out_j[row, 0] = h * j1_acc
            if kind == 1:
                out_j[row, 1] = -sweep / kappa
            else:
                out_j[row, 1] = -(s_prev - s_first)
        return out_j, out_c

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def _track_params(track) -> tuple[int, float, float, float, float]:
    if isinstance(track, Arc):
        return 1, track.kappa, track.anchor[0], track.anchor[1], track.phi
    if isinstance(track, Line):
        return 0, 0.0, track.anchor[0], track.anchor[1], track.phi
    raise TypeError(f"maneuver problems need an Arc or Line track, got {type(track)!r}")


def make_batch_eval(x0, track, params: VehicleParams, horizon: Horizon, d_max: float):
    """Fused batched evaluator for objectives and knot constraints."""
    kind, kappa, ax, ay, phi0 = _track_params(track)
    x0 = np.asarray(x0, dtype=float)
    impl = _eval_maneuver_numba if HAVE_NUMBA else _eval_maneuver_numpy

    def batch_eval(u_rows):
        u_rows = np.ascontiguousarray(np.atleast_2d(np.asarray(u_rows, dtype=float)))
        return impl(
            u_rows,
            x0,
            kind,
            kappa,
            ax,
            ay,
            phi0,
            params.c_alpha_f,
            params.c_alpha_r,
            params.l_f,
            params.l_r,
            params.mass,
            params.i_z,
            params.v_x,
            d_max,
            horizon.h,
            horizon.steps,
        )

    return batch_eval


def projection_series(track, states) -> tuple[np.ndarray, np.ndarray]:
    """Signed offsets and unwrap-continued arc parameters along knot states."""
    d_vals = np.empty(len(states))
    s_vals = np.empty(len(states))
    prev = 0.0
    for k, x in enumerate(states):
        proj = track.project(x[:2])
        s = proj.s
        if isinstance(track, Arc) and k > 0:
            s = s + 2.0 * math.pi * math.floor((prev - s) / (2.0 * math.pi) + 0.5)
        d_vals[k] = proj.distance
        s_vals[k] = s
        prev = s
    return d_vals, s_vals


def build_maneuver_mocp(
    x0,
    track,
    params: VehicleParams | None = None,
    horizon: Horizon | None = None,
    d_max: float = 5.0,
) -> MocpDefinition:
    """Assemble the maneuvering problem for a state and track in one frame.

    The track must be an :class:`Arc` or :class:`Line`; the generic
    objective callables and the fused ``batch_eval`` compute the same
    quantities.
    """
    params = params or VehicleParams()
    horizon = horizon or Horizon()
    x0 = np.asarray(x0, dtype=float)

    from .vehicle import bicycle_rhs

    def dynamics(x, u):
        return bicycle_rhs(x, float(np.atleast_1d(u)[0]), params)

    def offset_cost(states, controls, hz: Horizon) -> float:
        d_vals, _ = projection_series(track, states)
        d2 = d_vals**2
        return float(hz.h * (0.5 * d2[0] + d2[1:-1].sum() + 0.5 * d2[-1]))

    def distance_cost(states, controls, hz: Horizon) -> float:
        _, s_vals = projection_series(track, states)
        return -track.arc_length_between(s_vals[0], s_vals[-1])

    def corridor(state, control):
        proj = track.project(state[:2])
        return np.array([proj.distance**2 / d_max**2 - 1.0])

    return MocpDefinition(
        dynamics=dynamics,
        objectives=(offset_cost, distance_cost),
        horizon=horizon,
        initial_state=x0,
        n_u=1,
        u_min=-0.5,
        u_max=0.5,
        path_constraint=corridor,
        batch_eval=make_batch_eval(x0, track, params, horizon, d_max),
        label="maneuver",
    )


def effective_corridor(rp: "ReducedParameter", d_max: float, v_x: float = 30.0) -> float:
    """Corridor half-width that keeps the node's problem feasible.

    The configured ``d_max`` (the usable track half-width) binds whenever
    the start state can physically hold it.  States with large offset,
    heading error, rates or on tight curves cannot: the reachable
    minimum of ``max |d(t)|`` grows with the lateral energy that must be
    dissipated first.  The closed-form bound below majorizes that
    minimum on the whole published grid (checked against direct minimax
    solves at every range corner), so relaxing to it never masks a
    violation the vehicle could have avoided.
    """
    v_lat = abs(v_x * math.sin(rp.xi)) + abs(rp.v_y)
    t = _CORRIDOR_T
    reach = abs(rp.d) + v_lat * t + 0.5 * v_x * abs(rp.r) * t * t + 0.5 * abs(rp.kappa) * v_x * v_x * t * t
    return max(d_max, 1.05 * reach)


@dataclass(frozen=True)
class ReducedParameter:
    """Symmetry-reduced coordinates indexing the offline library."""

    v_y: float
    r: float
    xi: float
    d: float
    kappa: float

    def as_array(self) -> np.ndarray:
        return np.array([self.v_y, self.r, self.xi, self.d, self.kappa])

    @classmethod
    def from_array(cls, q) -> "ReducedParameter":
        v_y, r, xi, d, kappa = (float(v) for v in q)
        return cls(v_y, r, xi, d, kappa)

    def mirrored(self) -> "ReducedParameter":
        return ReducedParameter(-self.v_y, -self.r, -self.xi, -self.d, -self.kappa)


def build_reduced_mocp(
    rp: ReducedParameter,
    params: VehicleParams | None = None,
    horizon: Horizon | None = None,
    d_max: float = 5.0,
    kappa_tol: float = KAPPA_TOL,
    relax_corridor: bool = True,
) -> MocpDefinition:
    """Maneuvering problem at a reduced parameter, on the normalized track.

    With ``relax_corridor`` the corridor widens per node to its feasible
    floor (see :func:`effective_corridor`); pass ``False`` to enforce the
    raw ``d_max`` regardless.
    """
    x0 = np.array([0.0, rp.d, rp.xi, rp.v_y, rp.r])
    v_x = (params or VehicleParams()).v_x
    width = effective_corridor(rp, d_max, v_x) if relax_corridor else d_max
    return build_maneuver_mocp(x0, local_track(rp.kappa, kappa_tol), params, horizon, width)


def reduce_state(track, x) -> tuple[ReducedParameter, bool, Se2Action]:
    """Project a global state onto the reduced coordinates.

    Returns the normalized (possibly mirrored) parameter, whether the
    mirror was applied, and the frame mapping the local normalized track
    to the global one at the projection point.  The stored side has
    ``d > 0``, with ties broken by the sign of ``xi`` and then ``v_y``.
    """
    x = np.asarray(x, dtype=float)
    proj = track.project(x[:2])
    # the frame angle comes from the actual offset direction so the lift
    # is exact; on arcs and lines it coincides with the tangent angle,
    # on polylines it differs by at most the vertex discretization
    offset = x[:2] - proj.point
    if abs(proj.distance) > 1e-9:
        v = offset / proj.distance
        alpha = math.atan2(-v[0], v[1])
    else:
        alpha = proj.alpha
    xi = wrap_angle(x[2] - alpha)
    raw = ReducedParameter(x[3], x[4], xi, proj.distance, proj.kappa)
    frame = Se2Action(alpha, (float(proj.point[0]), float(proj.point[1])))
    mirrored = raw.d < 0 or (raw.d == 0 and (raw.xi < 0 or (raw.xi == 0 and raw.v_y < 0)))
    return (raw.mirrored() if mirrored else raw), mirrored, frame


def lift_reduced(rp: ReducedParameter, mirrored: bool, frame: Se2Action) -> np.ndarray:
    """Inverse of :func:`reduce_state` on the reduced coordinates."""
    x_local = np.array([0.0, rp.d, rp.xi, rp.v_y, rp.r])
    if mirrored:
        x_local = mirror_state(x_local)
    return se2_apply(frame, x_local)
