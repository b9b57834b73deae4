import math
import warnings

import numpy as np
import pytest

from emompc.maneuver import (
    ReducedParameter,
    build_maneuver_mocp,
    build_reduced_mocp,
    lift_reduced,
    reduce_state,
    _eval_maneuver_numpy,
)
from emompc.mocp import constraint_values, evaluate_objectives, integrate_rk4
from emompc.solver import fd_gradient
from emompc.track import GlobalPolyline, local_track, se2_apply_track
from emompc.tracks import stadium_track
from emompc.vehicle import Se2Action, VehicleParams, mirror_state, se2_apply


def random_reduced(rng, stored_side=True):
    lo = 0.0 if stored_side else -10.0
    return ReducedParameter(
        rng.uniform(-3, 3),
        rng.uniform(-6, 6),
        rng.uniform(-math.pi / 4, math.pi / 4),
        rng.uniform(lo, 10.0),
        rng.uniform(-0.1, 0.1),
    )


class TestKernelConsistency:
    def test_batch_matches_generic_rollout(self):
        rng = np.random.default_rng(8)
        for _ in range(6):
            rp = random_reduced(rng)
            definition = build_reduced_mocp(rp)
            u = rng.uniform(-0.5, 0.5, 10)
            j_fast, _ = definition.batch_eval(u[None, :])
            controls = definition.reshape_controls(u)
            states = integrate_rk4(
                definition.dynamics, definition.initial_state, controls, definition.horizon
            )
            j_slow = np.array([obj(states, controls, definition.horizon) for obj in definition.objectives])
            assert j_fast[0] == pytest.approx(j_slow, rel=1e-10, abs=1e-12)

    def test_numba_matches_numpy_reference(self):
        from emompc.maneuver import effective_corridor

        rng = np.random.default_rng(9)
        for vals in [(0, 1, math.pi / 6, 2.5, 0.05), (0, 0, 0.5, 0.0, 0.1), (1, -2, -0.3, 4.0, 0.0)]:
            rp = ReducedParameter(*vals)
            definition = build_reduced_mocp(rp)
            width = effective_corridor(rp, 5.0)
            u_rows = rng.uniform(-0.5, 0.5, (5, 10))
            j_fast, c_fast = definition.batch_eval(u_rows)
            kind = 1 if abs(rp.kappa) > 1e-6 else 0
            j_ref, c_ref = _eval_maneuver_numpy(
                u_rows, definition.initial_state, kind, rp.kappa, 0.0, 0.0, 0.0,
                65100.0, 54100.0, 1.0, 1.45, 1275.0, 1627.0, 30.0, width, 0.05, 10,
            )
            assert np.allclose(j_fast, j_ref, rtol=1e-11, atol=1e-13)
            assert np.allclose(c_fast, c_ref, rtol=1e-11, atol=1e-13)

    def test_constraint_values_match_batch(self):
        rp = ReducedParameter(0.5, -1.0, 0.2, 3.0, 0.04)
        definition = build_reduced_mocp(rp)
        u = np.random.default_rng(1).uniform(-0.5, 0.5, 10)
        _, c_fast = definition.batch_eval(u[None, :])
        generic = build_reduced_mocp(rp)
        generic_nobatch = build_reduced_mocp(rp)
        generic_nobatch.batch_eval = None
        c_slow = constraint_values(generic_nobatch, u)
        assert c_fast[0] == pytest.approx(c_slow, abs=1e-10)


class TestSymmetryProperties:
    def test_objective_invariance_under_se2(self):
        rng = np.random.default_rng(21)
        params = VehicleParams()
        worst = 0.0
        for _ in range(40):
            rp = random_reduced(rng)
            x0 = np.array([0.0, rp.d, rp.xi, rp.v_y, rp.r])
            track = local_track(rp.kappa)
            u = rng.uniform(-0.5, 0.5, 10)
            j0 = evaluate_objectives(build_maneuver_mocp(x0, track, params), u)
            g = Se2Action(rng.uniform(-math.pi, math.pi), tuple(rng.uniform(-200, 200, 2)))
            j1 = evaluate_objectives(
                build_maneuver_mocp(se2_apply(g, x0), se2_apply_track(g, track), params), u
            )
            worst = max(worst, float(np.max(np.abs(j1 - j0))))
        assert worst <= 1e-8

    def test_mirror_property(self):
        rng = np.random.default_rng(22)
        params = VehicleParams()
        worst = 0.0
        for _ in range(40):
            rp = random_reduced(rng, stored_side=False)
            x0 = np.array([0.0, rp.d, rp.xi, rp.v_y, rp.r])
            u = rng.uniform(-0.5, 0.5, 10)
            j0 = evaluate_objectives(build_maneuver_mocp(x0, local_track(rp.kappa), params), u)
            j1 = evaluate_objectives(
                build_maneuver_mocp(mirror_state(x0), local_track(-rp.kappa), params), -u
            )
            worst = max(worst, float(np.max(np.abs(j1 - j0))))
        assert worst <= 1e-8

    def test_fd_gradient_cross_check(self):
        # central differences against one-sided differences on the tracking cost
        definition = build_reduced_mocp(ReducedParameter(0, 1, math.pi / 6, 2.5, 0.05))

        def j1(u):
            return float(evaluate_objectives(definition, u)[0])

        u0 = np.zeros(10)
        central = fd_gradient(j1, u0, h_rel=1e-6, h_abs=1e-6)
        h = 1e-6
        forward = np.zeros(10)
        base = j1(u0)
        for i in range(10):
            up = u0.copy()
            up[i] += h
            forward[i] = (j1(up) - base) / h
        rel = np.abs(central - forward) / np.maximum(np.abs(central), 1e-3)
        assert np.max(rel) <= 1e-3
        assert np.allclose(central, forward, rtol=1e-2, atol=1e-4)


class TestReduceState:
    def test_centered_aligned(self):
        track = stadium_track()
        start = track.point_at(5.0)
        proj = track.project(start)
        state = np.array([start[0], start[1], proj.alpha, 0.0, 0.0])
        rp, mirrored, _ = reduce_state(track, state)
        assert not mirrored
        assert rp.as_array() == pytest.approx([0, 0, 0, 0, 0], abs=1e-9)

    def test_negative_offset_mirrors(self):
        track = local_track(0.0)
        state = np.array([3.0, -2.5, 0.0, 0.0, 0.0])
        rp, mirrored, _ = reduce_state(track, state)
        assert mirrored
        assert rp.as_array() == pytest.approx([0, 0, 0, 2.5, 0], abs=1e-12)

    def test_tie_breaks_on_xi_then_vy(self):
        track = local_track(0.0)
        rp, mirrored, _ = reduce_state(track, np.array([0.0, 0.0, -0.2, 0.0, 0.0]))
        assert mirrored and rp.xi == pytest.approx(0.2)
        rp, mirrored, _ = reduce_state(track, np.array([0.0, 0.0, 0.0, -1.0, 0.3]))
        assert mirrored and rp.v_y == pytest.approx(1.0) and rp.r == pytest.approx(-0.3)
        _, mirrored, _ = reduce_state(track, np.array([0.0, 0.0, 0.0, 1.0, -0.3]))
        assert not mirrored

    def test_roundtrip_lift(self):
        rng = np.random.default_rng(17)
        track = stadium_track()
        for _ in range(25):
            s = rng.uniform(0, track.length)
            base = track.point_at(s)
            proj = track.project(base)
            normal = np.array([-math.sin(proj.alpha), math.cos(proj.alpha)])
            state = np.zeros(5)
            state[:2] = base + rng.uniform(-3, 3) * normal
            state[2] = proj.alpha + rng.uniform(-0.6, 0.6)
            state[3] = rng.uniform(-3, 3)
            state[4] = rng.uniform(-6, 6)
            rp, mirrored, frame = reduce_state(track, state)
            rebuilt = lift_reduced(rp, mirrored, frame)
            assert rebuilt[[0, 1, 3, 4]] == pytest.approx(state[[0, 1, 3, 4]], abs=1e-9)
            from emompc.vehicle import wrap_angle

            assert abs(wrap_angle(rebuilt[2] - state[2])) <= 1e-9

    def test_se2_transform_reduces_identically(self):
        rng = np.random.default_rng(30)
        for _ in range(10):
            rp = random_reduced(rng)
            x0 = np.array([0.0, rp.d, rp.xi, rp.v_y, rp.r])
            track = local_track(rp.kappa)
            g = Se2Action(rng.uniform(-math.pi, math.pi), tuple(rng.uniform(-50, 50, 2)))
            rp2, mirrored, _ = reduce_state(se2_apply_track(g, track), se2_apply(g, x0))
            assert not mirrored
            assert rp2.as_array() == pytest.approx(rp.as_array(), abs=1e-9)


class TestBuildReduced:
    def test_feasible_at_rest(self):
        definition = build_reduced_mocp(ReducedParameter(0, 0, 0, 0, 0))
        j = evaluate_objectives(definition, np.zeros(10))
        c = constraint_values(definition, np.zeros(10))
        assert j == pytest.approx([0.0, -15.0])
        assert np.max(c) < 0

    def test_initial_state_layout(self):
        rp = ReducedParameter(1.0, -2.0, 0.3, 4.0, 0.05)
        definition = build_reduced_mocp(rp)
        assert definition.initial_state == pytest.approx([0.0, 4.0, 0.3, 1.0, -2.0])
