import math
import warnings

import numpy as np
import pytest

from emompc.config import GridDimConfig
from emompc.errors import EmptySetError
from emompc.library import GridSpec
from emompc.online import (
    SimulationSession,
    centered_start,
    heuristic_rho,
    interpolate_control,
    neighbor_lookup,
    run_closed_loop,
)
from emompc.pareto import ParetoEntry, ParetoSet
from emompc.track import GlobalPolyline
from emompc.tracks import straight_track


def front_of(controls, objectives):
    return ParetoSet([ParetoEntry(np.asarray(c, dtype=float), np.asarray(j, dtype=float)) for c, j in zip(controls, objectives)])


class TestNeighborLookup:
    def test_one_dimensional(self):
        grid = GridSpec.from_dims([GridDimConfig("x", 0.0, 2.0, 3)])
        neighbors = neighbor_lookup(grid, [0.3])
        assert [(idx[0], round(d, 12)) for idx, d in neighbors] == [(0, 0.3), (1, 0.7)]

    def test_two_dimensional_axis_neighbors(self):
        grid = GridSpec.from_dims(
            [GridDimConfig("x", 0.0, 1.0, 2), GridDimConfig("y", 0.0, 1.0, 2)]
        )
        neighbors = neighbor_lookup(grid, [0.3, 0.8])
        nodes = {idx for idx, _ in neighbors}
        assert nodes == {(0, 1), (1, 1), (0, 0)}

    def test_on_node_single_hit(self):
        grid = GridSpec.from_dims([GridDimConfig("x", 0.0, 2.0, 3), GridDimConfig("y", 0.0, 2.0, 3)])
        neighbors = neighbor_lookup(grid, [1.0, 2.0])
        assert neighbors[0][0] == (1, 2)
        assert neighbors[0][1] == 0.0
        assert len(neighbors) == 1

    def test_out_of_range_clamps_with_warning(self):
        grid = GridSpec.from_dims([GridDimConfig("x", 0.0, 2.0, 3)])
        with pytest.warns(UserWarning, match="clamp"):
            neighbors = neighbor_lookup(grid, [5.0])
        assert neighbors[0][0] == (2,)

    def test_at_most_two_per_dimension(self):
        grid = GridSpec.from_dims(
            [GridDimConfig(n, -1.0, 1.0, 5) for n in ("a", "b", "c", "d", "e")]
        )
        neighbors = neighbor_lookup(grid, [0.1, -0.2, 0.3, 0.45, -0.05])
        assert len(neighbors) <= 10


class TestInterpolateControl:
    def test_zero_distance_returns_verbatim(self):
        fronts = [
            (front_of([[0.3, 0.3]], [[0.0, -1.0]]), 0.0),
            (front_of([[0.9, 0.9]], [[0.0, -1.0]]), 1.0),
        ]
        out = interpolate_control(fronts, rho=0.5, u_min=-0.5, u_max=0.5)
        assert out == pytest.approx([0.3, 0.3])

    def test_equal_distances_average(self):
        fronts = [
            (front_of([[0.2]], [[0.0, -1.0]]), 1.0),
            (front_of([[0.4]], [[0.0, -1.0]]), 1.0),
        ]
        out = interpolate_control(fronts, rho=0.0, u_min=-0.5, u_max=0.5)
        assert out[0] == pytest.approx(0.3)

    def test_inverse_distance_weights(self):
        fronts = [
            (front_of([[0.2]], [[0.0, -1.0]]), 1.0),
            (front_of([[0.4]], [[0.0, -1.0]]), 3.0),
        ]
        out = interpolate_control(fronts, rho=0.0, u_min=-0.5, u_max=0.5)
        assert out[0] == pytest.approx(0.25)

    def test_convex_envelope(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            controls = rng.uniform(-0.5, 0.5, (3, 10))
            fronts = [(front_of([c], [[0.0, -1.0]]), float(rng.uniform(0.1, 2.0))) for c in controls]
            out = interpolate_control(fronts, rho=0.0, u_min=-0.5, u_max=0.5)
            assert np.all(out <= controls.max(axis=0) + 1e-12)
            assert np.all(out >= controls.min(axis=0) - 1e-12)

    def test_selection_respects_rho(self):
        front = front_of([[0.0], [0.5]], [[0.0, -2.0], [1.0, -3.0]])
        out = interpolate_control([(front, 1.0)], rho=1.0, u_min=-0.5, u_max=0.5)
        assert out[0] == 0.5

    def test_empty_raises(self):
        with pytest.raises(EmptySetError):
            interpolate_control([], rho=0.5, u_min=-0.5, u_max=0.5)


class TestHeuristicRho:
    def test_decrease_on_straight(self):
        assert heuristic_rho(0.5, 0.0) == pytest.approx(0.45)

    def test_floor(self):
        assert heuristic_rho(0.26, 0.0) == pytest.approx(0.25)
        assert heuristic_rho(0.25, 0.001) == pytest.approx(0.25)

    def test_ceiling(self):
        assert heuristic_rho(0.88, 0.05) == pytest.approx(0.90)
        assert heuristic_rho(0.90, 0.05) == pytest.approx(0.90)

    def test_increase_in_curve(self):
        assert heuristic_rho(0.5, 0.02) == pytest.approx(0.55)
        assert heuristic_rho(0.5, -0.02) == pytest.approx(0.55)

    def test_exact_steps_no_drift(self):
        rho = 0.25
        seen = set()
        for k in range(200):
            rho = heuristic_rho(rho, 0.02 if k % 3 else 0.0)
            seen.add(round(rho * 100))
            assert 0.25 <= rho <= 0.90
        assert all(c % 5 == 0 for c in seen)


def long_straight():
    return straight_track(length=600.0, spacing=2.0, name="long")


class TestMpcStep:
    def test_on_node_exact_control(self, synthetic_library):
        track = long_straight()
        # place the vehicle exactly at node (v_y=0, r=0, xi=0, d=5, kappa=0)
        state = np.array([100.0, 5.0, 0.0, 0.0, 0.0])
        session = SimulationSession(synthetic_library, track, state, rho=0.3)
        record = session.step()
        index = record.front_index
        expected = synthetic_library.front_at(index)[0].control[0]
        assert record.control == expected
        assert record.weights[0] == 0.0

    def test_mirrored_state_negates_control(self, synthetic_library):
        track = long_straight()
        up = SimulationSession(
            synthetic_library, track, np.array([100.0, 5.0, 0.0, 0.0, 0.0]), rho=0.3
        ).step()
        down = SimulationSession(
            synthetic_library, track, np.array([100.0, -5.0, 0.0, 0.0, 0.0]), rho=0.3
        ).step()
        assert not up.mirrored and down.mirrored
        assert down.control == -up.control

    def test_rho_mailbox_applies_next_step(self, synthetic_library):
        track = long_straight()
        session = SimulationSession(
            synthetic_library, track, np.array([100.0, 1.0, 0.0, 0.0, 0.0]), rho=0.2
        )
        first = session.step()
        session.push_rho(0.8)
        second = session.step()
        assert first.rho == 0.2
        assert second.rho == 0.8

    def test_records_progress(self, synthetic_library):
        track = long_straight()
        session = SimulationSession(
            synthetic_library, track, centered_start(track), rho=0.0, t_max=1.0
        )
        session.step()
        session.step()
        times = [r.time for r in session.trace.records]
        assert times == pytest.approx([0.0, 0.05])


@pytest.mark.slow
class TestClosedLoop:
    def test_straight_sanity(self, desk_library):
        track = straight_track()
        trace = run_closed_loop(desk_library, track, policy=0.25, t_max=20.0)
        s = trace.summary
        assert s.completed
        assert s.lap_time == pytest.approx(5.0, abs=0.05)
        assert s.integrated_distance <= 1e-6

    def test_csv_export(self, desk_library):
        track = straight_track()
        trace = run_closed_loop(desk_library, track, policy=0.5, t_max=20.0)
        text = trace.to_csv()
        lines = text.strip().splitlines()
        assert lines[0].startswith("time,p1,p2,theta")
        assert lines[-1].startswith("# lap_time=")
        assert len(lines) == len(trace.records) + 2

    def test_schedule_policy(self, desk_library):
        track = straight_track()
        trace = run_closed_loop(
            desk_library, track, policy=[(0.0, 0.2), (2.0, 0.9)], t_max=20.0
        )
        rhos = {round(r.time, 2): r.rho for r in trace.records}
        assert rhos[0.0] == 0.2
        assert rhos[2.5] == 0.9

    def test_heuristic_policy_bounds(self, desk_library):
        from emompc.tracks import stadium_track

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            trace = run_closed_loop(desk_library, stadium_track(), policy="heuristic", t_max=40.0)
        rhos = [r.rho for r in trace.records]
        assert all(0.25 - 1e-12 <= r <= 0.90 + 1e-12 for r in rhos)
        steps = np.diff([round(r * 100) for r in rhos])
        assert set(np.abs(steps)) <= {0, 5}
        assert trace.summary.completed
