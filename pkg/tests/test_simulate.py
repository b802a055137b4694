"""Closed-loop play under partition feedback."""

import math

import pytest

from surveillance_game.core import GameParams, RealisticState, to_reduced
from surveillance_game.errors import (
    ConvergenceError,
    SnapshotRangeError,
    ValidationError,
)
from surveillance_game.partition import value
from surveillance_game.simulate import (
    SCENARIOS,
    export_snapshots,
    run_scenario,
    simulate_game,
)

P = GameParams(1.0, 2.0, 1.0, 7.0)


def subsequence(needle, haystack):
    it = iter(haystack)
    return all(any(x == h for h in it) for x in needle)


class TestScenarios:
    def test_names(self):
        assert set(SCENARIOS) == {"us-escape", "fs-escape"}

    def test_unknown_name(self, ref_partition):
        with pytest.raises(ValidationError):
            run_scenario("nope", ref_partition)

    def test_axis_escape(self, ref_partition):
        run = run_scenario("us-escape", ref_partition)
        assert run.escaped
        assert run.escape_time == pytest.approx(5.704374797656631, abs=1e-9)
        assert subsequence(SCENARIOS["us-escape"]["expected_regions"], run.regions)

    def test_lateral_escape(self, ref_partition):
        run = run_scenario("fs-escape", ref_partition)
        assert run.escaped
        assert run.escape_time == pytest.approx(4.159416926126384, abs=1e-9)
        assert subsequence(SCENARIOS["fs-escape"]["expected_regions"], run.regions)

    def test_escape_times_close_to_analytic_value(self, ref_partition):
        # feedback quantization at dt accounts for the residual gap
        for name in SCENARIOS:
            run = run_scenario(name, ref_partition)
            v = value(to_reduced(run.initial), ref_partition)
            assert run.escape_time == pytest.approx(v, rel=0.01)


class TestRunMechanics:
    def test_deterministic(self, ref_partition):
        a = run_scenario("us-escape", ref_partition)
        b = run_scenario("us-escape", ref_partition)
        assert a.escape_time == b.escape_time
        assert len(a.trace) == len(b.trace)
        assert all(ra == rb for ra, rb in zip(a.trace, b.trace))

    def test_trace_invariants(self, ref_partition):
        run = run_scenario("fs-escape", ref_partition)
        last_t = -1.0
        for row in run.trace:
            assert row.t > last_t
            last_t = row.t
            mapped = to_reduced(row.realistic)
            assert abs(mapped.x - row.reduced.x) < 1e-9
            assert abs(mapped.y - row.reduced.y) < 1e-9
            assert row.reduced.r <= P.r_d * (1 + 1e-9)
            assert row.evader.v1 == pytest.approx(P.v_a_max)
            assert abs(row.pursuer.u1) <= P.v_r_max * (1 + 1e-12)
            assert abs(row.pursuer.u2) <= P.v_r_max * (1 + 1e-12)

    def test_escape_event_is_last(self, ref_partition):
        run = run_scenario("us-escape", ref_partition)
        assert run.events[-1].kind == "ESCAPE"
        assert run.events[-1].t == pytest.approx(run.escape_time)

    def test_straight_flight_escape_time(self, ref_partition):
        # ahead of the confluence both players drive straight: exact closure
        init = RealisticState(0.0, 0.0, math.pi / 2, 0.0, 5.0)
        run = simulate_game(init, ref_partition)
        assert run.escape_time == pytest.approx(2.0, abs=1e-3)

    def test_perturbed_evader_never_escapes_sooner(self, ref_partition):
        init = RealisticState(0.0, 0.0, math.pi / 2, 0.0, 5.0)
        base = simulate_game(init, ref_partition)
        for off in (-0.3, -0.1, 0.1, 0.3):
            run = simulate_game(init, ref_partition, evader_heading_offset=off)
            assert run.escape_time >= base.escape_time - 1e-2

    def test_time_cap_flags_a_stuck_loop(self, ref_partition):
        init = RealisticState(0.0, 0.0, math.pi / 2, 0.0, 5.0)
        with pytest.raises(ConvergenceError):
            simulate_game(init, ref_partition, max_time=0.5)

    def test_dt_validation(self, ref_partition):
        init = RealisticState(0.0, 0.0, math.pi / 2, 0.0, 5.0)
        with pytest.raises(ValidationError):
            simulate_game(init, ref_partition, dt=0.0)


class TestSnapshots:
    def test_interpolated_poses(self, ref_partition):
        run = run_scenario("us-escape", ref_partition)
        snaps = export_snapshots(run, SCENARIOS["us-escape"]["snapshot_times"])
        assert len(snaps) == 4
        assert snaps[0]["time"] == 0.0
        for snap in snaps:
            assert set(snap) >= {"time", "robot", "evader", "circle_radius"}

    def test_rejects_times_after_escape(self, ref_partition):
        run = run_scenario("us-escape", ref_partition)
        with pytest.raises(SnapshotRangeError):
            export_snapshots(run, [run.escape_time + 1.0])
        with pytest.raises(SnapshotRangeError):
            export_snapshots(run, [-0.5])
