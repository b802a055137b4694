"""Kinematics, frames and the fixed-step integrator."""

import math

import numpy as np
import pytest

from surveillance_game.core import (
    EvaderControl,
    GameParams,
    PolarState,
    RealisticState,
    ReducedState,
    WheelControls,
    check_controls,
    from_polar,
    integrate,
    polar_dynamics,
    realistic_dynamics,
    realistic_field,
    reduced_dynamics,
    reduced_field,
    retro_reduced_dynamics,
    to_polar,
    to_realistic,
    to_reduced,
    wheel_rates,
)
from surveillance_game.errors import (
    NonFiniteError,
    PolarSingularityError,
    ValidationError,
)

P = GameParams(1.0, 2.0, 1.0, 7.0)


class TestParams:
    def test_ratios(self):
        assert P.rho_v == 2.0
        assert P.rho_d == pytest.approx(1.0 / 7.0)

    @pytest.mark.parametrize("bad", [
        dict(v_r_max=0.0), dict(v_a_max=-1.0), dict(b=0.0), dict(r_d=-2.0),
    ])
    def test_positive_fields(self, bad):
        kw = dict(v_r_max=1.0, v_a_max=2.0, b=1.0, r_d=7.0)
        kw.update(bad)
        with pytest.raises(ValidationError):
            GameParams(**kw)

    def test_detection_radius_exceeds_body(self):
        with pytest.raises(ValidationError):
            GameParams(1.0, 2.0, 1.0, 0.5)

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            GameParams(math.nan, 2.0, 1.0, 7.0)


class TestControls:
    def test_evader_speed_nonnegative(self):
        with pytest.raises(ValidationError):
            EvaderControl(-0.1, 0.0)

    def test_heading_wrapped(self):
        v = EvaderControl(1.0, -math.pi / 2)
        assert v.v2 == pytest.approx(3 * math.pi / 2)

    def test_bounds_checked(self):
        with pytest.raises(ValidationError):
            check_controls(WheelControls(1.5, 0.0), EvaderControl(1.0, 0.0), P)
        with pytest.raises(ValidationError):
            check_controls(WheelControls(1.0, 1.0), EvaderControl(2.5, 0.0), P)

    def test_wheel_rates(self):
        assert wheel_rates(WheelControls(1.0, 1.0), P) == (1.0, 0.0)
        U, w = wheel_rates(WheelControls(1.0, -1.0), P)
        assert U == 0.0 and w == -1.0

    def test_turn_rate_identity_at_saturation(self):
        # bang-bang wheels: |turn rate| = |v_r_max - |U|| / b
        for u1 in (-1.0, 1.0):
            for u2 in (-1.0, 1.0):
                U, w = wheel_rates(WheelControls(u1, u2), P)
                assert abs(w) == abs(P.v_r_max - abs(U)) / P.b


class TestFrames:
    def test_reduced_roundtrip(self):
        rs = RealisticState(0.3, -1.2, 0.8, 2.0, 1.5)
        red = to_reduced(rs)
        back = to_realistic(red, rs.x_r, rs.y_r, rs.theta_r)
        assert back.x_a == pytest.approx(rs.x_a, abs=1e-12)
        assert back.y_a == pytest.approx(rs.y_a, abs=1e-12)

    def test_heading_aligned_case(self):
        # robot at origin facing +y (world angle pi/2): reduced = world offset
        rs = RealisticState(0.0, 0.0, math.pi / 2, 0.5, 2.0)
        red = to_reduced(rs)
        assert red.x == pytest.approx(0.5, abs=1e-12)
        assert red.y == pytest.approx(2.0, abs=1e-12)

    def test_theta_normalized(self):
        assert RealisticState(0, 0, -1.0, 0, 0).theta_r == pytest.approx(2 * math.pi - 1.0)

    def test_polar_roundtrip(self):
        for x, y in [(0.3, 2.0), (-1.0, 0.5), (2.0, -3.0), (0.0, 1.0)]:
            ps = to_polar(ReducedState(x, y))
            back = from_polar(ps)
            assert back.x == pytest.approx(x, rel=1e-12, abs=1e-12)
            assert back.y == pytest.approx(y, rel=1e-12, abs=1e-12)

    def test_polar_angle_clockwise_from_heading(self):
        assert to_polar(ReducedState(1.0, 0.0)).phi == pytest.approx(math.pi / 2)
        assert to_polar(ReducedState(0.0, 1.0)).phi == pytest.approx(0.0)


class TestDynamics:
    def test_straight_pursuit(self):
        # both wheels forward: pure translation along the heading
        d = reduced_dynamics(ReducedState(0.0, 3.0), WheelControls(1.0, 1.0),
                             EvaderControl(2.0, 0.0), P)
        assert d == pytest.approx((0.0, 1.0))

    def test_evader_direction_convention(self):
        # idle robot: the reduced velocity is v1*(sin v2, cos v2)
        for v2 in (0.0, 0.7, 2.0, 4.5):
            d = reduced_dynamics(ReducedState(0.5, 0.5), WheelControls(0.0, 0.0),
                                 EvaderControl(2.0, v2), P)
            assert d[0] == pytest.approx(2.0 * math.sin(v2), abs=1e-15)
            assert d[1] == pytest.approx(2.0 * math.cos(v2), abs=1e-15)

    def test_spin_advects_state(self):
        # u=(1,-1): w=-1, the frame spins and the state is advected
        d = reduced_dynamics(ReducedState(1.0, 2.0), WheelControls(1.0, -1.0),
                             EvaderControl(0.0, 0.0), P)
        assert d == pytest.approx((-2.0, 1.0))

    def test_retro_is_negated_forward(self):
        u, v = WheelControls(0.8, -0.3), EvaderControl(1.7, 1.1)
        s = ReducedState(0.6, -1.9)
        f = reduced_dynamics(s, u, v, P)
        r = retro_reduced_dynamics(s, u, v, P)
        assert r[0] == -f[0] and r[1] == -f[1]

    def test_polar_chart_consistent(self):
        # map (dx, dy) through the chart jacobian and compare
        rng = np.random.default_rng(7)
        for _ in range(50):
            x, y = rng.uniform(-5, 5, 2)
            r = math.hypot(x, y)
            if r < 1e-3:
                continue
            u = WheelControls(*rng.uniform(-1, 1, 2))
            v = EvaderControl(rng.uniform(0, 2), rng.uniform(0, 2 * math.pi))
            dx, dy = reduced_dynamics(ReducedState(x, y), u, v, P)
            dr, dphi = polar_dynamics(to_polar(ReducedState(x, y)), u, v, P)
            assert dr == pytest.approx((x * dx + y * dy) / r, abs=1e-9)
            assert dphi == pytest.approx((dx * y - dy * x) / r**2, abs=1e-9)

    def test_polar_singularity(self):
        with pytest.raises(PolarSingularityError):
            polar_dynamics(PolarState(1e-12, 0.0), WheelControls(0, 0),
                           EvaderControl(0, 0), P)

    def test_realistic_matches_reduced_over_horizon(self):
        # simulate both charts for 10 s and compare through the frame map
        u = WheelControls(1.0, 0.4)
        v = EvaderControl(2.0, 0.9)
        rs0 = RealisticState(0.2, -0.5, 1.1, 1.4, 1.9)
        red0 = to_reduced(rs0)
        _, world = integrate(realistic_field, (rs0.x_r, rs0.y_r, rs0.theta_r,
                                               rs0.x_a, rs0.y_a),
                             u, v, 10.0, P, dt=1e-3)
        _, rel = integrate(reduced_field, (red0.x, red0.y), u, v, 10.0, P, dt=1e-3)
        worst = 0.0
        for wrow, rrow in zip(world[::100], rel[::100]):
            mapped = to_reduced(RealisticState(*wrow))
            worst = max(worst, abs(mapped.x - rrow[0]), abs(mapped.y - rrow[1]))
        assert worst < 1e-6


class TestIntegrate:
    def test_straight_flight_exact(self):
        # constant velocity: the integrator must be exact to rounding
        times, states = integrate(reduced_field, (0.0, 1.0), WheelControls(0, 0),
                                  EvaderControl(2.0, 0.5), 3.0, P, dt=0.01)
        assert times[-1] == pytest.approx(3.0, abs=1e-12)
        assert states[-1][0] == pytest.approx(6.0 * math.sin(0.5), abs=1e-10)
        assert states[-1][1] == pytest.approx(1.0 + 6.0 * math.cos(0.5), abs=1e-10)

    def test_final_step_lands_on_duration(self):
        times, _ = integrate(reduced_field, (0.0, 2.0), WheelControls(1, 1),
                             EvaderControl(0, 0), 0.123, P, dt=0.02)
        assert times[-1] == pytest.approx(0.123, abs=1e-12)

    def test_rotation_accuracy(self):
        # spin in place: the state traces a circle; fourth order in dt
        duration = math.pi
        _, states = integrate(reduced_field, (1.0, 0.0), WheelControls(-1, 1),
                              EvaderControl(0, 0), duration, P, dt=1e-3)
        # w=+1 rotates the state clockwise by `duration`
        assert states[-1][0] == pytest.approx(-1.0, abs=1e-10)
        assert states[-1][1] == pytest.approx(0.0, abs=1e-10)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValidationError):
            integrate(reduced_field, (0, 1), WheelControls(0, 0),
                      EvaderControl(0, 0), -1.0, P)
        with pytest.raises(ValidationError):
            integrate(reduced_field, (0, 1), WheelControls(0, 0),
                      EvaderControl(0, 0), 1.0, P, dt=0.0)
        with pytest.raises(NonFiniteError):
            integrate(reduced_field, (math.inf, 1), WheelControls(0, 0),
                      EvaderControl(0, 0), 1.0, P)

    def test_world_frame_turn(self):
        # one wheel only: arc of curvature 1/(2b) around the slow wheel
        d = realistic_dynamics(RealisticState(0, 0, 0, 5, 5),
                               WheelControls(0.0, 1.0), EvaderControl(0, 0), P)
        assert d[0] == pytest.approx(0.5)   # U cos(theta)
        assert d[2] == pytest.approx(0.5)   # w = (u2-u1)/(2b)
