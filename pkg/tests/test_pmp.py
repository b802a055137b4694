"""Hamiltonian machinery: optimal controls, costate flow, terminal data."""

import math

import numpy as np
import pytest

from surveillance_game.core import EvaderControl, GameParams, ReducedState, WheelControls
from surveillance_game.errors import (
    DegenerateCostateError,
    SingularControlError,
    ValidationError,
)
from surveillance_game.pmp import (
    Costate,
    costate_retro_flow,
    hamiltonian,
    optimal_evader_control,
    optimal_pursuer_controls,
    switching_terms,
    terminal_state,
    usable_part_check,
)
from surveillance_game.surfaces import gamma_primary

P = GameParams(1.0, 2.0, 1.0, 7.0)


class TestHamiltonian:
    def test_head_on_configuration_nulls_it(self):
        # evader dead ahead fleeing along +y, robot driving straight after it
        H = hamiltonian(ReducedState(0.0, 3.0), Costate(0.0, -1.0),
                        WheelControls(1.0, 1.0), EvaderControl(2.0, 0.0), P)
        assert H == pytest.approx(0.0, abs=1e-15)

    def test_only_cost_term_survives(self):
        H = hamiltonian(ReducedState(1.0, 1.0), Costate(0.0, 0.0),
                        WheelControls(0.0, 0.0), EvaderControl(0.0, 0.0), P)
        assert H == 1.0

    @pytest.mark.parametrize("s", [0.0, 0.3, 0.9, 1.4])
    def test_vanishes_on_terminal_circle(self, s):
        # the time normalization fixes the costate magnitude per ray
        state, unit = terminal_state(s, P)
        g = gamma_primary(s, P)
        lam = Costate(g * unit.lambda_x, g * unit.lambda_y)
        u = optimal_pursuer_controls(state, lam, P)
        v = optimal_evader_control(lam, P)
        assert hamiltonian(state, lam, u, v, P) == pytest.approx(0.0, abs=1e-12)

    def test_mirror_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            x, y = rng.uniform(-5, 5, 2)
            lx, ly = rng.uniform(-1, 1, 2)
            u1, u2 = rng.uniform(-1, 1, 2)
            v2 = rng.uniform(0, 2 * math.pi)
            H = hamiltonian(ReducedState(x, y), Costate(lx, ly),
                            WheelControls(u1, u2), EvaderControl(2.0, v2), P)
            Hm = hamiltonian(ReducedState(-x, y), Costate(-lx, ly),
                             WheelControls(u2, u1), EvaderControl(2.0, -v2), P)
            assert Hm == pytest.approx(H, abs=1e-12)


class TestPursuerControls:
    def test_diagonal_terminal_point(self):
        s = ReducedState(7 / math.sqrt(2), 7 / math.sqrt(2))
        u = optimal_pursuer_controls(s, Costate(-math.sqrt(2) / 2, -math.sqrt(2) / 2), P)
        assert (u.u1, u.u2) == (1.0, 1.0)

    def test_aligned_case_drives_straight(self):
        u = optimal_pursuer_controls(ReducedState(0.0, 3.0), Costate(0.0, -1.0), P)
        assert (u.u1, u.u2) == (1.0, 1.0)

    def test_mirror_swaps_wheels(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            x, y = rng.uniform(-5, 5, 2)
            lx, ly = rng.uniform(-1, 1, 2)
            a1, a2 = switching_terms(ReducedState(x, y), Costate(lx, ly), P)
            if min(abs(a1), abs(a2)) < 1e-9:
                continue
            u = optimal_pursuer_controls(ReducedState(x, y), Costate(lx, ly), P)
            m = optimal_pursuer_controls(ReducedState(-x, y), Costate(-lx, ly), P)
            assert (m.u1, m.u2) == (u.u2, u.u1)

    def test_zero_argument_is_singular(self):
        # lateral terminal point: both switching terms vanish
        with pytest.raises(SingularControlError):
            optimal_pursuer_controls(ReducedState(7.0, 0.0), Costate(-1.0, 0.0), P)


class TestEvaderControl:
    def test_flees_ahead(self):
        v = optimal_evader_control(Costate(0.0, -1.0), P)
        assert v.v1 == P.v_a_max
        assert v.v2 == pytest.approx(0.0, abs=1e-15)

    def test_radial_at_termination(self):
        for s in (0.1, 0.8, 2.0):
            v = optimal_evader_control(Costate(-math.sin(s), -math.cos(s)), P)
            assert v.v2 == pytest.approx(s, abs=1e-12)

    def test_lateral(self):
        assert optimal_evader_control(Costate(-1.0, 0.0), P).v2 == pytest.approx(math.pi / 2)

    def test_full_speed_always(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            lx, ly = rng.uniform(-2, 2, 2)
            if math.hypot(lx, ly) < 1e-6:
                continue
            assert optimal_evader_control(Costate(lx, ly), P).v1 == P.v_a_max

    def test_degenerate_costate(self):
        with pytest.raises(DegenerateCostateError):
            optimal_evader_control(Costate(0.0, 0.0), P)


class TestCostateFlow:
    def test_straight_wheels_freeze_costate(self):
        c0 = Costate(-0.3, -0.8)
        for tau in (0.0, 1.7, 9.0):
            c = costate_retro_flow(c0, WheelControls(1.0, 1.0), tau, P)
            assert (c.lambda_x, c.lambda_y) == (c0.lambda_x, c0.lambda_y)

    def test_quarter_turn(self):
        c = costate_retro_flow(Costate(0.0, -1.0), WheelControls(1.0, -1.0),
                               math.pi / 2, P)
        assert c.lambda_x == pytest.approx(-1.0, abs=1e-12)
        assert c.lambda_y == pytest.approx(0.0, abs=1e-12)

    def test_norm_preserved(self):
        c0 = Costate(0.6, -1.1)
        c = costate_retro_flow(c0, WheelControls(-1.0, 1.0), 2.34, P)
        assert c.gamma == pytest.approx(c0.gamma, abs=1e-14)

    def test_matches_adjoint_integration(self):
        # independent check: integrate the retro adjoint system with RK4
        u = WheelControls(0.4, -0.9)
        w = (u.u2 - u.u1) / (2 * P.b)
        lam = np.array([0.5, -0.7])
        dt, tau = 1e-4, 1.3
        for _ in range(int(round(tau / dt))):
            def f(l):
                return np.array([-w * l[1], w * l[0]])
            k1 = f(lam)
            k2 = f(lam + 0.5 * dt * k1)
            k3 = f(lam + 0.5 * dt * k2)
            k4 = f(lam + dt * k3)
            lam = lam + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        c = costate_retro_flow(Costate(0.5, -0.7), u, tau, P)
        assert c.lambda_x == pytest.approx(lam[0], abs=1e-10)
        assert c.lambda_y == pytest.approx(lam[1], abs=1e-10)


class TestTerminalState:
    def test_ahead(self):
        state, lam = terminal_state(0.0, P)
        assert (state.x, state.y) == (0.0, 7.0)
        assert (lam.lambda_x, lam.lambda_y) == (0.0, -1.0)

    def test_side(self):
        state, lam = terminal_state(math.pi / 2, P)
        assert state.x == pytest.approx(7.0)
        assert lam.lambda_x == pytest.approx(-1.0)

    def test_diagonal(self):
        state, lam = terminal_state(math.pi / 4, P)
        assert state.x == pytest.approx(4.949747468305833)
        assert state.y == pytest.approx(4.949747468305833)
        assert lam.lambda_x == pytest.approx(-0.7071067811865476)

    def test_domain(self):
        with pytest.raises(ValidationError):
            terminal_state(-0.1, P)


class TestUsablePart:
    def test_faster_evader_everywhere_usable(self):
        for s in np.linspace(0, 2 * math.pi, 37, endpoint=False):
            up = usable_part_check(float(s), P)
            assert up
            assert up.margin < 0

    def test_terminal_wheels_follow_the_evader(self):
        assert usable_part_check(0.0, P).terminal_controls == WheelControls(1.0, 1.0)
        assert usable_part_check(math.pi, P).terminal_controls == WheelControls(-1.0, -1.0)

    def test_slow_evader_blocked_ahead(self):
        slow = GameParams(1.0, 0.5, 1.0, 7.0)
        assert not usable_part_check(0.0, slow)
