"""Hamiltonian machinery: optimal controls, costate flow, terminal conditions.

The costate (lambda_x, lambda_y) is the gradient of the time-to-escape; its
direction encodes the evader's optimal heading and the two wheel switching
terms.  Along any interval of constant wheel controls the costate rotates
rigidly at the robot's turn rate, so closed forms cover everything here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    EvaderControl,
    GameParams,
    ReducedState,
    WheelControls,
    _xy,
)
from .errors import DegenerateCostateError, SingularControlError, ValidationError

TWO_PI = 2.0 * math.pi

SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class Costate:
    lambda_x: float
    lambda_y: float

    @property
    def gamma(self) -> float:
        return math.hypot(self.lambda_x, self.lambda_y)


def switching_terms(s, c: Costate, p: GameParams) -> tuple[float, float]:
    """Coefficients of u1 and u2 in the Hamiltonian (up to the 1/2 factor).

    u_i* = v_r_max * sgn(A_i); a vanishing A_i means the wheel is singular.
    """
    x, y = _xy(s)
    lx, ly = c.lambda_x, c.lambda_y
    a1 = -y * lx / p.b + x * ly / p.b - ly
    a2 = y * lx / p.b - x * ly / p.b - ly
    return a1, a2


def hamiltonian(s, c: Costate, u: WheelControls, v: EvaderControl, p: GameParams) -> float:
    """Value of the Hamiltonian including the unit time cost."""
    a1, a2 = switching_terms(s, c, p)
    evader = v.v1 * (c.lambda_x * math.sin(v.v2) + c.lambda_y * math.cos(v.v2))
    return 0.5 * u.u1 * a1 + 0.5 * u.u2 * a2 + evader + 1.0


def optimal_pursuer_controls(s, c: Costate, p: GameParams) -> WheelControls:
    """Bang-bang wheels from the switching terms.

    Raises SingularControlError when a term sits within 1e-12 of zero; the
    singular-surface constructors own those cases.
    """
    a1, a2 = switching_terms(s, c, p)
    singular = [name for name, val in (("u1", a1), ("u2", a2)) if abs(val) <= SINGULAR_TOL]
    if singular:
        raise SingularControlError(singular, a1=a1, a2=a2)
    return WheelControls(
        u1=math.copysign(p.v_r_max, a1),
        u2=math.copysign(p.v_r_max, a2),
    )


def optimal_evader_control(c: Costate, p: GameParams) -> EvaderControl:
    """Full speed along the negated costate direction."""
    if c.gamma <= SINGULAR_TOL:
        raise DegenerateCostateError(f"costate magnitude {c.gamma!r} too small")
    v2 = math.atan2(-c.lambda_x, -c.lambda_y) % TWO_PI
    return EvaderControl(v1=p.v_a_max, v2=v2)


def costate_retro_flow(c: Costate, u: WheelControls, tau: float, p: GameParams) -> Costate:
    """Rigid rotation of the costate by ((u2-u1)/(2b)) * tau.

    Equal wheels leave the costate unchanged; the magnitude is preserved
    exactly in all cases.
    """
    angle = (u.u2 - u.u1) / (2.0 * p.b) * tau
    ca, sa = math.cos(angle), math.sin(angle)
    return Costate(
        lambda_x=c.lambda_x * ca - c.lambda_y * sa,
        lambda_y=c.lambda_x * sa + c.lambda_y * ca,
    )


def terminal_state(s: float, p: GameParams) -> tuple[ReducedState, Costate]:
    """Point of the detection circle at angle s with its transversality costate.

    The costate is returned at unit magnitude; arc constructors rescale it so
    the Hamiltonian vanishes along their family (the magnitude carries the
    time normalization, the direction is fixed here).
    """
    if not 0.0 <= s < TWO_PI:
        raise ValidationError(f"terminal angle must lie in [0, 2*pi), got {s!r}")
    return (
        ReducedState(x=p.r_d * math.sin(s), y=p.r_d * math.cos(s)),
        Costate(lambda_x=-math.sin(s), lambda_y=-math.cos(s)),
    )


@dataclass(frozen=True)
class UsablePart:
    """Truthiness reports whether the evader can force the crossing at s."""

    usable: bool
    terminal_controls: WheelControls
    margin: float

    def __bool__(self) -> bool:
        return self.usable


def usable_part_check(s: float, p: GameParams) -> UsablePart:
    """Can the evader cross the detection circle at angle s against any wheels?

    The best the robot can do is drive straight at speed v_r_max, forward when
    the evader sits ahead (cos s > 0), backward when behind.  The crossing is
    forced iff v_r_max |cos s| < v_a_max, which for a faster evader holds at
    every angle.
    """
    margin = -p.v_a_max + p.v_r_max * abs(math.cos(s))
    sign = 1.0 if math.cos(s) >= 0.0 else -1.0
    terminal = WheelControls(u1=sign * p.v_r_max, u2=sign * p.v_r_max)
    return UsablePart(usable=margin < 0.0, terminal_controls=terminal, margin=margin)
