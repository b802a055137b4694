"""Game parameters, state types, coordinate transforms, and kinematics.

Two coordinate pictures are used throughout:

* realistic space: world frame, robot pose (x_r, y_r, theta_r) with theta_r
  counter-clockwise from +x, evader position (x_a, y_a);
* reduced space: robot-body frame, +y along the heading, angles measured
  clockwise from +y.  The state is the evader's relative position (x, y).

All dynamics are first order in the velocities (kinematic model).  Retro-time
fields are the exact negation of the forward ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NonFiniteError,
    PolarSingularityError,
    ValidationError,
)

TWO_PI = 2.0 * math.pi

# ---------------------------------------------------------------------------
# parameters and state types
# ---------------------------------------------------------------------------


def _require_finite(name, value):
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class GameParams:
    """Speeds and radii of the engagement.

    v_r_max  robot wheel speed bound (m/s)
    v_a_max  evader speed bound (m/s)
    b        half wheelbase = body radius (m)
    r_d      detection radius (m), must exceed b
    """

    v_r_max: float
    v_a_max: float
    b: float
    r_d: float

    def __post_init__(self):
        for name in ("v_r_max", "v_a_max", "b", "r_d"):
            value = getattr(self, name)
            _require_finite(name, value)
            if value <= 0.0:
                raise ValidationError(f"{name} must be positive, got {value!r}")
        if self.r_d <= self.b:
            raise ValidationError(
                f"r_d must exceed b, got r_d={self.r_d!r} b={self.b!r}"
            )

    @property
    def rho_v(self) -> float:
        return self.v_a_max / self.v_r_max

    @property
    def rho_d(self) -> float:
        return self.b / self.r_d

    def default_dt(self) -> float:
        return 1e-3 * self.b / self.v_r_max


@dataclass(frozen=True)
class ReducedState:
    x: float
    y: float

    def __post_init__(self):
        _require_finite("x", self.x)
        _require_finite("y", self.y)

    @property
    def r(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class PolarState:
    """Radius and bearing of the evader; phi clockwise from the heading."""

    r: float
    phi: float

    def __post_init__(self):
        _require_finite("r", self.r)
        _require_finite("phi", self.phi)
        if self.r < 0.0:
            raise ValidationError(f"r must be nonnegative, got {self.r!r}")


@dataclass(frozen=True)
class RealisticState:
    """World-frame poses of both players; theta_r stored in [0, 2*pi)."""

    x_r: float
    y_r: float
    theta_r: float
    x_a: float
    y_a: float

    def __post_init__(self):
        for name in ("x_r", "y_r", "theta_r", "x_a", "y_a"):
            _require_finite(name, getattr(self, name))
        object.__setattr__(self, "theta_r", self.theta_r % TWO_PI)


@dataclass(frozen=True)
class WheelControls:
    u1: float
    u2: float

    def __post_init__(self):
        _require_finite("u1", self.u1)
        _require_finite("u2", self.u2)


@dataclass(frozen=True)
class EvaderControl:
    """Speed v1 >= 0 and reduced-frame direction v2, stored in [0, 2*pi)."""

    v1: float
    v2: float

    def __post_init__(self):
        _require_finite("v1", self.v1)
        _require_finite("v2", self.v2)
        if self.v1 < 0.0:
            raise ValidationError(f"v1 must be nonnegative, got {self.v1!r}")
        object.__setattr__(self, "v2", self.v2 % TWO_PI)


def check_controls(u: WheelControls, v: EvaderControl, p: GameParams) -> None:
    """Reject controls outside the admissible boxes."""
    tol = 1e-12
    if abs(u.u1) > p.v_r_max * (1 + tol) or abs(u.u2) > p.v_r_max * (1 + tol):
        raise ValidationError(
            f"wheel speed out of bounds: ({u.u1}, {u.u2}) with v_r_max={p.v_r_max}"
        )
    if v.v1 > p.v_a_max * (1 + tol):
        raise ValidationError(f"evader speed {v.v1} exceeds v_a_max={p.v_a_max}")


# ---------------------------------------------------------------------------
# coordinate transforms
# ---------------------------------------------------------------------------


def _xy(s) -> tuple[float, float]:
    # accept the dataclass or any (x, y) sequence
    try:
        return float(s.x), float(s.y)
    except AttributeError:
        x, y = s
        return float(x), float(y)


def to_reduced(rs: RealisticState) -> ReducedState:
    """Evader position in the robot body frame."""
    dx = rs.x_a - rs.x_r
    dy = rs.y_a - rs.y_r
    st, ct = math.sin(rs.theta_r), math.cos(rs.theta_r)
    return ReducedState(x=dx * st - dy * ct, y=dx * ct + dy * st)


def to_realistic(s: ReducedState, x_r: float, y_r: float, theta_r: float) -> RealisticState:
    """Place the evader in the world given a robot pose; inverse of to_reduced."""
    x, y = _xy(s)
    st, ct = math.sin(theta_r), math.cos(theta_r)
    return RealisticState(
        x_r=x_r,
        y_r=y_r,
        theta_r=theta_r,
        x_a=x_r + x * st + y * ct,
        y_a=y_r - x * ct + y * st,
    )


def to_polar(s: ReducedState) -> PolarState:
    x, y = _xy(s)
    return PolarState(r=math.hypot(x, y), phi=math.atan2(x, y))


def from_polar(p: PolarState) -> ReducedState:
    return ReducedState(x=p.r * math.sin(p.phi), y=p.r * math.cos(p.phi))


# ---------------------------------------------------------------------------
# vector fields
# ---------------------------------------------------------------------------


def wheel_rates(u: WheelControls, p: GameParams) -> tuple[float, float]:
    """Translation speed U and turn rate w induced by the wheels."""
    return (u.u1 + u.u2) / 2.0, (u.u2 - u.u1) / (2.0 * p.b)


def reduced_dynamics(s, u: WheelControls, v: EvaderControl, p: GameParams):
    """Forward relative kinematics in the body frame."""
    check_controls(u, v, p)
    x, y = _xy(s)
    U, w = wheel_rates(u, p)
    return (
        w * y + v.v1 * math.sin(v.v2),
        -w * x - U + v.v1 * math.cos(v.v2),
    )


def retro_reduced_dynamics(s, u: WheelControls, v: EvaderControl, p: GameParams):
    """Retro-time relative kinematics: componentwise negation of forward."""
    dx, dy = reduced_dynamics(s, u, v, p)
    return (-dx, -dy)


POLAR_SINGULAR_RADIUS = 1e-9


def polar_dynamics(ps: PolarState, u: WheelControls, v: EvaderControl, p: GameParams):
    """Forward kinematics of (r, phi); undefined in the disc r < 1e-9."""
    check_controls(u, v, p)
    if ps.r < POLAR_SINGULAR_RADIUS:
        raise PolarSingularityError(f"polar chart singular at r={ps.r!r}")
    U, w = wheel_rates(u, p)
    dr = v.v1 * math.cos(v.v2 - ps.phi) - U * math.cos(ps.phi)
    dphi = w + (v.v1 * math.sin(v.v2 - ps.phi) + U * math.sin(ps.phi)) / ps.r
    return (dr, dphi)


def realistic_dynamics(rs, u: WheelControls, v: EvaderControl, p: GameParams):
    """World-frame kinematics of both players.

    The evader input v2 lives in the reduced frame; its world heading is
    psi_a = theta_r - v2 (clockwise reduced angles against a counter-clockwise
    world angle).
    """
    check_controls(u, v, p)
    try:
        theta = float(rs.theta_r)
    except AttributeError:
        theta = float(rs[2])
    U, w = wheel_rates(u, p)
    psi_a = theta - v.v2
    return (
        U * math.cos(theta),
        U * math.sin(theta),
        w,
        v.v1 * math.cos(psi_a),
        v.v1 * math.sin(psi_a),
    )


# ---------------------------------------------------------------------------
# fixed-step integration
# ---------------------------------------------------------------------------


def integrate(field, state, u: WheelControls, v: EvaderControl, duration: float,
              p: GameParams, dt: float | None = None):
    """Classical fourth-order integration with fixed step and constant controls.

    `field(state_array, u, v, p)` must return the time derivative as a
    sequence matching the state layout.  Returns (times, states) with the
    initial point included and the last step shortened to land on `duration`
    exactly.  Aborts on non-finite values.
    """
    if dt is None:
        dt = p.default_dt()
    if dt <= 0.0:
        raise ValidationError(f"dt must be positive, got {dt!r}")
    if duration < 0.0:
        raise ValidationError(f"duration must be nonnegative, got {duration!r}")

    y0 = np.asarray(state, dtype=float).ravel()
    if not np.all(np.isfinite(y0)):
        raise NonFiniteError("initial state is not finite")

    def f(arr):
        return np.asarray(field(arr, u, v, p), dtype=float)

    n_full = int(duration / dt)
    remainder = duration - n_full * dt
    steps = [dt] * n_full
    if remainder > 1e-15 * max(1.0, duration):
        steps.append(remainder)

    times = [0.0]
    states = [y0.copy()]
    t, ycur = 0.0, y0
    for h in steps:
        k1 = f(ycur)
        k2 = f(ycur + 0.5 * h * k1)
        k3 = f(ycur + 0.5 * h * k2)
        k4 = f(ycur + h * k3)
        ycur = ycur + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(ycur)):
            raise NonFiniteError(f"integration produced non-finite state at t={t + h}")
        t += h
        times.append(t)
        states.append(ycur.copy())
    return np.asarray(times), np.asarray(states)


# array-friendly wrappers so integrate() can drive the typed fields ----------


def reduced_field(arr, u, v, p):
    return reduced_dynamics((arr[0], arr[1]), u, v, p)


def retro_reduced_field(arr, u, v, p):
    return retro_reduced_dynamics((arr[0], arr[1]), u, v, p)


def realistic_field(arr, u, v, p):
    U, w = wheel_rates(u, p)
    theta = arr[2]
    psi_a = theta - v.v2
    return (
        U * math.cos(theta),
        U * math.sin(theta),
        w,
        v.v1 * math.cos(psi_a),
        v.v1 * math.sin(psi_a),
    )
