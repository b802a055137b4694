"""Closed-loop simulation in world coordinates, driven by the partition.

Each control period the current relative state is looked up in the partition,
both players' optimal controls are read off, mapped to the world frame, and
held for one step of the realistic dynamics.  The reduced column of the trace
is recomputed from the integrated world poses every step, so the frame
transform stays exact along the whole run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (
    EvaderControl,
    GameParams,
    RealisticState,
    ReducedState,
    WheelControls,
    integrate,
    realistic_field,
    to_reduced,
)
from .errors import ConvergenceError, SnapshotRangeError, ValidationError
from .partition import (
    Partition,
    REGION_CRITICAL_POINT,
    REGION_DS,
    REGION_FS,
    REGION_TERMINAL,
    REGION_TS,
    REGION_US,
    locate,
)

TWO_PI = 2.0 * math.pi

EVENT_CONTROL_SWITCH = "CONTROL_SWITCH"
EVENT_SURFACE_ENTER = "SURFACE_ENTER"
EVENT_SURFACE_LEAVE = "SURFACE_LEAVE"
EVENT_ESCAPE = "ESCAPE"

_SURFACE_REGIONS = {REGION_US, REGION_FS, REGION_DS, REGION_TS,
                    REGION_CRITICAL_POINT, REGION_TERMINAL}


class TraceRow(NamedTuple):
    t: float
    realistic: RealisticState
    reduced: ReducedState
    pursuer: WheelControls
    evader: EvaderControl
    region: str


class GameEvent(NamedTuple):
    t: float
    kind: str
    detail: str


@dataclass
class SimulationRun:
    params: GameParams
    initial: RealisticState
    dt: float
    trace: list[TraceRow]
    events: list[GameEvent]
    escape_time: float
    escaped: bool

    @property
    def regions(self) -> list[str]:
        """Region labels in order of first appearance along the run."""
        seen = []
        for row in self.trace:
            if not seen or seen[-1] != row.region:
                seen.append(row.region)
        return seen


def _world_evader(v: EvaderControl, theta_r: float) -> float:
    """World heading of the evader for a reduced-frame heading v2."""
    return (theta_r - v.v2) % TWO_PI


def simulate_game(init: RealisticState, part: Partition, dt: float | None = None,
                  max_time: float | None = None,
                  evader_heading_offset: float = 0.0) -> SimulationRun:
    """Run the game forward under partition feedback until escape.

    Controls are re-evaluated every dt and held (zero-order hold).  The run
    terminates when the relative distance reaches the detection radius; the
    crossing instant is located by linear interpolation inside the final
    step and the last trace row is integrated exactly to it.

    evader_heading_offset perturbs the evader away from its optimal heading
    by a constant angle; the escape time can only grow, which the test suite
    uses to probe the saddle property.
    """
    p = part.params
    if dt is None:
        dt = p.default_dt()
    if dt <= 0.0:
        raise ValidationError(f"dt must be positive, got {dt}")
    if max_time is None:
        max_time = 3.0 * p.r_d / (p.v_a_max - p.v_r_max) + p.r_d / p.v_a_max
    state = init
    reduced = to_reduced(state)
    t = 0.0
    trace: list[TraceRow] = []
    events: list[GameEvent] = []
    prev_wheels: tuple[float, float] | None = None
    prev_surface: str | None = None
    escape_time = math.inf
    escaped = False

    while t <= max_time:
        res = locate(reduced, part)
        u = res.pursuer
        v = res.evader
        if evader_heading_offset != 0.0:
            v = EvaderControl(v.v1, (v.v2 + evader_heading_offset) % TWO_PI)
        trace.append(TraceRow(t, state, reduced, u, v, res.region))

        wheels = (u.u1, u.u2)
        if prev_wheels is not None and (
            _sign(wheels[0]) != _sign(prev_wheels[0])
            or _sign(wheels[1]) != _sign(prev_wheels[1])
        ):
            events.append(GameEvent(t, EVENT_CONTROL_SWITCH,
                                    f"{prev_wheels} -> {wheels}"))
        prev_wheels = wheels
        surface = res.region if res.region in _SURFACE_REGIONS else None
        if surface != prev_surface:
            if prev_surface is not None:
                events.append(GameEvent(t, EVENT_SURFACE_LEAVE, prev_surface))
            if surface is not None:
                events.append(GameEvent(t, EVENT_SURFACE_ENTER, surface))
        prev_surface = surface

        if res.region == REGION_TERMINAL:
            escape_time = t
            escaped = True
            break

        _, states = integrate(realistic_field, _arr(state), u, v, dt, p, dt=dt)
        nxt = RealisticState(*states[-1])
        nxt_reduced = to_reduced(nxt)
        r_prev = math.hypot(reduced.x, reduced.y)
        r_next = math.hypot(nxt_reduced.x, nxt_reduced.y)
        if r_next >= p.r_d:
            frac = (p.r_d - r_prev) / max(r_next - r_prev, 1e-300)
            frac = min(max(frac, 0.0), 1.0)
            dt_esc = frac * dt
            if dt_esc > 0.0:
                _, states = integrate(realistic_field, _arr(state), u, v, dt_esc, p, dt=dt_esc)
                state = RealisticState(*states[-1])
            reduced = to_reduced(state)
            t += dt_esc
            trace.append(TraceRow(t, state, reduced, u, v, REGION_TERMINAL))
            escape_time = t
            escaped = True
            break
        state, reduced = nxt, nxt_reduced
        t += dt

    if not escaped:
        raise ConvergenceError(
            f"no escape within {max_time} s; the feedback loop is stuck"
        )
    events.append(GameEvent(escape_time, EVENT_ESCAPE, ""))
    return SimulationRun(
        params=p, initial=init, dt=dt, trace=trace, events=events,
        escape_time=escape_time, escaped=escaped,
    )


def _sign(x: float) -> int:
    return (x > 0.0) - (x < 0.0)


def _arr(rs: RealisticState) -> tuple:
    return (rs.x_r, rs.y_r, rs.theta_r, rs.x_a, rs.y_a)


# ---------------------------------------------------------------------------
# scenario presets
# ---------------------------------------------------------------------------


def _preset(x: float, y: float) -> RealisticState:
    # robot at the origin heading +y; reduced and world offsets then coincide
    return RealisticState(0.0, 0.0, math.pi / 2.0, x, y)


SCENARIOS: dict[str, dict] = {
    "us-escape": {
        "init": _preset(0.01, 1.0),
        "description": ("evader just ahead of the robot, slightly off axis: "
                        "spiral onto the axis segment, straight pursuit, fan "
                        "departure at the confluence, straight flight"),
        "snapshot_times": (0.0, 1.0, 3.0, 5.5),
        "expected_escape": 5.5,
        "expected_regions": ("US_TRIBUTARY", "US", "CRITICAL_POINT", "PRIMARY"),
    },
    "fs-escape": {
        "init": _preset(1.0, 0.01),
        "description": ("evader beside the robot, slightly forward: spiral "
                        "onto the lateral segment, constrained slide, switch-"
                        "locus tributary, straight flight"),
        "snapshot_times": (0.0, 1.0, 2.0, 4.17),
        "expected_escape": 4.17,
        "expected_regions": ("FS_TRIBUTARY", "FS", "TS_TRIBUTARY", "PRIMARY"),
    },
}


def run_scenario(name: str, part: Partition, dt: float | None = None) -> SimulationRun:
    if name not in SCENARIOS:
        raise ValidationError(
            f"unknown scenario {name!r}; choices: {sorted(SCENARIOS)}"
        )
    return simulate_game(SCENARIOS[name]["init"], part, dt=dt)


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------


def export_snapshots(run: SimulationRun, times) -> list[dict]:
    """Per-time records of both players' world poses and the detection circle.

    Positions interpolate linearly between trace rows; the robot heading
    interpolates on the unwrapped angle.
    """
    rows = run.trace
    ts = np.array([row.t for row in rows])
    out = []
    for t in times:
        t = float(t)
        if not -1e-12 <= t <= run.escape_time + 1e-9:
            raise SnapshotRangeError(
                f"snapshot time {t} outside [0, {run.escape_time}]"
            )
        t = min(max(t, 0.0), float(ts[-1]))
        j = int(np.searchsorted(ts, t, side="right") - 1)
        j = min(max(j, 0), len(rows) - 2) if len(rows) > 1 else 0
        a, b = rows[j], rows[min(j + 1, len(rows) - 1)]
        if b.t > a.t:
            f = (t - a.t) / (b.t - a.t)
        else:
            f = 0.0
        dth = (b.realistic.theta_r - a.realistic.theta_r + math.pi) % TWO_PI - math.pi
        out.append({
            "time": t,
            "robot": (
                a.realistic.x_r + f * (b.realistic.x_r - a.realistic.x_r),
                a.realistic.y_r + f * (b.realistic.y_r - a.realistic.y_r),
                (a.realistic.theta_r + f * dth) % TWO_PI,
            ),
            "evader": (
                a.realistic.x_a + f * (b.realistic.x_a - a.realistic.x_a),
                a.realistic.y_a + f * (b.realistic.y_a - a.realistic.y_a),
            ),
            "circle_center": (
                a.realistic.x_r + f * (b.realistic.x_r - a.realistic.x_r),
                a.realistic.y_r + f * (b.realistic.y_r - a.realistic.y_r),
            ),
            "circle_radius": run.params.r_d,
            "body_radius": run.params.b,
            "region": a.region,
        })
    return out
