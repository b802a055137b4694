"""Closed-form optimal arc families and the singular loci between them.

Every optimal arc in this game is one of three motion primitives in
retro-time tau (time counted backward from the escape):

* straight: both wheels equal, evader heading fixed; primary arcs and the
  axis segment fed by the critical point.
* rotation: wheels opposite, robot turns in place, costate (hence the evader
  heading) rotates rigidly at the same rate; all tributary families.
* focal: robot turns in place while the evader pins the arc to y=0; the
  abscissa follows a sinusoid in tau.

Arcs are constructed analytically in the first quadrant (x >= 0, y >= 0,
terminal angles s in [0, pi/2]) and mapped to the other three by the two
mirror symmetries.  Quadrants are labeled clockwise from the heading:
I (x>=0, y>=0), II (x>=0, y<=0), III (x<=0, y<=0), IV (x<=0, y>=0).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import (
    EvaderControl,
    GameParams,
    ReducedState,
    WheelControls,
)
from .errors import ArcDomainError, RegimeError
from .pmp import Costate

TWO_PI = 2.0 * math.pi


class ArcFamily(Enum):
    PRIMARY = "PRIMARY"
    TS_TRIBUTARY = "TS_TRIBUTARY"
    US = "US"
    US_TRIBUTARY = "US_TRIBUTARY"
    FS = "FS"
    FS_TRIBUTARY = "FS_TRIBUTARY"


# truncation labels
END_SWITCH = "switch"        # reached the wheel-switch locus (primary only)
END_CRITICAL = "critical"    # absorbed by the critical point
END_BODY = "body"            # reached the robot body r=b
END_AXIS_X = "x=0"           # crossed the vertical axis
END_AXIS_Y = "y=0"           # crossed the horizontal axis
END_TANGENT = "fs_tangency"  # met y=0 tangentially (focal entry)
END_TERMINAL = "terminal"    # still on the detection circle (tau=0 arcs)
END_HORIZON = "horizon"      # safety cap; flags a construction problem


# ---------------------------------------------------------------------------
# sample containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArcSample:
    tau: float
    state: ReducedState
    costate: Costate
    pursuer: WheelControls
    evader: EvaderControl


@dataclass
class TrajectoryArc:
    """One sampled optimal arc plus its exact generator.

    tau holds the total retro-time (= time-to-escape) at each sample and is
    strictly increasing.  xy, lam, v2 are sample arrays; wheels are constant
    along an arc.  kind/anchor data reproduce the closed form exactly, which
    locate() uses for sub-sample refinement.
    """

    family: ArcFamily
    family_param: float | None
    quadrant: str
    tau: np.ndarray
    xy: np.ndarray
    lam: np.ndarray
    v2: np.ndarray
    wheels: tuple[float, float]
    v1: float
    truncation: str
    kind: str              # 'straight' | 'rotation' | 'focal'
    x0: float
    y0: float
    a0: float              # evader heading at the anchor
    tau0: float            # total retro-time at the anchor
    w: float               # robot turn rate (0 for straight arcs)
    sign: float            # straight arcs: +1 forward drive, -1 backward
    gamma: float           # costate magnitude (focal arcs: at the anchor)
    parent: tuple | None = None

    @property
    def retro_span(self) -> tuple[float, float]:
        return float(self.tau[0]), float(self.tau[-1])

    # -- closed-form evaluation -------------------------------------------

    def point_at(self, tau):
        """State at total retro-time tau (scalar or array)."""
        t = np.asarray(tau, dtype=float) - self.tau0
        if self.kind == "straight":
            va = self._va
            dx = -va * math.sin(self.a0)
            dy = -va * math.cos(self.a0) + self.sign * self._vr
            return self.x0 + dx * t, self.y0 + dy * t
        if self.kind == "rotation":
            va = self._va
            wt = self.w * t
            al = self.a0 - wt
            x = -self.y0 * np.sin(wt) + self.x0 * np.cos(wt) - t * va * np.sin(al)
            y = self.x0 * np.sin(wt) + self.y0 * np.cos(wt) - t * va * np.cos(al)
            return x, y
        # focal: x = rho_v*b*sin(theta_0 + w*t), pinned to y=0
        rvb = self._rho_v_b
        theta = math.asin(max(-1.0, min(1.0, self.x0 / rvb))) + self.w * t
        return rvb * np.sin(theta), np.zeros_like(np.asarray(t, dtype=float))

    def heading_at(self, tau):
        t = np.asarray(tau, dtype=float) - self.tau0
        if self.kind == "focal":
            sx = self._focal_sign
            x, _ = self.point_at(tau)
            return np.arccos(np.clip(-x * sx / self._rho_v_b, -1.0, 1.0)) * sx
        return self.a0 - self.w * t

    def costate_at(self, tau):
        al = self.heading_at(tau)
        if self.kind == "focal":
            g = 1.0 / (self._va * np.sin(al) ** 2)
        else:
            g = self.gamma
        return -g * np.sin(al), -g * np.cos(al)

    # params stash so the closed forms are self-contained
    _vr: float = 0.0
    _va: float = 0.0
    _b: float = 0.0
    _rho_v_b: float = 0.0
    _focal_sign: float = 1.0

    def bind_params(self, p: GameParams):
        self._vr = p.v_r_max
        self._va = p.v_a_max
        self._b = p.b
        self._rho_v_b = p.rho_v * p.b
        return self

    # -- typed sample access ----------------------------------------------

    def sample(self, i: int) -> ArcSample:
        return ArcSample(
            tau=float(self.tau[i]),
            state=ReducedState(float(self.xy[i, 0]), float(self.xy[i, 1])),
            costate=Costate(float(self.lam[i, 0]), float(self.lam[i, 1])),
            pursuer=WheelControls(*self.wheels),
            evader=EvaderControl(self.v1, float(self.v2[i]) % TWO_PI),
        )

    def samples(self):
        return [self.sample(i) for i in range(len(self.tau))]

    def __len__(self):
        return len(self.tau)


# ---------------------------------------------------------------------------
# loci containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalPoint:
    y_c: float
    tau_c: float
    s_c: float


@dataclass(frozen=True)
class FocalPoint:
    x_f: float
    tau_f: float
    source: str            # 'TS' or 'US': which family supplies the tangency
    family_param: float    # s or y_u of the tangent tributary
    tau_arc: float         # retro-time along that tributary at the tangency


@dataclass(frozen=True)
class DsSegment:
    axis: str              # 'y=0' (horizontal) or 'x=0' (vertical)
    lo: float
    hi: float
    branches: tuple[str, str]
    crossings: np.ndarray  # (m, 2): coordinate along the axis, total tau


@dataclass
class SingularLoci:
    """First-quadrant representatives; the rest follow by the mirror maps."""

    params: GameParams
    ts_curve: np.ndarray | None          # rows (s, tau_s, x, y)
    us_segment: tuple[float, float] | None
    fs_segments: list[tuple[float, float]] = field(default_factory=list)
    ds_segments: list[DsSegment] = field(default_factory=list)
    critical_point: CriticalPoint | None = None
    focal_point: FocalPoint | None = None
    us_ds_split: float | None = None


# ---------------------------------------------------------------------------
# scalar helpers
# ---------------------------------------------------------------------------


def fold_angle(s: float) -> tuple[float, bool, bool]:
    """Map a terminal angle to its quadrant-I representative.

    Returns (s_I, mirrored_x, mirrored_y): apply mirror_y for the backward
    half (cos s < 0) and mirror_x for the left half (sin s < 0).
    """
    s = s % TWO_PI
    half = math.pi / 2.0
    if s <= half:
        return s, False, False
    if s <= math.pi:
        return math.pi - s, False, True
    if s <= 1.5 * math.pi:
        return s - math.pi, True, True
    return TWO_PI - s, True, False


def quadrant_label(mx: bool, my: bool) -> str:
    return {(False, False): "I", (False, True): "II", (True, True): "III", (True, False): "IV"}[(mx, my)]


def gamma_primary(s_I: float, p: GameParams) -> float:
    """Costate magnitude making the Hamiltonian vanish on the family."""
    return 1.0 / (p.v_a_max - p.v_r_max * math.cos(s_I))


def critical_point(p: GameParams) -> CriticalPoint | None:
    """Confluence of all shallow-angle primary arcs, when above the body."""
    if p.rho_v <= 1.0:
        raise RegimeError(f"critical point undefined for rho_v={p.rho_v} <= 1")
    y_c = p.r_d / p.rho_v
    if y_c <= p.b:
        return None
    return CriticalPoint(y_c=y_c, tau_c=p.r_d / p.v_a_max, s_c=math.atan(p.rho_v * p.rho_d))


def switch_time(s: float, p: GameParams) -> float | None:
    """Retro-time of the wheel switch; None on the axis (no switch)."""
    s_I, _, _ = fold_angle(s)
    if s_I == 0.0:
        return None
    return p.b / (p.v_r_max * math.tan(s_I))


def _primary_body_time(s_I: float, p: GameParams) -> float | None:
    """Smallest tau > 0 with r(tau) = b along the quadrant-I primary arc."""
    va, vr, cs = p.v_a_max, p.v_r_max, math.cos(s_I)
    a = va * va - 2.0 * va * vr * cs + vr * vr
    bq = -2.0 * p.r_d * (va - vr * cs)
    c = p.r_d * p.r_d - p.b * p.b
    disc = bq * bq - 4.0 * a * c
    if disc < 0.0:
        return None
    root = (-bq - math.sqrt(disc)) / (2.0 * a)
    return root if root > 0.0 else None


def primary_tau_max(s: float, p: GameParams) -> tuple[float, str]:
    """Validity horizon of the primary arc from s and why it ends there."""
    s_I, _, _ = fold_angle(s)
    crit = critical_point(p)
    bounds = []
    ts = switch_time(s_I, p)
    if ts is not None:
        bounds.append((ts, END_SWITCH))
    if crit is not None and s_I <= crit.s_c + 1e-15:
        bounds.append((crit.tau_c, END_CRITICAL))
    tb = _primary_body_time(s_I, p)
    if tb is not None:
        bounds.append((tb, END_BODY))
    if not bounds:
        raise ArcDomainError(f"primary arc from s={s} has no stopping set")
    return min(bounds, key=lambda pair: pair[0])


def primary_arc(s: float, tau: float, p: GameParams) -> ReducedState:
    """Point of the no-switch arc from terminal angle s at retro-time tau."""
    s = s % TWO_PI
    tau_max, _ = primary_tau_max(s, p)
    if not -1e-12 <= tau <= tau_max * (1.0 + 1e-9) + 1e-12:
        raise ArcDomainError(
            f"tau={tau} outside primary arc validity [0, {tau_max}] for s={s}"
        )
    sign = 1.0 if math.cos(s) >= 0.0 else -1.0
    x = (p.r_d - p.v_a_max * tau) * math.sin(s)
    y = (p.r_d - p.v_a_max * tau) * math.cos(s) + sign * p.v_r_max * tau
    return ReducedState(x, y)


def ts_point(s: float, p: GameParams) -> tuple[ReducedState, Costate]:
    """Switch locus point for terminal angle s, with its scaled costate."""
    ts = switch_time(s, p)
    if ts is None:
        raise ArcDomainError("the axis arc never switches")
    state = primary_arc(s, ts, p)
    s_I, mx, my = fold_angle(s)
    g = gamma_primary(s_I, p)
    lx, ly = -g * math.sin(s_I), -g * math.cos(s_I)
    if mx:
        lx = -lx
    if my:
        ly = -ly
    return state, Costate(lx, ly)


# ---------------------------------------------------------------------------
# rotation primitive (quadrant I): robot spins u=(vr,-vr), w = -vr/b
# ---------------------------------------------------------------------------


def _rotation_xy(x0, y0, a0, t, p: GameParams, w=None):
    w = -p.v_r_max / p.b if w is None else w
    va = p.v_a_max
    wt = w * np.asarray(t, dtype=float)
    al = a0 - wt
    x = -y0 * np.sin(wt) + x0 * np.cos(wt) - t * va * np.sin(al)
    y = x0 * np.sin(wt) + y0 * np.cos(wt) - t * va * np.cos(al)
    return x, y


def _rotation_ydot(x, al, p: GameParams, w=None):
    # retro-time dy/dtau = w x - va cos(alpha)
    w = -p.v_r_max / p.b if w is None else w
    return w * np.asarray(x) - p.v_a_max * np.cos(al)


def ts_tributary(s: float, tau1: float, p: GameParams) -> tuple[ReducedState, Costate]:
    """Post-switch arc from the switch locus of s, tau1 after the switch."""
    state0, lam0 = ts_point(s, p)
    s_I, mx, my = fold_angle(s)
    g = gamma_primary(s_I, p)
    # fold the anchor into quadrant I, evaluate, unfold
    x0 = abs(state0.x) if mx else state0.x
    y0 = abs(state0.y) if my else state0.y
    x, y = _rotation_xy(x0, y0, s_I, tau1, p)
    al = s_I + (p.v_r_max / p.b) * tau1
    lx, ly = -g * math.sin(al), -g * math.cos(al)
    if mx:
        x, lx = -x, -lx
    if my:
        y, ly = -y, -ly
    return ReducedState(float(x), float(y)), Costate(float(lx), float(ly))


def us_arc(tau2: float, p: GameParams) -> ReducedState:
    """Axis segment below the critical point, tau2 after the confluence."""
    crit = critical_point(p)
    if crit is None:
        raise RegimeError("no critical point at these parameters")
    return ReducedState(0.0, crit.y_c - (p.v_a_max - p.v_r_max) * tau2)


def us_tributary(y_u: float, tau3: float, p: GameParams) -> tuple[ReducedState, Costate]:
    """Spiral arc departing the axis at (0, y_u), tau3 after departure."""
    crit = critical_point(p)
    if crit is None:
        raise RegimeError("no critical point at these parameters")
    if not p.b < y_u <= crit.y_c * (1.0 + 1e-12):
        raise ArcDomainError(f"y_u={y_u} outside (b, y_c] = ({p.b}, {crit.y_c}]")
    beta = math.atan(p.b / y_u)
    g = 1.0 / (p.v_a_max - p.v_r_max * math.cos(beta))
    x, y = _rotation_xy(0.0, y_u, beta, tau3, p)
    al = beta + (p.v_r_max / p.b) * tau3
    return ReducedState(float(x), float(y)), Costate(-g * math.sin(al), -g * math.cos(al))


def us_tributary_entry_tau(y_u: float, p: GameParams) -> float:
    """Total retro-time at which the tributary from y_u leaves the axis."""
    crit = critical_point(p)
    if crit is None:
        raise RegimeError("no critical point at these parameters")
    return crit.tau_c + (crit.y_c - y_u) / (p.v_a_max - p.v_r_max)


# ---------------------------------------------------------------------------
# the axis split between the singular segment and the dispersal segment
# ---------------------------------------------------------------------------


def _departure_velocity(y: float, p: GameParams) -> float:
    # retro dx/dtau of a tributary at its axis departure point
    return (p.v_r_max / p.b) * y - p.v_a_max * p.b / math.hypot(y, p.b)


def find_us_ds_split(p: GameParams) -> float | None:
    """Ordinate where the singular axis segment ends and dispersal begins.

    A tributary departing (0, y) enters the open quadrant iff its departure
    velocity is positive; below the root it would cross x=0 at once, and the
    re-crossings of the valid tributaries land exactly on that lower part of
    the axis.  Bisection on the departure-velocity residual.  None when even
    the lowest departure point (just above the body) is valid, i.e. no
    tributary returns to the axis.
    """
    crit = critical_point(p)
    if crit is None:
        raise RegimeError("no critical point at these parameters")
    lo, hi = p.b, crit.y_c
    g_lo, g_hi = _departure_velocity(lo, p), _departure_velocity(hi, p)
    # sanity: the residual should be increasing in y; sample and complain if not
    ys = np.linspace(lo, hi, 64)
    gs = (p.v_r_max / p.b) * ys - p.v_a_max * p.b / np.hypot(ys, p.b)
    if np.any(np.diff(gs) <= 0.0):
        warnings.warn("departure-velocity residual not monotone; split suspect")
    if g_lo >= 0.0:
        return None
    if g_hi <= 0.0:
        return crit.y_c  # degenerate: no valid departures, empty singular segment
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _departure_velocity(mid, p) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# focal point search: tangency of a tributary family with y=0
# ---------------------------------------------------------------------------

_SCAN_STEPS = 6000


def _trib_profile(x0, y0, a0, p: GameParams, horizon=None):
    """Follow a quadrant-I rotation arc until it leaves the admissible set.

    Returns (min_y, t_at_min, x_at_min, stopped_by) where min_y is the lowest
    y reached strictly before crossing x=0 or entering the body.
    """
    if horizon is None:
        horizon = 1.5 * math.pi * p.b / p.v_r_max
    t = np.linspace(0.0, horizon, _SCAN_STEPS)
    x, y = _rotation_xy(x0, y0, a0, t, p)
    r2 = x * x + y * y
    bad = (x < -1e-12) | (r2 < p.b * p.b * (1.0 - 1e-12))
    bad[0] = False
    stop = int(np.argmax(bad)) if bad.any() else len(t)
    seg = slice(0, stop)
    ylo = y[seg]
    if len(ylo) == 0:
        return math.inf, 0.0, x0, "empty"
    i = int(np.argmin(ylo))
    # parabolic refinement of the minimum in tau
    if 0 < i < stop - 1:
        t0, t1, t2 = t[i - 1], t[i], t[i + 1]
        y0_, y1_, y2_ = y[i - 1], y[i], y[i + 1]
        denom = (y0_ - 2.0 * y1_ + y2_)
        if abs(denom) > 1e-300:
            tref = t1 + 0.5 * (t1 - t0) * (y0_ - y2_) / denom
            tt = np.linspace(max(0.0, tref - (t1 - t0)), tref + (t1 - t0), 41)
            xx, yy = _rotation_xy(x0, y0, a0, tt, p)
            j = int(np.argmin(yy))
            return float(yy[j]), float(tt[j]), float(xx[j]), ("crossed" if yy[j] < 0 else "interior")
    label = "crossed" if ylo[i] < 0.0 else ("body" if stop < len(t) else "horizon")
    return float(ylo[i]), float(t[i]), float(x[i]), label


def _ts_anchor(s: float, p: GameParams):
    state, _ = ts_point(s, p)
    return state.x, state.y, s, switch_time(s, p)


def _us_anchor(y_u: float, p: GameParams):
    return 0.0, y_u, math.atan(p.b / y_u), us_tributary_entry_tau(y_u, p) - critical_point(p).tau_c


def _refine_stationary_tau(x0, y0, a0, t_guess, p: GameParams) -> float:
    """Exact stationary point of y(t) near t_guess, via the derivative sign."""
    h = 2.0 * (1.5 * math.pi * p.b / p.v_r_max) / _SCAN_STEPS

    def ydot(t):
        x, _ = _rotation_xy(x0, y0, a0, t, p)
        return float(_rotation_ydot(x, a0 + (p.v_r_max / p.b) * t, p))

    a, b_ = max(0.0, t_guess - h), t_guess + h
    fa, fb = ydot(a), ydot(b_)
    grow = 0
    while (fa < 0.0) == (fb < 0.0) and grow < 20:
        a, b_ = max(0.0, a - h), b_ + h
        fa, fb = ydot(a), ydot(b_)
        grow += 1
    if (fa < 0.0) == (fb < 0.0):
        return t_guess
    for _ in range(90):
        mid = 0.5 * (a + b_)
        fm = ydot(mid)
        if (fm < 0.0) == (fa < 0.0):
            a, fa = mid, fm
        else:
            b_ = mid
    return 0.5 * (a + b_)


def _scan_family_for_tangency(anchor_fn, lo, hi, tau0_fn, p: GameParams):
    """Bisection on the sign of the minimum-y profile over a family parameter."""

    def min_y(param):
        # thin annuli interleave body-first and switch-first stretches, so
        # an anchor can be unreachable between two reachable neighbours;
        # such params carry no profile data rather than aborting the scan
        try:
            x0, y0, a0, _ = anchor_fn(param, p)
        except ArcDomainError:
            return math.nan, math.nan, math.nan, math.nan
        return _trib_profile(x0, y0, a0, p)

    grid = np.linspace(lo, hi, 48)
    vals = [min_y(q)[0] for q in grid]
    for i in range(len(grid) - 1):
        va, vb = vals[i], vals[i + 1]
        if not (np.isfinite(va) and np.isfinite(vb)):
            continue
        if (va < 0.0) == (vb < 0.0):
            continue
        a, b_ = grid[i], grid[i + 1]
        fa = va
        for _ in range(80):
            mid = 0.5 * (a + b_)
            fm = min_y(mid)[0]
            if not math.isfinite(fm):
                b_ = mid
                continue
            if (fm < 0.0) == (fa < 0.0):
                a, fa = mid, fm
            else:
                b_ = mid
        param = 0.5 * (a + b_)
        _, t_grid, _, _ = min_y(param)
        if not math.isfinite(t_grid):
            continue

        # polish: bisect on the grazing height measured at the exact
        # stationary point of y, which is noise-free, so the family
        # parameter resolves to machine precision
        def exact(q, tg):
            try:
                x0, y0, a0, _ = anchor_fn(q, p)
            except ArcDomainError:
                return math.inf, math.inf, tg
            ts = _refine_stationary_tau(x0, y0, a0, tg, p)
            xq, yq = _rotation_xy(x0, y0, a0, ts, p)
            return float(yq), float(xq), ts

        cell = (hi - lo) / (len(grid) - 1)
        pa, pb = param - cell * 2.0 ** -10, param + cell * 2.0 ** -10
        ga, ta = exact(pa, t_grid)[0], t_grid
        gb = exact(pb, t_grid)[0]
        if (ga < 0.0) != (gb < 0.0):
            for _ in range(80):
                pm = 0.5 * (pa + pb)
                gm, _, tm = exact(pm, ta)
                if (gm < 0.0) == (ga < 0.0):
                    pa, ga, ta = pm, gm, tm
                else:
                    pb = pm
            param = 0.5 * (pa + pb)
        ymin, x_at, t_at = exact(param, t_grid)
        if not math.isfinite(ymin):
            continue
        x0, y0, a0, _ = anchor_fn(param, p)
        ydot = _rotation_ydot(x_at, a0 + (p.v_r_max / p.b) * t_at, p)
        # a genuine tangency: grazes y=0 outside the body with no transversal speed
        if abs(ymin) < 1e-6 * p.r_d and abs(ydot) < 1e-8 * p.v_a_max and x_at >= p.b * (1.0 - 1e-9):
            tau0 = tau0_fn(param, p)
            return param, x_at, tau0 + t_at, t_at
    return None


def find_focal_point(p: GameParams) -> FocalPoint | None:
    """Locate the tangential meeting of a tributary family with y=0.

    The switch-locus family is scanned first; if every transition there is a
    transversal crossing or sits inside the body, the axis-departure family
    is scanned instead.  None when neither family produces a tangency.
    """
    crit = critical_point(p)
    eps = 1e-6
    if crit is not None:
        lo = crit.s_c + eps
    else:
        # family exists where the switch happens before the body
        lo_b, hi_b = eps, math.pi / 2 - eps
        for _ in range(60):
            mid = 0.5 * (lo_b + hi_b)
            tmax, why = primary_tau_max(mid, p)
            if why == END_BODY:
                lo_b = mid
            else:
                hi_b = mid
        lo = hi_b
    hit = _scan_family_for_tangency(
        lambda s, pp: _ts_anchor(s, pp), lo, math.pi / 2 - eps,
        lambda s, pp: switch_time(s, pp), p,
    )
    if hit is not None:
        s_star, x_f, tau_f, tau_arc = hit
        return FocalPoint(x_f=x_f, tau_f=tau_f, source="TS", family_param=s_star, tau_arc=tau_arc)
    if crit is not None:
        split = find_us_ds_split(p)
        y_lo = max(p.b * (1.0 + 1e-9), (split or p.b) + eps)
        if y_lo < crit.y_c - eps:
            hit = _scan_family_for_tangency(
                lambda y, pp: _us_anchor(y, pp), y_lo, crit.y_c - eps,
                lambda y, pp: us_tributary_entry_tau(y, pp), p,
            )
            if hit is not None:
                y_star, x_f, tau_f, tau_arc = hit
                return FocalPoint(x_f=x_f, tau_f=tau_f, source="US", family_param=y_star, tau_arc=tau_arc)
    return None


# ---------------------------------------------------------------------------
# focal surface and its tributaries
# ---------------------------------------------------------------------------


def _focal_theta(x: float, p: GameParams) -> float:
    arg = x / (p.rho_v * p.b)
    if not -1.0 <= arg <= 1.0:
        raise ArcDomainError(f"abscissa {x} outside the focal chart |x| <= rho_v*b")
    return math.asin(arg)


def fs_arc(tau4: float, p: GameParams, focal: FocalPoint | None = None) -> ReducedState:
    """Point of the y=0 singular segment, tau4 inward of the focal point."""
    if focal is None:
        focal = find_focal_point(p)
    if focal is None:
        raise RegimeError("no focal surface at these parameters")
    theta_f = _focal_theta(focal.x_f, p)
    theta_b = _focal_theta(p.b, p)
    tau_max = (theta_f - theta_b) * p.b / p.v_r_max
    if not -1e-12 <= tau4 <= tau_max + 1e-12:
        raise ArcDomainError(f"tau4={tau4} beyond the body truncation at {tau_max}")
    return ReducedState(p.rho_v * p.b * math.sin(theta_f - (p.v_r_max / p.b) * tau4), 0.0)


def fs_heading(x: float, p: GameParams) -> float:
    """Evader heading that freezes y on the segment: cos v2 = -x/(rho_v b)."""
    return math.acos(max(-1.0, min(1.0, -x / (p.rho_v * p.b))))


def fs_travel_tau(x: float, p: GameParams, focal: FocalPoint) -> float:
    """Retro-time to travel the segment from the focal point inward to x."""
    return (_focal_theta(focal.x_f, p) - _focal_theta(x, p)) * p.b / p.v_r_max


def fs_tributary(x_t: float, tau5: float, p: GameParams,
                 focal: FocalPoint | None = None) -> tuple[ReducedState, Costate]:
    """Arc departing the y=0 segment tangentially at (x_t, 0)."""
    if focal is None:
        focal = find_focal_point(p)
    if focal is None:
        raise RegimeError("no focal surface at these parameters")
    if not p.b * (1.0 - 1e-12) <= x_t <= focal.x_f * (1.0 + 1e-12):
        raise ArcDomainError(f"x_t={x_t} outside the segment [{p.b}, {focal.x_f}]")
    a0 = fs_heading(x_t, p)
    g = 1.0 / (p.v_a_max * math.sin(a0) ** 2)
    x, y = _rotation_xy(x_t, 0.0, a0, tau5, p)
    al = a0 + (p.v_r_max / p.b) * tau5
    return ReducedState(float(x), float(y)), Costate(-g * math.sin(al), -g * math.cos(al))


# ---------------------------------------------------------------------------
# arc builders: sampled TrajectoryArc objects with exact truncation
# ---------------------------------------------------------------------------


def _bisect_crossing(fn, t_lo, t_hi, iters=80):
    """Root of scalar fn (sign change assumed between the brackets)."""
    f_lo = fn(t_lo)
    for _ in range(iters):
        mid = 0.5 * (t_lo + t_hi)
        fm = fn(mid)
        if (fm < 0.0) == (f_lo < 0.0):
            t_lo, f_lo = mid, fm
        else:
            t_hi = mid
    return 0.5 * (t_lo + t_hi)


def _finish_arc(arc: TrajectoryArc, p: GameParams) -> TrajectoryArc:
    """Fill sample arrays of lam and v2 from the generator."""
    arc.bind_params(p)
    al = arc.heading_at(arc.tau)
    lx, ly = arc.costate_at(arc.tau)
    arc.lam = np.column_stack([lx, ly])
    arc.v2 = np.mod(np.asarray(al, dtype=float), TWO_PI)
    return arc


def build_primary_arc(s: float, p: GameParams, spacing: float) -> TrajectoryArc:
    """Quadrant-I primary arc sampled from the circle to its stopping set."""
    tau_max, why = primary_tau_max(s, p)
    n = max(2, int(math.ceil(tau_max * (p.v_a_max + p.v_r_max) / spacing)) + 1)
    taus = np.linspace(0.0, tau_max, n)
    sign = 1.0
    x = (p.r_d - p.v_a_max * taus) * math.sin(s)
    y = (p.r_d - p.v_a_max * taus) * math.cos(s) + sign * p.v_r_max * taus
    arc = TrajectoryArc(
        family=ArcFamily.PRIMARY, family_param=s, quadrant="I",
        tau=taus, xy=np.column_stack([x, y]), lam=None, v2=None,
        wheels=(p.v_r_max, p.v_r_max), v1=p.v_a_max, truncation=why,
        kind="straight", x0=p.r_d * math.sin(s), y0=p.r_d * math.cos(s),
        a0=s, tau0=0.0, w=0.0, sign=sign, gamma=gamma_primary(s, p),
    )
    return _finish_arc(arc, p)


def _build_rotation_arc(family, param, x0, y0, a0, tau0, gamma, p: GameParams,
                        spacing: float, parent=None, skip_axis_at_start=False,
                        allow_tangent_stop=False) -> TrajectoryArc:
    """Sample a quadrant-I rotation arc and truncate it exactly.

    Stopping sets, in priority order when several are straddled by one step:
    the body r=b, then the axes, with y=0 reported as a tangential stop when
    the crossing is grazing.
    """
    w = -p.v_r_max / p.b
    horizon = 1.5 * math.pi * p.b / p.v_r_max
    dt = spacing / (p.v_a_max + p.v_r_max)
    n = max(8, int(math.ceil(horizon / dt)) + 1)
    t = np.linspace(0.0, horizon, n)
    x, y = _rotation_xy(x0, y0, a0, t, p)
    r2 = x * x + y * y
    b2 = p.b * p.b

    def hits(mask, dust_ok_at_start=False):
        mask = mask.copy()
        mask[0] = False
        if dust_ok_at_start and len(mask) > 1:
            # anchors sitting exactly on a boundary shed float dust on the
            # first step; only a genuine excursion counts as a crossing there
            if mask[1] and x[1] > -1e-9 * p.r_d:
                mask[1] = False
        idx = np.nonzero(mask)[0]
        return int(idx[0]) if len(idx) else None

    cand = []
    i_body = hits(r2 < b2 * (1.0 - 1e-14))
    if i_body is not None:
        cand.append((i_body, END_BODY))
    i_x = hits(x < -1e-13 * p.r_d, dust_ok_at_start=skip_axis_at_start)
    if i_x is not None:
        cand.append((i_x, END_AXIS_X))
    i_y = hits(y < -1e-13 * p.r_d)
    if i_y is not None:
        cand.append((i_y, END_AXIS_Y))
    if cand:
        i_stop, why = min(cand, key=lambda c: (c[0], _STOP_PRIORITY[c[1]]))
        t_lo = t[i_stop - 1]
        if why == END_BODY:
            fn = lambda tt: float(np.hypot(*_rotation_xy(x0, y0, a0, tt, p))) - p.b
        elif why == END_AXIS_X:
            fn = lambda tt: float(_rotation_xy(x0, y0, a0, tt, p)[0])
        else:
            fn = lambda tt: float(_rotation_xy(x0, y0, a0, tt, p)[1])
        t_end = _bisect_crossing(fn, t_lo, t[i_stop])
        if why == END_AXIS_Y and allow_tangent_stop:
            al_end = a0 + (p.v_r_max / p.b) * t_end
            x_end = float(_rotation_xy(x0, y0, a0, t_end, p)[0])
            if abs(_rotation_ydot(x_end, al_end, p)) < 1e-6 * p.v_a_max:
                why = END_TANGENT
    else:
        t_end, why = horizon, END_HORIZON

    m = max(2, int(math.ceil(t_end / dt)) + 1)
    tt = np.linspace(0.0, t_end, m)
    xs, ys = _rotation_xy(x0, y0, a0, tt, p)
    # the closed form overshoots by float dust at the truncation; clamp it
    if why == END_AXIS_X:
        xs[-1] = 0.0
    elif why in (END_AXIS_Y, END_TANGENT):
        ys[-1] = 0.0
    arc = TrajectoryArc(
        family=family, family_param=param, quadrant="I",
        tau=tau0 + tt, xy=np.column_stack([xs, ys]), lam=None, v2=None,
        wheels=(p.v_r_max, -p.v_r_max), v1=p.v_a_max, truncation=why,
        kind="rotation", x0=x0, y0=y0, a0=a0, tau0=tau0, w=w, sign=1.0,
        gamma=gamma, parent=parent,
    )
    return _finish_arc(arc, p)


_STOP_PRIORITY = {END_BODY: 0, END_AXIS_X: 1, END_AXIS_Y: 1, END_TANGENT: 1}


def build_ts_tributary_arc(s: float, p: GameParams, spacing: float,
                           allow_tangent_stop=True) -> TrajectoryArc:
    state0, _ = ts_point(s, p)
    return _build_rotation_arc(
        ArcFamily.TS_TRIBUTARY, s, state0.x, state0.y, s, switch_time(s, p),
        gamma_primary(s, p), p, spacing, parent=(ArcFamily.PRIMARY.value, s),
        allow_tangent_stop=allow_tangent_stop,
    )


def build_us_tributary_arc(y_u: float, p: GameParams, spacing: float) -> TrajectoryArc:
    beta = math.atan(p.b / y_u)
    g = 1.0 / (p.v_a_max - p.v_r_max * math.cos(beta))
    return _build_rotation_arc(
        ArcFamily.US_TRIBUTARY, y_u, 0.0, y_u, beta, us_tributary_entry_tau(y_u, p),
        g, p, spacing, parent=(ArcFamily.US.value, y_u), skip_axis_at_start=True,
        allow_tangent_stop=True,
    )


def build_us_arc(p: GameParams, split: float | None, spacing: float) -> TrajectoryArc:
    crit = critical_point(p)
    y_lo = max(p.b, split if split is not None else p.b)
    tau_max = (crit.y_c - y_lo) / (p.v_a_max - p.v_r_max)
    n = max(2, int(math.ceil(tau_max * (p.v_a_max - p.v_r_max) / spacing)) + 1)
    tt = np.linspace(0.0, tau_max, n)
    y = crit.y_c - (p.v_a_max - p.v_r_max) * tt
    arc = TrajectoryArc(
        family=ArcFamily.US, family_param=None, quadrant="I",
        tau=crit.tau_c + tt, xy=np.column_stack([np.zeros_like(y), y]),
        lam=None, v2=None, wheels=(p.v_r_max, p.v_r_max), v1=p.v_a_max,
        truncation=(END_BODY if split is None else "ds"),
        kind="straight", x0=0.0, y0=crit.y_c, a0=0.0, tau0=crit.tau_c,
        w=0.0, sign=1.0, gamma=1.0 / (p.v_a_max - p.v_r_max),
        parent=(ArcFamily.PRIMARY.value, 0.0),
    )
    return _finish_arc(arc, p)


def build_fs_arc(p: GameParams, focal: FocalPoint, spacing: float) -> TrajectoryArc:
    theta_f = _focal_theta(focal.x_f, p)
    theta_b = _focal_theta(p.b, p)
    tau_max = (theta_f - theta_b) * p.b / p.v_r_max
    n = max(2, int(math.ceil(tau_max * p.v_a_max / spacing)) + 1)
    tt = np.linspace(0.0, tau_max, n)
    x = p.rho_v * p.b * np.sin(theta_f - (p.v_r_max / p.b) * tt)
    arc = TrajectoryArc(
        family=ArcFamily.FS, family_param=None, quadrant="I",
        tau=focal.tau_f + tt, xy=np.column_stack([x, np.zeros_like(x)]),
        lam=None, v2=None, wheels=(p.v_r_max, -p.v_r_max), v1=p.v_a_max,
        truncation=END_BODY, kind="focal", x0=focal.x_f, y0=0.0,
        a0=fs_heading(focal.x_f, p), tau0=focal.tau_f, w=-p.v_r_max / p.b,
        sign=1.0, gamma=1.0 / (p.v_a_max * math.sin(fs_heading(focal.x_f, p)) ** 2),
        parent=(focal.source, focal.family_param),
    )
    return _finish_arc(arc, p)


def build_fs_tributary_arc(x_t: float, p: GameParams, focal: FocalPoint,
                           spacing: float) -> TrajectoryArc:
    a0 = fs_heading(x_t, p)
    g = 1.0 / (p.v_a_max * math.sin(a0) ** 2)
    tau0 = focal.tau_f + fs_travel_tau(x_t, p, focal)
    return _build_rotation_arc(
        ArcFamily.FS_TRIBUTARY, x_t, x_t, 0.0, a0, tau0, g, p, spacing,
        parent=(ArcFamily.FS.value, x_t), skip_axis_at_start=True,
    )


# ---------------------------------------------------------------------------
# mirrors
# ---------------------------------------------------------------------------


def mirror_arc(arc: TrajectoryArc, mx: bool, my: bool, p: GameParams) -> TrajectoryArc:
    """Reflected copy of a quadrant-I arc; retro-times are unchanged."""
    if not (mx or my):
        return arc
    xy = arc.xy.copy()
    lam = arc.lam.copy()
    v2 = arc.v2.copy()
    u1, u2 = arc.wheels
    x0, y0, a0, w, sign = arc.x0, arc.y0, arc.a0, arc.w, arc.sign
    param = arc.family_param
    if mx:
        xy[:, 0] *= -1.0
        lam[:, 0] *= -1.0
        v2 = (-v2) % TWO_PI
        u1, u2 = u2, u1
        x0, a0, w = -x0, -a0, -w
        if arc.family in (ArcFamily.PRIMARY, ArcFamily.TS_TRIBUTARY) and param is not None:
            param = (TWO_PI - param) % TWO_PI
        elif arc.family in (ArcFamily.FS, ArcFamily.FS_TRIBUTARY) and param is not None:
            param = -param
    if my:
        xy[:, 1] *= -1.0
        lam[:, 1] *= -1.0
        v2 = (math.pi - v2) % TWO_PI
        u1, u2 = -u1, -u2
        y0, a0, w, sign = -y0, math.pi - a0, -w, -sign
        if arc.family in (ArcFamily.PRIMARY, ArcFamily.TS_TRIBUTARY) and param is not None:
            param = (math.pi - param) % TWO_PI
        elif arc.family in (ArcFamily.US, ArcFamily.US_TRIBUTARY) and param is not None:
            param = -param
    out = TrajectoryArc(
        family=arc.family, family_param=param,
        quadrant=quadrant_label(mx, my),
        tau=arc.tau.copy(), xy=xy, lam=lam, v2=v2,
        wheels=(u1, u2), v1=arc.v1, truncation=arc.truncation,
        kind=arc.kind, x0=x0, y0=y0, a0=a0, tau0=arc.tau0, w=w, sign=sign,
        gamma=arc.gamma, parent=arc.parent,
    )
    out.bind_params(p)
    if arc.kind == "focal" and mx:
        out._focal_sign = -arc._focal_sign
    return out


# ---------------------------------------------------------------------------
# dispersal segments
# ---------------------------------------------------------------------------


def find_ds(arcs_a, arcs_b, axis: str, p: GameParams) -> DsSegment | None:
    """Axis interval where two mirrored families meet with equal retro-time.

    arcs_a/arcs_b are the two families; arcs truncated on the given axis
    contribute their endpoint.  Mirrored partners are matched by parameter
    and their times compared (they agree to rounding by construction, the
    check guards the mirroring itself).
    """
    if axis not in (END_AXIS_X, END_AXIS_Y):
        raise ArcDomainError(f"axis must be 'x=0' or 'y=0', got {axis!r}")
    coord = 1 if axis == END_AXIS_X else 0

    def endpoints(arcs):
        out = {}
        for arc in arcs:
            if arc.truncation != axis:
                continue
            key = None if arc.family_param is None else round(_fold_param(arc), 12)
            out[key] = (abs(float(arc.xy[-1, coord])), float(arc.tau[-1]))
        return out

    ends_a, ends_b = endpoints(arcs_a), endpoints(arcs_b)
    pairs = []
    for key, (ca, ta) in ends_a.items():
        if key in ends_b:
            cb, tb = ends_b[key]
            if abs(ta - tb) > 1e-9:
                warnings.warn(f"mirror pair at {key} disagrees in time by {ta - tb}")
            pairs.append((0.5 * (ca + cb), 0.5 * (ta + tb)))
    if not pairs:
        return None
    pairs.sort()
    crossings = np.asarray(pairs)
    qa = arcs_a[0].quadrant if arcs_a else "I"
    qb = arcs_b[0].quadrant if arcs_b else "?"
    return DsSegment(
        axis=axis, lo=float(crossings[0, 0]), hi=float(crossings[-1, 0]),
        branches=(qa, qb), crossings=crossings,
    )


def _fold_param(arc: TrajectoryArc) -> float:
    param = arc.family_param
    if arc.family in (ArcFamily.PRIMARY, ArcFamily.TS_TRIBUTARY):
        return fold_angle(param)[0]
    return abs(param)
