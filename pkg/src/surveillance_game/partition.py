"""Assembly of the full strategy partition and point-location queries.

classify_regime decides which loci exist at given parameters, build_partition
materializes every arc family in all four quadrants with a coverage audit,
and locate answers "which optimal arc passes through this state, and what do
both players do there".  Queries are folded into the first quadrant, matched
against the closed-form arcs, then unfolded, so the two mirror symmetries
are exact by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .core import EvaderControl, GameParams, ReducedState, WheelControls, _xy
from .errors import (
    AlreadyEscapedError,
    ArcDomainError,
    BoundaryRegimeError,
    CoverageError,
    InsideBodyError,
    RegimeError,
)
from .pmp import Costate, usable_part_check
from . import surfaces as sf
from .surfaces import (
    ArcFamily,
    CriticalPoint,
    DsSegment,
    FocalPoint,
    SingularLoci,
    TrajectoryArc,
)

TWO_PI = 2.0 * math.pi

# region identifiers reported by locate()
REGION_PRIMARY = "PRIMARY"
REGION_TS = "TS"
REGION_TS_TRIBUTARY = "TS_TRIBUTARY"
REGION_US = "US"
REGION_US_TRIBUTARY = "US_TRIBUTARY"
REGION_FS = "FS"
REGION_FS_TRIBUTARY = "FS_TRIBUTARY"
REGION_DS = "DS"
REGION_CRITICAL_POINT = "CRITICAL_POINT"
REGION_TERMINAL = "TERMINAL"


# ---------------------------------------------------------------------------
# regime classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Regime:
    label: str                    # 'A', 'B' or 'C'
    description: str
    has_us: bool = False
    has_fs: bool = False
    has_vertical_ds: bool = False
    has_horizontal_ds: bool = False
    fs_source: str = "NONE"       # 'TS', 'US' or 'NONE'
    critical: CriticalPoint | None = None
    split: float | None = None
    focal: FocalPoint | None = None


_BOUNDARY_TOL = 1e-12


def _ts_family_lower_bound(p: GameParams) -> float:
    """Smallest terminal angle whose primary arc reaches the switch locus."""
    crit = sf.critical_point(p)
    if crit is not None:
        return crit.s_c
    eps = 1e-9
    lo, hi = eps, math.pi / 2 - eps
    if sf.primary_tau_max(lo, p)[1] != sf.END_BODY:
        return lo
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if sf.primary_tau_max(mid, p)[1] == sf.END_BODY:
            lo = mid
        else:
            hi = mid
    return hi


def _scan_axis_crossings(p: GameParams, crit, split, focal, n=48):
    """Coarse family sweep counting transversal axis truncations."""
    spacing = p.r_d / 120.0
    lo = _ts_family_lower_bound(p)
    cross_x, cross_y = False, False
    s_grid = lo + (math.pi / 2 - lo) * (np.arange(n) + 0.5) / n
    for s in s_grid:
        # thin annuli leave holes in the family domain where the body
        # truncates the arc before the switch; those angles carry no arc
        try:
            arc = sf.build_ts_tributary_arc(float(s), p, spacing)
        except ArcDomainError:
            continue
        cross_x |= arc.truncation == sf.END_AXIS_X
        cross_y |= arc.truncation == sf.END_AXIS_Y
    if crit is not None:
        y_lo = max(p.b, split if split is not None else p.b)
        if y_lo < crit.y_c:
            y_grid = y_lo + (crit.y_c - y_lo) * (np.arange(n) + 0.5) / n
            for y_u in y_grid:
                arc = sf.build_us_tributary_arc(float(y_u), p, spacing)
                cross_x |= arc.truncation == sf.END_AXIS_X
                cross_y |= arc.truncation == sf.END_AXIS_Y
    if focal is not None:
        x_grid = p.b + (focal.x_f - p.b) * (np.arange(n // 2) + 1.0) / (n // 2)
        for x_t in x_grid:
            arc = sf.build_fs_tributary_arc(float(x_t), p, focal, spacing)
            cross_x |= arc.truncation == sf.END_AXIS_X
            cross_y |= arc.truncation == sf.END_AXIS_Y
    return cross_x, cross_y


def classify_regime(p: GameParams) -> Regime:
    """Decide the parameter regime and which singular loci are present."""
    if abs(p.rho_v - 1.0) <= _BOUNDARY_TOL or abs(p.rho_v * p.rho_d - 1.0) <= _BOUNDARY_TOL:
        raise BoundaryRegimeError(
            f"degenerate speed/size ratios rho_v={p.rho_v}, rho_v*rho_d={p.rho_v * p.rho_d}"
        )
    if p.rho_v < 1.0:
        return Regime(label="A", description="evader slower than the robot rim; no escape")
    crit = sf.critical_point(p)
    if crit is None:
        focal = sf.find_focal_point(p)
        cross_x, cross_y = _scan_axis_crossings(p, None, None, focal)
        return Regime(
            label="B",
            description="no confluence above the body; switch-locus family only",
            has_us=False,
            has_fs=focal is not None,
            has_vertical_ds=cross_x,
            has_horizontal_ds=cross_y,
            fs_source=focal.source if focal else "NONE",
            focal=focal,
        )
    split = sf.find_us_ds_split(p)
    has_us = split is None or split < crit.y_c * (1.0 - 1e-12)
    focal = sf.find_focal_point(p)
    cross_x, cross_y = _scan_axis_crossings(p, crit, split, focal)
    has_vds = cross_x or (split is not None and split > p.b)
    return Regime(
        label="C",
        description="confluence above the body; axis families present",
        has_us=has_us,
        has_fs=focal is not None,
        has_vertical_ds=has_vds,
        has_horizontal_ds=cross_y,
        fs_source=focal.source if focal else "NONE",
        critical=crit,
        split=split,
        focal=focal,
    )


# ---------------------------------------------------------------------------
# partition container
# ---------------------------------------------------------------------------


@dataclass
class Partition:
    params: GameParams
    regime: Regime
    loci: SingularLoci
    arcs: list[TrajectoryArc]
    coverage: float
    resolution: int
    spacing: float
    # locate() internals
    _q1_arcs: list[TrajectoryArc] = field(default=None, repr=False)
    _cell: float = field(default=0.0, repr=False)
    _bucket: dict = field(default=None, repr=False)
    _sample_arc: np.ndarray = field(default=None, repr=False)
    _sample_idx: np.ndarray = field(default=None, repr=False)
    _sample_xy: np.ndarray = field(default=None, repr=False)
    _vds_table: np.ndarray = field(default=None, repr=False)   # (y, tau, v2)
    _hds_table: np.ndarray = field(default=None, repr=False)   # (x, tau, v2)


@dataclass(frozen=True)
class StrategyResult:
    region: str
    time_to_escape: float
    pursuer: WheelControls
    evader: EvaderControl
    costate: Costate | None
    nearest_point: tuple[float, float]
    distance: float
    multiplicity: int = 1
    alternates: tuple = ()
    fan: tuple[float, float] | None = None
    arc: TrajectoryArc | None = None
    tau_on_arc: float | None = None


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------


def _axis_crossing_rows(arcs, axis):
    """(coordinate, total tau, arrival heading) for arcs truncated on axis."""
    coord = 1 if axis == sf.END_AXIS_X else 0
    rows = []
    for arc in arcs:
        if arc.truncation != axis:
            continue
        rows.append((abs(float(arc.xy[-1, coord])), float(arc.tau[-1]), float(arc.v2[-1])))
    rows.sort()
    return np.asarray(rows) if rows else None


def build_partition(p: GameParams, resolution: int = 400) -> Partition:
    """Materialize every optimal arc family at the given sampling density.

    resolution sets both the family parameter counts and the coverage-audit
    grid.  The audit marks each annulus cell reachable by at least one
    sampled arc (within one cell); a covered fraction below 0.99 raises.
    """
    regime = classify_regime(p)
    if regime.label == "A":
        raise RegimeError("no escape strategies exist for a slower evader")
    spacing = p.r_d / max(50.0, 0.875 * resolution)
    crit, split, focal = regime.critical, regime.split, regime.focal

    q1: list[TrajectoryArc] = []
    s_lo = _ts_family_lower_bound(p)

    for s in np.linspace(0.0, math.pi / 2, resolution, endpoint=False):
        q1.append(sf.build_primary_arc(float(s), p, spacing))
    n_ts = resolution
    for i in range(n_ts):
        s = s_lo + (math.pi / 2 - s_lo) * (i + 0.5) / n_ts
        q1.append(sf.build_ts_tributary_arc(float(s), p, spacing))
    if crit is not None:
        q1.append(sf.build_us_arc(p, split, spacing))
        y_lo = max(p.b, split if split is not None else p.b)
        if regime.has_us:
            n_us = max(48, resolution // 2)
            for i in range(n_us):
                y_u = y_lo + (crit.y_c - y_lo) * (i + 0.5) / n_us
                q1.append(sf.build_us_tributary_arc(float(y_u), p, spacing))
    if focal is not None:
        q1.append(sf.build_fs_arc(p, focal, spacing))
        n_fs = max(24, resolution // 8)
        for i in range(n_fs):
            x_t = p.b + (focal.x_f - p.b) * (i + 1.0) / n_fs
            q1.append(sf.build_fs_tributary_arc(float(x_t), p, focal, spacing))

    arcs = list(q1)
    for arc in q1:
        if arc.family is ArcFamily.US:
            arcs.append(sf.mirror_arc(arc, False, True, p))
        elif arc.family is ArcFamily.FS:
            arcs.append(sf.mirror_arc(arc, True, False, p))
        else:
            arcs.append(sf.mirror_arc(arc, False, True, p))
            arcs.append(sf.mirror_arc(arc, True, False, p))
            arcs.append(sf.mirror_arc(arc, True, True, p))

    # loci
    ts_rows = []
    for i in range(resolution):
        s = s_lo + (math.pi / 2 - s_lo) * (i + 0.5) / resolution
        st, _ = sf.ts_point(float(s), p)
        ts_rows.append((s, sf.switch_time(float(s), p), st.x, st.y))
    ts_curve = np.asarray(ts_rows)
    us_segment = None
    if crit is not None and regime.has_us:
        us_segment = (max(p.b, split if split is not None else p.b), crit.y_c)
    fs_segments = []
    if focal is not None:
        fs_segments = [(p.b, focal.x_f), (-focal.x_f, -p.b)]

    trib_arcs = [a for a in q1 if a.family in
                 (ArcFamily.TS_TRIBUTARY, ArcFamily.US_TRIBUTARY, ArcFamily.FS_TRIBUTARY)]
    ds_segments = []
    hds = _axis_crossing_rows(trib_arcs, sf.END_AXIS_Y)
    if hds is not None and regime.has_horizontal_ds:
        mirrored = [sf.mirror_arc(a, False, True, p) for a in trib_arcs]
        seg = sf.find_ds(trib_arcs, mirrored, sf.END_AXIS_Y, p)
        if seg is not None:
            ds_segments.append(seg)
    vds = _axis_crossing_rows(trib_arcs, sf.END_AXIS_X)
    if vds is not None and regime.has_vertical_ds:
        mirrored = [sf.mirror_arc(a, True, False, p) for a in trib_arcs]
        seg = sf.find_ds(trib_arcs, mirrored, sf.END_AXIS_X, p)
        if seg is not None:
            ds_segments.append(seg)

    loci = SingularLoci(
        params=p, ts_curve=ts_curve, us_segment=us_segment,
        fs_segments=fs_segments, ds_segments=ds_segments,
        critical_point=crit, focal_point=focal, us_ds_split=split,
    )

    part = Partition(
        params=p, regime=regime, loci=loci, arcs=arcs,
        coverage=0.0, resolution=resolution, spacing=spacing,
    )
    part._q1_arcs = q1
    part._vds_table = vds
    part._hds_table = hds
    _index_partition(part)
    part.coverage = _coverage_fraction(part, resolution)
    if part.coverage < 0.99:
        raise CoverageError(
            f"arc families cover only {part.coverage:.4f} of the annulus",
            uncovered=[],
        )
    return part


def _index_partition(part: Partition):
    p = part.params
    part._cell = p.r_d / 200.0
    arc_ids, samp_ids, xs, ys = [], [], [], []
    for i, arc in enumerate(part._q1_arcs):
        n = len(arc.tau)
        arc_ids.append(np.full(n, i, dtype=np.int32))
        samp_ids.append(np.arange(n, dtype=np.int32))
        xs.append(arc.xy[:, 0])
        ys.append(arc.xy[:, 1])
    part._sample_arc = np.concatenate(arc_ids)
    part._sample_idx = np.concatenate(samp_ids)
    part._sample_xy = np.column_stack([np.concatenate(xs), np.concatenate(ys)])
    ix = np.floor(part._sample_xy[:, 0] / part._cell).astype(np.int64)
    iy = np.floor(part._sample_xy[:, 1] / part._cell).astype(np.int64)
    key = ix * 100003 + iy
    order = np.argsort(key, kind="stable")
    part._bucket = {}
    sk = key[order]
    bounds = np.flatnonzero(np.diff(sk)) + 1
    starts = np.concatenate([[0], bounds])
    ends = np.concatenate([bounds, [len(sk)]])
    for s0, e0 in zip(starts, ends):
        part._bucket[int(sk[s0])] = order[s0:e0]


def _coverage_fraction(part: Partition, resolution: int) -> float:
    p = part.params
    n = resolution
    cell = 2.0 * p.r_d / n
    cx = np.floor((part._sample_xy[:, 0] + p.r_d) / cell).astype(np.int64)
    cy = np.floor((part._sample_xy[:, 1] + p.r_d) / cell).astype(np.int64)
    hit = np.zeros((n + 2, n + 2), dtype=bool)
    # quadrant-I samples stand for all four mirror images
    for fx in (1.0, -1.0):
        for fy in (1.0, -1.0):
            gx = np.floor((fx * part._sample_xy[:, 0] + p.r_d) / cell).astype(np.int64)
            gy = np.floor((fy * part._sample_xy[:, 1] + p.r_d) / cell).astype(np.int64)
            ok = (gx >= 0) & (gx <= n + 1) & (gy >= 0) & (gy <= n + 1)
            hit[gx[ok], gy[ok]] = True
    del cx, cy
    # dilate by one cell: a sample anywhere in the 3x3 block covers the cell
    d = hit.copy()
    d[1:, :] |= hit[:-1, :]
    d[:-1, :] |= hit[1:, :]
    d2 = d.copy()
    d2[:, 1:] |= d[:, :-1]
    d2[:, :-1] |= d[:, 1:]
    centers = (np.arange(n + 2) + 0.5) * cell - p.r_d
    gx, gy = np.meshgrid(centers, centers, indexing="ij")
    rr = np.hypot(gx, gy)
    annulus = (rr > p.b + cell) & (rr < p.r_d - cell)
    total = int(annulus.sum())
    if total == 0:
        return 1.0
    return float((d2 & annulus).sum()) / total


# ---------------------------------------------------------------------------
# locate
# ---------------------------------------------------------------------------


def _unfold(sx: float, sy: float, wheels, v2: float, lam):
    u1, u2 = wheels
    lx, ly = lam
    if sx < 0.0:
        u1, u2 = u2, u1
        v2 = (-v2) % TWO_PI
        lx = -lx
    if sy < 0.0:
        u1, u2 = -u1, -u2
        v2 = (math.pi - v2) % TWO_PI
        ly = -ly
    return (u1, u2), v2, (lx, ly)


def _result(region, tau, wheels, v2, lam, point, dist, p, sx=1.0, sy=1.0, **kw):
    (u1, u2), v2u, (lx, ly) = _unfold(sx, sy, wheels, v2, lam)
    px, py = point
    return StrategyResult(
        region=region, time_to_escape=float(max(0.0, tau)),
        pursuer=WheelControls(u1, u2),
        evader=EvaderControl(p.v_a_max, v2u),
        costate=Costate(lx, ly),
        nearest_point=(px * sx, py * sy), distance=float(dist), **kw,
    )


def _candidate_arcs(part: Partition, xq: float, yq: float, k: int = 4):
    ix = int(math.floor(xq / part._cell))
    iy = int(math.floor(yq / part._cell))
    found = None
    for ring in range(1, 7):
        idxs = []
        for dx in range(-ring, ring + 1):
            for dy in range(-ring, ring + 1):
                key = (ix + dx) * 100003 + (iy + dy)
                got = part._bucket.get(key)
                if got is not None:
                    idxs.append(got)
        if idxs:
            found = np.concatenate(idxs)
            if ring >= 2 or len(found) > 16:
                break
    if found is None:
        found = np.arange(len(part._sample_arc))
    d2 = (part._sample_xy[found, 0] - xq) ** 2 + (part._sample_xy[found, 1] - yq) ** 2
    order = found[np.argsort(d2)]
    seen, picks = set(), []
    for j in order:
        a = int(part._sample_arc[j])
        if a in seen:
            continue
        seen.add(a)
        picks.append((a, int(part._sample_idx[j])))
        if len(picks) >= k:
            break
    return picks


def _refine_on_arc(arc: TrajectoryArc, xq: float, yq: float, j: int):
    lo = float(arc.tau[max(0, j - 2)])
    hi = float(arc.tau[min(len(arc.tau) - 1, j + 2)])
    if hi <= lo:
        t = float(arc.tau[j])
        x, y = arc.point_at(t)
        return t, float(x), float(y), math.hypot(float(x) - xq, float(y) - yq)

    def d2(t):
        x, y = arc.point_at(t)
        return (float(x) - xq) ** 2 + (float(y) - yq) ** 2

    res = minimize_scalar(d2, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    t = float(res.x)
    x, y = arc.point_at(t)
    return t, float(x), float(y), math.sqrt(float(res.fun))


def locate(state, part: Partition, surface_tol: float | None = None) -> StrategyResult:
    """Optimal-play answer at a reduced-frame state.

    Folds the query into the first quadrant, checks the zero-measure loci in
    priority order (critical point, axis segments, dispersal and switch
    curves), then matches the closed-form arc fields.  The returned time adds
    the first-order costate correction for the offset between the query and
    the matched arc point.
    """
    p = part.params
    x, y = _xy(state)
    r = math.hypot(x, y)
    if r > p.r_d * (1.0 + 1e-9):
        raise AlreadyEscapedError(f"state at r={r} is outside the detection circle")
    if r < p.b * (1.0 - 1e-9):
        raise InsideBodyError(f"state at r={r} is inside the robot body")
    tol = surface_tol if surface_tol is not None else 1e-3 * p.r_d
    sx = -1.0 if x < 0.0 else 1.0
    sy = -1.0 if y < 0.0 else 1.0
    xq, yq = abs(x), abs(y)

    if r >= p.r_d * (1.0 - 1e-12):
        s_polar = math.atan2(x, y) % TWO_PI
        up = usable_part_check(s_polar, p)
        u1, u2 = up.terminal_controls
        return StrategyResult(
            region=REGION_TERMINAL, time_to_escape=0.0,
            pursuer=WheelControls(u1, u2), evader=EvaderControl(p.v_a_max, s_polar),
            costate=None, nearest_point=(x, y), distance=0.0,
        )

    regime, loci = part.regime, part.loci
    crit, split, focal = regime.critical, regime.split, regime.focal

    if crit is not None and math.hypot(xq, yq - crit.y_c) <= tol:
        g = 1.0 / (p.v_a_max - p.v_r_max)
        return _result(
            REGION_CRITICAL_POINT, crit.tau_c, (p.v_r_max, p.v_r_max), 0.0,
            (0.0, -g), (0.0, crit.y_c), math.hypot(xq, yq - crit.y_c), p,
            sx=sx, sy=sy, fan=(0.0, crit.s_c),
        )

    if regime.has_us and loci.us_segment is not None and xq <= tol:
        lo, hi = loci.us_segment
        if lo - tol <= yq <= hi + tol:
            yc = min(max(yq, lo), hi)
            tau = crit.tau_c + (crit.y_c - yc) / (p.v_a_max - p.v_r_max)
            g = 1.0 / (p.v_a_max - p.v_r_max)
            return _result(
                REGION_US, tau, (p.v_r_max, p.v_r_max), 0.0, (0.0, -g),
                (0.0, yc), xq, p, sx=sx, sy=sy,
            )

    if focal is not None and yq <= tol:
        if p.b - tol <= xq <= focal.x_f + tol:
            xc = min(max(xq, p.b), focal.x_f)
            tau = focal.tau_f + sf.fs_travel_tau(xc, p, focal)
            a = sf.fs_heading(xc, p)
            g = 1.0 / (p.v_a_max * math.sin(a) ** 2)
            # the segment is its own mirror image in y and the constrained
            # heading that moves the state outward is unique, so only the
            # x-fold participates in the unfolding
            return _result(
                REGION_FS, tau, (p.v_r_max, -p.v_r_max), a,
                (-g * math.sin(a), -g * math.cos(a)), (xc, 0.0), yq, p,
                sx=sx, sy=1.0,
            )

    # dispersal segments: two symmetric optimal branches
    if part._vds_table is not None and regime.has_vertical_ds and xq <= tol:
        t = part._vds_table
        if t[0, 0] - tol <= yq <= t[-1, 0] + tol:
            yc = min(max(yq, t[0, 0]), t[-1, 0])
            tau = float(np.interp(yc, t[:, 0], t[:, 1]))
            v2 = float(np.interp(yc, t[:, 0], t[:, 2]))
            al = v2
            g_lam = (-math.sin(al), -math.cos(al))
            main = _result(REGION_DS, tau, (p.v_r_max, -p.v_r_max), v2, g_lam,
                           (0.0, yc), xq, p, sx=1.0, sy=sy, multiplicity=2)
            alt = _result(REGION_DS, tau, (p.v_r_max, -p.v_r_max), v2, g_lam,
                          (0.0, yc), xq, p, sx=-1.0, sy=sy, multiplicity=2)
            return StrategyResult(**{**main.__dict__, "alternates": (alt,)})

    if part._hds_table is not None and regime.has_horizontal_ds and yq <= tol:
        t = part._hds_table
        if t[0, 0] - tol <= xq <= t[-1, 0] + tol:
            xc = min(max(xq, t[0, 0]), t[-1, 0])
            tau = float(np.interp(xc, t[:, 0], t[:, 1]))
            v2 = float(np.interp(xc, t[:, 0], t[:, 2]))
            al = v2
            g_lam = (-math.sin(al), -math.cos(al))
            main = _result(REGION_DS, tau, (p.v_r_max, -p.v_r_max), v2, g_lam,
                           (xc, 0.0), yq, p, sx=sx, sy=1.0, multiplicity=2)
            alt = _result(REGION_DS, tau, (p.v_r_max, -p.v_r_max), v2, g_lam,
                          (xc, 0.0), yq, p, sx=sx, sy=-1.0, multiplicity=2)
            return StrategyResult(**{**main.__dict__, "alternates": (alt,)})

    if loci.ts_curve is not None and len(loci.ts_curve):
        d2 = (loci.ts_curve[:, 2] - xq) ** 2 + (loci.ts_curve[:, 3] - yq) ** 2
        j = int(np.argmin(d2))
        if math.sqrt(float(d2[j])) <= tol:
            s_j, tau_j = float(loci.ts_curve[j, 0]), float(loci.ts_curve[j, 1])
            g = sf.gamma_primary(s_j, p)
            return _result(
                REGION_TS, tau_j, (p.v_r_max, p.v_r_max), s_j,
                (-g * math.sin(s_j), -g * math.cos(s_j)),
                (float(loci.ts_curve[j, 2]), float(loci.ts_curve[j, 3])),
                math.sqrt(float(d2[j])), p, sx=sx, sy=sy,
            )

    picks = _candidate_arcs(part, xq, yq)
    best = None
    for a_i, j in picks:
        arc = part._q1_arcs[a_i]
        t, px, py, d = _refine_on_arc(arc, xq, yq, j)
        if best is None or d < best[4]:
            best = (arc, t, px, py, d)
    arc, t, px, py, d = best
    lx, ly = arc.costate_at(t)
    lx, ly = float(lx), float(ly)
    tau = float(t) + lx * (xq - px) + ly * (yq - py)
    v2 = float(arc.heading_at(t)) % TWO_PI
    return _result(
        arc.family.value, tau, arc.wheels, v2, (lx, ly), (px, py), d, p,
        sx=sx, sy=sy, arc=arc, tau_on_arc=float(t),
    )


def value(state, part: Partition) -> float:
    """Time-to-escape under optimal play from both sides."""
    return locate(state, part).time_to_escape
