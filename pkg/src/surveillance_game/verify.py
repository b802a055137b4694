"""Verification suites for a synthesized partition.

Each suite checks one kind of claim the construction makes and returns a
small report.  The checks are deliberately independent of how the arcs were
built: the Hamiltonian suite re-evaluates closed forms through the control
machinery, the continuity suite re-integrates trajectories forward with a
generic fixed-step scheme, and the grid suite compares against the
dynamic-programming values that share nothing with the synthesis.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import EvaderControl, GameParams, WheelControls
from .errors import RegimeError, ValidationError
from .pmp import Costate, hamiltonian
from .surfaces import (
    ArcFamily,
    build_fs_arc,
    build_primary_arc,
    build_ts_tributary_arc,
    build_us_arc,
    build_us_tributary_arc,
    critical_point,
)

TWO_PI = 2.0 * math.pi


def _wrap(a: float) -> float:
    """Angle folded into (-pi, pi]."""
    return (a + math.pi) % TWO_PI - math.pi


@dataclass
class SuiteReport:
    """Outcome of one verification suite."""

    name: str
    passed: bool
    stats: dict
    failures: list = field(default_factory=list)
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, tuple):
                return [clean(x) for x in v]
            return v

        return {
            "suite": self.name,
            "passed": bool(self.passed),
            "stats": {k: clean(v) for k, v in self.stats.items()},
            "failures": [str(f) for f in self.failures],
            "elapsed_s": round(self.elapsed, 3),
        }

    def __str__(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        core = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in self.stats.items())
        return f"[{tag}] {self.name}: {core}"


# ---------------------------------------------------------------------------
# Hamiltonian suite
# ---------------------------------------------------------------------------


def hamiltonian_suite(part, samples_per_family: int = 1000, tol: float = 1e-6,
                      seed: int = 11) -> SuiteReport:
    """|H| at random points of every arc family, through the control API.

    State, costate and controls are all re-evaluated from the arcs' closed
    forms at freshly drawn retro-times, then fed to the generic Hamiltonian;
    nothing is read from the stored sample grids.
    """
    t0 = time.time()
    p = part.params
    rng = np.random.default_rng(seed)
    by_family: dict = {}
    for arc in part.arcs:
        if arc.quadrant == "I":
            by_family.setdefault(arc.family, []).append(arc)

    stats: dict = {}
    failures = []
    worst = 0.0
    total = 0
    for fam, arcs in sorted(by_family.items(), key=lambda kv: kv[0].value):
        fam_worst = 0.0
        for _ in range(samples_per_family):
            arc = arcs[rng.integers(len(arcs))]
            lo, hi = arc.retro_span
            tau = rng.uniform(lo, hi)
            x, y = arc.point_at(tau)
            lx, ly = arc.costate_at(tau)
            v2 = float(arc.heading_at(tau)) % TWO_PI
            h = hamiltonian(
                (float(x), float(y)),
                Costate(float(lx), float(ly)),
                WheelControls(*arc.wheels),
                EvaderControl(p.v_a_max, v2),
                p,
            )
            fam_worst = max(fam_worst, abs(h))
            total += 1
        stats[f"max_H_{fam.value}"] = fam_worst
        worst = max(worst, fam_worst)
        if fam_worst > tol:
            failures.append(f"{fam.value}: max |H| = {fam_worst:.3e} > {tol:.1e}")
    stats["max_H"] = worst
    stats["n_samples"] = total
    stats["n_families"] = len(by_family)
    return SuiteReport("hamiltonian", worst <= tol and total > 0, stats,
                       failures, time.time() - t0)


# ---------------------------------------------------------------------------
# continuity suite: junction gaps and forward re-integration
# ---------------------------------------------------------------------------


class _ParentCache:
    """Fresh closed-form parent arcs, resolved from the child's back-link.

    The back-link tag alone is ambiguous for ("US", param): seen from an
    axis tributary it names the axis arc, seen from the focal arc it names
    the tangent tributary.  The child's family disambiguates.
    """

    def __init__(self, part):
        self.part = part
        self.p = part.params
        self.spacing = part.spacing
        self._cache: dict = {}

    def resolve(self, child):
        if child.parent is None:
            return None
        tag, param = child.parent
        if tag == ArcFamily.US.value and child.family == ArcFamily.FS:
            tag = "US_SOURCE"
        key = (tag, None if param is None else round(float(param), 12))
        if key not in self._cache:
            self._cache[key] = self._build(tag, param)
        return self._cache[key]

    def _build(self, tag, param):
        p, sp = self.p, self.spacing
        if tag == ArcFamily.PRIMARY.value:
            return build_primary_arc(float(param), p, sp)
        if tag == ArcFamily.US.value:
            return build_us_arc(p, self.part.regime.split, sp)
        if tag == ArcFamily.FS.value:
            return build_fs_arc(p, self.part.regime.focal, sp)
        if tag == "TS":
            return build_ts_tributary_arc(float(param), p, sp)
        if tag == "US_SOURCE":
            return build_us_tributary_arc(float(param), p, sp)
        raise ValidationError(f"unknown parent link {tag!r}")


def _segment_heading(arc, tau: float) -> float:
    """Scalar heading on an arc, avoiding array round-trips in inner loops."""
    if arc.kind == "focal":
        rvb = arc._rho_v_b
        sx = arc._focal_sign
        theta = math.asin(max(-1.0, min(1.0, arc.x0 / rvb))) + arc.w * (tau - arc.tau0)
        return sx * math.acos(max(-1.0, min(1.0, -sx * math.sin(theta))))
    return arc.a0 - arc.w * (tau - arc.tau0)


def _integrate_chain(segments, p: GameParams, dt: float):
    """Forward flight through retro-parameterized segments; returns the
    escape time, or None when the detection circle is never reached."""
    x, y = None, None
    t_base = 0.0
    va = p.v_a_max
    rd = p.r_d
    for k, (arc, tau_hi, tau_lo) in enumerate(segments):
        if x is None:
            px, py = arc.point_at(tau_hi)
            x, y = float(px), float(py)
        u1, u2 = arc.wheels
        um = (u1 + u2) / 2.0
        wr = (u2 - u1) / (2.0 * p.b)
        duration = tau_hi - tau_lo
        # overshoot allowance on the final leg so roundoff cannot strand the
        # state a hair inside the circle
        last = k == len(segments) - 1
        horizon = duration * (1.05 if last else 1.0) + (10 * dt if last else 0.0)
        t = 0.0
        while t < horizon - 1e-15:
            h = min(dt, horizon - t)

            def deriv(qx, qy, tau):
                a = _segment_heading(arc, tau)
                return (wr * qy + va * math.sin(a),
                        -wr * qx - um + va * math.cos(a))

            tau_t = tau_hi - t
            k1 = deriv(x, y, tau_t)
            k2 = deriv(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1], tau_t - 0.5 * h)
            k3 = deriv(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1], tau_t - 0.5 * h)
            k4 = deriv(x + h * k3[0], y + h * k3[1], tau_t - h)
            nx = x + (h / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            ny = y + (h / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            if last and math.hypot(nx, ny) >= rd:
                # the step is close to straight: exact crossing of its chord
                ex, ey = nx - x, ny - y
                aa = ex * ex + ey * ey
                bb = x * ex + y * ey
                cc = x * x + y * y - rd * rd
                disc = max(bb * bb - aa * cc, 0.0)
                s = (-bb + math.sqrt(disc)) / aa if aa > 0 else 0.0
                return t_base + t + s * h
            x, y = nx, ny
            t += h
        t_base += duration
    return None


def _forward_chain(arc, tau_star: float, cache: _ParentCache):
    """Segments (arc, tau_hi, tau_lo) from a point back to the circle."""
    segments = []
    cur = arc
    tau_hi = tau_star
    while cur is not None:
        tau_lo = cur.tau0 if cur.family != ArcFamily.PRIMARY else 0.0
        segments.append((cur, tau_hi, tau_lo))
        tau_hi = tau_lo
        cur = cache.resolve(cur)
    return segments


def continuity_suite(part, junction_tol: float = 1e-8, n_paths: int = 100,
                     path_tol: float = 1e-3, dt: float = 2e-3,
                     seed: int = 12) -> SuiteReport:
    """Junction closure plus forward re-integration down to the circle.

    Every first-quadrant arc's anchor is compared against its parent's
    closed form at the shared retro-time, position and costate both; then
    random points on random arcs are flown forward through the whole chain
    of regimes with a generic integrator and must cross the detection circle
    at the stored time.
    """
    t0 = time.time()
    p = part.params
    cache = _ParentCache(part)
    failures = []

    max_pos_gap = 0.0
    max_costate_gap = 0.0
    n_junctions = 0
    q1 = [a for a in part.arcs if a.quadrant == "I"]
    for arc in q1:
        parent = cache.resolve(arc)
        if parent is None:
            continue
        tau_j = arc.tau0
        ax, ay = arc.point_at(tau_j)
        px, py = parent.point_at(tau_j)
        gap = math.hypot(float(ax) - float(px), float(ay) - float(py))
        max_pos_gap = max(max_pos_gap, gap)
        n_junctions += 1
        if gap > junction_tol:
            fam = arc.family.value
            failures.append(f"{fam} junction gap {gap:.3e} at tau={tau_j:.6f}")
        # the axis arc is a ridge of the time field: a tributary joining it
        # carries the one-sided gradient, so only position closes there
        if arc.family == ArcFamily.US_TRIBUTARY:
            continue
        alx, aly = arc.costate_at(tau_j)
        plx, ply = parent.costate_at(tau_j)
        cgap = math.hypot(float(alx) - float(plx), float(aly) - float(ply))
        max_costate_gap = max(max_costate_gap, cgap)
        if cgap > junction_tol:
            fam = arc.family.value
            failures.append(f"{fam} costate gap {cgap:.3e} at tau={tau_j:.6f}")

    focal_identity = None
    focal = part.regime.focal
    if focal is not None and focal.source == "TS":
        # scale continuity onto the singular arc, not imposed anywhere in the
        # construction: cos s* must equal x_f^2 / (rho_v b^2)
        focal_identity = abs(math.cos(focal.family_param)
                             - focal.x_f ** 2 / (p.rho_v * p.b ** 2))
        if focal_identity > 1e-9:
            failures.append(f"focal entry scale identity off by {focal_identity:.3e}")

    rng = np.random.default_rng(seed)
    max_rel = 0.0
    n_flown = 0
    for _ in range(n_paths):
        arc = q1[rng.integers(len(q1))]
        lo, hi = arc.retro_span
        if hi - lo <= 1e-12:
            continue
        tau_star = rng.uniform(lo + 1e-9, hi)
        segments = _forward_chain(arc, tau_star, cache)
        t_escape = _integrate_chain(segments, p, dt)
        if t_escape is None:
            failures.append(
                f"{arc.family.value} path from tau={tau_star:.6f} missed the circle")
            max_rel = math.inf
            continue
        rel = abs(t_escape - tau_star) / tau_star
        max_rel = max(max_rel, rel)
        n_flown += 1
        if rel > path_tol:
            failures.append(
                f"{arc.family.value} path tau={tau_star:.6f} escaped at "
                f"{t_escape:.6f} (rel {rel:.2e})")

    stats = {
        "max_junction_gap": max_pos_gap,
        "max_costate_gap": max_costate_gap,
        "n_junctions": n_junctions,
        "max_reintegration_rel_err": max_rel,
        "n_paths": n_flown,
    }
    if focal_identity is not None:
        stats["focal_entry_identity"] = focal_identity
    passed = (max_pos_gap <= junction_tol and max_costate_gap <= junction_tol
              and max_rel <= path_tol and n_flown > 0)
    return SuiteReport("continuity", passed, stats, failures, time.time() - t0)


# ---------------------------------------------------------------------------
# symmetry suite
# ---------------------------------------------------------------------------


def symmetry_suite(part, n_states: int = 200, tol: float = 1e-9,
                   seed: int = 13) -> SuiteReport:
    """Escape times equal across mirror images, controls equivariant.

    Controls are checked behaviorally: the reported optimal controls at a
    mirrored state must generate the mirrored velocity field, whatever sign
    convention the representation uses.
    """
    from .partition import locate

    t0 = time.time()
    p = part.params
    rng = np.random.default_rng(seed)
    failures = []
    max_dt_gap = 0.0
    max_field_gap = 0.0
    n_done = 0
    attempts = 0
    while n_done < n_states and attempts < 50 * n_states:
        attempts += 1
        x = rng.uniform(0.05 * p.r_d, p.r_d)
        y = rng.uniform(0.05 * p.r_d, p.r_d)
        if not p.b * 1.05 < math.hypot(x, y) < p.r_d * 0.995:
            continue

        results = {}
        ok = True
        for fx, fy in ((1, 1), (-1, 1), (1, -1), (-1, -1)):
            try:
                results[(fx, fy)] = locate((fx * x, fy * y), part)
            except Exception as exc:        # noqa: BLE001 - diagnostic path
                failures.append(f"locate failed at {(fx * x, fy * y)}: {exc!r}")
                ok = False
                break
        if not ok:
            continue

        base = results[(1, 1)]
        ref_field = _control_field((x, y), base, p)
        for (fx, fy), res in results.items():
            gap = abs(res.time_to_escape - base.time_to_escape)
            max_dt_gap = max(max_dt_gap, gap)
            if gap > tol * max(1.0, base.time_to_escape):
                failures.append(
                    f"time mismatch at ({fx * x:.3f},{fy * y:.3f}): "
                    f"{res.time_to_escape!r} vs {base.time_to_escape!r}")
            f = _control_field((fx * x, fy * y), res, p)
            fgap = math.hypot(f[0] - fx * ref_field[0], f[1] - fy * ref_field[1])
            max_field_gap = max(max_field_gap, fgap)
            if fgap > 1e-6:
                failures.append(
                    f"control field not equivariant at ({fx * x:.3f},{fy * y:.3f}),"
                    f" gap {fgap:.3e}")
        n_done += 1

    stats = {
        "max_time_gap": max_dt_gap,
        "max_field_gap": max_field_gap,
        "n_states": n_done,
    }
    passed = not failures and n_done > 0
    return SuiteReport("symmetry", passed, stats, failures, time.time() - t0)


def _control_field(q, res, p: GameParams):
    """Forward relative velocity generated by a located result's controls."""
    from .core import reduced_dynamics

    u = res.pursuer
    if not isinstance(u, WheelControls):
        u = WheelControls(*u)
    v = res.evader
    if not isinstance(v, EvaderControl):
        v = EvaderControl(*v)
    return reduced_dynamics(q, u, v, p)


# ---------------------------------------------------------------------------
# escape-fan suite
# ---------------------------------------------------------------------------


def fan_suite(p: GameParams, n_headings: int = 20, tol: float = 1e-6) -> SuiteReport:
    """Escape times from the apex are heading-independent across the fan.

    Straight forward flight under every fan heading, robot driving ahead;
    all crossings of the detection circle must agree to tol seconds.
    """
    t0 = time.time()
    crit = critical_point(p)
    if crit is None:
        raise RegimeError("no interior apex point for these parameters")
    times = []
    rd = p.r_d
    for v2 in np.linspace(0.0, crit.s_c, n_headings):
        # piecewise-linear integration is exact here: both players hold
        # constant velocity, so each step's chord is the true path
        vx = p.v_a_max * math.sin(v2)
        vy = p.v_a_max * math.cos(v2) - p.v_r_max
        x, y = 0.0, crit.y_c
        t, h = 0.0, 1e-3
        t_cross = None
        while t < 3.0 * crit.tau_c:
            nx, ny = x + h * vx, y + h * vy
            if math.hypot(nx, ny) >= rd:
                aa = vx * vx + vy * vy
                bb = x * vx + y * vy
                cc = x * x + y * y - rd * rd
                s = (-bb + math.sqrt(max(bb * bb - aa * cc, 0.0))) / aa
                t_cross = t + s
                break
            x, y, t = nx, ny, t + h
        times.append(t_cross if t_cross is not None else math.inf)
    times = np.asarray(times)
    spread = float(times.max() - times.min())
    stats = {
        "spread": spread,
        "mean_time": float(times.mean()),
        "expected": crit.tau_c,
        "n_headings": n_headings,
    }
    failures = []
    if not np.all(np.isfinite(times)):
        failures.append("some fan headings never escaped")
    if spread > tol:
        failures.append(f"escape-time spread {spread:.3e} > {tol:.1e}")
    passed = not failures
    return SuiteReport("fan", passed, stats, failures, time.time() - t0)


# ---------------------------------------------------------------------------
# radial-deviation suite (fast-evader sanity)
# ---------------------------------------------------------------------------


def radial_suite(part, tol_deg: float = 2.0) -> SuiteReport:
    """How far the straight escape paths are from radial rays.

    Meaningful for very fast evaders.  Gates on the direction of the relative
    path against the radial ray through its exit point, the angle that makes
    plotted arcs look radial or not.  The pointwise angle between the escape
    heading and the local radial direction is reported as a parallax stat;
    it is larger near the body, where the pursuer's displacement subtends
    (v_r/v_a)(r_d - b)/b radians however fast the evader is.
    """
    t0 = time.time()
    p = part.params
    worst_path = 0.0
    worst_parallax = 0.0
    n = 0
    for arc in part.arcs:
        if arc.family != ArcFamily.PRIMARY or arc.quadrant != "I":
            continue
        s = arc.family_param
        speed = math.hypot(p.v_a_max * math.sin(s),
                           p.v_a_max * math.cos(s) - p.v_r_max)
        dev = math.acos(min(1.0, (p.v_a_max - p.v_r_max * math.cos(s)) / speed))
        worst_path = max(worst_path, dev)
        xy = arc.xy
        phi = np.arctan2(xy[:, 0], xy[:, 1])
        parallax = np.abs((s - phi + math.pi) % TWO_PI - math.pi)
        worst_parallax = max(worst_parallax, float(parallax.max()))
        n += len(xy)
    path_deg = math.degrees(worst_path)
    stats = {
        "max_path_deviation_deg": path_deg,
        "max_parallax_deg": math.degrees(worst_parallax),
        "n_samples": n,
    }
    failures = ([] if path_deg <= tol_deg
                else [f"path direction deviates {path_deg:.2f} deg from radial"])
    return SuiteReport("radial", not failures and n > 0, stats, failures,
                       time.time() - t0)


# ---------------------------------------------------------------------------
# independent-grid suite
# ---------------------------------------------------------------------------


def oracle_suite(part, grid=None, n: int = 201, k: int = 64, dt: float = 0.01,
                 n_samples: int = 500, tol: float = 0.03,
                 mirror_tol: float = 1e-4, seed: int = 20240914) -> SuiteReport:
    """Value agreement with the dynamic-programming grid on primary arcs.

    Builds the grid when one is not supplied (minutes of work at the default
    settings).  Samples stay at least two grid cells away from every
    singular curve, where the grid's bilinear interpolation is trustworthy.
    """
    from .oracle import compare, dp_solve, mirror_asymmetry, sample_primary_states

    t0 = time.time()
    if grid is None:
        grid = dp_solve(part.params, n=n, k=k, dt=dt)
    samples = sample_primary_states(part, grid.h, n_samples, seed=seed)
    report = compare(part, grid, samples)
    asym = mirror_asymmetry(grid)
    failures = []
    if report.max_rel_err > tol:
        failures.append(
            f"max relative value error {100 * report.max_rel_err:.2f}% "
            f"> {100 * tol:.0f}%")
    if asym > mirror_tol:
        failures.append(f"grid mirror asymmetry {asym:.2e} > {mirror_tol:.0e}")
    stats = {
        "max_rel_err": report.max_rel_err,
        "mean_rel_err": report.mean_rel_err,
        "rms_rel_err": report.rms_rel_err,
        "n_samples": report.n_states,
        "mirror_asymmetry": asym,
        "grid_n": grid.n,
        "grid_headings": grid.headings,
        "grid_dt": grid.dt,
        "sweeps": grid.sweeps,
    }
    passed = not failures and report.n_states >= min(n_samples, 100)
    return SuiteReport("oracle", passed, stats, failures, time.time() - t0)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

SUITES = ("hamiltonian", "continuity", "symmetry", "fan", "oracle")


def run_suites(part, names=None, oracle_grid=None, **overrides) -> list[SuiteReport]:
    """Run the named suites (all five by default) against one partition."""
    if names is None:
        names = SUITES
    reports = []
    for name in names:
        if name == "hamiltonian":
            reports.append(hamiltonian_suite(part, **overrides.get(name, {})))
        elif name == "continuity":
            reports.append(continuity_suite(part, **overrides.get(name, {})))
        elif name == "symmetry":
            reports.append(symmetry_suite(part, **overrides.get(name, {})))
        elif name == "fan":
            reports.append(fan_suite(part.params, **overrides.get(name, {})))
        elif name == "oracle":
            reports.append(oracle_suite(part, grid=oracle_grid,
                                        **overrides.get(name, {})))
        else:
            raise ValidationError(f"unknown verification suite {name!r}")
    return reports
