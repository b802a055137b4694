"""Brute-force value computation on a grid, independent of the arc synthesis.

A semi-Lagrangian fixed-point iteration for the time-to-escape value of the
reduced game: the evader minimizes, the robot maximizes, both committing for
one step of length dt.  The scheme deliberately shares nothing with the
closed-form construction; it only needs the reduced dynamics.

Numerical treatment, chosen in the prototype and kept:

* nodes outside the detection circle carry the linearized continuation
  (r_d - r) / closure-speed instead of zero, held fixed during iteration and
  zeroed on output, so the interpolated zero-locus sits on the circle rather
  than half a cell outside it;
* steps that cross the circle mid-step get the exact crossing fraction of dt
  (cut-cell) instead of the interpolated neighbor value;
* values start at a uniform over-estimate and are clamped monotonically
  downward, which keeps the iteration contraction-safe in float32.

The robot body is not modeled as an obstacle: optimal play never drives the
relative state through it, and comparisons exclude the near-body band.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import GameParams
from .errors import ConvergenceError, ValidationError

# robot wheel pairs the oracle considers, in policy-index order:
# ahead, reverse, stop, clockwise spin, counter-clockwise spin (units of v_r_max)
WHEEL_PAIRS = ((1, 1), (-1, -1), (0, 0), (1, -1), (-1, 1))


@dataclass
class ValueGrid:
    """Grid of escape times with bilinear interpolation."""

    params: GameParams
    axis: np.ndarray           # shared x/y node coordinates
    values: np.ndarray         # (n, n), first index x, second index y
    h: float
    dt: float
    headings: int
    sweeps: int
    converged: bool
    order: str                 # 'min_max' (evader commits last) or 'max_min'
    elapsed: float
    # one-step-optimal controls at the fixed point ('min_max' only):
    # evader_policy holds the heading angle, pursuer_policy the WHEEL_PAIRS index
    evader_policy: np.ndarray | None = None    # (n, n) float32, radians
    pursuer_policy: np.ndarray | None = None   # (n, n) int8

    @property
    def n(self) -> int:
        return len(self.axis)

    def interpolate(self, x, y):
        """Bilinear value lookup; accepts scalars or arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        L = float(self.axis[-1])
        n = self.n
        px = np.clip((x + L) / self.h, 0.0, n - 1 - 1e-9)
        py = np.clip((y + L) / self.h, 0.0, n - 1 - 1e-9)
        ix = px.astype(int)
        iy = py.astype(int)
        wx = px - ix
        wy = py - iy
        v = self.values
        out = (v[ix, iy] * (1 - wx) * (1 - wy) + v[ix, iy + 1] * (1 - wx) * wy
               + v[ix + 1, iy] * wx * (1 - wy) + v[ix + 1, iy + 1] * wx * wy)
        return float(out) if out.ndim == 0 else out


def dp_solve(p: GameParams, n: int = 201, k: int = 64, dt: float = 0.01,
             margin: float = 1.05, tol: float = 1e-4, max_sweeps: int = 3000,
             order: str = "min_max", verbose: bool = False) -> ValueGrid:
    """Iterate the one-step game to a fixed point on an n-by-n grid.

    k full-speed evader headings; the robot chooses among the five extreme
    wheel pairs.  order picks which player commits first inside a step:
    'min_max' lets the robot see the evader's committed heading (the value
    favors the robot least), 'max_min' the reverse.  Their gap bounds the
    one-step information advantage and shrinks with dt.
    """
    if order not in ("min_max", "max_min"):
        raise ValidationError(f"order must be 'min_max' or 'max_min', got {order!r}")
    if n < 3 or k < 4 or dt <= 0.0:
        raise ValidationError(f"bad oracle settings n={n} k={k} dt={dt}")
    vr, va, b, rd = p.v_r_max, p.v_a_max, p.b, p.r_d
    if va <= vr:
        raise ValidationError("the oracle needs a faster evader (finite values)")

    L = rd * margin
    g = np.linspace(-L, L, n)
    h = g[1] - g[0]
    X, Y = np.meshgrid(g, g, indexing="ij")
    Xf, Yf = X.ravel(), Y.ravel()
    Rf = np.hypot(Xf, Yf)
    escaped = Rf >= rd
    cap = np.float32(1.5 * rd / (va - vr))
    V = np.full(n * n, cap, np.float32)
    with np.errstate(divide="ignore", invalid="ignore"):
        closure = va - vr * np.abs(Yf) / np.where(Rf > 0, Rf, 1.0)
    V[escaped] = ((rd - Rf) / closure)[escaped]
    ghost_vals = V[escaped].copy()

    pur = [(vr, vr), (-vr, -vr), (0.0, 0.0), (vr, -vr), (-vr, vr)]
    heads = np.arange(k) * (2.0 * math.pi / k)
    combos = []
    for (u1, u2) in pur:
        w = (u2 - u1) / (2.0 * b)
        um = (u1 + u2) / 2.0
        for v2 in heads:
            vx = dt * (w * Yf + va * np.sin(v2))
            vy = dt * (-w * Xf - um + va * np.cos(v2))
            nx, ny = Xf + vx, Yf + vy
            # exact fraction of the step at which the circle is crossed
            a = vx * vx + vy * vy
            bq = Xf * vx + Yf * vy
            c = Rf * Rf - rd * rd
            disc = np.maximum(bq * bq - a * c, 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                alpha = (-bq + np.sqrt(disc)) / np.where(a > 0, a, 1.0)
            crossed = (~escaped) & (np.hypot(nx, ny) >= rd)
            cc = np.where(crossed, alpha * dt - dt, 0.0).astype(np.float32)
            px = np.clip((nx + L) / h, 0, n - 1 - 1e-7)
            py = np.clip((ny + L) / h, 0, n - 1 - 1e-7)
            ix = px.astype(np.int32)
            iy = py.astype(np.int32)
            wx = (px - ix).astype(np.float32)
            wy = (py - iy).astype(np.float32)
            combos.append((ix * n + iy, wx, wy, crossed, cc))

    npur, nv = len(pur), k

    def step_value(ip, iv):
        flat, wx, wy, crossed, cc = combos[ip * nv + iv]
        v00 = V[flat]
        v01 = V[flat + 1]
        v10 = V[flat + n]
        v11 = V[flat + n + 1]
        interp = (v00 * (1 - wx) * (1 - wy) + v01 * (1 - wx) * wy
                  + v10 * wx * (1 - wy) + v11 * wx * wy)
        np.copyto(interp, cc, where=crossed)
        return interp

    t0 = time.time()
    sweeps = 0
    converged = False
    for _ in range(max_sweeps):
        outer = None
        for ip in range(npur):
            cur = np.empty((nv, n * n), np.float32)
            for iv in range(nv):
                cur[iv] = step_value(ip, iv)
            if order == "min_max":
                # robot answers the committed heading: max over robot, per heading
                outer = cur.copy() if outer is None else np.maximum(outer, cur)
            else:
                # evader answers the committed wheels: min over headings, per robot
                reduced = cur.min(axis=0)
                outer = reduced if outer is None else np.maximum(outer, reduced)
        if order == "min_max":
            newV = dt + outer.min(axis=0)
        else:
            newV = dt + outer
        newV[escaped] = ghost_vals
        np.minimum(newV, V, out=newV)
        change = float(np.max(np.abs(newV - V)))
        V = newV
        sweeps += 1
        if change < tol:
            converged = True
            break
    elapsed = time.time() - t0
    if verbose:
        print(f"dp_solve: sweeps={sweeps} change_tol={tol} time={elapsed:.0f}s")
    if not converged:
        raise ConvergenceError(
            f"value iteration did not reach tol={tol} in {max_sweeps} sweeps"
        )

    evader_policy = pursuer_policy = None
    if order == "min_max":
        # one more pass over the converged values records each player's choice
        best = np.full(n * n, np.inf, np.float32)
        ev_idx = np.zeros(n * n, np.int16)
        pu_idx = np.zeros(n * n, np.int8)
        stack = np.empty((npur, n * n), np.float32)
        for iv in range(nv):
            for ip in range(npur):
                stack[ip] = step_value(ip, iv)
            responded = stack.max(axis=0)
            ip_at = stack.argmax(axis=0).astype(np.int8)
            better = responded < best
            np.minimum(best, responded, out=best)
            ev_idx[better] = iv
            pu_idx[better] = ip_at[better]
        evader_policy = heads[ev_idx].astype(np.float32).reshape(n, n)
        pursuer_policy = pu_idx.reshape(n, n)
        evader_policy[escaped.reshape(n, n)] = 0.0
        pursuer_policy[escaped.reshape(n, n)] = 0

    Vout = V.copy()
    Vout[escaped] = 0.0
    return ValueGrid(
        params=p, axis=g, values=Vout.reshape(n, n), h=float(h), dt=dt,
        headings=k, sweeps=sweeps, converged=converged, order=order,
        elapsed=elapsed, evader_policy=evader_policy,
        pursuer_policy=pursuer_policy,
    )


# ---------------------------------------------------------------------------
# comparison against the closed-form synthesis
# ---------------------------------------------------------------------------


@dataclass
class ComparisonReport:
    n_states: int
    max_rel_err: float
    mean_rel_err: float
    rms_rel_err: float
    worst: list = field(default_factory=list)   # (x, y, partition, oracle, rel)

    def __str__(self):
        return (f"{self.n_states} states: max {100 * self.max_rel_err:.3f}%  "
                f"mean {100 * self.mean_rel_err:.3f}%  rms {100 * self.rms_rel_err:.3f}%")


def _loci_cloud(part) -> np.ndarray:
    """Dense point samples of every singular curve, all four quadrants."""
    pts = []
    loci = part.loci
    if loci.ts_curve is not None and len(loci.ts_curve):
        xy = loci.ts_curve[:, 2:4]
        pts.append(xy)
    if loci.us_segment is not None:
        lo, hi = loci.us_segment
        ys = np.linspace(lo, hi, 200)
        pts.append(np.column_stack([np.zeros_like(ys), ys]))
    for (lo, hi) in loci.fs_segments:
        xs = np.linspace(lo, hi, 100)
        pts.append(np.column_stack([xs, np.zeros_like(xs)]))
    for seg in loci.ds_segments:
        cs = np.linspace(seg.lo, seg.hi, 200)
        zeros = np.zeros_like(cs)
        if seg.axis == "x=0":
            pts.append(np.column_stack([zeros, cs]))
        else:
            pts.append(np.column_stack([cs, zeros]))
    if loci.critical_point is not None:
        pts.append(np.array([[0.0, loci.critical_point.y_c]]))
    if not pts:
        return np.zeros((0, 2))
    q1 = np.vstack(pts)
    all_q = [q1]
    for fx, fy in ((-1, 1), (1, -1), (-1, -1)):
        all_q.append(q1 * np.array([fx, fy]))
    return np.vstack(all_q)


def sample_states(part, grid_h: float, n_states: int = 500, seed: int = 20240914,
                  min_cells: float = 2.0) -> np.ndarray:
    """Deterministic annulus states at least min_cells grid cells from loci."""
    from .partition import locate  # local import to avoid a cycle at load

    p = part.params
    cloud = _loci_cloud(part)
    rng = np.random.default_rng(seed)
    keep = []
    guard = min_cells * grid_h
    attempts = 0
    while len(keep) < n_states and attempts < 200 * n_states:
        attempts += 1
        x = rng.uniform(-p.r_d, p.r_d)
        y = rng.uniform(-p.r_d, p.r_d)
        r = math.hypot(x, y)
        if not (p.b + guard) < r < (p.r_d - guard):
            continue
        if len(cloud):
            d2 = np.min((cloud[:, 0] - x) ** 2 + (cloud[:, 1] - y) ** 2)
            if d2 < guard * guard:
                continue
        keep.append((x, y))
    return np.asarray(keep)


def sample_primary_states(part, grid_h: float, n_states: int = 500,
                          seed: int = 20240914, min_cells: float = 2.0) -> np.ndarray:
    """Deterministic states drawn on primary arcs, clear of the singular curves.

    Points are taken at random retro-times along randomly chosen primary arcs,
    reflected into a random quadrant, and rejected when within min_cells grid
    cells of any singular curve or of either circle.
    """
    from .surfaces import ArcFamily

    p = part.params
    cloud = _loci_cloud(part)
    arcs = [a for a in part.arcs
            if a.family == ArcFamily.PRIMARY and a.quadrant == "I"]
    if not arcs:
        raise ValidationError("partition holds no primary arcs to sample")
    rng = np.random.default_rng(seed)
    guard = min_cells * grid_h
    keep = []
    attempts = 0
    while len(keep) < n_states and attempts < 500 * n_states:
        attempts += 1
        arc = arcs[rng.integers(len(arcs))]
        tau = rng.uniform(*arc.retro_span)
        x, y = arc.point_at(tau)
        x = float(x) * rng.choice((-1.0, 1.0))
        y = float(y) * rng.choice((-1.0, 1.0))
        r = math.hypot(x, y)
        if not (p.b + guard) < r < (p.r_d - guard):
            continue
        if len(cloud):
            d2 = np.min((cloud[:, 0] - x) ** 2 + (cloud[:, 1] - y) ** 2)
            if d2 < guard * guard:
                continue
        keep.append((x, y))
    return np.asarray(keep)


def compare(part, grid: ValueGrid, samples=None, n_states: int = 500,
            seed: int = 20240914, min_cells: float = 2.0) -> ComparisonReport:
    """Relative value disagreement between the partition and the grid.

    samples is an (m, 2) array of states; when omitted, n_states annulus
    states clear of the singular curves are drawn via sample_states.
    """
    from .partition import value

    if samples is None:
        states = sample_states(part, grid.h, n_states, seed, min_cells)
    else:
        states = np.asarray(samples, dtype=float).reshape(-1, 2)
    rels = []
    rows = []
    for (x, y) in states:
        v_part = value((x, y), part)
        v_dp = grid.interpolate(x, y)
        denom = max(abs(v_part), 1e-9)
        rel = abs(v_dp - v_part) / denom
        rels.append(rel)
        rows.append((x, y, v_part, float(v_dp), rel))
    rels = np.asarray(rels)
    rows.sort(key=lambda t: -t[4])
    return ComparisonReport(
        n_states=len(states),
        max_rel_err=float(rels.max()) if len(rels) else 0.0,
        mean_rel_err=float(rels.mean()) if len(rels) else 0.0,
        rms_rel_err=float(np.sqrt((rels ** 2).mean())) if len(rels) else 0.0,
        worst=rows[:10],
    )


def mirror_asymmetry(grid: ValueGrid) -> float:
    """Largest value change under either reflection; zero for an exact scheme."""
    v = grid.values
    return float(max(np.max(np.abs(v - v[::-1, :])), np.max(np.abs(v - v[:, ::-1]))))
