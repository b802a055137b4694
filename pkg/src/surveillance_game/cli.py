"""Command-line front end: classify, partition, simulate, verify.

Every command validates parameters through the same constructor, writes
deterministic files (stable ordering, 12 significant digits), and maps
failures to exit codes: 0 success, 1 validation error, 2 verification
failure, 3 internal error.  The default output directory comes from
SURVEILLANCE_GAME_OUTDIR, falling back to the working directory.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .core import GameParams, RealisticState, to_reduced
from .errors import GameError, ValidationError
from .partition import Partition, build_partition
from .simulate import SCENARIOS, export_snapshots, run_scenario, simulate_game
from .surfaces import ArcFamily
from .verify import SUITES, run_suites

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_VERIFICATION = 2
EXIT_INTERNAL = 3

OUTDIR_ENV = "SURVEILLANCE_GAME_OUTDIR"

_FAMILY_STYLE = {
    # stroke color and width for the arc families
    ArcFamily.PRIMARY.value: ("#4878a8", 0.5),
    ArcFamily.TS_TRIBUTARY.value: ("#e08214", 0.5),
    ArcFamily.US_TRIBUTARY.value: ("#9467bd", 0.5),
    ArcFamily.FS_TRIBUTARY.value: ("#2ca02c", 0.5),
    ArcFamily.US.value: ("#d62728", 1.5),
    ArcFamily.FS.value: ("#1a6e1a", 1.5),
}

_QUADRANTS = ("I", "II", "III", "IV")


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _round_floats(obj):
    """Round every float to 12 significant digits for stable files."""
    if isinstance(obj, float):
        return float(_fmt(obj))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(_fmt(float(obj)))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_round_floats(v) for v in obj.tolist()]
    return obj


@dataclass
class RunConfig:
    """Validated parameters plus command options as parsed."""

    params: GameParams | None
    outdir: str
    args: argparse.Namespace


class _Parser(argparse.ArgumentParser):
    """Raise instead of exiting so flag errors map to exit code 1."""

    def error(self, message):
        raise ValidationError(message)


def _add_param_flags(sp, required=True):
    sp.add_argument("--vr", type=float, required=required,
                    help="robot wheel speed bound (m/s)")
    sp.add_argument("--va", type=float, required=required,
                    help="evader speed bound (m/s)")
    sp.add_argument("--b", type=float, required=required,
                    help="robot half-axle length / body radius (m)")
    sp.add_argument("--rd", type=float, required=required,
                    help="detection radius (m)")


def build_parser() -> _Parser:
    parser = _Parser(prog="surveillance-game",
                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="report the regime for parameters, "
                                        "or rasterize a regime map")
    _add_param_flags(c, required=False)
    c.add_argument("--sweep", nargs=4, type=float, default=None,
                   metavar=("RHOV_MIN", "RHOV_MAX", "RHOD_MIN", "RHOD_MAX"),
                   help="rasterize speed-ratio vs radius-ratio rectangle")
    c.add_argument("--sweep-n", type=int, default=41,
                   help="sweep grid points per axis")
    c.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("partition", help="build the partition and export "
                                         "arcs, loci, and an SVG rendering")
    _add_param_flags(p)
    p.add_argument("--resolution", type=int, default=400,
                   help="primary arcs per quadrant")
    p.add_argument("--quadrant", choices=_QUADRANTS, default=None,
                   help="restrict exported arcs to one quadrant")
    p.add_argument("--out", default=None, help="output directory")

    s = sub.add_parser("simulate", help="run a feedback game to escape and "
                                        "export the trace")
    _add_param_flags(s, required=False)
    s.add_argument("--scenario", choices=sorted(SCENARIOS), default=None)
    s.add_argument("--init-reduced", nargs=2, type=float, default=None,
                   metavar=("X", "Y"), help="initial relative position (m)")
    s.add_argument("--init-realistic", nargs=5, type=float, default=None,
                   metavar=("XR", "YR", "THETA", "XA", "YA"),
                   help="initial world poses: robot x, y, heading, evader x, y")
    s.add_argument("--dt", type=float, default=None, help="control period (s)")
    s.add_argument("--resolution", type=int, default=400)
    s.add_argument("--snapshots", default=None,
                   help="comma-separated times for snapshot records (s)")
    s.add_argument("--out", default=None, help="output directory")

    v = sub.add_parser("verify", help="run verification suites")
    _add_param_flags(v, required=False)
    v.add_argument("--suite", action="append", choices=SUITES + ("all",),
                   default=None, help="suite to run (repeatable); default all")
    v.add_argument("--resolution", type=int, default=400)
    v.add_argument("--n", type=int, default=101, help="oracle grid nodes per axis")
    v.add_argument("--k", type=int, default=32, help="oracle heading count")
    v.add_argument("--dt", type=float, default=0.02, help="oracle step (s)")
    v.add_argument("--out", default=None, help="output directory")

    return parser


def _config(args) -> RunConfig:
    params = None
    if getattr(args, "vr", None) is not None or getattr(args, "va", None) is not None:
        missing = [f for f in ("vr", "va", "b", "rd")
                   if getattr(args, f, None) is None]
        if missing:
            raise ValidationError(
                f"incomplete parameters: missing --{' --'.join(missing)}")
        params = GameParams(args.vr, args.va, args.b, args.rd)
    outdir = args.out or os.environ.get(OUTDIR_ENV) or "."
    os.makedirs(outdir, exist_ok=True)
    return RunConfig(params=params, outdir=outdir, args=args)


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------


def cmd_classify(cfg: RunConfig) -> int:
    from .partition import classify_regime

    args = cfg.args
    if args.sweep is not None:
        return _classify_sweep(cfg)
    if cfg.params is None:
        raise ValidationError("classify needs --vr --va --b --rd (or --sweep)")
    regime = classify_regime(cfg.params)
    flags = []
    if regime.critical is not None:
        flags.append("critical point")
    if regime.has_us:
        flags.append("US")
    if regime.has_fs:
        flags.append(f"FS({regime.fs_source})")
    if regime.has_vertical_ds:
        flags.append("vertical DS")
    if regime.has_horizontal_ds:
        flags.append("horizontal DS")
    print(f"regime {regime.label}: {regime.description}")
    print("surfaces: " + (", ".join(flags) if flags else "none"))
    if regime.label == "A":
        print("note: slower evader; the escape synthesis does not apply")
    return EXIT_OK


def _classify_sweep(cfg: RunConfig) -> int:
    from .errors import BoundaryRegimeError
    from .partition import classify_regime

    args = cfg.args
    lo_v, hi_v, lo_d, hi_d = args.sweep
    n = args.sweep_n
    if n < 2 or not (lo_v < hi_v and lo_d < hi_d):
        raise ValidationError("sweep needs increasing bounds and --sweep-n >= 2")
    rows = []
    counts: dict[str, int] = {}
    for rho_d in np.linspace(lo_d, hi_d, n):
        for rho_v in np.linspace(lo_v, hi_v, n):
            # fix b = 1 m and v_r = 1 m/s; the regime depends only on ratios
            try:
                label = classify_regime(
                    GameParams(1.0, rho_v, 1.0, 1.0 / rho_d)).label
            except BoundaryRegimeError:
                label = "boundary"
            except ValidationError:
                label = "invalid"
            except GameError:
                # one unresolvable cell should not abort a whole sweep
                label = "error"
            rows.append((float(rho_v), float(rho_d), label))
            counts[label] = counts.get(label, 0) + 1
    path = os.path.join(cfg.outdir, "regime_map.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("rho_v,rho_d,regime\n")
        for rho_v, rho_d, label in rows:
            fh.write(f"{_fmt(rho_v)},{_fmt(rho_d)},{label}\n")
    print(f"wrote {path}")
    for label in sorted(counts):
        print(f"  {label}: {counts[label]} cells")
    return EXIT_OK


# ---------------------------------------------------------------------------
# partition
# ---------------------------------------------------------------------------


def _arc_rows(part: Partition, quadrant: str | None):
    arcs = [a for a in part.arcs if quadrant is None or a.quadrant == quadrant]
    arcs.sort(key=lambda a: (a.family.value,
                             -math.inf if a.family_param is None else a.family_param,
                             a.quadrant))
    for idx, arc in enumerate(arcs):
        lam = arc.lam if arc.lam is not None else np.zeros_like(arc.xy)
        v2 = arc.v2 if arc.v2 is not None else np.zeros(len(arc.xy))
        for i in range(len(arc.xy)):
            yield (idx, arc.family.value,
                   "" if arc.family_param is None else _fmt(arc.family_param),
                   arc.quadrant, _fmt(arc.tau[i]),
                   _fmt(arc.xy[i, 0]), _fmt(arc.xy[i, 1]),
                   _fmt(lam[i, 0]), _fmt(lam[i, 1]), _fmt(v2[i]),
                   _fmt(arc.wheels[0]), _fmt(arc.wheels[1]),
                   arc.truncation)


def _loci_document(part: Partition) -> dict:
    loci = part.loci
    doc: dict = {
        "parameters": {
            "v_r_max": part.params.v_r_max, "v_a_max": part.params.v_a_max,
            "b": part.params.b, "r_d": part.params.r_d,
        },
        "regime": {
            "label": part.regime.label,
            "description": part.regime.description,
            "has_us": part.regime.has_us,
            "has_fs": part.regime.has_fs,
            "fs_source": part.regime.fs_source,
            "has_vertical_ds": part.regime.has_vertical_ds,
            "has_horizontal_ds": part.regime.has_horizontal_ds,
        },
        "resolution": part.resolution,
        "coverage": part.coverage,
        "arc_count": len(part.arcs),
    }
    if loci.critical_point is not None:
        cp = loci.critical_point
        doc["critical_point"] = {"y_c": cp.y_c, "tau_c": cp.tau_c, "s_c": cp.s_c}
    if loci.us_segment is not None:
        doc["us_segment"] = {"y_lo": loci.us_segment[0], "y_hi": loci.us_segment[1]}
    if loci.us_ds_split is not None:
        doc["us_ds_split"] = loci.us_ds_split
    if loci.focal_point is not None:
        fp = loci.focal_point
        doc["focal_point"] = {"x_f": fp.x_f, "tau_f": fp.tau_f,
                              "source": fp.source, "family_param": fp.family_param}
    doc["fs_segments"] = [{"x_lo": lo, "x_hi": hi} for lo, hi in loci.fs_segments]
    doc["ds_segments"] = [
        {"axis": seg.axis, "lo": seg.lo, "hi": seg.hi, "crossings": len(seg.crossings)}
        for seg in part.loci.ds_segments
    ]
    if loci.ts_curve is not None and len(loci.ts_curve):
        doc["ts_curve"] = {
            "n_points": int(len(loci.ts_curve)),
            "s_range": [float(loci.ts_curve[0, 0]), float(loci.ts_curve[-1, 0])],
        }
    return doc


def _svg_partition(part: Partition, quadrant: str | None, path: str) -> None:
    p = part.params
    size = 720.0
    pad = 0.06 * p.r_d
    scale = size / (2.0 * (p.r_d + pad))

    def sx(x):
        return (x + p.r_d + pad) * scale

    def sy(y):
        return (p.r_d + pad - y) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" '
           f'height="{size:.0f}" viewBox="0 0 {size:.0f} {size:.0f}">',
           f'<rect width="{size:.0f}" height="{size:.0f}" fill="white"/>']
    out.append(f'<circle cx="{sx(0):.2f}" cy="{sy(0):.2f}" r="{p.r_d * scale:.2f}" '
               'fill="none" stroke="#333" stroke-width="1.2"/>')
    out.append(f'<circle cx="{sx(0):.2f}" cy="{sy(0):.2f}" r="{p.b * scale:.2f}" '
               'fill="#ddd" stroke="#333" stroke-width="0.8"/>')

    arcs = [a for a in part.arcs if quadrant is None or a.quadrant == quadrant]
    arcs.sort(key=lambda a: (a.family.value,
                             -math.inf if a.family_param is None else a.family_param,
                             a.quadrant))
    for arc in arcs:
        color, width = _FAMILY_STYLE[arc.family.value]
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in arc.xy)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="{width}"/>')

    loci = part.loci
    quads = [quadrant] if quadrant else list(_QUADRANTS)
    signs = {"I": (1, 1), "II": (1, -1), "III": (-1, -1), "IV": (-1, 1)}
    if loci.ts_curve is not None and len(loci.ts_curve):
        for q in quads:
            fx, fy = signs[q]
            pts = " ".join(f"{sx(fx * x):.2f},{sy(fy * y):.2f}"
                           for x, y in loci.ts_curve[:, 2:4])
            out.append(f'<polyline points="{pts}" fill="none" stroke="#999" '
                       'stroke-width="2.0" stroke-dasharray="6,3"/>')
    for seg in loci.ds_segments:
        for q in quads:
            fx, fy = signs[q]
            if seg.axis == "x=0":
                x1, y1, x2, y2 = 0.0, fy * seg.lo, 0.0, fy * seg.hi
            else:
                x1, y1, x2, y2 = fx * seg.lo, 0.0, fx * seg.hi, 0.0
            out.append(f'<line x1="{sx(x1):.2f}" y1="{sy(y1):.2f}" '
                       f'x2="{sx(x2):.2f}" y2="{sy(y2):.2f}" stroke="#000" '
                       'stroke-width="2.2" stroke-dasharray="2,3"/>')
    if loci.critical_point is not None:
        for q in quads:
            fy = signs[q][1]
            out.append(f'<circle cx="{sx(0):.2f}" cy="{sy(fy * loci.critical_point.y_c):.2f}" '
                       'r="4" fill="#d62728" stroke="black" stroke-width="0.8"/>')
    if loci.focal_point is not None:
        for q in quads:
            fx = signs[q][0]
            out.append(f'<circle cx="{sx(fx * loci.focal_point.x_f):.2f}" '
                       f'cy="{sy(0):.2f}" r="4" fill="#1a6e1a" '
                       'stroke="black" stroke-width="0.8"/>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


def cmd_partition(cfg: RunConfig) -> int:
    args = cfg.args
    part = build_partition(cfg.params, resolution=args.resolution)
    arcs_path = os.path.join(cfg.outdir, "arcs.csv")
    with open(arcs_path, "w", encoding="utf-8") as fh:
        fh.write("arc,family,family_param,quadrant,tau,x,y,"
                 "lambda_x,lambda_y,v2,u1,u2,truncation\n")
        for row in _arc_rows(part, args.quadrant):
            fh.write(",".join(str(c) for c in row) + "\n")
    doc = _round_floats(_loci_document(part))
    json_path = os.path.join(cfg.outdir, "partition.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    svg_path = os.path.join(cfg.outdir, "partition.svg")
    _svg_partition(part, args.quadrant, svg_path)
    n_q1 = sum(1 for a in part.arcs
               if a.family == ArcFamily.PRIMARY and a.quadrant == "I")
    print(f"regime {part.regime.label}; coverage {part.coverage:.4f}; "
          f"{len(part.arcs)} arcs ({n_q1} primary per quadrant)")
    for path in (arcs_path, json_path, svg_path):
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> int:
    args = cfg.args
    chosen = [x is not None
              for x in (args.scenario, args.init_reduced, args.init_realistic)]
    if sum(chosen) != 1:
        raise ValidationError(
            "choose exactly one of --scenario, --init-reduced, --init-realistic")

    if args.scenario is not None:
        params = cfg.params or GameParams(1.0, 2.0, 1.0, 7.0)
        part = build_partition(params, resolution=args.resolution)
        run = run_scenario(args.scenario, part, dt=args.dt)
        default_snaps = SCENARIOS[args.scenario]["snapshot_times"]
    else:
        if cfg.params is None:
            raise ValidationError("custom initial states need --vr --va --b --rd")
        part = build_partition(cfg.params, resolution=args.resolution)
        if args.init_reduced is not None:
            x, y = args.init_reduced
            init = RealisticState(0.0, 0.0, math.pi / 2.0, x, y)
        else:
            xr, yr, theta, xa, ya = args.init_realistic
            init = RealisticState(xr, yr, theta, xa, ya)
        run = simulate_game(init, part, dt=args.dt)
        default_snaps = ()

    trace_path = os.path.join(cfg.outdir, "trace.csv")
    with open(trace_path, "w", encoding="utf-8") as fh:
        fh.write("t,x_r,y_r,theta_r,x_a,y_a,x,y,u1,u2,v1,v2,region\n")
        for row in run.trace:
            rs, q = row.realistic, row.reduced
            fh.write(",".join([
                _fmt(row.t), _fmt(rs.x_r), _fmt(rs.y_r), _fmt(rs.theta_r),
                _fmt(rs.x_a), _fmt(rs.y_a), _fmt(q.x), _fmt(q.y),
                _fmt(row.pursuer.u1), _fmt(row.pursuer.u2),
                _fmt(row.evader.v1), _fmt(row.evader.v2), row.region,
            ]) + "\n")

    snap_times = default_snaps
    if args.snapshots:
        try:
            snap_times = tuple(float(s) for s in args.snapshots.split(","))
        except ValueError as exc:
            raise ValidationError(f"bad --snapshots list: {exc}") from exc
    paths = [trace_path]
    if snap_times:
        snaps = export_snapshots(run, [min(t, run.escape_time) for t in snap_times])
        snap_path = os.path.join(cfg.outdir, "snapshots.json")
        with open(snap_path, "w", encoding="utf-8") as fh:
            json.dump(_round_floats(snaps), fh, indent=2)
            fh.write("\n")
        paths.append(snap_path)

    events_path = os.path.join(cfg.outdir, "events.csv")
    with open(events_path, "w", encoding="utf-8") as fh:
        fh.write("t,kind,detail\n")
        for ev in run.events:
            fh.write(f"{_fmt(ev.t)},{ev.kind},{ev.detail}\n")
    paths.append(events_path)

    print(f"escape time: {run.escape_time:.3f} s")
    print("regions: " + " -> ".join(run.regions))
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(cfg: RunConfig) -> int:
    args = cfg.args
    params = cfg.params or GameParams(1.0, 2.0, 1.0, 7.0)
    names = args.suite or ["all"]
    if "all" in names:
        names = list(SUITES)
    part = build_partition(params, resolution=args.resolution)
    overrides = {"oracle": {"n": args.n, "k": args.k, "dt": args.dt}}
    reports = run_suites(part, names, **overrides)
    doc = {
        "parameters": _round_floats({
            "v_r_max": params.v_r_max, "v_a_max": params.v_a_max,
            "b": params.b, "r_d": params.r_d,
        }),
        "suites": [_round_floats(r.to_dict()) for r in reports],
        "passed": all(r.passed for r in reports),
    }
    path = os.path.join(cfg.outdir, "verify_report.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    for r in reports:
        print(r)
    print(f"wrote {path}")
    return EXIT_OK if doc["passed"] else EXIT_VERIFICATION


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "classify": cmd_classify,
    "partition": cmd_partition,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _config(args)
        return _COMMANDS[args.command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except GameError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:        # noqa: BLE001 - last-resort mapping
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
