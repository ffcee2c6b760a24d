"""Command-line interface.

Subcommands: gen-map, srs-build, plan, verify, sweep, export-geo.  Every
output artifact embeds the configuration that produced it; the ARCPLAN_THREADS
environment variable caps how many (seed, mode) sweep cells run in parallel.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .baseline import build_fullstate, query_fullstate
from .kinematics import forward_kinematics
from .occupancy import generate_environment, load_map, map_digest, save_map
from .planner import (
    MODES,
    STATS_COLUMNS,
    PlanRequest,
    load_plan,
    plan,
    save_plan,
    stats_row,
    verify_plan,
)
from .scenario import (
    PRESETS,
    ScenarioConfig,
    ScenarioError,
    load_scenario,
    preset_scenario,
)
from .shape_roadmap import build_srs, load_srs, save_srs


class UsageError(Exception):
    pass


def _thread_budget():
    raw = os.environ.get("ARCPLAN_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"ARCPLAN_THREADS must be an integer, got {raw!r}")
    return max(n, 1)


def _get_scenario(args) -> ScenarioConfig:
    if getattr(args, "preset", None):
        return preset_scenario(args.preset)
    if getattr(args, "scenario", None):
        return load_scenario(args.scenario)
    raise UsageError("provide --scenario FILE or --preset NAME")


# -- subcommands --------------------------------------------------------------


def cmd_gen_map(args):
    params = {}
    for item in args.param:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        vals = [float(x) for x in v.replace(",", " ").split()]
        params[k] = vals[0] if len(vals) == 1 else tuple(vals)
    if "n_baffles" in params:
        params["n_baffles"] = int(params["n_baffles"])
    grid = generate_environment(args.kind, size=tuple(args.size),
                                r_v=args.rv, origin=tuple(args.origin),
                                **params)
    echo = "gen-map kind=%s size=%s r_v=%g origin=%s params=%s" % (
        args.kind, args.size, args.rv, args.origin, sorted(params.items()))
    save_map(grid, args.out, config_echo=echo)
    print("wrote %s (%dx%dx%d voxels, digest %s)"
          % (args.out, *grid.dims, map_digest(grid)))
    return 0


def cmd_srs_build(args):
    sc = _get_scenario(args)
    n_srs = args.n_srs if args.n_srs is not None else sc.n_srs
    r_s = args.r_s if args.r_s is not None else sc.r_s
    seed = args.seed if args.seed is not None else sc.seeds[0]
    srs = build_srs(sc.params, n_srs, r_s, seed)
    save_srs(srs, args.out, config_echo=sc.source_text)
    print("wrote %s (%d vertices, %d edges, r_s=%g, seed=%d)"
          % (args.out, len(srs.vertices), len(srs.edges), r_s, seed))
    return 0


def _request_from_scenario(sc: ScenarioConfig, mode, seed, grid, srs):
    return PlanRequest(grid, sc.params, sc.start, sc.goal_center,
                       sc.goal_radius, mode=mode, prefer_pn=sc.prefer_pn,
                       m_v=sc.m_v, r_t=sc.r_t, n_srs=sc.n_srs, r_s=sc.r_s,
                       d_c=sc.d_c, seed=seed, srs=srs)


def cmd_plan(args):
    sc = _get_scenario(args)
    mode = args.mode or sc.mode
    seed = args.seed if args.seed is not None else sc.seeds[0]
    grid = sc.load_grid()
    srs = None
    srs_file = args.srs or sc.srs_file
    if srs_file:
        srs = load_srs(srs_file, expected_params=sc.params)
    elif mode == "srs_only":
        raise UsageError("srs_only mode needs a pre-built shape roadmap: "
                         "pass --srs FILE or set srs_file= in the scenario")
    result = plan(_request_from_scenario(sc, mode, seed, grid, srs))
    save_plan(result, args.out, config_echo=sc.source_text)
    row = stats_row(result, sc.m_v, sc.n_srs)
    print(",".join(STATS_COLUMNS))
    print(",".join(str(x) for x in row))
    if not result.success:
        print("no plan found", file=sys.stderr)
        return 1
    return 0


def cmd_verify(args):
    result = load_plan(args.plan)
    grid = load_map(args.map)
    ok = verify_plan(result, grid, result.params)
    print("plan %s: %s" % (args.plan, "OK" if ok else "COLLISION/INVALID"))
    return 0 if ok else 2


def _sweep_cell(sc: ScenarioConfig, mode, seed):
    grid = sc.load_grid()
    if mode == "fullstate":
        rm = build_fullstate(grid, sc.params, sc.m_v, sc.r_t + 1.0, seed)
        result = query_fullstate(rm, sc.start, np.asarray(sc.goal_center),
                                 sc.goal_radius)
        return stats_row(result, sc.m_v, 0)
    result = plan(_request_from_scenario(sc, mode, seed, grid, None))
    return stats_row(result, sc.m_v, sc.n_srs)


def cmd_sweep(args):
    sc = _get_scenario(args)
    modes = args.modes.split(",") if args.modes else [sc.mode]
    for m in modes:
        if m not in MODES + ("fullstate",):
            raise UsageError(f"unknown mode {m!r}")
    seeds = [int(s) for s in args.seeds.replace(",", " ").split()] \
        if args.seeds else list(sc.seeds)
    cells = [(mode, seed) for mode in modes for seed in seeds]
    workers = _thread_budget()
    rows = []
    if workers > 1 and len(cells) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_sweep_cell, sc, m, s) for m, s in cells]
            rows = [f.result() for f in futs]
    else:
        for m, s in cells:
            rows.append(_sweep_cell(sc, m, s))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STATS_COLUMNS)
        w.writerows(rows)
    print("wrote %s (%d rows)" % (args.out, len(rows)))
    for row in rows:
        print(",".join(str(x) for x in row))
    return 0


def cmd_export_geo(args):
    """Write every chain pose along the plan as wavefront-style polylines."""
    result = load_plan(args.plan)
    params = result.params
    lines = ["# chain poses along plan %s" % args.plan,
             "# one polyline of %d unit centers per waypoint" % params.n_units]
    n_vert = 0
    for kind, cfg in result.waypoints:
        pose = forward_kinematics(cfg, params)
        idx = []
        for p in pose.unit_positions:
            lines.append("v %.6f %.6f %.6f" % tuple(p))
            n_vert += 1
            idx.append(n_vert)
        lines.append("l " + " ".join(str(i) for i in idx))
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("wrote %s (%d waypoints)" % (args.out, len(result.waypoints)))
    return 0


# -- argument parsing ----------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(
        prog="arcplan",
        description="Translation-plus-shape motion planning for a linked "
                    "chain of aerial units.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-map", help="generate a voxel environment")
    p.add_argument("--kind", required=True,
                   choices=["empty", "room_window", "maze", "two_silo"])
    p.add_argument("--size", type=float, nargs=3, default=[20.0, 10.0, 3.0],
                   metavar=("X", "Y", "Z"))
    p.add_argument("--rv", type=float, default=0.2, help="voxel size (m)")
    p.add_argument("--origin", type=float, nargs=3, default=[0.0, 0.0, 0.0])
    p.add_argument("--param", action="append", default=[],
                   help="generator parameter key=value (repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_map)

    def add_scenario_args(p):
        p.add_argument("--scenario", help="scenario INI file")
        p.add_argument("--preset", choices=sorted(PRESETS),
                       help="built-in scenario")

    p = sub.add_parser("srs-build", help="pre-sample the shape roadmap")
    add_scenario_args(p)
    p.add_argument("--n-srs", type=int, default=None)
    p.add_argument("--r-s", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_srs_build)

    p = sub.add_parser("plan", help="plan one query")
    add_scenario_args(p)
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--srs", help="pre-built shape roadmap file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify", help="replay a plan against a map")
    p.add_argument("--plan", required=True)
    p.add_argument("--map", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run a (mode x seed) grid, write stats CSV")
    add_scenario_args(p)
    p.add_argument("--modes", help="comma list from both,lsc_only,srs_only,fullstate")
    p.add_argument("--seeds", help="override scenario seed list")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-geo", help="dump chain poses as OBJ polylines")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_geo)

    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
