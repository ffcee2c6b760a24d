"""Online plan construction over a translation path.

Per translation edge the planner tries, in cost order, the engineered library
shapes under discrete azimuth rotations (the unchanged current shape first);
if none is admissible it searches the stored random shapes; if that also
fails the edge is removed from the translation roadmap and the remaining path
is re-planned.  Motion alternates strictly: shape transition at the edge
start, then rigid translation along the edge.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .connector import shape_sweep_free, srs_connect, transition_free
from .kinematics import (
    ChainParams,
    FullConfig,
    ShapeConfig,
    chain_collision_free,
    chain_positions_hit,
    cost_to_transition,
    fk_positions,
    interpolate_batch,
    rotate_azimuth,
    self_collision_free,
    self_collision_free_positions,
    shape_matrix_split,
)
from .occupancy import OccupancyMap
from .shape_roadmap import ShapeRoadmap, build_srs, default_connection_radius
from .shapes import ShapeLibrary, build_library
from .translation import (
    build_translation_roadmap,
    query_path,
    remove_edge,
)

PLAN_HEADER = "ARCPLAN v1"

MODES = ("both", "lsc_only", "srs_only")

STATS_COLUMNS = ("seed", "mode", "N", "m_v", "n_srs", "t_G", "t_P",
                 "shape_changes", "replans", "success")


@dataclass
class PlanRequest:
    grid: OccupancyMap
    params: ChainParams
    start: FullConfig
    goal_center: tuple
    goal_radius: float
    mode: str = "both"
    prefer_pn: bool = False
    m_v: int = 1500
    r_t: float = 2.0
    n_srs: int = 500
    r_s: float = 3.0
    d_c: float | None = None
    seed: int = 0
    sweep_steps: int = 32
    srs: ShapeRoadmap | None = None
    library: ShapeLibrary | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class PlanStats:
    t_graph: float = 0.0
    t_plan: float = 0.0
    shape_changes: int = 0
    replans: int = 0
    success: bool = False


@dataclass
class PlanResult:
    waypoints: list  # [(kind, FullConfig)]; kinds: start / shape / move
    stats: PlanStats
    params: ChainParams
    mode: str = "both"
    seed: int = 0
    combined_motion: bool = False  # waypoint pairs may move shape and position together

    @property
    def success(self):
        return self.stats.success


# -- library candidate ordering ---------------------------------------------------


def lsc_candidates(current: ShapeConfig, library: ShapeLibrary,
                   params: ChainParams, prefer_pn: bool = False):
    """(tag, shape) candidates for one edge: every library entry under every
    discrete azimuth rotation, cheapest transition first, with the unchanged
    current shape prepended.  With prefer_pn the polygon rotations move to the
    very front so open regions favor it."""
    cands = []
    for tag, shape in library.entries:
        for k in range(params.n_yaw):
            rotated = rotate_azimuth(shape, 2.0 * math.pi * k / params.n_yaw)
            cands.append((cost_to_transition(current, rotated), k, tag, rotated))
    cands.sort(key=lambda c: (c[0], SHAPE_ORDER.get(c[2], 99), c[1]))
    ordered = [(tag, shape) for _, _, tag, shape in cands]
    out = [("current", current)] + ordered
    if prefer_pn:
        pn = [(t, s) for t, s in out if t == "PN"]
        rest = [(t, s) for t, s in out if t != "PN"]
        out = pn + rest
    return out


SHAPE_ORDER = {"LI": 0, "SE": 1, "SM": 2, "SV": 3, "CA": 4, "PN": 5}


def edge_admissible(shape: ShapeConfig, grid: OccupancyMap, params: ChainParams,
                    xi, xj, from_shape: ShapeConfig, sweep_steps: int = 32):
    """A shape suits an edge when the transition into it at the edge start and
    the rigid translation along the edge are both collision-free."""
    if from_shape is not shape and cost_to_transition(from_shape, shape) > 1e-12:
        if not transition_free(from_shape, shape, grid, params, xi,
                               steps=sweep_steps):
            return False
    return shape_sweep_free(shape, grid, params, xi, xj)


# -- the planner --------------------------------------------------------------------


def plan(request: PlanRequest) -> PlanResult:
    grid = request.grid
    params = request.params
    start = request.start
    stats = PlanStats()

    if not self_collision_free(start.shape, params) \
            or not chain_collision_free(start, params, grid):
        raise ValueError("start configuration is in collision")

    t0 = time.perf_counter()
    library = request.library
    if library is None and request.mode != "srs_only":
        library = build_library(params)
    srs = request.srs
    if srs is None and request.mode != "lsc_only":
        srs = build_srs(params, request.n_srs, request.r_s, request.seed,
                        sweep_steps=request.sweep_steps)
    d_c = request.d_c
    if d_c is None and srs is not None:
        d_c = default_connection_radius(srs)
    roadmap = build_translation_roadmap(
        grid, params, request.m_v, request.r_t, request.seed,
        start.position())
    stats.t_graph = time.perf_counter() - t0

    t1 = time.perf_counter()
    goal = np.asarray(request.goal_center, dtype=float)
    waypoints = [("start", start)]
    current = start.shape
    # transition sweeps online must be at least as fine as the verifier's
    # 64-step replay, or accepted plans could fail verification
    online_steps = max(64, request.sweep_steps)
    removal_cap = 3 * max(roadmap.edge_count(), 1)
    removals = 0
    avoid = set()  # virtual attachment edges found inadmissible

    def finish(success):
        stats.t_plan = time.perf_counter() - t1
        stats.success = success
        return PlanResult(waypoints, stats, params, mode=request.mode,
                          seed=request.seed)

    path = query_path(roadmap, start.position(), goal, avoid=avoid)
    if path is None:
        return finish(False)

    k = 0
    while k < len(path.nodes) - 1:
        u, v = path.nodes[k], path.nodes[k + 1]
        xi, xj = path.positions[k], path.positions[k + 1]
        chosen = None

        if request.mode != "srs_only":
            for tag, cand in lsc_candidates(current, library, params,
                                            prefer_pn=request.prefer_pn):
                if edge_admissible(cand, grid, params, xi, xj, current,
                                   sweep_steps=online_steps):
                    chosen = (tag, cand)
                    break
        if chosen is not None:
            tag, cand = chosen
            if cost_to_transition(current, cand) > 1e-12:
                waypoints.append(("shape", FullConfig(tuple(xi), cand), tag))
                stats.shape_changes += 1
                current = cand
            waypoints.append(("move", FullConfig(tuple(xj), current)))
            k += 1
            continue

        if request.mode != "lsc_only":
            res = srs_connect(current, srs, grid, params, xi, xj, d_c,
                              sweep_steps=online_steps)
            if res.success:
                for kind, cfg in res.sigma_min:
                    if kind == "shape":
                        waypoints.append(("shape", cfg, "SRS"))
                        stats.shape_changes += 1
                    else:
                        waypoints.append(("move", cfg))
                current = res.final_shape
                k += 1
                continue

        # edge inadmissible for every shape: replan around it
        if isinstance(u, str) or isinstance(v, str):
            vn, rn = (u, v) if isinstance(u, str) else (v, u)
            pos = xi if vn == u else xj
            avoid.add((vn, rn, np.asarray(pos, dtype=float).tobytes()))
        else:
            remove_edge(roadmap, u, v)
        removals += 1
        stats.replans += 1
        if removals > removal_cap:
            return finish(False)
        path = query_path(roadmap, xi, goal, avoid=avoid)
        if path is None:
            return finish(False)
        k = 0

    return finish(True)


# -- independent plan verification ------------------------------------------------


def verify_plan(result: PlanResult, grid: OccupancyMap, params: ChainParams,
                shape_steps: int = 64) -> bool:
    """Replay every waypoint pair at fine discretization through the self- and
    map-collision predicates.  For regular plans each step must change the
    shape or the head position, never both; plans from the full-state baseline
    (combined_motion) interpolate both simultaneously."""
    if not result.waypoints:
        return False
    spacing = grid.r_v / 4.0
    prev = result.waypoints[0][1]
    if not self_collision_free(prev.shape, params) \
            or not chain_collision_free(prev, params, grid):
        return False
    for wp in result.waypoints[1:]:
        cfg = wp[1]
        moved = bool(np.linalg.norm(cfg.position() - prev.position()) > 1e-12)
        reshaped = cost_to_transition(prev.shape, cfg.shape) > 1e-12
        if moved and reshaped and not result.combined_motion:
            return False
        dist = float(np.linalg.norm(cfg.position() - prev.position()))
        steps = max(shape_steps if reshaped else 2,
                    int(math.ceil(dist / spacing)) + 1)
        mat = interpolate_batch(prev.shape, cfg.shape, np.linspace(0, 1, steps))
        _, pitches, yaws = shape_matrix_split(mat)
        heads = prev.position()[None, :] + np.linspace(0, 1, steps)[:, None] \
            * (cfg.position() - prev.position())[None, :]
        pos = fk_positions(heads, pitches, yaws, params.link_length)
        if not np.all(self_collision_free_positions(pos, params)):
            return False
        if chain_positions_hit(pos, params, grid).any():
            return False
        prev = cfg
    return True


# -- plan persistence ----------------------------------------------------------------


def save_plan(result: PlanResult, path, config_echo=None):
    p = params = result.params
    lines = [PLAN_HEADER]
    if config_echo:
        for line in str(config_echo).splitlines():
            lines.append("# " + line)
    lines.append("params %d %.17g %.17g %.17g %.17g %d" % (
        p.n_units, p.link_length, p.unit_radius, p.link_radius,
        p.joint_limit, p.n_yaw))
    lines.append("mode %s" % result.mode)
    lines.append("combined %d" % int(result.combined_motion))
    for wp in result.waypoints:
        kind, cfg = wp[0], wp[1]
        vals = " ".join("%.17g" % x for x in cfg.as_vector())
        lines.append("waypoint %s %s" % (kind, vals))
    s = result.stats
    lines.append("stats seed=%d mode=%s tG=%.6f tP=%.6f shape_changes=%d "
                 "replans=%d success=%d" % (result.seed, result.mode,
                                            s.t_graph, s.t_plan,
                                            s.shape_changes, s.replans,
                                            int(s.success)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_plan(path) -> PlanResult:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if not ln.startswith("#")]
    if not lines or lines[0] != PLAN_HEADER:
        raise ValueError(f"expected header '{PLAN_HEADER}'")
    f = lines[1].split()
    if f[0] != "params":
        raise ValueError("expected params record")
    params = ChainParams(int(f[1]), float(f[2]), float(f[3]), float(f[4]),
                         float(f[5]), int(f[6]))
    mode = lines[2].split()[1]
    combined = bool(int(lines[3].split()[1]))
    waypoints = []
    stats = PlanStats()
    seed = 0
    for ln in lines[4:]:
        f = ln.split()
        if f[0] == "waypoint":
            vec = np.array([float(x) for x in f[2:]])
            cfg = FullConfig(tuple(vec[:3]), ShapeConfig.from_vector(vec[3:]))
            waypoints.append((f[1], cfg))
        elif f[0] == "stats":
            kv = dict(item.split("=") for item in f[1:])
            seed = int(kv["seed"])
            stats = PlanStats(float(kv["tG"]), float(kv["tP"]),
                              int(kv["shape_changes"]), int(kv["replans"]),
                              bool(int(kv["success"])))
    return PlanResult(waypoints, stats, params, mode=mode, seed=seed,
                      combined_motion=combined)


def stats_row(result: PlanResult, m_v: int, n_srs: int):
    s = result.stats
    return (result.seed, result.mode, result.params.n_units, m_v, n_srs,
            round(s.t_graph, 6), round(s.t_plan, 6), s.shape_changes,
            s.replans, int(s.success))
