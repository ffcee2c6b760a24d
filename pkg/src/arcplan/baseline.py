"""Full-state PRM baseline: sample head position and shape jointly.

Candidate edges connect configurations within a combined radius (position
distance plus a weighted shape-transition cost) and are only validated when a
query path actually crosses them, by interpolating position and shape
simultaneously.  Exists to quantify what the decoupled planner buys.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from .kinematics import (
    ChainParams,
    FullConfig,
    ShapeConfig,
    chain_positions_hit,
    cost_to_transition_matrix,
    ct_weights,
    fk_positions,
    interpolate_batch,
    self_collision_free_positions,
    shape_matrix_split,
    wrap_angle,
)
from .occupancy import OccupancyMap
from .planner import PlanResult, PlanStats

START_NODE = "q_start"
GOAL_NODE = "q_goal"


@dataclass
class FullStateRoadmap:
    grid: OccupancyMap
    params: ChainParams
    configs: list  # [FullConfig]
    edge_u: np.ndarray  # candidate edges (u < v), weight = combined distance
    edge_v: np.ndarray
    edge_w: np.ndarray
    connect_radius: float
    shape_weight: float
    seed: int
    build_time: float = 0.0
    _edge_cache: dict = field(default_factory=dict, repr=False)
    _graph: nx.Graph = field(default=None, repr=False, compare=False)

    @property
    def graph(self):
        """Candidate-edge graph; materialized on demand (queries work on the
        edge arrays directly)."""
        if self._graph is None:
            g = nx.Graph()
            g.add_nodes_from(range(len(self.configs)))
            g.add_weighted_edges_from(zip(self.edge_u.tolist(),
                                          self.edge_v.tolist(),
                                          self.edge_w.tolist()))
            self._graph = g
        return self._graph


def _sample_valid_configs(grid, params, m_f, rng):
    """Rejection-sample m_f collision-free full configurations in batches."""
    lo, span = grid.origin, grid.size
    lim, n_links = params.joint_limit, params.n_links
    configs = []
    for _ in range(10_000):
        batch = max(2 * (m_f - len(configs)), 256)
        head_yaw = math.pi - rng.uniform(0.0, 2.0 * math.pi, size=batch)
        rel = rng.uniform(-lim, lim, size=(batch, n_links, 2))
        pitches = wrap_angle(np.cumsum(rel[:, :, 0], axis=1))
        yaws = wrap_angle(head_yaw[:, None] + np.cumsum(rel[:, :, 1], axis=1))
        heads = lo + rng.uniform(size=(batch, 3)) * span
        units = fk_positions(heads, pitches, yaws, params.link_length)
        ok = self_collision_free_positions(units, params)
        ok &= ~chain_positions_hit(units, params, grid)
        for k in np.flatnonzero(ok):
            shape = ShapeConfig(float(head_yaw[k]), tuple(
                (float(p), float(y)) for p, y in zip(pitches[k], yaws[k])))
            configs.append(FullConfig(tuple(heads[k]), shape))
            if len(configs) == m_f:
                return configs
    raise RuntimeError("full-state sampling budget exhausted")


def build_fullstate(grid: OccupancyMap, params: ChainParams, m_f: int,
                    connect_radius: float, seed: int,
                    shape_weight: float = 1.0) -> FullStateRoadmap:
    """m_f valid vertices plus unvalidated candidate edges within the combined
    radius d_pos + shape_weight * transition_cost."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    configs = _sample_valid_configs(grid, params, m_f, rng)
    positions = np.array([c.position() for c in configs])
    shape_mat = np.array([c.shape.as_vector() for c in configs])

    tree = cKDTree(positions)
    # position distance alone already bounds the combined distance from below
    pairs = tree.query_pairs(connect_radius, output_type="ndarray")
    edge_u = edge_v = np.empty(0, dtype=np.int64)
    edge_w = np.empty(0)
    if len(pairs):
        ii, jj = pairs[:, 0], pairs[:, 1]
        dpos = np.linalg.norm(positions[ii] - positions[jj], axis=1)
        # chunked shape-cost evaluation to bound memory
        w = ct_weights(params.n_units)
        dct = np.empty(len(pairs))
        for lo in range(0, len(pairs), 262144):
            hi = lo + 262144
            d = shape_mat[ii[lo:hi]] - shape_mat[jj[lo:hi]]
            d = np.abs(np.mod(d + math.pi, 2 * math.pi) - math.pi)
            dct[lo:hi] = np.sqrt(np.einsum("nk,k->n", d * d, w))
        combined = dpos + shape_weight * dct
        keep = combined <= connect_radius
        edge_u, edge_v, edge_w = ii[keep], jj[keep], combined[keep]
    rm = FullStateRoadmap(grid, params, configs, edge_u, edge_v, edge_w,
                          float(connect_radius), float(shape_weight),
                          int(seed))
    rm.build_time = time.perf_counter() - t0
    return rm


def _combined_edge_free(grid, params, a: FullConfig, b: FullConfig,
                        shape_steps=64):
    """Simultaneous position+shape interpolation at fine discretization."""
    dist = float(np.linalg.norm(b.position() - a.position()))
    steps = max(shape_steps, int(math.ceil(dist / (grid.r_v / 4.0))) + 1)
    ts = np.linspace(0.0, 1.0, steps)
    mat = interpolate_batch(a.shape, b.shape, ts)
    _, pitches, yaws = shape_matrix_split(mat)
    heads = a.position()[None, :] + ts[:, None] * (b.position() - a.position())[None, :]
    pos = fk_positions(heads, pitches, yaws, params.link_length)
    if not np.all(self_collision_free_positions(pos, params)):
        return False
    return not chain_positions_hit(pos, params, grid).any()


def _combined_distance(params, shape_weight, a: FullConfig, b: FullConfig):
    dpos = float(np.linalg.norm(a.position() - b.position()))
    dct = float(cost_to_transition_matrix(a.shape.as_vector()[None, :],
                                          b.shape.as_vector()[None, :])[0, 0])
    return dpos + shape_weight * dct


def query_fullstate(roadmap: FullStateRoadmap, start: FullConfig,
                    goal_center, goal_radius: float,
                    shape_steps: int = 64) -> PlanResult:
    """Lazy shortest-path query: search the candidate graph, validate the
    edges of each returned path, drop the invalid ones, repeat."""
    grid, params = roadmap.grid, roadmap.params
    t0 = time.perf_counter()
    stats = PlanStats(t_graph=roadmap.build_time)
    goal_center = np.asarray(goal_center, dtype=float)

    def finish(waypoints, success):
        stats.t_plan = time.perf_counter() - t0
        stats.success = success
        stats.shape_changes = max(len(waypoints) - 1, 0)
        return PlanResult(waypoints, stats, params, mode="fullstate",
                          seed=roadmap.seed, combined_motion=True)

    if np.linalg.norm(start.position() - goal_center) <= goal_radius:
        return finish([("start", start)], True)

    # node ids: 0..n-1 roadmap, n = start, n+1 = goal (zero-weight edges)
    n = len(roadmap.configs)
    start_id, goal_id = n, n + 1
    uu = list(roadmap.edge_u)
    vv = list(roadmap.edge_v)
    ww = list(roadmap.edge_w)
    positions = np.array([c.position() for c in roadmap.configs])
    shape_mat = np.array([c.shape.as_vector() for c in roadmap.configs])
    dpos = np.linalg.norm(positions - start.position(), axis=1)
    d = shape_mat - start.shape.as_vector()
    d = np.abs(np.mod(d + math.pi, 2 * math.pi) - math.pi)
    dct = np.sqrt(d * d @ ct_weights(params.n_units))
    combined = dpos + roadmap.shape_weight * dct
    for i in np.flatnonzero(combined <= roadmap.connect_radius):
        uu.append(int(i)), vv.append(start_id), ww.append(float(combined[i]))
    in_goal = np.linalg.norm(positions - goal_center, axis=1) <= goal_radius
    for i in np.flatnonzero(in_goal):
        uu.append(int(i)), vv.append(goal_id), ww.append(1e-12)

    uu, vv, ww = np.asarray(uu), np.asarray(vv), np.asarray(ww, dtype=float)
    mat = sparse.csr_matrix(
        (np.concatenate([ww, ww]),
         (np.concatenate([uu, vv]), np.concatenate([vv, uu]))),
        shape=(n + 2, n + 2))
    cache = roadmap._edge_cache

    def kill_edge(a, b):
        # an infinite weight excludes the edge from any finite shortest path
        for x, y in ((a, b), (b, a)):
            lo, hi = mat.indptr[x], mat.indptr[x + 1]
            mat.data[lo + np.searchsorted(mat.indices[lo:hi], y)] = np.inf

    def config_of(node):
        return start if node == start_id else roadmap.configs[node]

    while True:
        dist, pred = csgraph.dijkstra(mat, directed=True, indices=start_id,
                                      return_predecessors=True)
        if not np.isfinite(dist[goal_id]):
            return finish([("start", start)], False)
        nodes = [goal_id]
        while nodes[-1] != start_id:
            nodes.append(int(pred[nodes[-1]]))
        nodes.reverse()
        ok = True
        for u, v in zip(nodes[:-1], nodes[1:]):
            if goal_id in (u, v):
                continue
            key = (min(u, v), max(u, v))
            verdict = cache.get(key)
            if verdict is None:
                verdict = _combined_edge_free(grid, params, config_of(u),
                                              config_of(v), shape_steps)
                if start_id not in key:
                    cache[key] = verdict
            if not verdict:
                kill_edge(u, v)
                ok = False
        if ok:
            waypoints = [("start", start)]
            waypoints += [("move", config_of(m)) for m in nodes[1:-1]]
            return finish(waypoints, True)
