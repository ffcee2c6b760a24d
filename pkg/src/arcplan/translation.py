"""PRM over head positions with multi-query paths and edge removal.

The roadmap is validated at build time (vertices by a sphere check, edges by
a swept-sphere check); queries attach the endpoints to their nearest visible
vertices and run Dijkstra.  Replanning removes edges that no chain shape can
traverse and re-queries the same roadmap.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.spatial import cKDTree

from .kinematics import ChainParams
from .occupancy import OccupancyMap

log = logging.getLogger(__name__)

ATTACH_K = 10

START_NODE = "q_start"
GOAL_NODE = "q_goal"


@dataclass
class QueryPath:
    """Shortest path through the roadmap: positions plus graph node ids.

    Node ids are roadmap vertex indices, except the endpoints which may be
    the virtual attachment nodes.
    """

    nodes: list
    positions: list  # np arrays, same length as nodes
    length: float

    def edges(self):
        return list(zip(self.nodes[:-1], self.nodes[1:]))


@dataclass
class TranslationRoadmap:
    grid: OccupancyMap
    unit_radius: float
    vertices: np.ndarray  # (M, 3)
    graph: nx.Graph
    connect_radius: float
    seed: int
    build_time: float = 0.0
    _tree: cKDTree = field(default=None, repr=False)

    def tree(self):
        if self._tree is None:
            self._tree = cKDTree(self.vertices)
        return self._tree

    def edge_count(self):
        return self.graph.number_of_edges()


def build_translation_roadmap(grid: OccupancyMap, params: ChainParams,
                              m_v: int, r_t: float, seed: int,
                              start) -> TranslationRoadmap:
    """Sample m_v head positions (the start first), connect all pairs within
    r_t whose connecting swept sphere is collision-free."""
    t0 = time.perf_counter()
    start = np.asarray(start, dtype=float)
    radius = params.unit_radius
    if not grid.sphere_free(start, radius):
        raise ValueError("start position is not free for the head sphere")
    rng = np.random.default_rng(seed)
    lo = grid.origin
    span = grid.size
    vertices = [start]
    budget = 1000 * m_v
    drawn = 0
    while len(vertices) < m_v:
        if drawn >= budget:
            raise RuntimeError(
                f"could not sample {m_v} free head positions in {budget} draws")
        batch = max(m_v - len(vertices), 64)
        drawn += batch
        pts = lo + rng.uniform(size=(batch, 3)) * span
        ok = ~grid.spheres_hit(pts, radius)
        for p in pts[ok][:m_v - len(vertices)]:
            vertices.append(p)
    verts = np.array(vertices)

    graph = nx.Graph()
    graph.add_nodes_from(range(m_v))
    tree = cKDTree(verts)
    pairs = tree.query_pairs(r_t, output_type="ndarray")
    if len(pairs):
        ii, jj = pairs[:, 0], pairs[:, 1]
        free = ~grid.segments_hit(verts[ii], verts[jj], radius)
        lengths = np.linalg.norm(verts[ii] - verts[jj], axis=1)
        graph.add_weighted_edges_from(zip(ii[free].tolist(), jj[free].tolist(),
                                          lengths[free].tolist()))
    rm = TranslationRoadmap(grid, radius, verts, graph, float(r_t), int(seed))
    rm.build_time = time.perf_counter() - t0
    return rm


def _attach(roadmap: TranslationRoadmap, graph, node_id, p, avoid):
    """Connect a query endpoint to its nearest visible roadmap vertices."""
    exact = np.flatnonzero(np.all(roadmap.vertices == p, axis=1))
    if len(exact):
        return int(exact[0])
    k = min(ATTACH_K, len(roadmap.vertices))
    _, idx = roadmap.tree().query(p, k=k)
    idx = np.atleast_1d(idx)
    graph.add_node(node_id)
    pos_key = p.tobytes()
    for i in idx:
        i = int(i)
        if (node_id, i, pos_key) in avoid:
            continue
        if roadmap.grid.segment_free(p, roadmap.vertices[i], roadmap.unit_radius):
            graph.add_edge(node_id, i,
                           weight=float(np.linalg.norm(p - roadmap.vertices[i])))
    return node_id


def query_path(roadmap: TranslationRoadmap, frm, to, avoid=None) -> QueryPath | None:
    """Shortest roadmap path between two free positions, or None when
    disconnected.  `avoid` holds frozenset node-id pairs to skip when
    attaching the endpoints (used for replanning around virtual edges)."""
    frm = np.asarray(frm, dtype=float)
    to = np.asarray(to, dtype=float)
    avoid = avoid or set()
    if np.array_equal(frm, to):
        return QueryPath([START_NODE], [frm], 0.0)
    graph = roadmap.graph
    try:
        s = _attach(roadmap, graph, START_NODE, frm, avoid)
        g = _attach(roadmap, graph, GOAL_NODE, to, avoid)
        try:
            length, nodes = nx.single_source_dijkstra(graph, s, g, weight="weight")
        except (nx.NetworkXNoPath, nx.NodeNotFound):
            return None
    finally:
        for n in (START_NODE, GOAL_NODE):
            if graph.has_node(n):
                graph.remove_node(n)
    positions = [frm if n == START_NODE else to if n == GOAL_NODE
                 else roadmap.vertices[n] for n in nodes]
    return QueryPath(nodes, positions, float(length))


def remove_edge(roadmap: TranslationRoadmap, v, u):
    """Drop an edge in both directions; warn (no-op) if already absent."""
    if roadmap.graph.has_edge(v, u):
        roadmap.graph.remove_edge(v, u)
    else:
        log.warning("remove_edge: edge (%s, %s) not in roadmap", v, u)
