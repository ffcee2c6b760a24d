"""Shape-transition search for a single blocked translation edge.

Given the robot's current shape at the edge start, find the cheapest chain of
shape transitions (through shapes that are collision-free at the edge start)
ending at a shape that can be rigidly translated along the whole edge.  Edges
of the transition graph are validated against the map on demand; colliding
ones are pruned and the search repeats.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .kinematics import (
    ChainParams,
    FullConfig,
    ShapeConfig,
    chain_positions_hit,
    cost_to_transition_matrix,
    fk_positions,
    interpolate_batch,
    self_collision_free_positions,
    shape_matrix_split,
)
from .occupancy import OccupancyMap

CURRENT = -1  # node id of the robot's current shape in the transition graph


def _shape_offsets(shape: ShapeConfig, params: ChainParams):
    """Unit positions relative to the head for a shape."""
    return fk_positions(np.zeros(3), shape.pitches(), shape.yaws(),
                        params.link_length)


def _offsets_matrix(shapes, params):
    """(S, N, 3) unit positions relative to the head, one row per shape."""
    mat = np.array([s.as_vector() for s in shapes])
    _, pitches, yaws = shape_matrix_split(mat)
    heads = np.zeros((len(shapes), 3))
    return fk_positions(heads, pitches, yaws, params.link_length)


def valid_shapes(shapes, grid: OccupancyMap, params: ChainParams, xi):
    """Indices of shapes that are collision-free with the head at xi."""
    if not len(shapes):
        return []
    xi = np.asarray(xi, dtype=float)
    pos = xi + _offsets_matrix(shapes, params)
    hit = chain_positions_hit(pos, params, grid)
    return np.flatnonzero(~hit).tolist()


def _edge_base_points(grid, xi, xj):
    # quarter-voxel spacing: the same discretization the plan verifier
    # replays, so accepted sweeps cannot fail verification
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    length = float(np.linalg.norm(xj - xi))
    n = max(int(math.ceil(length / (grid.r_v / 4))), 1) + 1
    t = np.linspace(0.0, 1.0, n)
    return xi[None, :] + t[:, None] * (xj - xi)[None, :]


def shape_sweep_free(shape: ShapeConfig, grid, params, xi, xj):
    """Rigid translation of `shape` along xi->xj, sampled at r_v/4 spacing."""
    bases = _edge_base_points(grid, xi, xj)
    offsets = _shape_offsets(shape, params)
    pos = bases[:, None, :] + offsets[None, :, :]
    return not chain_positions_hit(pos, params, grid).any()


def admissible_shapes(valid_set, shapes, grid, params, xi, xj):
    """Subset of `valid_set` whose shapes stay collision-free when rigidly
    translated along the whole edge."""
    valid = list(valid_set)
    if not valid:
        return []
    bases = _edge_base_points(grid, xi, xj)  # (B, 3)
    offsets = _offsets_matrix([shapes[i] for i in valid], params)  # (V, N, 3)
    pos = bases[None, :, None, :] + offsets[:, None, :, :]
    v, b = len(valid), len(bases)
    hit = chain_positions_hit(pos.reshape(v * b, -1, 3), params, grid)
    hit = hit.reshape(v, b).any(axis=1)
    return [i for i, h in zip(valid, hit) if not h]


def transition_free(shape_a: ShapeConfig, shape_b: ShapeConfig, grid, params,
                    xi, steps: int = 32):
    """Map- and self-collision check of the straight shape interpolation with
    the head held at xi."""
    mat = interpolate_batch(shape_a, shape_b, np.linspace(0.0, 1.0, steps))
    _, pitches, yaws = shape_matrix_split(mat)
    heads = np.broadcast_to(np.asarray(xi, dtype=float), (steps, 3))
    pos = fk_positions(heads, pitches, yaws, params.link_length)
    if not np.all(self_collision_free_positions(pos, params)):
        return False
    return not chain_positions_hit(pos, params, grid).any()


@dataclass
class ConnectionResult:
    """Transition-then-translate motion for one edge."""

    sigma_min: list  # [(kind, FullConfig)] with kind in {"shape", "move"}
    success: bool
    shape_changes: int = 0
    final_shape: ShapeConfig | None = None


def _dijkstra_to_targets(nodes, adjacency, source, targets):
    """Shortest path from source to any target; returns node list or None."""
    dist = {source: 0.0}
    prev = {}
    heap = [(0.0, source)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u in targets:
            path = [u]
            while path[-1] != source:
                path.append(prev[path[-1]])
            return path[::-1]
        for v, w in adjacency.get(u, ()):
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    return None


def srs_connect(current_shape: ShapeConfig, roadmap, grid: OccupancyMap,
                params: ChainParams, xi, xj, d_c: float,
                sweep_steps: int = 32) -> ConnectionResult:
    """Search the stored random shapes for a transition path from the current
    shape to one admissible for the edge xi->xj.

    Builds a graph over the shapes valid at xi (connection radius d_c under
    the transition-cost metric, the current shape included), finds the
    cheapest path to an admissible shape, validates its edges against the map
    and prunes colliding ones until a fully valid path remains or none does.
    """
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    shapes = roadmap.vertices
    valid = valid_shapes(shapes, grid, params, xi)
    admissible = set(admissible_shapes(valid, shapes, grid, params, xi, xj))

    targets = set(admissible)
    if shape_sweep_free(current_shape, grid, params, xi, xj):
        targets.add(CURRENT)

    if not targets:
        return ConnectionResult([], False)

    # transition graph over valid shapes + the current shape
    nodes = [CURRENT] + valid
    cur_vec = current_shape.as_vector()[None, :]
    adjacency = {n: [] for n in nodes}
    if valid:
        vmat = roadmap.vertex_matrix()[valid]
        dmat = cost_to_transition_matrix(vmat)
        ii, jj = np.nonzero(np.triu(dmat <= d_c, k=1))
        for a, b in zip(ii.tolist(), jj.tolist()):
            w = float(dmat[a, b])
            adjacency[valid[a]].append((valid[b], w))
            adjacency[valid[b]].append((valid[a], w))
        dcur = cost_to_transition_matrix(cur_vec, vmat)[0]
        near = np.flatnonzero(dcur <= d_c)
        if len(near) == 0 and CURRENT not in targets:
            # the search could never leave the current shape otherwise
            near = [int(np.argmin(dcur))]
        for a in near:
            a = int(a)
            adjacency[CURRENT].append((valid[a], float(dcur[a])))
            adjacency[valid[a]].append((CURRENT, float(dcur[a])))

    def shape_of(n):
        return current_shape if n == CURRENT else shapes[n]

    checked_ok = set()
    removed = set()

    def prune(u, v):
        key = frozenset((u, v))
        removed.add(key)
        adjacency[u] = [(n, w) for n, w in adjacency[u] if n != v]
        adjacency[v] = [(n, w) for n, w in adjacency[v] if n != u]

    while True:
        path = _dijkstra_to_targets(nodes, adjacency, CURRENT, targets)
        if path is None:
            return ConnectionResult([], False)
        ok = True
        for u, v in zip(path[:-1], path[1:]):
            key = frozenset((u, v))
            if key in checked_ok:
                continue
            if transition_free(shape_of(u), shape_of(v), grid, params, xi,
                               steps=sweep_steps):
                checked_ok.add(key)
            else:
                prune(u, v)
                ok = False
                break
        if not ok:
            continue
        final = shape_of(path[-1])
        sigma = [("shape", FullConfig(tuple(xi), shape_of(n)))
                 for n in path[1:]]
        sigma.append(("move", FullConfig(tuple(xj), final)))
        return ConnectionResult(sigma, True, shape_changes=len(path) - 1,
                                final_shape=final)
