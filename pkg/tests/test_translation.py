import logging
import math

import networkx as nx
import numpy as np
import pytest
from scipy import ndimage

from arcplan.kinematics import ChainParams
from arcplan.occupancy import OccupancyMap, generate_environment
from arcplan.translation import (
    GOAL_NODE,
    START_NODE,
    build_translation_roadmap,
    query_path,
    remove_edge,
)


@pytest.fixture
def params():
    return ChainParams(5, 0.45, unit_radius=0.12, link_radius=0.03,
                       joint_limit=math.pi / 3)


def test_vertices_and_edges_are_free(params, empty_map):
    rm = build_translation_roadmap(empty_map, params, 100, 2.0, 5,
                                   np.array([5.0, 5.0, 5.0]))
    assert len(rm.vertices) == 100
    assert np.allclose(rm.vertices[0], [5.0, 5.0, 5.0])
    for p in rm.vertices:
        assert empty_map.sphere_free(p, params.unit_radius)
    for u, v in rm.graph.edges:
        assert empty_map.segment_free(rm.vertices[u], rm.vertices[v],
                                      params.unit_radius)


def test_empty_map_connects_all_near_pairs(params, empty_map):
    rm = build_translation_roadmap(empty_map, params, 100, 2.0, 5,
                                   np.array([5.0, 5.0, 5.0]))
    d = np.linalg.norm(rm.vertices[:, None] - rm.vertices[None, :], axis=2)
    iu, ju = np.triu_indices(100, k=1)
    near = d[iu, ju] <= 2.0
    # with no obstacles every near pair becomes an edge; stay half a meter
    # clear of the map faces where the conservative kernel sees out-of-bounds
    interior = np.all((rm.vertices > 0.5) & (rm.vertices < 9.5), axis=1)
    for i, j, isnear in zip(iu, ju, near):
        if isnear and interior[i] and interior[j]:
            assert rm.graph.has_edge(int(i), int(j))


def test_nearly_full_map_errors(params):
    cells = np.ones((20, 20, 20), dtype=bool)
    cells[10, 10, 10] = False
    grid = OccupancyMap((0.0, 0.0, 0.0), (20, 20, 20), 0.2, cells)
    with pytest.raises((RuntimeError, ValueError)):
        build_translation_roadmap(grid, params, 50, 1.0, 0,
                                  np.array([2.1, 2.1, 2.1]))


def test_occupied_start_rejected(params):
    cells = np.ones((10, 10, 10), dtype=bool)
    grid = OccupancyMap((0.0, 0.0, 0.0), (10, 10, 10), 0.2, cells)
    with pytest.raises(ValueError):
        build_translation_roadmap(grid, params, 10, 1.0, 0,
                                  np.array([1.0, 1.0, 1.0]))


def test_deterministic_per_seed(params, empty_map):
    a = build_translation_roadmap(empty_map, params, 80, 2.0, 3,
                                  np.array([5.0, 5.0, 5.0]))
    b = build_translation_roadmap(empty_map, params, 80, 2.0, 3,
                                  np.array([5.0, 5.0, 5.0]))
    assert np.array_equal(a.vertices, b.vertices)
    assert set(a.graph.edges) == set(b.graph.edges)


def test_roadmap_spans_window(params):
    """Flood fill confirms the two rooms connect only through the window;
    the roadmap must find a path across it."""
    grid = generate_environment("room_window", size=(20.0, 10.0, 3.0), r_v=0.2,
                                window_center=(5.0, 1.5), window_width=1.0,
                                window_height=1.0)
    labels, _ = ndimage.label(~grid.cells)
    left = (10, 25, 7)
    right = (90, 25, 7)
    assert labels[left] == labels[right] != 0  # connected via window only
    rm = build_translation_roadmap(grid, params, 1500, 2.0, 7,
                                   np.array([2.0, 5.0, 1.5]))
    qp = query_path(rm, np.array([2.0, 5.0, 1.5]), np.array([18.0, 5.0, 1.5]))
    assert qp is not None
    xs = np.array([p[0] for p in qp.positions])
    assert xs.min() < 5.0 < xs.max() or (xs[0] < 10.0 < xs[-1])


# -- queries -------------------------------------------------------------------


def test_query_same_point(params, empty_map):
    rm = build_translation_roadmap(empty_map, params, 50, 2.0, 1,
                                   np.array([5.0, 5.0, 5.0]))
    qp = query_path(rm, np.array([3.0, 3.0, 3.0]), np.array([3.0, 3.0, 3.0]))
    assert qp is not None and qp.length == 0.0 and len(qp.positions) == 1


def test_query_disconnected_returns_none(params):
    grid = generate_environment("room_window", size=(10.0, 6.0, 3.0), r_v=0.2,
                                window_width=0.2, window_height=0.2)
    # window smaller than the unit: rooms unreachable for the head sphere
    rm = build_translation_roadmap(grid, params, 200, 2.0, 0,
                                   np.array([2.0, 3.0, 1.5]))
    qp = query_path(rm, np.array([2.0, 3.0, 1.5]), np.array([8.0, 3.0, 1.5]))
    assert qp is None


def test_query_matches_exhaustive_dijkstra(params, empty_map):
    rm = build_translation_roadmap(empty_map, params, 40, 3.0, 11,
                                   np.array([5.0, 5.0, 5.0]))
    comp = nx.node_connected_component(rm.graph, 0)
    target = max(comp)  # any vertex in the start's component
    frm = rm.vertices[0]
    to = rm.vertices[target]
    qp = query_path(rm, frm, to)
    # independent oracle: brute-force shortest path over the same graph
    oracle = nx.shortest_path_length(rm.graph, 0, target, weight="weight")
    assert qp is not None
    assert qp.length == pytest.approx(oracle, abs=1e-9)


def test_query_leaves_graph_clean(params, empty_map):
    rm = build_translation_roadmap(empty_map, params, 60, 2.0, 2,
                                   np.array([5.0, 5.0, 5.0]))
    n0 = rm.graph.number_of_nodes()
    e0 = rm.graph.number_of_edges()
    for _ in range(3):
        query_path(rm, np.array([2.0, 2.0, 2.0]), np.array([8.0, 8.0, 8.0]))
    assert rm.graph.number_of_nodes() == n0
    assert rm.graph.number_of_edges() == e0
    assert not rm.graph.has_node(START_NODE)
    assert not rm.graph.has_node(GOAL_NODE)


def test_stretch_factor_regression(params, empty_map):
    """Pinned from observed runs: paths in an empty map stay near-straight."""
    worst = 0.0
    for seed in range(10):
        rm = build_translation_roadmap(empty_map, params, 500, 2.0, seed,
                                       np.array([1.0, 5.0, 5.0]))
        qp = query_path(rm, np.array([1.0, 5.0, 5.0]),
                        np.array([9.0, 5.0, 5.0]))
        assert qp is not None
        worst = max(worst, qp.length / 8.0)
    assert worst <= 1.3


# -- edge removal --------------------------------------------------------------


def bridge_roadmap(params, empty_map):
    """Two clusters joined by one bridge edge, built then hand-pruned."""
    rm = build_translation_roadmap(empty_map, params, 30, 3.0, 4,
                                   np.array([2.0, 5.0, 5.0]))
    return rm


def test_remove_edge_changes_path(params, empty_map):
    rm = build_translation_roadmap(empty_map, params, 120, 2.5, 6,
                                   np.array([2.0, 5.0, 5.0]))
    frm = np.array([2.0, 5.0, 5.0])
    to = np.array([8.0, 5.0, 5.0])
    qp = query_path(rm, frm, to)
    assert qp is not None
    real = [(u, v) for u, v in qp.edges()
            if not isinstance(u, str) and not isinstance(v, str)]
    u, v = real[0]
    remove_edge(rm, u, v)
    qp2 = query_path(rm, frm, to)
    assert qp2 is not None
    assert (u, v) not in qp2.edges() and (v, u) not in qp2.edges()
    assert qp2.length >= qp.length - 1e-9


def test_remove_only_bridge_disconnects(params, empty_map):
    rm = build_translation_roadmap(empty_map, params, 10, 2.0, 4,
                                   np.array([2.0, 5.0, 5.0]))
    # make a tiny two-vertex graph by hand for determinism
    rm.graph.clear_edges()
    rm.graph.add_edge(0, 1, weight=1.0)
    remove_edge(rm, 0, 1)
    assert rm.graph.number_of_edges() == 0


def test_remove_missing_edge_warns(params, empty_map, caplog):
    rm = build_translation_roadmap(empty_map, params, 10, 2.0, 4,
                                   np.array([2.0, 5.0, 5.0]))
    rm.graph.clear_edges()
    rm.graph.add_edge(0, 1, weight=1.0)
    remove_edge(rm, 0, 1)
    with caplog.at_level(logging.WARNING):
        remove_edge(rm, 0, 1)
    assert any("edge" in r.message.lower() for r in caplog.records)
    assert rm.graph.number_of_nodes() == 10
