import math

import numpy as np
import pytest

from arcplan.kinematics import (
    ChainParams,
    FullConfig,
    forward_kinematics,
    self_collision_free,
    within_joint_limits,
)
from arcplan.shapes import (
    InfeasiblePolygon,
    build_library,
    make_arc,
    make_li,
    make_polygon,
    make_serpentine,
)


def fk_points(shape, params):
    return forward_kinematics(FullConfig((0.0, 0.0, 0.0), shape),
                              params).unit_positions


def fit_circle_residual(pts):
    """Max distance deviation of 2D points from their best-fit circle."""
    x, y = pts[:, 0], pts[:, 1]
    A = np.column_stack([2 * x, 2 * y, np.ones(len(x))])
    b = x ** 2 + y ** 2
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    cx, cy = sol[0], sol[1]
    r = math.sqrt(sol[2] + cx ** 2 + cy ** 2)
    d = np.hypot(x - cx, y - cy)
    return float(np.abs(d - r).max()), r


# -- LI ---------------------------------------------------------------------------


def test_li_colinear_extent():
    params = ChainParams(4, 1.0)
    pts = fk_points(make_li(params), params)
    assert np.allclose(pts[:, 1:], 0.0, atol=1e-12)
    assert pts[0, 0] - pts[-1, 0] == pytest.approx(3.0)


def test_li_all_zero_angles():
    params = ChainParams(5, 0.5)
    assert np.allclose(make_li(params).as_vector(), 0.0)


# -- serpentines ---------------------------------------------------------------------


def test_se_sm_mirror():
    params = ChainParams(5, 1.0, joint_limit=math.pi / 4)
    se = fk_points(make_serpentine(params, "xy_pos"), params)
    sm = fk_points(make_serpentine(params, "xy_neg"), params)
    assert np.allclose(se[:, 0], sm[:, 0], atol=1e-12)
    assert np.allclose(se[:, 1], -sm[:, 1], atol=1e-12)
    assert np.allclose(se[:, 2], 0.0, atol=1e-12)


def test_sv_is_vertical_plane():
    params = ChainParams(5, 1.0, joint_limit=math.pi / 4)
    sv = fk_points(make_serpentine(params, "xz"), params)
    assert np.allclose(sv[:, 1], 0.0, atol=1e-12)
    assert np.abs(sv[:, 2]).max() > 0.1


def test_se_extent_closed_form():
    # alternating yaw +-alpha with alpha = joint_limit / 2 = pi/8:
    # x extent is (N - 1) * l_r * cos(alpha)
    params = ChainParams(4, 1.0, joint_limit=math.pi / 4)
    se = fk_points(make_serpentine(params, "xy_pos"), params)
    extent = se[:, 0].max() - se[:, 0].min()
    assert extent == pytest.approx(3 * math.cos(math.pi / 8), abs=1e-9)


def test_serpentine_relative_angles_at_limit():
    params = ChainParams(6, 1.0, joint_limit=0.8)
    se = make_serpentine(params, "xy_pos")
    yaws = [y for _, y in se.link_angles]
    rel = np.abs(np.diff(yaws))
    assert np.allclose(rel, 0.8, atol=1e-12)
    assert within_joint_limits(se, params)


# -- arc -------------------------------------------------------------------------


def test_arc_uniform_turn():
    params = ChainParams(5, 1.0)
    ca = make_arc(params)
    yaws = [y for _, y in ca.link_angles]
    steps = np.diff(yaws)
    assert np.allclose(steps, (math.pi / 2) / 3, atol=1e-12)


@pytest.mark.parametrize("n", range(3, 9))
def test_arc_circumcircle(n):
    params = ChainParams(n, 1.0)
    ca = make_arc(params)
    pts = fk_points(ca, params)
    resid, radius = fit_circle_residual(pts[:, :2])
    assert resid < 1e-9
    yaws = [y for _, y in ca.link_angles]
    delta = abs(yaws[1] - yaws[0]) if n > 3 else None
    if delta:
        assert radius == pytest.approx(1.0 / (2 * math.sin(delta / 2)), abs=1e-9)


def test_arc_respects_joint_limit():
    params = ChainParams(3, 1.0, joint_limit=0.5)
    ca = make_arc(params)
    assert within_joint_limits(ca, params)


def test_arc_needs_three_units():
    with pytest.raises(ValueError):
        make_arc(ChainParams(2, 1.0))


# -- polygon ------------------------------------------------------------------------


@pytest.mark.parametrize("n", range(4, 9))
def test_polygon_circumradius(n):
    params = ChainParams(n, 1.0)
    pn = make_polygon(params)
    pts = fk_points(pn, params)
    expected_r = 1.0 / (2 * math.sin(math.pi / n))
    resid, radius = fit_circle_residual(pts[:, :2])
    assert resid < 1e-9
    assert radius == pytest.approx(expected_r, abs=1e-9)


def test_polygon_hexagon_radius_equals_side():
    params = ChainParams(6, 1.0)
    pts = fk_points(make_polygon(params), params)
    center = pts.mean(axis=0)
    assert np.allclose(np.linalg.norm(pts - center, axis=1), 1.0, atol=1e-9)


def test_polygon_open_gap_is_one_side():
    params = ChainParams(6, 1.0)
    pts = fk_points(make_polygon(params), params)
    assert np.linalg.norm(pts[0] - pts[-1]) == pytest.approx(1.0, abs=1e-9)


def test_polygon_infeasible_when_turn_exceeds_limit():
    with pytest.raises(InfeasiblePolygon):
        make_polygon(ChainParams(3, 1.0, joint_limit=math.pi / 4))
    # triangle needs a 2*pi/3 turn: infeasible for any limit <= pi/2
    with pytest.raises(InfeasiblePolygon):
        make_polygon(ChainParams(3, 1.0, joint_limit=math.pi / 2))


# -- library -----------------------------------------------------------------------


def test_library_full_house():
    params = ChainParams(5, 1.0, unit_radius=0.3, joint_limit=math.pi / 2)
    lib = build_library(params)
    assert lib.tags() == ["LI", "SE", "SM", "SV", "CA", "PN"]


def test_library_drops_infeasible_polygon():
    params = ChainParams(5, 1.0, unit_radius=0.3, joint_limit=math.pi / 3)
    lib = build_library(params)
    assert "PN" not in lib.tags()  # pentagon turn 2*pi/5 > pi/3
    assert lib.tags()[0] == "LI"


def test_library_entries_all_validated():
    for joint_limit in (math.pi / 6, math.pi / 3, math.pi / 2):
        params = ChainParams(6, 1.0, unit_radius=0.3, joint_limit=joint_limit)
        lib = build_library(params)
        for tag, shape in lib.entries:
            assert self_collision_free(shape, params), tag
            assert within_joint_limits(shape, params), tag


def test_library_deterministic():
    params = ChainParams(5, 0.7, unit_radius=0.2, joint_limit=1.0)
    a = build_library(params)
    b = build_library(params)
    assert a.tags() == b.tags()
    for (ta, sa), (tb, sb) in zip(a.entries, b.entries):
        assert ta == tb
        assert np.array_equal(sa.as_vector(), sb.as_vector())
