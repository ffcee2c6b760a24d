"""Engineered shape library: line, serpentines, circular arc, open polygon.

All constructions point the chain's principal axis along -x (the trailing
direction at zero angles); azimuth rotations at plan time supply the other
orientations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kinematics import (
    ChainParams,
    ShapeConfig,
    self_collision_free,
    within_joint_limits,
    wrap_angle,
)

SHAPE_TAGS = ("LI", "SE", "SM", "SV", "CA", "PN")


class InfeasiblePolygon(ValueError):
    """Polygon turn angle exceeds the joint limit for this chain."""


@dataclass(frozen=True)
class ShapeLibrary:
    """Ordered, validated list of (tag, shape) entries."""

    entries: tuple  # ((tag, ShapeConfig), ...)
    params: ChainParams

    def tags(self):
        return [t for t, _ in self.entries]

    def get(self, tag):
        for t, s in self.entries:
            if t == tag:
                return s
        raise KeyError(tag)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def make_li(params: ChainParams) -> ShapeConfig:
    """Fully extended line: every angle zero."""
    return ShapeConfig(0.0, ((0.0, 0.0),) * params.n_links)


def make_serpentine(params: ChainParams, plane: str) -> ShapeConfig:
    """Alternating-angle serpentine with amplitude joint_limit/2, so the
    relative angle between consecutive links equals the joint limit exactly.

    plane: 'xy_pos' (SE), 'xy_neg' (mirrored, SM) or 'xz' (vertical, SV).
    """
    alpha = params.joint_limit / 2.0
    signs = [(-1.0) ** i for i in range(params.n_links)]  # +, -, +, ...
    if plane == "xy_pos":
        angles = tuple((0.0, alpha * s) for s in signs)
    elif plane == "xy_neg":
        angles = tuple((0.0, -alpha * s) for s in signs)
    elif plane == "xz":
        angles = tuple((alpha * s, 0.0) for s in signs)
    else:
        raise ValueError(f"unknown serpentine plane: {plane!r}")
    return ShapeConfig(0.0, angles)


def make_arc(params: ChainParams) -> ShapeConfig:
    """Planar arc turning uniformly through 90 degrees in total (less when
    clamped by the joint limit), chord symmetric about -x."""
    if params.n_units < 3:
        raise ValueError("arc shape needs at least 3 units")
    step = min((math.pi / 2) / (params.n_units - 2), params.joint_limit)
    psi0 = -(params.n_units - 2) * step / 2.0
    angles = tuple((0.0, float(wrap_angle(psi0 + i * step)))
                   for i in range(params.n_links))
    return ShapeConfig(float(wrap_angle(psi0)), angles)


def make_polygon(params: ChainParams) -> ShapeConfig:
    """Open regular N-gon with side link_length: the N-1 links visit all N
    vertices, leaving one side (of length link_length) open."""
    n = params.n_units
    if n < 3:
        raise ValueError("polygon shape needs at least 3 units")
    turn = 2.0 * math.pi / n
    if turn > params.joint_limit + 1e-12:
        raise InfeasiblePolygon(
            f"polygon turn angle {turn:.4f} rad exceeds joint limit "
            f"{params.joint_limit:.4f} rad for N={n}")
    psi0 = -(n - 2) * turn / 2.0
    angles = tuple((0.0, float(wrap_angle(psi0 + i * turn)))
                   for i in range(params.n_links))
    return ShapeConfig(float(wrap_angle(psi0)), angles)


def build_library(params: ChainParams) -> ShapeLibrary:
    """All feasible library shapes in a fixed order, each validated against
    the joint limits and the self-collision predicate."""
    candidates = [("LI", lambda: make_li(params)),
                  ("SE", lambda: make_serpentine(params, "xy_pos")),
                  ("SM", lambda: make_serpentine(params, "xy_neg")),
                  ("SV", lambda: make_serpentine(params, "xz")),
                  ("CA", lambda: make_arc(params)),
                  ("PN", lambda: make_polygon(params))]
    entries = []
    for tag, build in candidates:
        try:
            shape = build()
        except (InfeasiblePolygon, ValueError):
            continue
        if within_joint_limits(shape, params) and self_collision_free(shape, params):
            entries.append((tag, shape))
    return ShapeLibrary(tuple(entries), params)
