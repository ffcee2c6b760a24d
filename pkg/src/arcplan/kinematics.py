"""Chain kinematics, shape-space operations and collision predicates.

A chain of N units is parameterized by the head position, the head yaw and
one (pitch, yaw) pair per link, all world-referenced.  Unit i+1 sits at
unit i minus Rz(yaw_i) Ry(pitch_i) [l, 0, 0], so the trailing units extend
along -x when every angle is zero (head-forward is +x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(x):
    """Wrap angle(s) to (-pi, pi]."""
    return math.pi - np.mod(math.pi - np.asarray(x, dtype=float), TWO_PI)


def angle_diff(a, b):
    """Shortest signed arc from b to a."""
    return wrap_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


@dataclass(frozen=True)
class ChainParams:
    """Geometry and limits of one chain: N units joined by N-1 rigid links."""

    n_units: int
    link_length: float
    unit_radius: float = 0.3
    link_radius: float = 0.05
    joint_limit: float = math.pi / 2
    n_yaw: int = 8

    def __post_init__(self):
        if self.n_units < 2:
            raise ValueError("chain needs at least 2 units")
        if self.link_length <= 2 * self.link_radius:
            raise ValueError("link length must exceed twice the link radius")
        if not (0 < self.joint_limit <= math.pi / 2):
            raise ValueError("joint limit must be in (0, pi/2]")
        if self.n_yaw < 1:
            raise ValueError("n_yaw must be positive")

    @property
    def n_links(self):
        return self.n_units - 1


@dataclass(frozen=True)
class ShapeConfig:
    """Shape of the chain: head yaw + per-link (pitch, yaw), world frame.

    Dimension is 2N-1 for N units.
    """

    head_yaw: float
    link_angles: tuple  # ((pitch, yaw), ...) with N-1 entries

    @property
    def n_links(self):
        return len(self.link_angles)

    @property
    def n_units(self):
        return len(self.link_angles) + 1

    def pitches(self):
        return np.array([a[0] for a in self.link_angles])

    def yaws(self):
        return np.array([a[1] for a in self.link_angles])

    def as_vector(self):
        """[head_yaw, pitch_1, yaw_1, ..., pitch_{N-1}, yaw_{N-1}]"""
        v = np.empty(1 + 2 * self.n_links)
        v[0] = self.head_yaw
        for i, (p, y) in enumerate(self.link_angles):
            v[1 + 2 * i] = p
            v[2 + 2 * i] = y
        return v

    @staticmethod
    def from_vector(v):
        v = np.asarray(v, dtype=float)
        if len(v) < 3 or len(v) % 2 == 0:
            raise ValueError(f"shape vector must have odd length >= 3, got {len(v)}")
        pairs = tuple((float(v[i]), float(v[i + 1])) for i in range(1, len(v), 2))
        return ShapeConfig(float(v[0]), pairs)

    def wrapped(self):
        return ShapeConfig(
            float(wrap_angle(self.head_yaw)),
            tuple((float(wrap_angle(p)), float(wrap_angle(y)))
                  for p, y in self.link_angles))


@dataclass(frozen=True)
class FullConfig:
    """Head position plus shape; dimension 2N+2."""

    head_pos: tuple
    shape: ShapeConfig

    def position(self):
        return np.asarray(self.head_pos, dtype=float)

    def as_vector(self):
        return np.concatenate([self.position(), self.shape.as_vector()])


@dataclass(frozen=True)
class ChainPose:
    """Workspace realization of a configuration."""

    unit_positions: np.ndarray  # (N, 3)

    @property
    def link_segments(self):
        return list(zip(self.unit_positions[:-1], self.unit_positions[1:]))


# -- forward kinematics ---------------------------------------------------------


def fk_positions(head, pitches, yaws, link_length):
    """Batched chain positions.

    head: (..., 3); pitches/yaws: (..., L).  Returns (..., L+1, 3).
    """
    head = np.asarray(head, dtype=float)
    pitches = np.asarray(pitches, dtype=float)
    yaws = np.asarray(yaws, dtype=float)
    # Rz(yaw) Ry(pitch) [l, 0, 0]
    disp = link_length * np.stack([
        np.cos(yaws) * np.cos(pitches),
        np.sin(yaws) * np.cos(pitches),
        -np.sin(pitches),
    ], axis=-1)
    steps = np.concatenate([head[..., None, :], -disp], axis=-2)
    return np.cumsum(steps, axis=-2)


def forward_kinematics(cfg: FullConfig, params: ChainParams) -> ChainPose:
    if cfg.shape.n_links != params.n_links:
        raise ValueError(
            f"shape has {cfg.shape.n_links} links, chain expects {params.n_links}")
    pos = fk_positions(cfg.position(), cfg.shape.pitches(), cfg.shape.yaws(),
                       params.link_length)
    return ChainPose(pos)


def rotate_azimuth(shape: ShapeConfig, delta: float) -> ShapeConfig:
    """Rigidly rotate the shape about the head's vertical axis."""
    return ShapeConfig(
        float(wrap_angle(shape.head_yaw + delta)),
        tuple((p, float(wrap_angle(y + delta))) for p, y in shape.link_angles))


def interpolate(shape_a: ShapeConfig, shape_b: ShapeConfig, t: float) -> ShapeConfig:
    """Shortest-arc linear interpolation, exact at both endpoints."""
    if shape_a.n_links != shape_b.n_links:
        raise ValueError("shapes have different link counts")
    if t == 0.0:
        return shape_a
    if t == 1.0:
        return shape_b
    va = shape_a.as_vector()
    vb = shape_b.as_vector()
    v = wrap_angle(va + t * angle_diff(vb, va))
    return ShapeConfig.from_vector(v)


def interpolate_batch(shape_a: ShapeConfig, shape_b: ShapeConfig, ts):
    """Vectors (len(ts), 2N-1) of interpolated shapes."""
    va = shape_a.as_vector()
    vb = shape_b.as_vector()
    ts = np.asarray(ts, dtype=float)
    return wrap_angle(va[None, :] + ts[:, None] * angle_diff(vb, va)[None, :])


def shape_matrix_split(mat):
    """Split shape vectors (S, 2N-1) into head_yaw (S,), pitches and yaws (S, L)."""
    return mat[:, 0], mat[:, 1::2], mat[:, 2::2]


# -- joint limits ---------------------------------------------------------------


def within_joint_limits(shape: ShapeConfig, params: ChainParams, tol=1e-9):
    """Relative pitch/yaw between consecutive links (and head-to-first-link)
    must not exceed the joint limit."""
    lim = params.joint_limit + tol
    yaws = np.concatenate([[shape.head_yaw], shape.yaws()])
    pitches = np.concatenate([[0.0], shape.pitches()])
    return bool(np.all(np.abs(angle_diff(yaws[1:], yaws[:-1])) <= lim)
                and np.all(np.abs(angle_diff(pitches[1:], pitches[:-1])) <= lim))


# -- distance primitives ---------------------------------------------------------


def point_segment_dist(p, a, b):
    """Batched point-to-segment distances; p, a, b broadcastable (..., 3)."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = np.sum(ab * ab, axis=-1)
    t = np.sum((p - a) * ab, axis=-1) / np.where(denom == 0, 1.0, denom)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(p - closest, axis=-1)


def segment_segment_dist(p1, q1, p2, q2):
    """Batched segment-segment distances (Ericson's clamped closed form)."""
    p1 = np.asarray(p1, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = np.sum(d1 * d1, axis=-1)
    e = np.sum(d2 * d2, axis=-1)
    f = np.sum(d2 * r, axis=-1)
    b = np.sum(d1 * d2, axis=-1)
    c = np.sum(d1 * r, axis=-1)
    denom = a * e - b * b
    s = np.where(denom > 1e-15, np.clip((b * f - c * e) / np.where(denom > 1e-15, denom, 1.0), 0.0, 1.0), 0.0)
    t = (b * s + f) / np.where(e > 1e-15, e, 1.0)
    t_cl = np.clip(t, 0.0, 1.0)
    s = np.where((t != t_cl), np.clip((t_cl * b - c) / np.where(a > 1e-15, a, 1.0), 0.0, 1.0), s)
    t = t_cl
    c1 = p1 + s[..., None] * d1
    c2 = p2 + t[..., None] * d2
    return np.linalg.norm(c1 - c2, axis=-1)


# -- self collision ---------------------------------------------------------------


def _pair_indices(n, gap=2):
    return [(i, j) for i in range(n) for j in range(i + gap, n)]


def self_collision_free_positions(positions, params: ChainParams):
    """Batched self-collision predicate on unit positions (..., N, 3)."""
    pos = np.asarray(positions, dtype=float)
    squeeze = pos.ndim == 2
    if squeeze:
        pos = pos[None]
    n = pos.shape[-2]
    ok = np.ones(pos.shape[:-2], dtype=bool)
    # non-adjacent unit pairs >= 2 R_u apart
    up = _pair_indices(n)
    if up:
        i, j = np.array(up).T
        d = np.linalg.norm(pos[..., i, :] - pos[..., j, :], axis=-1)
        ok &= np.all(d >= 2 * params.unit_radius, axis=-1)
    # non-adjacent link pairs >= 2 r_l apart
    lp = _pair_indices(n - 1)
    if lp:
        i, j = np.array(lp).T
        d = segment_segment_dist(pos[..., i, :], pos[..., i + 1, :],
                                 pos[..., j, :], pos[..., j + 1, :])
        ok &= np.all(d >= 2 * params.link_radius, axis=-1)
    # units vs links they are not an endpoint of
    ul = [(k, i) for k in range(n) for i in range(n - 1) if k != i and k != i + 1]
    if ul:
        k, i = np.array(ul).T
        d = point_segment_dist(pos[..., k, :], pos[..., i, :], pos[..., i + 1, :])
        ok &= np.all(d >= params.unit_radius + params.link_radius, axis=-1)
    return bool(ok[0]) if squeeze else ok


def self_collision_free(shape: ShapeConfig, params: ChainParams):
    pos = fk_positions(np.zeros(3), shape.pitches(), shape.yaws(), params.link_length)
    return self_collision_free_positions(pos, params)


def transition_self_collision_free(shape_a: ShapeConfig, shape_b: ShapeConfig,
                                   params: ChainParams, steps: int = 32):
    """True iff every one of `steps` inclusive interpolation points is
    self-collision-free."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    mat = interpolate_batch(shape_a, shape_b, np.linspace(0.0, 1.0, steps))
    _, pitches, yaws = shape_matrix_split(mat)
    pos = fk_positions(np.zeros((steps, 3)), pitches, yaws, params.link_length)
    return bool(np.all(self_collision_free_positions(pos, params)))


# -- map collision -----------------------------------------------------------------


def _link_sample_fractions(params: ChainParams, r_v: float):
    k = max(int(math.ceil(params.link_length / (r_v / 2))), 1) + 1
    inflate = (params.link_length / (k - 1)) / 2.0
    return np.linspace(0.0, 1.0, k), inflate


def chain_positions_hit(positions, params: ChainParams, grid):
    """Batched environment-collision verdicts for unit positions (S, N, 3)."""
    pos = np.asarray(positions, dtype=float)
    squeeze = pos.ndim == 2
    if squeeze:
        pos = pos[None]
    s = pos.shape[0]
    hit = grid.spheres_hit(pos.reshape(-1, 3), params.unit_radius).reshape(s, -1).any(axis=1)
    frac, inflate = _link_sample_fractions(params, grid.r_v)
    a = pos[:, :-1, None, :]
    b = pos[:, 1:, None, :]
    samples = a + frac[None, None, :, None] * (b - a)
    link_hit = grid.spheres_hit(samples.reshape(-1, 3), params.link_radius + inflate)
    hit |= link_hit.reshape(s, -1).any(axis=1)
    return bool(hit[0]) if squeeze else hit


def chain_collision_free(cfg: FullConfig, params: ChainParams, grid):
    pose = forward_kinematics(cfg, params)
    return not chain_positions_hit(pose.unit_positions, params, grid)


# -- transition cost ----------------------------------------------------------------


def ct_weights(n_units: int):
    """Weights of the shape-vector components: head yaw weighted N, link i
    weighted N-i for both pitch and yaw."""
    w = np.empty(2 * n_units - 1)
    w[0] = n_units
    for i in range(1, n_units):
        w[2 * i - 1] = n_units - i
        w[2 * i] = n_units - i
    return w


def cost_to_transition(c1: ShapeConfig, c2: ShapeConfig, n_units=None) -> float:
    """Weighted Euclidean shape-transition cost with shortest-arc differences;
    angles nearer the head count more."""
    if c1.n_links != c2.n_links:
        raise ValueError("shapes have different link counts")
    n = c1.n_units if n_units is None else n_units
    d = angle_diff(c1.as_vector(), c2.as_vector())
    return float(math.sqrt(np.sum(ct_weights(n) * d * d)))


def cost_to_transition_matrix(a_mat, b_mat=None):
    """Pairwise transition costs between rows of shape-vector matrices.

    a_mat: (A, 2N-1); b_mat: (B, 2N-1) or None for the symmetric case.
    """
    a_mat = np.asarray(a_mat, dtype=float)
    b = a_mat if b_mat is None else np.asarray(b_mat, dtype=float)
    n_units = (a_mat.shape[1] + 1) // 2
    w = ct_weights(n_units)
    d = angle_diff(a_mat[:, None, :], b[None, :, :])
    return np.sqrt(np.einsum("abk,k->ab", d * d, w))
