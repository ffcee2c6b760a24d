"""Offline roadmap over randomly sampled chain shapes.

Vertices are self-collision-free shapes sampled uniformly over the joint-limit
box; edges connect shapes within a transition-cost radius whose straight-line
interpolation stays self-collision-free.  Built once, persisted as text,
reused by the online planner as a fallback when the engineered library fails.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import (
    ChainParams,
    ShapeConfig,
    angle_diff,
    cost_to_transition_matrix,
    fk_positions,
    self_collision_free,
    self_collision_free_positions,
    wrap_angle,
)
from .shapes import ShapeLibrary, make_li

SRS_HEADER = "ARCSRS v1"

SAMPLE_BUDGET = 10_000


class RoadmapFormatError(ValueError):
    """Raised when a shape-roadmap file cannot be parsed."""


@dataclass
class ShapeRoadmap:
    """Undirected shape roadmap; edge weights are transition costs."""

    vertices: list  # [ShapeConfig]
    edges: list  # [(i, j, weight)] with i < j
    connect_radius: float
    seed: int
    params: ChainParams
    sweep_steps: int = 32
    library: ShapeLibrary | None = None
    _matrix: np.ndarray = field(default=None, repr=False, compare=False)

    def vertex_matrix(self):
        """Shape vectors stacked as (n_vertices, 2N-1); cached."""
        if self._matrix is None:
            self._matrix = np.array([s.as_vector() for s in self.vertices])
        return self._matrix

    def neighbor_map(self):
        nbrs = {i: [] for i in range(len(self.vertices))}
        for i, j, w in self.edges:
            nbrs[i].append((j, w))
            nbrs[j].append((i, w))
        return nbrs

    def __eq__(self, other):
        if not isinstance(other, ShapeRoadmap):
            return NotImplemented
        lib_a = None if self.library is None else self.library.entries
        lib_b = None if other.library is None else other.library.entries
        return (self.vertices == other.vertices
                and self.edges == other.edges
                and self.connect_radius == other.connect_radius
                and self.seed == other.seed
                and self.params == other.params
                and self.sweep_steps == other.sweep_steps
                and lib_a == lib_b)


def sample_free_shape(params: ChainParams, rng: np.random.Generator) -> ShapeConfig:
    """Uniform head yaw over (-pi, pi]; per-link relative pitch/yaw uniform
    over [-joint_limit, joint_limit], accumulated into world angles.  Rejects
    self-colliding shapes."""
    lim = params.joint_limit
    for _ in range(SAMPLE_BUDGET):
        head_yaw = math.pi - rng.uniform(0.0, 2.0 * math.pi)
        rel = rng.uniform(-lim, lim, size=(params.n_links, 2))
        pitches = np.asarray(wrap_angle(np.cumsum(rel[:, 0])))
        yaws = np.asarray(wrap_angle(head_yaw + np.cumsum(rel[:, 1])))
        shape = ShapeConfig(head_yaw, tuple(
            (float(p), float(y)) for p, y in zip(pitches, yaws)))
        if self_collision_free(shape, params):
            return shape
    raise RuntimeError(
        f"no self-collision-free shape found in {SAMPLE_BUDGET} samples")


def build_srs(params: ChainParams, n_srs: int, r_s: float, seed: int,
              sweep_steps: int = 32, library: ShapeLibrary | None = None) -> ShapeRoadmap:
    """Sample n_srs shapes (the line shape first) and connect every pair
    within r_s whose straight interpolation never self-collides."""
    if n_srs < 1:
        raise ValueError("n_srs must be >= 1")
    rng = np.random.default_rng(seed)
    vertices = [make_li(params)]
    while len(vertices) < n_srs:
        vertices.append(sample_free_shape(params, rng))
    mat = np.array([s.as_vector() for s in vertices])
    dist = cost_to_transition_matrix(mat)
    edges = []
    ii, jj = np.nonzero(np.triu(dist <= r_s, k=1))
    # sweep all candidate pairs at once, chunked to bound memory
    ts = np.linspace(0.0, 1.0, sweep_steps)
    chunk = max(1, 200_000 // sweep_steps)
    for lo in range(0, len(ii), chunk):
        ci, cj = ii[lo:lo + chunk], jj[lo:lo + chunk]
        va, vb = mat[ci], mat[cj]
        sweep = wrap_angle(
            va[:, None, :] + ts[None, :, None] * angle_diff(vb, va)[:, None, :])
        flat = sweep.reshape(-1, sweep.shape[-1])
        pos = fk_positions(np.zeros((len(flat), 3)), flat[:, 1::2],
                           flat[:, 2::2], params.link_length)
        ok = self_collision_free_positions(pos, params) \
            .reshape(len(ci), sweep_steps).all(axis=1)
        edges.extend((int(i), int(j), float(dist[i, j]))
                     for i, j in zip(ci[ok], cj[ok]))
    return ShapeRoadmap(vertices, edges, float(r_s), int(seed), params,
                        sweep_steps=sweep_steps, library=library)


def default_connection_radius(roadmap: ShapeRoadmap, percentile: float = 10.0) -> float:
    """Connection radius for online valid-shape graphs: a low percentile of
    the roadmap's pairwise transition costs."""
    dist = cost_to_transition_matrix(roadmap.vertex_matrix())
    tri = dist[np.triu_indices(len(dist), k=1)]
    return float(np.percentile(tri, percentile))


# -- persistence ----------------------------------------------------------------


def _fmt(x):
    return "%.17g" % x


def _shape_fields(shape: ShapeConfig):
    return " ".join(_fmt(v) for v in shape.as_vector())


def save_srs(roadmap: ShapeRoadmap, path, config_echo=None):
    p = roadmap.params
    lines = [SRS_HEADER]
    lines.append("params %d %s %s %s %s %d" % (
        p.n_units, _fmt(p.link_length), _fmt(p.unit_radius),
        _fmt(p.link_radius), _fmt(p.joint_limit), p.n_yaw))
    lines.append("meta %s %d %d" % (
        _fmt(roadmap.connect_radius), roadmap.seed, roadmap.sweep_steps))
    if roadmap.library is not None:
        lines.append("library %d" % len(roadmap.library.entries))
        for tag, shape in roadmap.library.entries:
            lines.append("shape %s %s" % (tag, _shape_fields(shape)))
    lines.append("vertices %d" % len(roadmap.vertices))
    for s in roadmap.vertices:
        lines.append("v %s" % _shape_fields(s))
    lines.append("edges %d" % len(roadmap.edges))
    for i, j, w in roadmap.edges:
        lines.append("e %d %d %s" % (i, j, _fmt(w)))
    body = "\n".join(lines) + "\n"
    digest = hashlib.sha256(body.encode()).hexdigest()
    with open(path, "w") as fh:
        fh.write(lines[0] + "\n")
        if config_echo:  # comments do not participate in the checksum
            for ln in str(config_echo).splitlines():
                fh.write("# " + ln + "\n")
        fh.write("\n".join(lines[1:]) + "\n")
        fh.write("checksum %s\n" % digest)


def load_srs(path, expected_params: ChainParams | None = None) -> ShapeRoadmap:
    with open(path) as fh:
        text = fh.read()
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    if not lines or lines[0] != SRS_HEADER:
        raise RoadmapFormatError(f"expected header '{SRS_HEADER}'")
    if not lines[-1].startswith("checksum "):
        raise RoadmapFormatError("missing checksum line")
    body = "\n".join(lines[:-1]) + "\n"
    stored = lines[-1].split()[1]
    if hashlib.sha256(body.encode()).hexdigest() != stored:
        raise RoadmapFormatError("checksum mismatch (file corrupted)")

    it = iter(enumerate(lines[1:-1], start=2))

    def next_record(key):
        try:
            lineno, line = next(it)
        except StopIteration:
            raise RoadmapFormatError(f"missing '{key}' record") from None
        parts = line.split()
        if not parts or parts[0] != key:
            raise RoadmapFormatError(f"line {lineno}: expected '{key}' record")
        return parts[1:]

    f = next_record("params")
    params = ChainParams(int(f[0]), float(f[1]), float(f[2]), float(f[3]),
                         float(f[4]), int(f[5]))
    if expected_params is not None and params != expected_params:
        if params.n_units != expected_params.n_units:
            raise RoadmapFormatError(
                f"chain size mismatch: file has N={params.n_units}, "
                f"expected N={expected_params.n_units}")
        raise RoadmapFormatError("chain parameter mismatch")
    f = next_record("meta")
    connect_radius, seed, sweep_steps = float(f[0]), int(f[1]), int(f[2])

    library = None
    lineno, line = next(it)
    if line.startswith("library "):
        n_lib = int(line.split()[1])
        entries = []
        for _ in range(n_lib):
            f = next_record("shape")
            entries.append((f[0], ShapeConfig.from_vector([float(x) for x in f[1:]])))
        library = ShapeLibrary(tuple(entries), params)
        lineno, line = next(it)
    if not line.startswith("vertices "):
        raise RoadmapFormatError(f"line {lineno}: expected 'vertices' record")
    n_vert = int(line.split()[1])
    dim = 2 * params.n_units - 1
    vertices = []
    for _ in range(n_vert):
        f = next_record("v")
        if len(f) != dim:
            raise RoadmapFormatError(
                f"vertex has {len(f)} angles, chain N={params.n_units} needs {dim}")
        vertices.append(ShapeConfig.from_vector([float(x) for x in f]))
    f = next_record("edges")
    n_edges = int(f[0])
    edges = []
    for _ in range(n_edges):
        f = next_record("e")
        edges.append((int(f[0]), int(f[1]), float(f[2])))
    return ShapeRoadmap(vertices, edges, connect_radius, seed, params,
                        sweep_steps=sweep_steps, library=library)
