"""Voxel occupancy grids, collision queries and environment generators.

The collision kernel is deliberately conservative: a sphere is rejected if
any occupied voxel's AABB overlaps the sphere's AABB *and* the voxel center
lies within ``radius + r_v*sqrt(3)/2`` of the sphere center.  Everything
outside the grid is treated as occupied.  Swept (capsule) queries sample
sphere checks along the axis at <= r_v/2 spacing with the radius inflated
by half the sample spacing, so a "free" verdict is always sound.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

_SQRT3 = math.sqrt(3.0)

MAP_HEADER = "ARCMAP v1"


class MapFormatError(ValueError):
    """Raised when a map file cannot be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Capsule:
    """Swept-sphere segment from ``a`` to ``b``."""

    a: np.ndarray
    b: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("capsule radius must be positive")


class OccupancyMap:
    """Dense boolean voxel grid over a finite axis-aligned volume.

    Immutable after construction; all queries are read-only.
    """

    def __init__(self, origin, dims, r_v, cells=None):
        self.origin = np.asarray(origin, dtype=float).copy()
        self.dims = tuple(int(d) for d in dims)
        if len(self.dims) != 3 or any(d <= 0 for d in self.dims):
            raise ValueError(f"dims must be 3 positive integers, got {dims}")
        if r_v <= 0:
            raise ValueError("voxel edge r_v must be positive")
        self.r_v = float(r_v)
        if cells is None:
            cells = np.zeros(self.dims, dtype=bool)
        else:
            cells = np.asarray(cells, dtype=bool)
            if cells.shape != self.dims:
                raise ValueError(
                    f"cells shape {cells.shape} does not match dims {self.dims}")
        self._cells = cells
        self._cells.setflags(write=False)
        self._edt = None
        self._occ_tree = None

    # -- basic properties ------------------------------------------------

    @property
    def cells(self):
        return self._cells

    @property
    def size(self):
        """Physical edge lengths of the mapped volume in meters."""
        return np.array(self.dims) * self.r_v

    @property
    def upper(self):
        return self.origin + self.size

    def volume(self):
        return float(np.prod(self.size))

    def occupied_count(self):
        return int(self._cells.sum())

    def __eq__(self, other):
        if not isinstance(other, OccupancyMap):
            return NotImplemented
        return (np.array_equal(self.origin, other.origin)
                and self.dims == other.dims
                and self.r_v == other.r_v
                and np.array_equal(self._cells, other._cells))

    # -- distance field (lazy) --------------------------------------------

    def _distance_field(self):
        """Distance (m) from each voxel center to the nearest occupied voxel
        center, counting everything outside the grid as occupied."""
        if self._edt is None:
            padded = np.zeros(tuple(d + 2 for d in self.dims), dtype=bool)
            padded[1:-1, 1:-1, 1:-1] = ~self._cells
            edt = ndimage.distance_transform_edt(padded, sampling=self.r_v)
            self._edt = edt[1:-1, 1:-1, 1:-1]
        return self._edt

    # -- point queries -----------------------------------------------------

    def voxel_index(self, p):
        return np.floor((np.asarray(p, dtype=float) - self.origin) / self.r_v).astype(int)

    def voxel_center(self, idx):
        return self.origin + (np.asarray(idx, dtype=float) + 0.5) * self.r_v

    def points_occupied(self, pts):
        """Vectorized occupancy test; out-of-bounds points report occupied."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        idx = np.floor((pts - self.origin) / self.r_v).astype(int)
        out = np.zeros(len(pts), dtype=bool)
        inb = np.all((idx >= 0) & (idx < np.array(self.dims)), axis=1)
        out[~inb] = True
        if inb.any():
            ii = idx[inb]
            out[inb] = self._cells[ii[:, 0], ii[:, 1], ii[:, 2]]
        return out

    def point_occupied(self, p):
        return bool(self.points_occupied(np.asarray(p)[None, :])[0])

    # -- sphere queries ----------------------------------------------------

    def _occupied_tree(self):
        """KD-tree over occupied voxel centers plus a one-voxel out-of-bounds
        shell (the nearest piece of the infinite occupied exterior)."""
        if self._occ_tree is None:
            from scipy.spatial import cKDTree

            ix, iy, iz = np.nonzero(self._cells)
            occ = np.stack([ix, iy, iz], axis=1)
            nx_, ny, nz = self.dims
            shell_idx = np.ones((nx_ + 2, ny + 2, nz + 2), dtype=bool)
            shell_idx[1:-1, 1:-1, 1:-1] = False
            sx, sy, sz = np.nonzero(shell_idx)
            shell = np.stack([sx - 1, sy - 1, sz - 1], axis=1)
            pts = self.origin + (np.vstack([occ, shell]) + 0.5) * self.r_v
            self._occ_tree = cKDTree(pts)
        return self._occ_tree

    def _exact_spheres_hit(self, pts, radius):
        """Full kernel, batched: a sphere is hit when some occupied voxel's
        AABB overlaps the sphere AABB and the voxel center lies within
        radius + r_v*sqrt(3)/2 of the sphere center."""
        rv = self.r_v
        eps = 1e-12
        pts = np.atleast_2d(pts)
        tree = self._occupied_tree()
        dnn, _ = tree.query(pts, workers=-1)
        hit = dnn <= radius + rv / 2 + eps  # L-inf <= L2 => both conditions
        band = ~hit & (dnn <= radius + rv * _SQRT3 / 2 + eps)
        if band.any():
            r_ball = radius + rv * _SQRT3 / 2 + eps
            r_box = radius + rv / 2 + eps
            bpts = pts[band]
            nbr_lists = tree.query_ball_point(bpts, r_ball, workers=-1)
            counts = np.fromiter((len(l) for l in nbr_lists), dtype=np.intp,
                                 count=len(nbr_lists))
            if counts.any():
                flat = np.concatenate(
                    [np.asarray(l, dtype=np.intp) for l in nbr_lists if l])
                owner = np.repeat(np.arange(len(bpts)), counts)
                close = np.all(np.abs(tree.data[flat] - bpts[owner]) <= r_box,
                               axis=1)
                band_hit = np.bincount(owner[close],
                                       minlength=len(bpts)).astype(bool)
                hit[np.flatnonzero(band)[band_hit]] = True
        return hit

    def spheres_hit(self, centers, radius):
        """Per-center collision verdicts for spheres of a common radius."""
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        n = len(centers)
        hit = np.zeros(n, dtype=bool)
        idx = np.floor((centers - self.origin) / self.r_v).astype(int)
        inb = np.all((idx >= 0) & (idx < np.array(self.dims)), axis=1)
        hit[~inb] = True  # center's own voxel is out of bounds => occupied
        if inb.any():
            edt = self._distance_field()
            ii = idx[inb]
            d = edt[ii[:, 0], ii[:, 1], ii[:, 2]]
            half_diag = self.r_v * _SQRT3 / 2
            res = np.zeros(len(d), dtype=bool)
            # the point sits at most half a voxel diagonal from its voxel
            # center, so points far from the decision band resolve without
            # the exact offset
            res[d <= radius - half_diag] = True
            band = (d > radius - half_diag) & (d < radius + 2 * half_diag)
            if band.any():
                bpts = centers[inb][band]
                ib = ii[band]
                db = d[band]
                # exact offset of each point from its voxel center sharpens
                # both bounds: |p - occ| is within edt -/+ that offset
                off = np.linalg.norm(
                    bpts - (self.origin + (ib + 0.5) * self.r_v), axis=1)
                sub = db <= radius - off
                unsure = ~sub & (db < radius + half_diag + off)
                if unsure.any():
                    sub[unsure] = self._exact_spheres_hit(bpts[unsure], radius)
                res[band] = sub
            hit[inb] = res
        return hit

    def sphere_free(self, center, radius):
        if radius <= 0:
            raise ValueError("sphere radius must be positive")
        return not bool(self.spheres_hit(np.asarray(center)[None, :], radius)[0])

    # -- swept queries -------------------------------------------------------

    def segment_samples(self, a, b):
        """Sample points along a->b at spacing <= r_v/2 (inclusive of both
        endpoints) together with the radius inflation that makes the sampled
        sphere checks cover the whole capsule."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        length = float(np.linalg.norm(b - a))
        n = max(int(math.ceil(length / (self.r_v / 2))), 1) + 1
        t = np.linspace(0.0, 1.0, n)
        pts = a[None, :] + t[:, None] * (b - a)[None, :]
        spacing = length / (n - 1) if n > 1 else 0.0
        return pts, spacing / 2.0

    def capsule_free(self, c: Capsule):
        pts, inflate = self.segment_samples(c.a, c.b)
        return not bool(self.spheres_hit(pts, c.radius + inflate).any())

    def segment_free(self, a, b, radius):
        return self.capsule_free(Capsule(np.asarray(a, float), np.asarray(b, float), radius))

    def segments_hit(self, starts, ends, radius):
        """Batched swept-sphere checks: one verdict per (start, end) pair.

        All segments are sampled at the spacing implied by the longest one so
        a single bulk sphere query suffices.
        """
        starts = np.atleast_2d(np.asarray(starts, dtype=float))
        ends = np.atleast_2d(np.asarray(ends, dtype=float))
        lengths = np.linalg.norm(ends - starts, axis=1)
        lmax = float(lengths.max(initial=0.0))
        n = max(int(math.ceil(lmax / (self.r_v / 2))), 1) + 1
        t = np.linspace(0.0, 1.0, n)
        pts = starts[:, None, :] + t[None, :, None] * (ends - starts)[:, None, :]
        inflate = (lmax / (n - 1)) / 2.0 if n > 1 else 0.0
        hit = self.spheres_hit(pts.reshape(-1, 3), radius + inflate)
        return hit.reshape(len(starts), n).any(axis=1)


# -- persistence -------------------------------------------------------------


def save_map(grid: OccupancyMap, path, config_echo=None):
    """Write the ARCMAP v1 text format (run-length encoded, x-fastest).

    `config_echo` text is embedded as comment lines for provenance."""
    flat = grid.cells.flatten(order="F").astype(np.int8)
    runs = []
    if flat.size:
        change = np.flatnonzero(np.diff(flat)) + 1
        bounds = np.concatenate(([0], change, [flat.size]))
        first = int(flat[0])
        runs = np.diff(bounds).tolist()
    else:
        first = 0
    lines = [MAP_HEADER]
    if config_echo:
        lines.extend("# " + ln for ln in str(config_echo).splitlines())
    lines.append("origin %.17g %.17g %.17g" % tuple(grid.origin))
    lines.append("dims %d %d %d" % grid.dims)
    lines.append("rv %.17g" % grid.r_v)
    lines.append("rle %d %s" % (first, " ".join(str(r) for r in runs)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_map(path) -> OccupancyMap:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if not ln.startswith("#")]
    if not lines or lines[0].strip() != MAP_HEADER:
        raise MapFormatError(f"expected header '{MAP_HEADER}'", line=1)

    def expect(i, key):
        if i >= len(lines):
            raise MapFormatError(f"missing '{key}' record (file truncated)", line=i + 1)
        parts = lines[i].split()
        if not parts or parts[0] != key:
            raise MapFormatError(f"expected '{key}' record", line=i + 1)
        return parts[1:]

    try:
        origin = [float(x) for x in expect(1, "origin")]
        dims = [int(x) for x in expect(2, "dims")]
        r_v = float(expect(3, "rv")[0])
        rle = expect(4, "rle")
    except (ValueError, IndexError) as exc:
        raise MapFormatError(f"bad numeric field: {exc}", line=None) from exc
    if len(origin) != 3 or len(dims) != 3:
        raise MapFormatError("origin/dims must have 3 components", line=2)
    total = dims[0] * dims[1] * dims[2]
    first = int(rle[0])
    runs = [int(x) for x in rle[1:]]
    if sum(runs) != total:
        raise MapFormatError(
            f"run lengths sum to {sum(runs)} but dims imply {total} cells", line=5)
    flat = np.empty(total, dtype=bool)
    val = bool(first)
    pos = 0
    for r in runs:
        flat[pos:pos + r] = val
        pos += r
        val = not val
    cells = flat.reshape(dims, order="F")
    return OccupancyMap(origin, dims, r_v, cells)


# -- environment generators ----------------------------------------------------


def _meters_to_voxels(x, r_v):
    return max(int(round(x / r_v)), 1)


def generate_environment(kind, *, size=(20.0, 10.0, 3.0), r_v=0.2, origin=(0.0, 0.0, 0.0),
                         **params) -> OccupancyMap:
    """Deterministic environment construction.

    Kinds: ``empty``, ``room_window`` (dividing wall + rectangular aperture),
    ``maze`` (alternating baffle slabs), ``two_silo`` (two free cylinders
    joined by a narrow free passage inside solid rock).
    """
    dims = tuple(_meters_to_voxels(s, r_v) for s in size)
    if kind == "empty":
        return OccupancyMap(origin, dims, r_v)
    if kind == "room_window":
        return _gen_room_window(origin, dims, r_v, **params)
    if kind == "maze":
        return _gen_maze(origin, dims, r_v, **params)
    if kind == "two_silo":
        return _gen_two_silo(origin, dims, r_v, **params)
    raise ValueError(f"unknown environment kind: {kind!r}")


def _aperture_slice(center, width, r_v, limit):
    """Voxel index range for a free aperture of `width` meters centered at
    `center` meters (relative to the map origin), rounded to whole voxels."""
    n = int(round(width / r_v))
    if n < 1:
        raise ValueError(f"aperture {width} m is smaller than one voxel ({r_v} m)")
    c = int(round(center / r_v - 0.5))
    lo = c - (n - 1) // 2
    lo = min(max(lo, 0), limit - n)
    return lo, lo + n


def _gen_room_window(origin, dims, r_v, wall_x=None, window_center=None,
                     window_width=1.0, window_height=1.0, wall_thickness=None):
    if window_width <= 0 or window_height <= 0:
        raise ValueError("window dimensions must be positive")
    nx, ny, nz = dims
    cells = np.zeros(dims, dtype=bool)
    wx = (nx // 2) if wall_x is None else int(round(wall_x / r_v))
    tw = 1 if wall_thickness is None else max(int(round(wall_thickness / r_v)), 1)
    cy = (ny * r_v / 2) if window_center is None else window_center[0]
    cz = (nz * r_v / 2) if window_center is None else window_center[1]
    cells[wx:wx + tw, :, :] = True
    y0, y1 = _aperture_slice(cy, window_width, r_v, ny)
    z0, z1 = _aperture_slice(cz, window_height, r_v, nz)
    cells[wx:wx + tw, y0:y1, z0:z1] = False
    return OccupancyMap(origin, dims, r_v, cells)


def _gen_maze(origin, dims, r_v, n_baffles=3, gap_width=1.0, wall_thickness=None):
    if gap_width <= 0:
        raise ValueError("gap width must be positive")
    nx, ny, nz = dims
    cells = np.zeros(dims, dtype=bool)
    tw = 1 if wall_thickness is None else max(int(round(wall_thickness / r_v)), 1)
    gap = int(round(gap_width / r_v))
    if gap < 1:
        raise ValueError(f"gap {gap_width} m is smaller than one voxel ({r_v} m)")
    for k in range(n_baffles):
        wx = int(round((k + 1) * nx / (n_baffles + 1)))
        wx = min(wx, nx - tw)
        cells[wx:wx + tw, :, :] = True
        if k % 2 == 0:
            cells[wx:wx + tw, ny - gap:, :] = False  # opening at +y side
        else:
            cells[wx:wx + tw, :gap, :] = False  # opening at -y side
    return OccupancyMap(origin, dims, r_v, cells)


def _gen_two_silo(origin, dims, r_v, silo_radius=3.5, passage_width=1.0,
                  passage_height=None):
    if passage_width <= 0:
        raise ValueError("passage width must be positive")
    nx, ny, nz = dims
    cells = np.ones(dims, dtype=bool)  # solid, carve out free space
    cx = np.arange(nx) + 0.5
    cy = np.arange(ny) + 0.5
    c1 = (nx * 0.25, ny * 0.5)
    c2 = (nx * 0.75, ny * 0.5)
    rr = silo_radius / r_v
    dx, dy = np.meshgrid(cx, cy, indexing="ij")
    inside = ((dx - c1[0]) ** 2 + (dy - c1[1]) ** 2 <= rr ** 2) \
        | ((dx - c2[0]) ** 2 + (dy - c2[1]) ** 2 <= rr ** 2)
    cells[inside, :] = False
    # carve connecting passage along x between silo centers
    pw = max(int(round(passage_width / r_v)), 1)
    ph = nz if passage_height is None else max(int(round(passage_height / r_v)), 1)
    y0 = ny // 2 - pw // 2
    z0 = max((nz - ph) // 2, 0)
    cells[int(c1[0]):int(c2[0]) + 1, y0:y0 + pw, z0:z0 + ph] = False
    return OccupancyMap(origin, dims, r_v, cells)


def map_digest(grid: OccupancyMap):
    """Stable content hash, used in artifact footers."""
    h = hashlib.sha256()
    h.update(grid.origin.tobytes())
    h.update(np.array(grid.dims).tobytes())
    h.update(np.float64(grid.r_v).tobytes())
    h.update(np.packbits(grid.cells.flatten(order="F")).tobytes())
    return h.hexdigest()[:16]
