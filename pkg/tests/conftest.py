import math

import numpy as np
import pytest

from arcplan.kinematics import ChainParams
from arcplan.occupancy import OccupancyMap, generate_environment


@pytest.fixture
def params5():
    return ChainParams(5, 1.0, unit_radius=0.3, link_radius=0.05,
                       joint_limit=math.pi / 3)


@pytest.fixture
def empty_map():
    return generate_environment("empty", size=(10.0, 10.0, 10.0), r_v=0.2,
                                origin=(0.0, 0.0, 0.0))


def random_shape_vector(rng, n_units, scale=math.pi):
    """Unstructured random shape vector (may self-collide)."""
    return rng.uniform(-scale, scale, size=2 * n_units - 1)


def random_map(rng, dims=(12, 12, 12), r_v=0.25, fill=0.03):
    cells = rng.uniform(size=dims) < fill
    return OccupancyMap((0.0, 0.0, 0.0), dims, r_v, cells)


def sphere_surface_points(center, radius, spacing):
    """Dense covering of a sphere's volume boundary and interior shell grid,
    used as the brute-force collision oracle."""
    n = max(int(math.ceil(2 * radius / spacing)) + 1, 2)
    ax = np.linspace(-radius, radius, n)
    gx, gy, gz = np.meshgrid(ax, ax, ax, indexing="ij")
    pts = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
    pts = pts[np.linalg.norm(pts, axis=1) <= radius]
    return np.asarray(center) + pts


def capsule_points(a, b, radius, spacing):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    n = max(int(math.ceil(np.linalg.norm(b - a) / spacing)) + 1, 2)
    out = []
    for t in np.linspace(0.0, 1.0, n):
        out.append(sphere_surface_points(a + t * (b - a), radius, spacing))
    return np.vstack(out)
