"""Motion planning for reconfigurable aerial chain robots."""

from .kinematics import (
    ChainParams,
    ChainPose,
    FullConfig,
    ShapeConfig,
    chain_collision_free,
    cost_to_transition,
    forward_kinematics,
    interpolate,
    rotate_azimuth,
    self_collision_free,
    transition_self_collision_free,
)
from .occupancy import (
    Capsule,
    MapFormatError,
    OccupancyMap,
    generate_environment,
    load_map,
    save_map,
)

__all__ = [
    "Capsule",
    "ChainParams",
    "ChainPose",
    "FullConfig",
    "MapFormatError",
    "OccupancyMap",
    "ShapeConfig",
    "chain_collision_free",
    "cost_to_transition",
    "forward_kinematics",
    "generate_environment",
    "interpolate",
    "load_map",
    "rotate_azimuth",
    "save_map",
    "self_collision_free",
    "transition_self_collision_free",
]
