"""Scenario configuration: flat INI files that fully describe a planning run.

A scenario bundles the map source (a saved file or a generator plus its
parameters), the chain geometry, the query endpoints, planner budgets, and
the seed list, so every command-line run is reproducible from the file alone.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field

from .kinematics import ChainParams, FullConfig, ShapeConfig
from .occupancy import OccupancyMap, generate_environment, load_map

_GENERATOR_FLOAT_KEYS = {
    "window_width", "window_height", "wall_x", "wall_thickness",
    "gap_width", "silo_radius", "passage_width", "passage_height",
}
_GENERATOR_INT_KEYS = {"n_baffles"}


class ScenarioError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    params: ChainParams
    start: FullConfig
    goal_center: tuple
    goal_radius: float
    mode: str = "both"
    prefer_pn: bool = False
    m_v: int = 1500
    r_t: float = 2.0
    n_srs: int = 500
    r_s: float = 3.0
    d_c: float | None = None
    seeds: tuple = (0,)
    map_file: str | None = None
    map_kind: str | None = None
    map_size: tuple = (20.0, 10.0, 3.0)
    map_rv: float = 0.2
    map_origin: tuple = (0.0, 0.0, 0.0)
    map_params: dict = field(default_factory=dict)
    srs_file: str | None = None
    output_dir: str = "."
    source_text: str = ""

    def load_grid(self) -> OccupancyMap:
        if self.map_file is not None:
            if not os.path.exists(self.map_file):
                raise ScenarioError(f"map file not found: {self.map_file}")
            return load_map(self.map_file)
        if self.map_kind is None:
            raise ScenarioError("scenario needs either [map] file= or kind=")
        return generate_environment(self.map_kind, size=self.map_size,
                                    r_v=self.map_rv, origin=self.map_origin,
                                    **self.map_params)


def _vec(text, n, what):
    parts = text.replace(",", " ").split()
    if len(parts) != n:
        raise ScenarioError(f"{what} needs {n} numbers, got {len(parts)}")
    return tuple(float(x) for x in parts)


def _seed_list(text):
    """Accepts '0 1 2', '0,1,2' and 'a..b' range shorthand."""
    out = []
    for tok in text.replace(",", " ").split():
        if ".." in tok:
            a, b = tok.split("..")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(tok))
    if not out:
        raise ScenarioError("seed list is empty")
    return tuple(out)


def parse_scenario(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"bad scenario file: {exc}") from exc
    for sec in ("chain", "query"):
        if sec not in cp:
            raise ScenarioError(f"missing [{sec}] section")

    ch = cp["chain"]
    params = ChainParams(
        ch.getint("n_units"),
        ch.getfloat("link_length"),
        unit_radius=ch.getfloat("unit_radius", 0.3),
        link_radius=ch.getfloat("link_radius", 0.05),
        joint_limit=ch.getfloat("joint_limit", math.pi / 2),
        n_yaw=ch.getint("n_yaw", 8),
    )

    q = cp["query"]
    start_pos = _vec(q.get("start"), 3, "query.start")
    dim = 2 * params.n_units - 1
    if q.get("start_shape", None):
        shape = ShapeConfig.from_vector(_vec(q.get("start_shape"), dim,
                                             "query.start_shape"))
    else:
        shape = ShapeConfig(0.0, tuple((0.0, 0.0)
                                       for _ in range(params.n_units - 1)))
    start = FullConfig(start_pos, shape)
    goal = _vec(q.get("goal"), 3, "query.goal")
    goal_radius = q.getfloat("goal_radius", 0.5)

    cfg = ScenarioConfig(
        params=params, start=start, goal_center=goal, goal_radius=goal_radius,
        source_text=text)
    if "planner" in cp:
        pl = cp["planner"]
        cfg.mode = pl.get("mode", cfg.mode)
        cfg.prefer_pn = pl.getboolean("prefer_pn", cfg.prefer_pn)
        cfg.m_v = pl.getint("m_v", cfg.m_v)
        cfg.r_t = pl.getfloat("r_t", cfg.r_t)
        cfg.n_srs = pl.getint("n_srs", cfg.n_srs)
        cfg.r_s = pl.getfloat("r_s", cfg.r_s)
        if pl.get("d_c", None):
            cfg.d_c = pl.getfloat("d_c")
        if pl.get("seeds", None):
            cfg.seeds = _seed_list(pl.get("seeds"))
        if pl.get("srs_file", None):
            cfg.srs_file = pl.get("srs_file")

    if "map" in cp:
        mp = cp["map"]
        if mp.get("file", None):
            cfg.map_file = mp.get("file")
        else:
            cfg.map_kind = mp.get("kind", None)
            if cfg.map_kind is None:
                raise ScenarioError("[map] needs file= or kind=")
            cfg.map_size = _vec(mp.get("size", "20 10 3"), 3, "map.size")
            cfg.map_rv = mp.getfloat("r_v", cfg.map_rv)
            cfg.map_origin = _vec(mp.get("origin", "0 0 0"), 3, "map.origin")
            for key in mp:
                if key in _GENERATOR_FLOAT_KEYS:
                    cfg.map_params[key] = mp.getfloat(key)
                elif key in _GENERATOR_INT_KEYS:
                    cfg.map_params[key] = mp.getint(key)
                elif key == "window_center":
                    cfg.map_params[key] = _vec(mp.get(key), 2,
                                               "map.window_center")
    else:
        raise ScenarioError("missing [map] section")

    if "output" in cp and cp["output"].get("dir", None):
        cfg.output_dir = cp["output"].get("dir")
    return cfg


def load_scenario(path) -> ScenarioConfig:
    if not os.path.exists(path):
        raise ScenarioError(f"scenario file not found: {path}")
    with open(path) as fh:
        return parse_scenario(fh.read())


# -- canned scenarios ----------------------------------------------------------

PRESETS = {
    # Room split by a wall with a 1 m x 1 m window.
    "room_window": """\
[map]
kind = room_window
size = 20 10 3
r_v = 0.2
window_center = 5.0 1.5
window_width = 1.0
window_height = 1.0

[chain]
n_units = 5
link_length = 0.45
unit_radius = 0.12
link_radius = 0.03
joint_limit = 1.0471975511965976

[query]
start = 2.0 5.0 1.5
goal = 18.0 5.0 1.5
goal_radius = 0.5

[planner]
mode = both
m_v = 1500
r_t = 2.5
n_srs = 500
r_s = 3.0
seeds = 0..9
""",
    # Three staggered baffles with narrow alternating gaps.
    "maze": """\
[map]
kind = maze
size = 20 10 3
r_v = 0.2
n_baffles = 3
gap_width = 1.2

[chain]
n_units = 5
link_length = 0.45
unit_radius = 0.12
link_radius = 0.03
joint_limit = 1.0471975511965976

[query]
start = 2.5 5.0 1.5
goal = 18.0 5.0 1.5
goal_radius = 0.5

[planner]
mode = both
m_v = 1500
r_t = 2.5
n_srs = 500
r_s = 3.0
seeds = 0..9
""",
    # Two open chambers joined by a narrow passage through solid rock.
    "two_silo": """\
[map]
kind = two_silo
size = 20 10 4
r_v = 0.2
silo_radius = 3.5
passage_width = 1.0
passage_height = 1.0

[chain]
n_units = 6
link_length = 0.45
unit_radius = 0.12
link_radius = 0.03
joint_limit = 1.5707963267948966

[query]
start = 5.0 5.0 2.0
goal = 15.0 5.0 2.0
goal_radius = 0.6

[planner]
mode = both
prefer_pn = true
m_v = 1500
r_t = 2.5
n_srs = 500
r_s = 3.0
seeds = 0..9
""",
}


def preset_scenario(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ScenarioError(
            f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return parse_scenario(PRESETS[name])
