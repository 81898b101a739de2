"""Parametric generators for the nine canonical social mini-game scenarios.

Layouts are authored on the classic 0-63 integer grid and scaled to meters
by world_scale (default 0.25 m per grid unit), which puts the canonical
doorway walls at grid x=30.5 with a 4-unit gap: a 1.0 m opening. Only the
doorway layout has published dimensions; every other default here is a
documented choice of this module.

build() is referentially transparent: identical (kind, params) produce
bit-identical Scenario records.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

from .core import AgentSpec, Segment, Vec2, WorldGeometry

KINDS = (
    "doorway",
    "intersection",
    "hallway",
    "l_corner",
    "blind_corner",
    "crowded",
    "parallel",
    "perpendicular",
    "circular",
)

_CORRIDOR_KINDS = {"doorway", "intersection", "hallway", "l_corner", "blind_corner"}
_GRID = 64.0  # layout grid span; interactive prompts use the 0-63 convention


@dataclass(frozen=True, slots=True)
class ScenarioParams:
    n_agents: int = 2
    corridor_width: float = 2.0  # meters
    gap_width: float = 1.0  # meters (doorway opening)
    approach_distance: float = 3.875  # meters from the contested region to a start
    world_scale: float = 0.25  # meters per grid unit
    jitter: float = 0.0  # start perturbation radius, meters
    seed: int = 0
    radius: float = 0.25
    preferred_speed: float = 1.0
    max_speed: float = 1.5
    priorities: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.gap_width <= 0:
            raise ValueError("gap_width must be > 0")
        if self.corridor_width <= 0:
            raise ValueError("corridor_width must be > 0")
        if self.world_scale <= 0:
            raise ValueError("world_scale must be > 0")
        if self.jitter < 0:
            raise ValueError("jitter must be >= 0")


@dataclass(frozen=True, slots=True)
class Scenario:
    kind: str
    geometry: WorldGeometry
    agents: tuple[AgentSpec, ...]
    seed: int

    def agent_by_id(self, agent_id: int) -> AgentSpec:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(f"no agent with id {agent_id}")


class ScenarioError(ValueError):
    pass


def agent_limits(kind: str) -> tuple[int, int]:
    return (1, 4) if kind in _CORRIDOR_KINDS else (1, 8)


def list_scenarios() -> list[tuple[str, str, dict[str, str]]]:
    """Nine (kind, description, parameter schema) entries in canonical order."""
    base = {
        "n_agents": "number of robots",
        "corridor_width": "corridor width in meters",
        "approach_distance": "start distance from the contested region, meters",
        "world_scale": "meters per grid unit",
        "jitter": "start perturbation radius, meters",
        "seed": "layout random seed",
    }
    entries = []
    descriptions = {
        "doorway": "bottleneck gap in a wall; agents contend for a capacity-one opening",
        "intersection": "two orthogonal corridors crossing; right-of-way conflicts",
        "hallway": "two-way traffic in a corridor; head-on passing and yielding",
        "l_corner": "shared 90-degree bend; agents from the same side, same goal area",
        "blind_corner": "opposing approaches around an occluding corner nose",
        "crowded": "many agents with random collision-free starts and goals",
        "parallel": "same-direction lanes with speed differences; overtaking",
        "perpendicular": "open crossing flows at right angles",
        "circular": "ring of agents crossing to antipodal goals",
    }
    for kind in KINDS:
        schema = dict(base)
        if kind == "doorway":
            schema["gap_width"] = "free opening width in meters"
        entries.append((kind, descriptions[kind], schema))
    return entries


def build(kind: str, params: ScenarioParams) -> Scenario:
    """Deterministic layout for the given kind; validates all invariants."""
    if kind not in KINDS:
        raise ScenarioError(f"unknown scenario kind {kind!r}; valid kinds: {', '.join(KINDS)}")
    lo, hi = agent_limits(kind)
    if not lo <= params.n_agents <= hi:
        raise ScenarioError(
            f"{kind} supports {lo}-{hi} agents, got {params.n_agents}"
        )
    if params.priorities is not None and len(params.priorities) != params.n_agents:
        raise ScenarioError("priorities length must equal n_agents")

    builder = _BUILDERS[kind]
    geometry, endpoints = builder(params)
    endpoints = _apply_jitter(kind, params, geometry, endpoints)
    agents = []
    for i, (start, goal) in enumerate(endpoints):
        phi = params.priorities[i] if params.priorities is not None else 1.0
        v_pref = _parallel_speed(params, i) if kind == "parallel" else params.preferred_speed
        agents.append(
            AgentSpec(
                id=i,
                radius=params.radius,
                preferred_speed=v_pref,
                max_speed=params.max_speed,
                start=start,
                goal=goal,
                priority=phi,
            )
        )
    scenario = Scenario(kind=kind, geometry=geometry, agents=tuple(agents), seed=params.seed)
    _validate(scenario)
    return scenario


# --- per-kind layouts (grid units; scaled at the end of each builder) ---


def _scaled(params: ScenarioParams, segs: list[tuple[float, float, float, float]],
            pairs: list[tuple[float, float, float, float]],
            gap: tuple[float, Vec2, Vec2] | None = None) -> tuple[WorldGeometry, list[tuple[Vec2, Vec2]]]:
    s = params.world_scale
    obstacles: tuple[Segment, ...] = tuple(
        (Vec2(x0 * s, y0 * s), Vec2(x1 * s, y1 * s)) for x0, y0, x1, y1 in segs
    )
    bounds = (0.0, 0.0, _GRID * s, _GRID * s)
    gap_kwargs = {}
    if gap is not None:
        width, center, normal = gap
        gap_kwargs = {"gap_width": width, "gap_center": center * s, "gap_normal": normal}
    geometry = WorldGeometry(obstacles=obstacles, bounds=bounds, **gap_kwargs)
    endpoints = [(Vec2(sx * s, sy * s), Vec2(gx * s, gy * s)) for sx, sy, gx, gy in pairs]
    return geometry, endpoints


def _doorway(params: ScenarioParams):
    s = params.world_scale
    gap_half = params.gap_width / s / 2.0  # grid units
    a = params.approach_distance / s  # start distance from the wall plane
    g = a - 1.0  # goal distance; the canonical layout is one grid unit shorter
    wall_x, axis_y = 30.5, 32.0
    segs = [
        (wall_x, 0.0, wall_x, axis_y - gap_half),
        (wall_x, axis_y + gap_half, wall_x, _GRID),
    ]
    queue = 4.0  # spacing between queued agents, grid units
    pairs = []
    for i in range(params.n_agents):
        k = i // 2
        if i % 2 == 0:  # westbound side, heading east
            pairs.append((wall_x - a - k * queue, axis_y, wall_x + g + k * queue, axis_y))
        else:  # mirrored across the wall plane
            pairs.append((wall_x + a + k * queue, axis_y, wall_x - g - k * queue, axis_y))
    gap = (params.gap_width, Vec2(wall_x, axis_y), Vec2(1.0, 0.0))
    return _scaled(params, segs, pairs, gap)


def _hallway(params: ScenarioParams):
    s = params.world_scale
    half = params.corridor_width / s / 2.0
    c, x0, x1 = 32.0, 8.0, 56.0
    segs = [
        (x0, c - half, x1, c - half),
        (x0, c + half, x1, c + half),
    ]
    a = params.approach_distance / s
    queue = 4.0
    pairs = []
    for i in range(params.n_agents):
        k = i // 2
        if i % 2 == 0:
            pairs.append((c - a - k * queue, c, c + a + k * queue, c))
        else:  # starts mirrored about the corridor midpoint, goals swapped
            pairs.append((c + a + k * queue, c, c - a - k * queue, c))
    return _scaled(params, segs, pairs)


def _intersection(params: ScenarioParams):
    s = params.world_scale
    half = params.corridor_width / s / 2.0
    c = 32.0
    lo, hi = c - half, c + half
    segs = [
        # four corner blocks, two walls each
        (0.0, hi, lo, hi), (lo, hi, lo, _GRID),      # NW
        (hi, hi, _GRID, hi), (hi, hi, hi, _GRID),    # NE
        (0.0, lo, lo, lo), (lo, 0.0, lo, lo),        # SW
        (hi, lo, _GRID, lo), (hi, 0.0, hi, lo),      # SE
    ]
    a = params.approach_distance / s
    # Slot order keeps the layout reflection-symmetric for every count:
    # about the corridor axis for 1/3/4 agents, about the diagonal for 2.
    slots = [
        (c - a, c, c + a, c),  # westbound -> east
        (c, c - a, c, c + a),  # southbound -> north
        (c, c + a, c, c - a),  # north -> south
        (c + a, c, c - a, c),  # east -> west
    ]
    pairs = [slots[i] for i in range(params.n_agents)]
    return _scaled(params, segs, pairs)


def _l_geometry(params: ScenarioParams, nose: float = 0.0):
    """Shared L-corridor walls; nose > 0 narrows the inner corner (blind variant)."""
    s = params.world_scale
    half = params.corridor_width / s / 2.0
    c = 32.0
    lo, hi = c - half, c + half
    arm = 32.0  # 8 m at default scale
    x_start, y_top = hi - arm, hi + arm - (hi - lo)
    inner = lo + nose
    segs = [
        (x_start, lo, hi, lo), (hi, lo, hi, y_top),          # outer wall
        (x_start, hi, inner, hi), (inner, hi, inner, y_top),  # inner wall
    ]
    return segs, (x_start, lo, hi, y_top, inner)


def _l_corner(params: ScenarioParams):
    segs, (x_start, lo, hi, y_top, inner) = _l_geometry(params)
    mid = (lo + hi) / 2.0
    off = 2.0
    pairs = []
    gx = (inner + hi) / 2.0
    for i in range(params.n_agents):
        k = i // 2
        dy = -off if i % 2 == 0 else off
        pairs.append((x_start + 4.0 + k * 4.0, mid + dy, gx + dy / 2.0, y_top - 8.0 - k * 4.0))
    return _scaled(params, segs, pairs)


def _blind_corner(params: ScenarioParams):
    segs, (x_start, lo, hi, y_top, inner) = _l_geometry(params, nose=2.0)
    mid = (lo + hi) / 2.0
    gx = (inner + hi) / 2.0
    pairs = []
    for i in range(params.n_agents):
        k = i // 2
        if i % 2 == 0:  # along the horizontal arm, around the corner, up
            pairs.append((x_start + 4.0 + k * 4.0, mid - 1.0, gx + 1.0, y_top - 6.0 - k * 4.0))
        else:  # opposing: down the vertical arm, around the corner, out
            pairs.append((gx, y_top - 10.0 - k * 4.0, x_start + 2.0 + k * 4.0, mid + 1.0))
    return _scaled(params, segs, pairs)


def _crowded(params: ScenarioParams):
    s = params.world_scale
    rng = random.Random(("crowded", params.seed).__repr__())
    margin = 6.0
    pairs = []
    min_sep = 2.0 * params.radius / s + 1.0
    for _ in range(params.n_agents):
        for attempt in range(200):
            sx = rng.uniform(margin, _GRID - margin)
            sy = rng.uniform(margin, _GRID - margin)
            gx = rng.uniform(margin, _GRID - margin)
            gy = rng.uniform(margin, _GRID - margin)
            far_enough = math.hypot(gx - sx, gy - sy) * s >= 4.0
            clear = all(math.hypot(sx - ox, sy - oy) >= min_sep for ox, oy, _, _ in pairs)
            goals_clear = all(math.hypot(gx - ox, gy - oy) >= min_sep for _, _, ox, oy in pairs)
            if far_enough and clear and goals_clear:
                pairs.append((sx, sy, gx, gy))
                break
        else:
            raise ScenarioError("could not place crowded-traffic agents without overlap")
    return _scaled(params, [], pairs)


def _parallel(params: ScenarioParams):
    pairs = []
    for i in range(params.n_agents):
        lane_y = 32.0 + 4.0 * ((i // 2 + 1) // 2) * (-1 if (i // 2) % 2 else 1)
        if i % 2 == 0:  # fast follower
            pairs.append((16.0, lane_y, 52.0, lane_y))
        else:  # slow leader ahead in the same lane
            pairs.append((24.0, lane_y, 56.0, lane_y))
    return _scaled(params, [], pairs)


def _perpendicular(params: ScenarioParams):
    a = 15.0
    c = 32.0
    pairs = []
    n = params.n_agents
    n_pairs, leftover = divmod(n, 2)
    for k in range(n_pairs):
        lane = 4.0 * ((k + 1) // 2) * (-1 if k % 2 else 1)
        pairs.append((c - a, c + lane, c + a, c + lane))  # eastbound
        pairs.append((c + lane, c - a, c + lane, c + a))  # northbound
    if leftover:  # odd agent travels along the diagonal symmetry axis
        pairs.append((c - 12.0, c - 12.0, c + 12.0, c + 12.0))
    return _scaled(params, [], pairs)


def _circular(params: ScenarioParams):
    s = params.world_scale
    ring = 4.0 / s  # 4 m ring radius in grid units
    c = 32.0
    pairs = []
    for i in range(params.n_agents):
        th = 2.0 * math.pi * i / params.n_agents
        sx, sy = c + ring * math.cos(th), c + ring * math.sin(th)
        gx, gy = c - ring * math.cos(th), c - ring * math.sin(th)
        pairs.append((sx, sy, gx, gy))
    return _scaled(params, [], pairs)


_BUILDERS = {
    "doorway": _doorway,
    "intersection": _intersection,
    "hallway": _hallway,
    "l_corner": _l_corner,
    "blind_corner": _blind_corner,
    "crowded": _crowded,
    "parallel": _parallel,
    "perpendicular": _perpendicular,
    "circular": _circular,
}


def _parallel_speed(params: ScenarioParams, i: int) -> float:
    return params.preferred_speed * (1.0 if i % 2 == 0 else 0.65)


def _apply_jitter(kind, params, geometry, endpoints):
    if params.jitter == 0.0:
        return endpoints
    rng = random.Random((kind, "jitter", params.seed).__repr__())
    min_sep = 2.0 * params.radius
    xmin, ymin, xmax, ymax = geometry.bounds
    for attempt in range(100):
        jittered = []
        for start, goal in endpoints:
            r = params.jitter * math.sqrt(rng.random())
            th = rng.uniform(0.0, 2.0 * math.pi)
            jittered.append((start + Vec2(r * math.cos(th), r * math.sin(th)), goal))
        seps_ok = all(
            jittered[i][0].dist(jittered[j][0]) >= min_sep
            for i in range(len(jittered))
            for j in range(i + 1, len(jittered))
        )
        clear_ok = all(
            geometry.clearance(s) >= params.radius
            and xmin + params.radius <= s.x <= xmax - params.radius
            and ymin + params.radius <= s.y <= ymax - params.radius
            for s, _ in jittered
        )
        if seps_ok and clear_ok:
            return jittered
    raise ScenarioError(
        f"jitter {params.jitter} m violates start separation after 100 attempts"
    )


def _validate(scenario: Scenario) -> None:
    agents = scenario.agents
    ids = [a.id for a in agents]
    if len(set(ids)) != len(ids):
        raise ScenarioError(f"agent ids must be unique, got {ids}")
    for i in range(len(agents)):
        for j in range(i + 1, len(agents)):
            sep = agents[i].start.dist(agents[j].start)
            need = agents[i].radius + agents[j].radius
            if sep < need:
                raise ScenarioError(
                    f"agents {agents[i].id} and {agents[j].id} overlap at start "
                    f"(separation {sep:.3f} < {need:.3f})"
                )
    for a in agents:
        for p, label in ((a.start, "start"), (a.goal, "goal")):
            clr = scenario.geometry.clearance(p)
            if clr < a.radius:
                raise ScenarioError(
                    f"agent {a.id} {label} clearance {clr:.3f} m < radius {a.radius:.3f} m"
                )


def verify_reachability(scenario: Scenario) -> None:
    """Check every goal is reachable from its start (nominal-path planner)."""
    from .analysis import nominal_plan

    for a in scenario.agents:
        nominal_plan(a, scenario.geometry)  # raises UnreachableGoalError


def override_agents(
    scenario: Scenario,
    starts: dict[int, Vec2] | None = None,
    goals: dict[int, Vec2] | None = None,
    priorities: dict[int, float] | None = None,
) -> Scenario:
    """Replace selected agent endpoints/priorities; revalidates invariants."""
    agents = []
    for a in scenario.agents:
        kwargs = {}
        if starts and a.id in starts:
            kwargs["start"] = starts[a.id]
        if goals and a.id in goals:
            kwargs["goal"] = goals[a.id]
        if priorities and a.id in priorities:
            kwargs["priority"] = priorities[a.id]
        agents.append(replace(a, **kwargs) if kwargs else a)
    out = replace(scenario, agents=tuple(agents))
    _validate(out)
    return out
