"""Social mini-game detection over nominal (individually optimal) trajectories.

A scenario is an SMG when, with every agent following its own shortest
collision-free path at preferred speed as if alone, some pair's footprint
discs overlap over a contiguous time window longer than delta. The active
coupling set at time t is the connected component of the pairwise conflict
graph at t.

Each agent's set of individually optimal trajectories is reduced to a
single representative: the visibility-graph geodesic with deterministic
lexicographic tie-breaking. Trajectories shorter than the common horizon
are treated as parked at their goal.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .core import (
    AgentSpec,
    AgentState,
    Trajectory,
    Vec2,
    WorldGeometry,
    point_segment_distance,
    polyline_length,
    segment_segment_distance,
    state_at_time,
)
from .scenarios import Scenario

DEFAULT_DT = 0.05
DEFAULT_DELTA = 0.2
INFLATION_MARGIN = 0.05
_CORNER_NODES = 16


class UnreachableGoalError(RuntimeError):
    pass


@dataclass(frozen=True, slots=True)
class NominalPlan:
    agent_id: int
    path: tuple[Vec2, ...]
    trajectory: Trajectory

    @property
    def length(self) -> float:
        return polyline_length(list(self.path))

    @property
    def duration(self) -> float:
        return self.trajectory.duration


@dataclass(frozen=True, slots=True)
class SmgReport:
    is_smg: bool
    window: tuple[float, float] | None
    conflicting_pairs: tuple[tuple[int, int], ...]
    coupling_sets: tuple[tuple[float, tuple[tuple[int, ...], ...]], ...]
    delta: float

    def components(self) -> list[set[int]]:
        """Connected components of the union conflict graph over the episode."""
        parent: dict[int, int] = {}

        def find(a: int) -> int:
            parent.setdefault(a, a)
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i, j in self.conflicting_pairs:
            parent[find(i)] = find(j)
        groups: dict[int, set[int]] = {}
        for a in parent:
            groups.setdefault(find(a), set()).add(a)
        return sorted(groups.values(), key=lambda g: min(g))


def _edge_clear(a: Vec2, b: Vec2, geometry: WorldGeometry, clearance: float) -> bool:
    for seg in geometry.obstacles:
        if segment_segment_distance((a, b), seg) < clearance - 1e-9:
            return False
    return True


def _graph_nodes(geometry: WorldGeometry, clearance: float) -> list[Vec2]:
    nodes = []
    ring = 1.1 * clearance
    for seg in geometry.obstacles:
        for end in seg:
            for k in range(_CORNER_NODES):
                th = 2.0 * math.pi * k / _CORNER_NODES
                p = end + Vec2(ring * math.cos(th), ring * math.sin(th))
                if all(point_segment_distance(p, s) >= clearance for s in geometry.obstacles):
                    nodes.append(p)
    return nodes


def shortest_path(start: Vec2, goal: Vec2, geometry: WorldGeometry, clearance: float) -> list[Vec2]:
    """Geodesic through the inflated visibility graph; lexicographic tie-break."""
    if _edge_clear(start, goal, geometry, clearance):
        return [start, goal]
    nodes = [start, goal] + _graph_nodes(geometry, clearance)
    n = len(nodes)
    keys = [(p.x, p.y) for p in nodes]
    dist = {0: 0.0}
    prev: dict[int, int] = {}
    heap: list[tuple[float, tuple[float, float], int]] = [(0.0, keys[0], 0)]
    done: set[int] = set()
    while heap:
        d, _, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == 1:
            break
        pu = nodes[u]
        for v in range(n):
            if v in done or v == u:
                continue
            pv = nodes[v]
            step = pu.dist(pv)
            nd = d + step
            if nd >= dist.get(v, math.inf) - 1e-12:
                continue
            if not _edge_clear(pu, pv, geometry, clearance):
                continue
            dist[v] = nd
            prev[v] = u
            heapq.heappush(heap, (nd, keys[v], v))
    if 1 not in done:
        raise UnreachableGoalError(
            f"no collision-free path from {start} to {goal} at clearance {clearance}"
        )
    path = [1]
    while path[-1] != 0:
        path.append(prev[path[-1]])
    return [nodes[i] for i in reversed(path)]


def _traverse(path: list[Vec2], speed: float, dt: float) -> Trajectory:
    """Sample the polyline at constant speed on a uniform dt grid."""
    total = polyline_length(path)
    if total == 0.0:
        return Trajectory(dt=dt, samples=(AgentState(path[0], Vec2(0.0, 0.0), 0.0),))
    cum = [0.0]
    for k in range(len(path) - 1):
        cum.append(cum[-1] + path[k].dist(path[k + 1]))

    def at_arc(s: float) -> tuple[Vec2, Vec2]:
        s = min(max(s, 0.0), total)
        for k in range(len(cum) - 1):
            if s <= cum[k + 1] or k == len(cum) - 2:
                seg_len = cum[k + 1] - cum[k]
                if seg_len == 0.0:
                    continue
                frac = (s - cum[k]) / seg_len
                tangent = (path[k + 1] - path[k]).unit()
                return path[k] + (path[k + 1] - path[k]) * frac, tangent
        return path[-1], (path[-1] - path[-2]).unit()

    duration = total / speed
    n_steps = math.ceil(duration / dt - 1e-9)
    samples = []
    for k in range(n_steps + 1):
        s = min(k * dt * speed, total)
        pos, tangent = at_arc(s)
        vel = tangent * speed if s < total else Vec2(0.0, 0.0)
        samples.append(AgentState(pos, vel, k * dt))
    return Trajectory(dt=dt, samples=tuple(samples))


def nominal_plan(
    spec: AgentSpec,
    geometry: WorldGeometry,
    dt: float = DEFAULT_DT,
    inflation_margin: float = INFLATION_MARGIN,
) -> NominalPlan:
    """Single-agent shortest-path plan traversed at preferred speed.

    The inflation margin shrinks automatically when the start or goal sits
    closer to a wall than radius + margin, so legal-but-tight endpoints stay
    plannable.
    """
    margin = inflation_margin
    for p in (spec.start, spec.goal):
        margin = min(margin, max(0.0, geometry.clearance(p) - spec.radius))
    clearance = spec.radius + margin
    if spec.start.dist(spec.goal) < 1e-12:
        traj = Trajectory(dt=dt, samples=(AgentState(spec.start, Vec2(0.0, 0.0), 0.0),))
        return NominalPlan(agent_id=spec.id, path=(spec.start,), trajectory=traj)
    path = shortest_path(spec.start, spec.goal, geometry, clearance)
    return NominalPlan(
        agent_id=spec.id,
        path=tuple(path),
        trajectory=_traverse(path, spec.preferred_speed, dt),
    )


def detect_smg(
    scenario: Scenario,
    delta: float = DEFAULT_DELTA,
    dt: float = DEFAULT_DT,
    plans: dict[int, NominalPlan] | None = None,
) -> SmgReport:
    """Overlap-event test over all agent pairs' nominal trajectories."""
    if delta <= 0:
        raise ValueError("delta must be > 0")
    if plans is None:
        plans = {a.id: nominal_plan(a, scenario.geometry, dt=dt) for a in scenario.agents}
    agents = {a.id: a for a in scenario.agents}
    ids = sorted(agents)
    horizon = max((plans[i].duration for i in ids), default=0.0)
    n_steps = math.ceil(horizon / dt - 1e-9) if horizon > 0 else 0
    times = [k * dt for k in range(n_steps + 1)]

    conflict_at: list[set[tuple[int, int]]] = [set() for _ in times]
    pair_windows: list[tuple[float, float, tuple[int, int]]] = []
    conflicting: list[tuple[int, int]] = []
    for ai in range(len(ids)):
        for aj in range(ai + 1, len(ids)):
            i, j = ids[ai], ids[aj]
            if plans[i].duration == 0.0 or plans[j].duration == 0.0:
                continue  # zero-duration plans cannot produce a window
            r_sum = agents[i].radius + agents[j].radius
            mask = []
            for k, t in enumerate(times):
                pi = state_at_time(plans[i].trajectory, t).position
                pj = state_at_time(plans[j].trajectory, t).position
                hit = pi.dist(pj) < r_sum
                mask.append(hit)
                if hit:
                    conflict_at[k].add((i, j))
            if any(mask):
                conflicting.append((i, j))
            # contiguous runs longer than delta
            k = 0
            while k < len(mask):
                if mask[k]:
                    k2 = k
                    while k2 + 1 < len(mask) and mask[k2 + 1]:
                        k2 += 1
                    a, b = times[k], times[k2]
                    if b - a > delta:
                        pair_windows.append((a, b, (i, j)))
                        break
                    k = k2 + 1
                else:
                    k += 1

    window = min(pair_windows)[:2] if pair_windows else None
    coupling = []
    for k, t in enumerate(times):
        if not conflict_at[k]:
            continue
        comps = _components_of(conflict_at[k])
        coupling.append((t, tuple(tuple(sorted(c)) for c in comps)))
    return SmgReport(
        is_smg=window is not None,
        window=window,
        conflicting_pairs=tuple(sorted(conflicting)),
        coupling_sets=tuple(coupling),
        delta=delta,
    )


def _components_of(pairs: set[tuple[int, int]]) -> list[set[int]]:
    parent: dict[int, int] = {}

    def find(a: int) -> int:
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in pairs:
        parent[find(i)] = find(j)
    groups: dict[int, set[int]] = {}
    for a in parent:
        groups.setdefault(find(a), set()).add(a)
    return sorted(groups.values(), key=lambda g: min(g))
