"""JSON codecs for the config and log record types.

The on-disk formats are the public contract consumed by the eval command
and by external tooling (the viz package reads meta.json and the
trajectory CSVs and nothing else). Unbounded sensing radius is encoded as
null to keep the JSON standard.
"""
from __future__ import annotations

import math
from dataclasses import asdict

from .analysis import SmgReport
from .core import AgentSpec, Vec2, WorldGeometry
from .dynamics import CollisionEvent
from .scenarios import Scenario, ScenarioParams
from .solvers import SolverConfig


def vec_to_json(v: Vec2) -> list[float]:
    return [v.x, v.y]


def vec_from_json(data) -> Vec2:
    return Vec2(float(data[0]), float(data[1]))


def agent_to_json(a: AgentSpec) -> dict:
    return {
        "id": a.id,
        "radius": a.radius,
        "preferred_speed": a.preferred_speed,
        "max_speed": a.max_speed,
        "max_accel": a.max_accel,
        "start": vec_to_json(a.start),
        "goal": vec_to_json(a.goal),
        "priority": a.priority,
        "sensing_radius": None if math.isinf(a.sensing_radius) else a.sensing_radius,
    }


def agent_from_json(d: dict) -> AgentSpec:
    return AgentSpec(
        id=int(d["id"]),
        radius=float(d["radius"]),
        preferred_speed=float(d["preferred_speed"]),
        max_speed=float(d["max_speed"]),
        max_accel=float(d["max_accel"]),
        start=vec_from_json(d["start"]),
        goal=vec_from_json(d["goal"]),
        priority=float(d["priority"]),
        sensing_radius=math.inf if d["sensing_radius"] is None else float(d["sensing_radius"]),
    )


def geometry_to_json(g: WorldGeometry) -> dict:
    return {
        "obstacles": [[vec_to_json(a), vec_to_json(b)] for a, b in g.obstacles],
        "bounds": list(g.bounds),
        "gap_width": g.gap_width,
        "gap_center": vec_to_json(g.gap_center) if g.gap_center else None,
        "gap_normal": vec_to_json(g.gap_normal) if g.gap_normal else None,
    }


def geometry_from_json(d: dict) -> WorldGeometry:
    return WorldGeometry(
        obstacles=tuple((vec_from_json(a), vec_from_json(b)) for a, b in d["obstacles"]),
        bounds=tuple(float(x) for x in d["bounds"]),
        gap_width=d["gap_width"],
        gap_center=vec_from_json(d["gap_center"]) if d["gap_center"] else None,
        gap_normal=vec_from_json(d["gap_normal"]) if d["gap_normal"] else None,
    )


def scenario_to_json(s: Scenario) -> dict:
    return {
        "kind": s.kind,
        "seed": s.seed,
        "geometry": geometry_to_json(s.geometry),
        "agents": [agent_to_json(a) for a in s.agents],
    }


def scenario_from_json(d: dict) -> Scenario:
    return Scenario(
        kind=d["kind"],
        seed=int(d["seed"]),
        geometry=geometry_from_json(d["geometry"]),
        agents=tuple(agent_from_json(a) for a in d["agents"]),
    )


def params_to_json(p: ScenarioParams) -> dict:
    d = asdict(p)
    d["priorities"] = list(p.priorities) if p.priorities is not None else None
    return d


def params_from_json(d: dict) -> ScenarioParams:
    d = dict(d)
    if d.get("priorities") is not None:
        d["priorities"] = tuple(float(x) for x in d["priorities"])
    return ScenarioParams(**d)


def solver_config_to_json(c: SolverConfig) -> dict:
    return asdict(c)


def solver_config_from_json(d: dict) -> SolverConfig:
    return SolverConfig(**d)


def smg_to_json(r: SmgReport) -> dict:
    return {
        "is_smg": r.is_smg,
        "window": list(r.window) if r.window else None,
        "delta": r.delta,
        "conflicting_pairs": [list(p) for p in r.conflicting_pairs],
        "coupling_sets": [
            {"time": t, "sets": [list(c) for c in comps]} for t, comps in r.coupling_sets
        ],
    }


def smg_from_json(d: dict) -> SmgReport:
    return SmgReport(
        is_smg=bool(d["is_smg"]),
        window=tuple(d["window"]) if d["window"] else None,
        delta=float(d["delta"]),
        conflicting_pairs=tuple(tuple(p) for p in d["conflicting_pairs"]),
        coupling_sets=tuple(
            (e["time"], tuple(tuple(c) for c in e["sets"])) for e in d["coupling_sets"]
        ),
    )


def collision_to_json(e: CollisionEvent) -> dict:
    return {"time": e.time, "kind": e.kind, "ids": list(e.ids), "penetration": e.penetration}


def collision_from_json(d: dict) -> CollisionEvent:
    return CollisionEvent(
        time=float(d["time"]),
        kind=d["kind"],
        ids=tuple(int(i) for i in d["ids"]),
        penetration=float(d["penetration"]),
    )
