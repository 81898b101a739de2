"""Discrete-time integration of agent motion and collision detection.

Single-integrator agents track a clamped velocity command directly;
double-integrator agents use semi-implicit Euler (stable at the default
dt=0.05 s). Collision checks are discrete per step: dt * max_speed must
stay below the thinnest obstacle feature to rule out tunneling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import AgentSpec, AgentState, Vec2, WorldGeometry, point_segment_distance

VELOCITY = "velocity_command"
ACCELERATION = "acceleration_command"


@dataclass(frozen=True, slots=True)
class Control:
    """Solver output for one agent: a velocity or acceleration command."""

    value: Vec2
    mode: str = VELOCITY

    def __post_init__(self) -> None:
        if self.mode not in (VELOCITY, ACCELERATION):
            raise ValueError(f"unknown control mode {self.mode!r}")


@dataclass(frozen=True, slots=True)
class CollisionEvent:
    time: float
    kind: str  # "agent_agent" | "agent_obstacle"
    ids: tuple[int, ...]
    penetration: float


class ControlError(ValueError):
    """A solver emitted a non-finite control; signals a solver bug."""


def _clamp(v: Vec2, limit: float) -> Vec2:
    n = v.norm()
    if n <= limit:
        return v
    return v * (limit / n)


def step(state: AgentState, spec: AgentSpec, control: Control, dt: float) -> AgentState:
    """Advance one agent by dt under the given command."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if not (math.isfinite(control.value.x) and math.isfinite(control.value.y)):
        raise ControlError(f"non-finite control for agent {spec.id}: {control.value!r}")
    if control.mode == VELOCITY:
        v = _clamp(control.value, spec.max_speed)
        pos = state.position + v * dt
        return AgentState(pos, v, state.time + dt)
    a = _clamp(control.value, spec.max_accel)
    v = _clamp(state.velocity + a * dt, spec.max_speed)
    pos = state.position + v * dt
    return AgentState(pos, v, state.time + dt)


def check_collisions(
    states: list[AgentState],
    specs: list[AgentSpec],
    geometry: WorldGeometry,
) -> list[CollisionEvent]:
    """Overlap events at the given instant; empty list means the step is safe.

    Contact at exactly the combined radius is safe; only strict overlap is
    an event.
    """
    if len(states) != len(specs):
        raise ValueError("states and specs must align")
    events: list[CollisionEvent] = []
    t = states[0].time if states else 0.0
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            d = states[i].position.dist(states[j].position)
            r_sum = specs[i].radius + specs[j].radius
            if d < r_sum:
                events.append(
                    CollisionEvent(
                        time=t,
                        kind="agent_agent",
                        ids=(specs[i].id, specs[j].id),
                        penetration=r_sum - d,
                    )
                )
    for i, (st, sp) in enumerate(zip(states, specs)):
        for seg in geometry.obstacles:
            d = point_segment_distance(st.position, seg)
            if d < sp.radius:
                events.append(
                    CollisionEvent(
                        time=t,
                        kind="agent_obstacle",
                        ids=(sp.id,),
                        penetration=sp.radius - d,
                    )
                )
                break  # one obstacle event per agent per step is enough
    return events
