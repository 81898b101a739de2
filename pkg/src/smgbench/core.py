"""Shared geometric and kinematic vocabulary.

All quantities are SI (meters, seconds), 64-bit floats throughout. Every
type here is an immutable value; instances can be shared freely across
threads and processes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

GEOM_TOL = 1e-9


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True, slots=True)
class Vec2:
    """2D point/vector in meters. Components are always finite."""

    x: float
    y: float

    def __post_init__(self) -> None:
        _require_finite("Vec2 component", self.x, self.y)

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Vec2") -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def dist(self, other: "Vec2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def unit(self) -> "Vec2":
        n = self.norm()
        if n == 0.0:
            return Vec2(0.0, 0.0)
        return Vec2(self.x / n, self.y / n)

    def perp_right(self) -> "Vec2":
        """Clockwise (right-hand) perpendicular."""
        return Vec2(self.y, -self.x)

    def rotated(self, angle: float) -> "Vec2":
        c, s = math.cos(angle), math.sin(angle)
        return Vec2(c * self.x - s * self.y, s * self.x + c * self.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


Segment = tuple[Vec2, Vec2]


@dataclass(frozen=True, slots=True)
class AgentSpec:
    """A robot's static parameters: footprint, speed limits, endpoints, priority."""

    id: int
    radius: float
    preferred_speed: float
    start: Vec2
    goal: Vec2
    max_speed: float = 1.5
    max_accel: float = 2.0
    priority: float = 1.0
    sensing_radius: float = math.inf

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError("agent id must be >= 0")
        if self.radius <= 0:
            raise ValueError("radius must be > 0")
        if self.preferred_speed <= 0:
            raise ValueError("preferred_speed must be > 0")
        if self.max_speed < self.preferred_speed:
            raise ValueError("max_speed must be >= preferred_speed")
        if self.max_accel <= 0:
            raise ValueError("max_accel must be > 0")
        if self.priority < 0:
            raise ValueError("priority must be >= 0")
        if not self.sensing_radius > 0:
            raise ValueError("sensing_radius must be > 0 (math.inf for unbounded)")


@dataclass(frozen=True, slots=True)
class AgentState:
    """Kinematic state of one agent at one instant."""

    position: Vec2
    velocity: Vec2
    time: float = 0.0

    def __post_init__(self) -> None:
        if self.time < 0:
            raise ValueError("time must be >= 0")


@dataclass(frozen=True, slots=True)
class Trajectory:
    """Uniformly sampled state history: samples[k].time == t0 + k*dt."""

    dt: float
    samples: tuple[AgentState, ...]

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if not self.samples:
            raise ValueError("trajectory must be non-empty")
        object.__setattr__(self, "samples", tuple(self.samples))
        t0 = self.samples[0].time
        for k, s in enumerate(self.samples):
            if abs(s.time - (t0 + k * self.dt)) > 1e-6:
                raise ValueError("sample times must be uniform with spacing dt")

    @property
    def duration(self) -> float:
        return (len(self.samples) - 1) * self.dt

    def positions(self) -> list[Vec2]:
        return [s.position for s in self.samples]


@dataclass(frozen=True, slots=True)
class WorldGeometry:
    """Static obstacle segments plus scenario bounds.

    gap metadata is present only for bottleneck (doorway) scenarios:
    gap_width is the free opening in meters, gap_center the opening's
    midpoint, gap_normal the unit normal of the wall plane.
    """

    obstacles: tuple[Segment, ...]
    bounds: tuple[float, float, float, float]  # (xmin, ymin, xmax, ymax)
    gap_width: float | None = None
    gap_center: Vec2 | None = None
    gap_normal: Vec2 | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "obstacles", tuple(tuple(seg) for seg in self.obstacles))
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmax > xmin and ymax > ymin):
            raise ValueError("bounds must be a non-degenerate rectangle")
        tol = GEOM_TOL
        for a, b in self.obstacles:
            for p in (a, b):
                if not (xmin - tol <= p.x <= xmax + tol and ymin - tol <= p.y <= ymax + tol):
                    raise ValueError(f"obstacle endpoint {p} outside bounds {self.bounds}")
        if self.gap_width is not None and self.gap_width <= 0:
            raise ValueError("gap_width must be > 0 when present")

    def clearance(self, p: Vec2) -> float:
        """Distance from p to the nearest obstacle segment (inf if none)."""
        if not self.obstacles:
            return math.inf
        return min(point_segment_distance(p, seg) for seg in self.obstacles)


def point_segment_distance(p: Vec2, seg: Segment) -> float:
    """Euclidean distance from p to the closest point of the segment.

    A degenerate segment (coincident endpoints) is treated as a point.
    """
    a, b = seg
    ab = b - a
    denom = ab.dot(ab)
    if denom == 0.0:
        return p.dist(a)
    t = (p - a).dot(ab) / denom
    t = max(0.0, min(1.0, t))
    return p.dist(a + ab * t)


def closest_point_on_segment(p: Vec2, seg: Segment) -> Vec2:
    a, b = seg
    ab = b - a
    denom = ab.dot(ab)
    if denom == 0.0:
        return a
    t = max(0.0, min(1.0, (p - a).dot(ab) / denom))
    return a + ab * t


def segment_segment_distance(s1: Segment, s2: Segment) -> float:
    """Minimum distance between two segments (0 if they intersect)."""
    a, b = s1
    c, d = s2
    if _segments_intersect(a, b, c, d):
        return 0.0
    return min(
        point_segment_distance(a, s2),
        point_segment_distance(b, s2),
        point_segment_distance(c, s1),
        point_segment_distance(d, s1),
    )


def _segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool:
    def orient(p: Vec2, q: Vec2, r: Vec2) -> float:
        return (q - p).cross(r - p)

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return True
    # Collinear overlaps reduce to an endpoint lying on the other segment.
    for p, seg in ((a, (c, d)), (b, (c, d)), (c, (a, b)), (d, (a, b))):
        if point_segment_distance(p, seg) < GEOM_TOL:
            return True
    return False


def path_length(traj: Trajectory) -> float:
    """Total arc length of the sampled position polyline."""
    pts = traj.positions()
    return sum(pts[k].dist(pts[k + 1]) for k in range(len(pts) - 1))


def polyline_length(points: list[Vec2]) -> float:
    return sum(points[k].dist(points[k + 1]) for k in range(len(points) - 1))


def resample(traj: Trajectory, new_dt: float) -> Trajectory:
    """Linearly interpolate the trajectory onto a uniform grid spanning [t0, t_end].

    The grid step is new_dt snapped to an exact divisor of the duration
    (nearest integer interval count) so both endpoints are preserved
    exactly. Single-sample trajectories are returned unchanged.
    """
    if new_dt <= 0:
        raise ValueError("new_dt must be > 0")
    if len(traj.samples) == 1:
        return traj
    duration = traj.duration
    n_intervals = max(1, round(duration / new_dt))
    dt = duration / n_intervals
    t0 = traj.samples[0].time
    out = []
    for k in range(n_intervals + 1):
        t = t0 + k * dt
        out.append(_interp_state(traj, t))
    # Endpoints exactly.
    out[0] = traj.samples[0]
    last = traj.samples[-1]
    out[-1] = AgentState(last.position, last.velocity, t0 + n_intervals * dt)
    return Trajectory(dt=dt, samples=tuple(out))


def _interp_state(traj: Trajectory, t: float) -> AgentState:
    t0 = traj.samples[0].time
    u = (t - t0) / traj.dt
    k = int(math.floor(u))
    k = max(0, min(len(traj.samples) - 2, k))
    frac = u - k
    frac = max(0.0, min(1.0, frac))
    s0, s1 = traj.samples[k], traj.samples[k + 1]
    pos = s0.position + (s1.position - s0.position) * frac
    vel = s0.velocity + (s1.velocity - s0.velocity) * frac
    return AgentState(pos, vel, t)


def state_at_time(traj: Trajectory, t: float) -> AgentState:
    """State at time t; clamped to the trajectory's ends (parked at goal)."""
    t0 = traj.samples[0].time
    t_end = t0 + traj.duration
    if t <= t0:
        return traj.samples[0]
    if t >= t_end:
        last = traj.samples[-1]
        return AgentState(last.position, Vec2(0.0, 0.0), t)
    return _interp_state(traj, t)
