"""Velocity projection kernel shared by all reactive solvers.

Projects a nominal 2D velocity onto the intersection of half-planes and a
speed disc. When that intersection is empty, falls back to the velocity of
least maximum violation (the standard reciprocal-avoidance relaxation).

The feasible solve is randomized-incremental: constraints are inserted in a
pseudo-random order and the optimum is re-solved on the boundary line of
each newly violated constraint, which is expected linear time in the
constraint count. The insertion order is seeded from a hash of the sorted
constraint data, so results are reproducible and independent of the
caller's constraint ordering.
"""
from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass

from .core import Vec2

FEAS_TOL = 1e-7
_UNIT_TOL = 1e-9


@dataclass(frozen=True, slots=True)
class HalfPlane:
    """Feasible set {u : normal . u <= offset}; normal is a unit vector."""

    normal: Vec2
    offset: float

    def __post_init__(self) -> None:
        n = self.normal.norm()
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"half-plane normal must be unit length, got |n|={n}")

    def violation(self, u: Vec2) -> float:
        return self.normal.dot(u) - self.offset


@dataclass(frozen=True, slots=True)
class ProjectionResult:
    u_star: Vec2
    feasible: bool
    max_violation: float


def _clamp_to_disc(u: Vec2, cap: float) -> Vec2:
    n = u.norm()
    if n <= cap:
        return u
    return u * (cap / n)


def _insertion_order(constraints: list[HalfPlane]) -> list[int]:
    """Pseudo-random insertion order seeded by the (sorted) constraint data.

    Sorting before hashing makes the order, hence the result bit pattern,
    invariant under permutations of the caller's constraint list.
    """
    keyed = sorted(
        range(len(constraints)),
        key=lambda i: (constraints[i].normal.x, constraints[i].normal.y, constraints[i].offset),
    )
    h = hashlib.blake2b(digest_size=8)
    for i in keyed:
        c = constraints[i]
        h.update(repr((c.normal.x, c.normal.y, c.offset)).encode())
    rng = random.Random(int.from_bytes(h.digest(), "big"))
    rng.shuffle(keyed)
    return keyed


def _solve_on_line(
    idx: int,
    order: list[int],
    upto: int,
    constraints: list[HalfPlane],
    u_pref: Vec2,
    cap: float,
    slack: float,
) -> Vec2 | None:
    """Optimum restricted to the boundary line of constraints[idx].

    Returns None when the line segment inside the disc and all previously
    inserted half-planes is empty (within slack).
    """
    c = constraints[idx]
    # Line: p0 + t*d with p0 the line point closest to the origin.
    p0 = c.normal * c.offset
    d = Vec2(-c.normal.y, c.normal.x)
    disc = cap * cap - c.offset * c.offset
    if disc < 0.0:
        return None
    half = math.sqrt(disc)
    t_lo, t_hi = -half, half
    for k in range(upto):
        other = constraints[order[k]]
        denom = other.normal.dot(d)
        dist = other.offset - other.normal.dot(p0)
        if abs(denom) < 1e-14:
            if dist < -slack:
                return None
            continue
        t = dist / denom
        if denom > 0:
            t_hi = min(t_hi, t)
        else:
            t_lo = max(t_lo, t)
        if t_lo > t_hi + slack:
            return None
    t_opt = d.dot(u_pref - p0)
    t_opt = max(t_lo, min(t_hi, t_opt))
    return p0 + d * t_opt


def _solve_feasible(
    constraints: list[HalfPlane],
    u_pref: Vec2,
    cap: float,
    order: list[int],
    slack: float = FEAS_TOL,
) -> Vec2 | None:
    """Closest point to u_pref in (half-plane intersection) ∩ (speed disc)."""
    u = _clamp_to_disc(u_pref, cap)
    for i in range(len(order)):
        c = constraints[order[i]]
        if c.violation(u) <= slack:
            continue
        u_new = _solve_on_line(order[i], order, i, constraints, u_pref, cap, slack)
        if u_new is None:
            return None
        u = u_new
    return u


def _relaxed(constraints: list[HalfPlane], slack: float) -> list[HalfPlane]:
    return [HalfPlane(c.normal, c.offset + slack) for c in constraints]


def project(u_nom: Vec2, constraints: list[HalfPlane], speed_cap: float) -> ProjectionResult:
    """Project u_nom onto the half-plane intersection within the speed disc.

    Feasible case: returns the unique closest feasible velocity. Infeasible
    case: returns the velocity minimizing the maximum signed violation over
    the half-planes (subject to the cap), ties broken toward smaller speed,
    with max_violation reporting that minimax level.
    """
    if speed_cap <= 0:
        raise ValueError("speed_cap must be > 0")
    if len(constraints) > 64:
        raise ValueError("constraint count exceeds the supported bound (64)")
    if not constraints:
        return ProjectionResult(_clamp_to_disc(u_nom, speed_cap), True, 0.0)

    order = _insertion_order(constraints)
    u = _solve_feasible(constraints, u_nom, speed_cap, order)
    if u is not None:
        return ProjectionResult(u, True, 0.0)

    # Minimax fallback: bisect the violation level s at which
    # {u : n.u <= o + s, |u| <= cap} becomes non-empty, then take the
    # smallest-speed point of the relaxed region. The bisection runs to
    # floating-point exhaustion with strict (zero-slack) feasibility so the
    # returned point is stable to ~1e-8 even at disc-tangency optima.
    origin = Vec2(0.0, 0.0)
    s_lo = 0.0
    s_hi = max(0.0, max(-c.offset for c in constraints)) + speed_cap + 1.0
    u_star = _solve_feasible(_relaxed(constraints, s_hi), origin, speed_cap, order, slack=0.0)
    for _ in range(200):
        s_mid = 0.5 * (s_lo + s_hi)
        if s_mid <= s_lo or s_mid >= s_hi:
            break
        u_mid = _solve_feasible(_relaxed(constraints, s_mid), origin, speed_cap, order, slack=0.0)
        if u_mid is None:
            s_lo = s_mid
        else:
            s_hi = s_mid
            u_star = u_mid
    if u_star is None:
        # Zero-width numerical gap: relax by the feasibility tolerance.
        u_star = _solve_feasible(_relaxed(constraints, s_hi + FEAS_TOL), origin, speed_cap, order)
        assert u_star is not None
    violation = max(c.violation(u_star) for c in constraints)
    return ProjectionResult(u_star, False, max(0.0, violation))
