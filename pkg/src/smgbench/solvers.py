"""Per-step control policies: reciprocal velocity-obstacle avoidance (orca),
a barrier-filtered right-hand-rule resolver (cbf_rhr), priority auctions with
velocity scaling (auction), and a one-step buffered-Voronoi surrogate of
receding-horizon planning (impc_lite).

Every solver is a goal-seeking pure-pursuit layer filtered through the
shared velocity-projection kernel; they differ only in the half-planes they
build and in how they break symmetric deadlocks. All solvers are
deterministic: identical views, configs, and clocks produce identical
controls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .analysis import NominalPlan, SmgReport
from .core import (
    AgentSpec,
    AgentState,
    Vec2,
    closest_point_on_segment,
    point_segment_distance,
)
from .dynamics import Control
from .projection import HalfPlane, project
from .scenarios import Scenario

SOLVER_KINDS = ("orca", "cbf_rhr", "auction", "impc_lite")


class SolverError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class SolverConfig:
    kind: str = "orca"
    time_horizon: float = 2.0  # VO truncation horizon, seconds
    safety_margin: float = 0.05  # meters added to combined radii
    deadlock_speed: float = 0.05  # stall threshold, m/s
    deadlock_duration: float = 1.5  # stall time before flagging, seconds
    perturb_angle: float = math.pi / 6  # clockwise nominal rotation when stalled
    perturb_hysteresis: float = 1.0  # seconds the rotation outlives the flag
    velocity_scale: float = 0.5  # auction gamma in (0, 1)
    warning_band: float = 0.3  # buffered-Voronoi band width, meters
    auction_period: float = 0.5  # seconds between sealed-bid rounds
    goal_tol: float = 0.1  # meters
    lookahead: float = 0.5  # pure-pursuit carrot distance, meters
    cbf_gain: float = 1.0  # linear class-K gain, 1/s

    def __post_init__(self) -> None:
        if self.kind == "cadrl":
            raise SolverError(
                "cadrl requires a trained policy and is not included; "
                f"available solvers: {', '.join(SOLVER_KINDS)}"
            )
        if self.kind not in SOLVER_KINDS:
            raise SolverError(
                f"unknown solver kind {self.kind!r}; available: {', '.join(SOLVER_KINDS)}"
            )
        if self.time_horizon <= 0:
            raise ValueError("time_horizon must be > 0")
        if not 0.0 < self.velocity_scale < 1.0:
            raise ValueError("velocity_scale must be in (0, 1)")
        if self.warning_band <= 0:
            raise ValueError("warning_band must be > 0")


@dataclass(frozen=True, slots=True)
class WorldView:
    """What one agent can see this step."""

    self_spec: AgentSpec
    self_state: AgentState
    neighbors: tuple[tuple[AgentSpec, AgentState], ...]
    obstacles: tuple[tuple[Vec2, Vec2], ...]
    time: float
    valuations_visible: bool = False


@dataclass(frozen=True, slots=True)
class DeadlockState:
    timers: tuple[tuple[int, float], ...] = ()
    flagged: frozenset[int] = frozenset()

    def timer(self, agent_id: int) -> float:
        for i, t in self.timers:
            if i == agent_id:
                return t
        return 0.0


def detect_deadlock(
    agents: list[tuple[AgentSpec, AgentState]],
    deadlock: DeadlockState,
    dt: float,
    config: SolverConfig,
) -> DeadlockState:
    """Advance per-agent stall timers; flag agents stalled away from goal."""
    timers = []
    flagged = set()
    for spec, state in agents:
        at_goal = state.position.dist(spec.goal) <= config.goal_tol
        if at_goal or state.velocity.norm() >= config.deadlock_speed:
            t = 0.0
        else:
            t = deadlock.timer(spec.id) + dt
        timers.append((spec.id, t))
        if t >= config.deadlock_duration:
            flagged.add(spec.id)
    return DeadlockState(timers=tuple(timers), flagged=frozenset(flagged))


def build_views(
    scenario: Scenario,
    states: dict[int, AgentState],
    t: float,
    valuations_visible: bool = False,
) -> dict[int, WorldView]:
    """Assemble each agent's observation under the configured observability."""
    views = {}
    for spec in scenario.agents:
        me = states[spec.id]
        neighbors = []
        for other in scenario.agents:
            if other.id == spec.id:
                continue
            st = states[other.id]
            if me.position.dist(st.position) > spec.sensing_radius:
                continue
            public = other if valuations_visible else replace(other, priority=1.0)
            neighbors.append((public, st))
        obstacles = tuple(
            seg
            for seg in scenario.geometry.obstacles
            if point_segment_distance(me.position, seg) <= spec.sensing_radius
        )
        views[spec.id] = WorldView(
            self_spec=spec,
            self_state=me,
            neighbors=tuple(neighbors),
            obstacles=obstacles,
            time=t,
            valuations_visible=valuations_visible,
        )
    return views


def nominal_control(view: WorldView, plan: NominalPlan, config: SolverConfig, dt: float) -> Control:
    """Pure-pursuit velocity command toward the carrot on the nominal path."""
    spec, state = view.self_spec, view.self_state
    goal = plan.path[-1]
    p = state.position
    if p.dist(goal) <= config.goal_tol:
        return Control(Vec2(0.0, 0.0))
    path = plan.path
    if len(path) == 1:
        return Control(Vec2(0.0, 0.0))
    # Arc-length projection of the agent onto the path.
    best_s, best_d, cum = 0.0, math.inf, 0.0
    for k in range(len(path) - 1):
        a, b = path[k], path[k + 1]
        seg = b - a
        seg_len = seg.norm()
        if seg_len == 0.0:
            continue
        frac = max(0.0, min(1.0, (p - a).dot(seg) / (seg_len * seg_len)))
        proj = a + seg * frac
        d = p.dist(proj)
        if d < best_d:
            best_d, best_s = d, cum + frac * seg_len
        cum += seg_len
    total = cum
    carrot_s = min(best_s + config.lookahead, total)
    carrot = _point_at_arc(path, carrot_s)
    to_carrot = carrot - p
    dist = to_carrot.norm()
    if dist < 1e-12:
        to_carrot, dist = goal - p, (goal - p).norm()
    speed = min(spec.preferred_speed, dist / dt)
    return Control(to_carrot.unit() * speed)


def _point_at_arc(path: tuple[Vec2, ...], s: float) -> Vec2:
    cum = 0.0
    for k in range(len(path) - 1):
        seg_len = path[k].dist(path[k + 1])
        if cum + seg_len >= s or k == len(path) - 2:
            if seg_len == 0.0:
                continue
            frac = max(0.0, min(1.0, (s - cum) / seg_len))
            return path[k] + (path[k + 1] - path[k]) * frac
        cum += seg_len
    return path[-1]


# --- constraint builders -------------------------------------------------


def _orca_line(p_i, v_i, r_i, p_j, v_j, r_j, tau, dt) -> HalfPlane | None:
    """Reciprocal velocity-obstacle half-plane (responsibility share 1/2)."""
    rel_p = p_j - p_i
    rel_v = v_i - v_j
    dist_sq = rel_p.dot(rel_p)
    r_sum = r_i + r_j
    if dist_sq > r_sum * r_sum:
        w = rel_v - rel_p * (1.0 / tau)
        w_len_sq = w.dot(w)
        dot1 = w.dot(rel_p)
        if dot1 < 0.0 and dot1 * dot1 > r_sum * r_sum * w_len_sq:
            # Closest to the truncation arc.
            w_len = math.sqrt(w_len_sq)
            unit_w = w * (1.0 / w_len)
            direction = Vec2(unit_w.y, -unit_w.x)
            u = unit_w * (r_sum / tau - w_len)
        else:
            # Closest to a cone leg; ties go to the left leg.
            leg = math.sqrt(max(0.0, dist_sq - r_sum * r_sum))
            if rel_p.cross(w) > 0.0:
                direction = Vec2(
                    rel_p.x * leg - rel_p.y * r_sum, rel_p.x * r_sum + rel_p.y * leg
                ) * (1.0 / dist_sq)
            else:
                direction = Vec2(
                    rel_p.x * leg + rel_p.y * r_sum, -rel_p.x * r_sum + rel_p.y * leg
                ) * (-1.0 / dist_sq)
            dot2 = rel_v.dot(direction)
            u = direction * dot2 - rel_v
    else:
        # Already overlapping: push apart within one step.
        inv_dt = 1.0 / dt
        w = rel_v - rel_p * inv_dt
        w_len = w.norm()
        if w_len < 1e-12:
            return None
        unit_w = w * (1.0 / w_len)
        direction = Vec2(unit_w.y, -unit_w.x)
        u = unit_w * (r_sum * inv_dt - w_len)
    point = v_i + u * 0.5
    normal = direction.perp_right()
    return HalfPlane(normal.unit(), normal.unit().dot(point))


def _obstacle_halfplane_vo(p, radius, seg, tau) -> HalfPlane | None:
    """Limit the approach speed toward a static segment (full responsibility)."""
    q = closest_point_on_segment(p, seg)
    away = p - q
    d = away.norm()
    if d < 1e-9:
        return None
    slack = (d - radius) / tau
    toward = away.unit() * -1.0
    return HalfPlane(toward, slack)


def _cbf_halfplane_pair(p_i, p_j, v_j, r_sum, margin, alpha) -> HalfPlane | None:
    """Pairwise barrier condition on u_i, responsibility split 1/2.

    The full condition g.(u_i - u_j) >= -alpha*h is halved per agent with
    the neighbor's current velocity standing in for u_j:
    g.u_i >= g.v_j/2 - alpha*h/2. Halving the velocity term keeps the
    discrete-time mutual feedback loop damped (gain 1/2 instead of 1),
    which prevents nose-to-nose command chatter.
    """
    g = (p_i - p_j) * 2.0
    g_norm = g.norm()
    if g_norm < 1e-9:
        return None
    h = p_i.dist(p_j) ** 2 - (r_sum + margin) ** 2
    n = g.unit() * -1.0
    offset = (0.5 * alpha * h - 0.5 * g.dot(v_j)) / g_norm
    return HalfPlane(n, offset)


def _cbf_halfplane_obstacle(p, radius, seg, margin, alpha) -> HalfPlane | None:
    q = closest_point_on_segment(p, seg)
    g = (p - q) * 2.0
    g_norm = g.norm()
    if g_norm < 1e-9:
        return None
    h = p.dist(q) ** 2 - (radius + margin) ** 2
    n = g.unit() * -1.0
    offset = alpha * h / g_norm
    return HalfPlane(n, offset)


# --- solvers --------------------------------------------------------------


class Solver:
    """Stateful per-episode policy; step() maps views to per-agent controls."""

    def __init__(
        self,
        config: SolverConfig,
        scenario: Scenario,
        plans: dict[int, NominalPlan],
        smg: SmgReport | None = None,
        dt: float = 0.05,
    ) -> None:
        self.config = config
        self.scenario = scenario
        self.plans = plans
        self.smg = smg
        self.dt = dt

    def needs_valuations(self) -> bool:
        return False

    def step(
        self, views: dict[int, WorldView], t: float, deadlock: DeadlockState
    ) -> dict[int, Control]:
        raise NotImplementedError

    # shared helpers

    def _at_goal(self, view: WorldView) -> bool:
        return view.self_state.position.dist(view.self_spec.goal) <= self.config.goal_tol

    def _project(self, view: WorldView, u_pref: Vec2, constraints) -> Control:
        result = project(u_pref, constraints, view.self_spec.max_speed)
        return Control(result.u_star)


class OrcaSolver(Solver):
    def step(self, views, t, deadlock):
        cfg = self.config
        controls = {}
        for aid, view in views.items():
            if self._at_goal(view):
                controls[aid] = Control(Vec2(0.0, 0.0))
                continue
            spec, state = view.self_spec, view.self_state
            u_nom = nominal_control(view, self.plans[aid], cfg, self.dt).value
            cons = []
            for other, other_state in view.neighbors:
                reach = spec.radius + other.radius + cfg.time_horizon * (
                    spec.max_speed + other.max_speed
                )
                if state.position.dist(other_state.position) > reach:
                    continue
                line = _orca_line(
                    state.position, state.velocity, spec.radius,
                    other_state.position, other_state.velocity, other.radius,
                    cfg.time_horizon, self.dt,
                )
                if line is not None:
                    cons.append(line)
            for seg in view.obstacles:
                d = point_segment_distance(state.position, seg)
                if d - spec.radius > cfg.time_horizon * spec.max_speed:
                    continue
                hp = _obstacle_halfplane_vo(state.position, spec.radius, seg, cfg.time_horizon)
                if hp is not None:
                    cons.append(hp)
            controls[aid] = self._project(view, u_nom, cons)
        return controls


class CbfRhrSolver(Solver):
    """Barrier-filtered goal seeking with clockwise symmetry breaking.

    Flagged agents rotate their nominal clockwise. The rotation deepens
    both with id rank (so simultaneously stalled agents never mirror each
    other exactly) and with continued stall time (so a wedged agent sweeps
    toward retreat, opening space for the other to pass first).
    """

    def __init__(self, *args, rhr_enabled: bool = True, **kwargs):
        super().__init__(*args, **kwargs)
        self.rhr_enabled = rhr_enabled
        self._perturb_until: dict[int, float] = {}
        self._flag_since: dict[int, float] = {}

    def _cbf_constraints(self, view: WorldView) -> list[HalfPlane]:
        cfg = self.config
        spec, state = view.self_spec, view.self_state
        cons = []
        for other, other_state in view.neighbors:
            r_sum = spec.radius + other.radius
            reach = r_sum + cfg.safety_margin + 2.0 * cfg.time_horizon * spec.max_speed
            if state.position.dist(other_state.position) > reach:
                continue
            hp = _cbf_halfplane_pair(
                state.position, other_state.position, other_state.velocity,
                r_sum, cfg.safety_margin, cfg.cbf_gain,
            )
            if hp is not None:
                cons.append(hp)
        for seg in view.obstacles:
            d = point_segment_distance(state.position, seg)
            if d - spec.radius > cfg.time_horizon * spec.max_speed:
                continue
            hp = _cbf_halfplane_obstacle(
                state.position, spec.radius, seg, cfg.safety_margin, cfg.cbf_gain
            )
            if hp is not None:
                cons.append(hp)
        return cons

    def step(self, views, t, deadlock):
        cfg = self.config
        for aid in views:
            if aid in deadlock.flagged:
                self._perturb_until[aid] = t + cfg.perturb_hysteresis
                self._flag_since.setdefault(aid, t)
        active = sorted(
            aid for aid in views
            if aid in deadlock.flagged or t < self._perturb_until.get(aid, -math.inf)
        )
        for aid in list(self._flag_since):
            if aid not in active:
                del self._flag_since[aid]
        controls = {}
        for aid, view in views.items():
            if self._at_goal(view):
                controls[aid] = Control(Vec2(0.0, 0.0))
                continue
            u_nom = nominal_control(view, self.plans[aid], cfg, self.dt).value
            if self.rhr_enabled and aid in active:
                rank = active.index(aid)
                stalled_for = t - self._flag_since.get(aid, t)
                sweep = 1.0 + stalled_for / cfg.deadlock_duration
                u_nom = u_nom.rotated(-cfg.perturb_angle * (1 + rank) * sweep)
            controls[aid] = self._project(view, u_nom, self._cbf_constraints(view))
        return controls


class AuctionSolver(CbfRhrSolver):
    """Sealed-bid priority ranking with velocity scaling inside coupling sets.

    Every auction_period the agents of each nominally-coupled component are
    ranked by bid (their private valuation phi; ties to the lower id). The
    winner keeps nominal speed, rank k is scaled by gamma^k. Safety comes
    from the barrier projection; the right-hand-rule rotation is disabled.
    """

    def __init__(self, *args, forced_order: tuple[int, ...] | None = None, **kwargs):
        kwargs["rhr_enabled"] = False
        super().__init__(*args, **kwargs)
        self.forced_order = forced_order
        self._ranks: dict[int, int] = {}
        self._next_auction = -math.inf

    def needs_valuations(self) -> bool:
        return True

    def _hold_auction(self, views) -> None:
        self._ranks = {}
        components = self.smg.components() if self.smg is not None else []
        phis = {a.id: a.priority for a in self.scenario.agents}
        for comp in components:
            contenders = [
                aid for aid in sorted(comp)
                if aid in views and not self._at_goal(views[aid])
            ]
            if not contenders:
                continue
            if self.forced_order is not None:
                ordered = [a for a in self.forced_order if a in contenders]
                ordered += [a for a in contenders if a not in ordered]
            else:
                ordered = sorted(contenders, key=lambda a: (-phis[a], a))
            for rank, aid in enumerate(ordered):
                self._ranks[aid] = rank

    def step(self, views, t, deadlock):
        cfg = self.config
        if t >= self._next_auction:
            self._hold_auction(views)
            self._next_auction = t + cfg.auction_period
        controls = {}
        for aid, view in views.items():
            if self._at_goal(view):
                controls[aid] = Control(Vec2(0.0, 0.0))
                continue
            if not view.valuations_visible and self.forced_order is None:
                raise SolverError(
                    "auction solver requires valuation-visible observability"
                )
            u_nom = nominal_control(view, self.plans[aid], cfg, self.dt).value
            rank = self._ranks.get(aid, 0)
            if rank > 0:
                u_nom = u_nom * (cfg.velocity_scale ** rank)
            controls[aid] = self._project(view, u_nom, self._cbf_constraints(view))
        return controls


class ImpcLiteSolver(Solver):
    """One-step buffered-Voronoi projection with a right-shifted warning band.

    The receding-horizon planner this mirrors collapses here to a single-step
    constrained projection: stay inside your buffered Voronoi cell. When a
    cell wall is inside the warning band while progress has stalled, the
    wall's contact point shifts to the right-hand flank of the neighbor and
    the agent steers for it, skirting clockwise. If the stall persists long
    enough to raise the deadlock flag (a wedged bottleneck), the higher id
    backs off for a hold period while the lower id presses through.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._yield_until: dict[int, float] = {}

    def _obstacle_planes(self, view: WorldView) -> list[HalfPlane]:
        cfg = self.config
        spec, state = view.self_spec, view.self_state
        cons = []
        for seg in view.obstacles:
            d = point_segment_distance(state.position, seg)
            slack = (d - spec.radius - cfg.safety_margin / 2.0) / self.dt
            if slack >= spec.max_speed:
                continue
            q = closest_point_on_segment(state.position, seg)
            toward = (q - state.position).unit()
            if toward.norm() == 0.0:
                continue
            cons.append(HalfPlane(toward, slack))
        return cons

    def step(self, views, t, deadlock):
        cfg = self.config
        controls = {}
        for aid, view in views.items():
            if self._at_goal(view):
                controls[aid] = Control(Vec2(0.0, 0.0))
                continue
            spec, state = view.self_spec, view.self_state
            u_nom = nominal_control(view, self.plans[aid], cfg, self.dt).value
            goal_dir = (spec.goal - state.position).unit()
            progress = state.velocity.dot(goal_dir)
            cons = self._obstacle_planes(view)
            steer_targets: list[tuple[float, Vec2]] = []
            for other, other_state in view.neighbors:
                d = state.position.dist(other_state.position)
                buffer = (spec.radius + other.radius) / 2.0 + cfg.safety_margin / 2.0
                boundary = d / 2.0 - buffer  # distance from me to my cell wall
                if boundary / self.dt >= spec.max_speed:
                    continue  # cell wall unreachable this step
                n = (other_state.position - state.position).unit()
                cons.append(HalfPlane(n, boundary / self.dt))
                if boundary <= cfg.warning_band:
                    if progress < cfg.deadlock_speed:
                        # Steer for the wall contact point shifted to the
                        # neighbor's right-hand flank; the straight wall
                        # above stays in force, so separation holds.
                        keep_out = spec.radius + other.radius + cfg.safety_margin
                        steer_targets.append(
                            (d, other_state.position + n.perp_right() * keep_out)
                        )
                    if aid in deadlock.flagged and other.id < aid:
                        # Sustained wedge against a lower id: back off long
                        # enough for it to pass the bottleneck.
                        self._yield_until[aid] = t + cfg.perturb_hysteresis
            if t < self._yield_until.get(aid, -math.inf):
                u_nom = goal_dir * (-0.5 * spec.preferred_speed)
            elif steer_targets:
                _, target = min(steer_targets, key=lambda item: item[0])
                u_nom = (target - state.position).unit() * spec.preferred_speed
            controls[aid] = self._project(view, u_nom, cons)
        return controls


_SOLVERS = {
    "orca": OrcaSolver,
    "cbf_rhr": CbfRhrSolver,
    "auction": AuctionSolver,
    "impc_lite": ImpcLiteSolver,
}


def make_solver(
    config: SolverConfig,
    scenario: Scenario,
    plans: dict[int, NominalPlan],
    smg: SmgReport | None = None,
    dt: float = 0.05,
    forced_order: tuple[int, ...] | None = None,
) -> Solver:
    cls = _SOLVERS[config.kind]
    kwargs = {}
    if config.kind == "auction":
        kwargs["forced_order"] = forced_order
    elif forced_order is not None:
        raise SolverError("forced_order is only meaningful for the auction solver")
    return cls(config, scenario, plans, smg, dt, **kwargs)
