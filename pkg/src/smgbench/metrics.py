"""Metric computations over completed episode logs.

Pure functions compute the per-trajectory quantities; compute_report
assembles the full per-agent and system-level report, spawning
counterfactual re-simulations (agent removal for invasiveness, forced
passage orderings for the social-welfare gap) through a caller-provided
rerun hook so this module never depends on the episode runner.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

from .core import Trajectory, Vec2, point_segment_distance

if TYPE_CHECKING:  # pragma: no cover
    from .harness import EpisodeLog

MAX_ORDERING_ROLLOUTS = 120


def avg_delta_v(traj: Trajectory) -> float:
    """Summed step-to-step velocity change over total elapsed time."""
    if len(traj.samples) < 2:
        return 0.0
    total = 0.0
    for k in range(len(traj.samples) - 1):
        total += traj.samples[k + 1].velocity.dist(traj.samples[k].velocity)
    return total / traj.duration


def makespan_ratio(ttgs: dict[int, float | None]) -> dict[int, float | None]:
    """TTG_i / fastest TTG; unfinished agents stay absent (None)."""
    finished = [t for t in ttgs.values() if t is not None]
    if not finished:
        return {i: None for i in ttgs}
    fastest = min(finished)
    return {i: (t / fastest if t is not None else None) for i, t in ttgs.items()}


def _directed_hausdorff(points: list[Vec2], polyline: list[Vec2]) -> float:
    if len(polyline) == 1:
        return max(p.dist(polyline[0]) for p in points)
    segs = list(zip(polyline[:-1], polyline[1:]))
    worst = 0.0
    for p in points:
        d = min(point_segment_distance(p, seg) for seg in segs)
        if d > worst:
            worst = d
    return worst


def path_deviation(actual: list[Vec2], nominal: list[Vec2]) -> float:
    """Symmetric discrete Hausdorff distance between position polylines.

    Vertices of each polyline are measured against the other polyline's
    continuous segments, which keeps the value robust to sampling dt.
    """
    if not actual or not nominal:
        raise ValueError("polylines must be non-empty")
    return max(_directed_hausdorff(actual, nominal), _directed_hausdorff(nominal, actual))


def flow_rate(n_agents: int, makespan: float, gap_width: float) -> float:
    """Agents per (meter of gap x second): N / (z * T)."""
    if makespan <= 0:
        raise ValueError("makespan must be > 0")
    if gap_width <= 0:
        raise ValueError("gap width must be > 0")
    return n_agents / (gap_width * makespan)


def social_welfare(phis: dict[int, float], ttgs: dict[int, float | None], t_max: float) -> float:
    """Priority-weighted sum of local rewards, with reward = -TTG.

    Unfinished agents contribute -t_max.
    """
    total = 0.0
    for i, phi in phis.items():
        ttg = ttgs.get(i)
        total += phi * (-(ttg if ttg is not None else t_max))
    return total


@dataclass(frozen=True, slots=True)
class AgentMetrics:
    avg_dv: float
    makespan_ratio: float | None
    path_deviation: float
    ttg: float | None
    invasiveness: float | None = None
    invasiveness_degraded: bool = False


@dataclass(frozen=True, slots=True)
class MetricsReport:
    per_agent: dict[int, AgentMetrics]
    flow_rate: float | None
    makespan: float | None
    success: bool
    collision_count: int
    deadlock_occurred: bool
    social_welfare: float
    social_welfare_gap: float | None
    swg_absent_reason: str | None = None

    def mean(self, attr: str) -> float | None:
        vals = [getattr(m, attr) for m in self.per_agent.values()]
        vals = [v for v in vals if v is not None]
        return sum(vals) / len(vals) if vals else None


def invasiveness(
    episode: "EpisodeLog",
    agent_id: int,
    rerun: Callable[..., "EpisodeLog"],
) -> tuple[float, bool]:
    """Integrated control deviation agent_id induces on every other agent.

    Compares each other agent's logged controls against a counterfactual
    rollout with agent_id removed (same solver, same seed). Controls count
    as zero once an agent has finished in either rollout; the integral runs
    over the common horizon. A counterfactual that aborts flags the value
    as degraded and integrates up to the abort time.
    """
    others = [i for i in episode.agent_ids() if i != agent_id]
    if not others:
        return 0.0, False
    counterfactual = rerun(exclude=(agent_id,))
    degraded = counterfactual.termination == "collision_abort"
    dt = episode.dt
    horizon_steps = max(len(episode.steps), len(counterfactual.steps))
    total = 0.0
    for j in others:
        for k in range(horizon_steps):
            u_full = episode.control_at(j, k)
            u_cf = counterfactual.control_at(j, k)
            total += u_full.dist(u_cf) * dt
    return total, degraded


def social_welfare_gap(
    episode: "EpisodeLog",
    rerun: Callable[..., "EpisodeLog"],
) -> tuple[float | None, str | None]:
    """Shortfall of achieved welfare against the best passage ordering.

    Enumerates priority orderings of the nominal coupling components and
    re-simulates each with the auction solver forced to that ranking.
    """
    components = [sorted(c) for c in episode.smg.components()]
    if not components:
        return 0.0, None
    for comp in components:
        if len(comp) > 5:
            return None, f"coupling set of size {len(comp)} exceeds the enumeration bound (5)"
    spaces = [list(itertools.permutations(c)) for c in components]
    n_rollouts = 1
    for s in spaces:
        n_rollouts *= len(s)
    if n_rollouts > MAX_ORDERING_ROLLOUTS:
        return None, f"{n_rollouts} orderings exceed the rollout budget ({MAX_ORDERING_ROLLOUTS})"

    phis = episode.priorities()
    achieved = social_welfare(phis, episode.ttgs(), episode.t_max)
    best = -math.inf
    for combo in itertools.product(*spaces):
        order = tuple(i for perm in combo for i in perm)
        rollout = rerun(forced_order=order, solver_kind="auction")
        best = max(best, social_welfare(phis, rollout.ttgs(), rollout.t_max))
    return max(0.0, best - achieved), None


def compute_report(
    episode: "EpisodeLog",
    rerun: Callable[..., "EpisodeLog"] | None = None,
    counterfactuals: bool = True,
    flow_rate_uses_makespan: bool = False,
) -> MetricsReport:
    """Full metric suite for one episode.

    rerun(exclude=..., forced_order=..., solver_kind=...) must re-simulate
    the logged configuration deterministically; required only when
    counterfactuals is True.
    """
    from .analysis import nominal_plan  # local import keeps module layering flat

    ttgs = episode.ttgs()
    ratios = makespan_ratio(ttgs)
    phis = episode.priorities()

    per_agent: dict[int, AgentMetrics] = {}
    plans = {
        a.id: nominal_plan(a, episode.scenario.geometry, dt=episode.dt)
        for a in episode.scenario.agents
    }
    for i in episode.agent_ids():
        traj = episode.trajectory(i)
        nominal_pts = [s.position for s in plans[i].trajectory.samples]
        actual_pts = [s.position for s in traj.samples]
        inv, inv_degraded = (None, False)
        if counterfactuals:
            if rerun is None:
                raise ValueError("counterfactual metrics require a rerun hook")
            inv, inv_degraded = invasiveness(episode, i, rerun)
        per_agent[i] = AgentMetrics(
            avg_dv=avg_delta_v(traj),
            makespan_ratio=ratios[i],
            path_deviation=path_deviation(actual_pts, nominal_pts),
            ttg=ttgs[i],
            invasiveness=inv,
            invasiveness_degraded=inv_degraded,
        )

    finished = [t for t in ttgs.values() if t is not None]
    makespan = max(finished) if len(finished) == len(ttgs) else None

    fr = None
    z = episode.scenario.geometry.gap_width
    if z is not None:
        crossings = episode.gap_crossings
        if crossings:
            t_ref = makespan if flow_rate_uses_makespan and makespan else max(crossings.values())
            fr = flow_rate(len(crossings), t_ref, z)
        else:
            fr = 0.0

    swg, swg_reason = (None, "counterfactual metrics disabled")
    if counterfactuals:
        if rerun is None:
            raise ValueError("counterfactual metrics require a rerun hook")
        swg, swg_reason = social_welfare_gap(episode, rerun)

    return MetricsReport(
        per_agent=per_agent,
        flow_rate=fr,
        makespan=makespan,
        success=episode.termination == "all_goals" and episode.collision_count() == 0,
        collision_count=episode.collision_count(),
        deadlock_occurred=episode.deadlock_occurred,
        social_welfare=social_welfare(phis, ttgs, episode.t_max),
        social_welfare_gap=swg,
        swg_absent_reason=swg_reason,
    )
