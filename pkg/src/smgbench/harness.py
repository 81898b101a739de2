"""Episode execution, logging, and batch orchestration.

One episode advances all agents synchronously: assemble views, query the
solver, integrate, check collisions, record. Episodes are deterministic
functions of (scenario, solver config, dt, t_max, seed); replaying a
logged configuration reproduces the trajectory files byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from . import metrics as metrics_mod
from .analysis import DEFAULT_DELTA, SmgReport, detect_smg, nominal_plan
from .core import AgentState, Trajectory, Vec2
from .dynamics import CollisionEvent, ControlError, check_collisions, step
from .scenarios import Scenario, ScenarioParams, build
from .serialize import (
    collision_from_json,
    collision_to_json,
    params_from_json,
    params_to_json,
    scenario_from_json,
    scenario_to_json,
    smg_from_json,
    smg_to_json,
    solver_config_from_json,
    solver_config_to_json,
)
from .solvers import DeadlockState, SolverConfig, build_views, detect_deadlock, make_solver

TERMINATIONS = ("all_goals", "timeout", "collision_abort", "solver_error")


@dataclass(frozen=True, slots=True)
class StepRecord:
    time: float
    states: tuple[AgentState, ...]  # aligned with EpisodeLog.agent_order
    controls: tuple[Vec2, ...]


@dataclass(frozen=True, slots=True)
class EpisodeLog:
    scenario: Scenario
    solver: SolverConfig
    dt: float
    t_max: float
    seed: int
    forced_order: tuple[int, ...] | None
    agent_order: tuple[int, ...]
    steps: tuple[StepRecord, ...]
    collisions: tuple[CollisionEvent, ...]
    goal_times: dict[int, float]
    gap_crossings: dict[int, float]
    deadlock_flag_times: dict[int, float]
    smg: SmgReport
    termination: str
    failure: str | None = None

    @property
    def deadlock_occurred(self) -> bool:
        return bool(self.deadlock_flag_times)

    def agent_ids(self) -> list[int]:
        return list(self.agent_order)

    def priorities(self) -> dict[int, float]:
        return {a.id: a.priority for a in self.scenario.agents}

    def ttgs(self) -> dict[int, float | None]:
        return {i: self.goal_times.get(i) for i in self.agent_order}

    def collision_count(self) -> int:
        return len(self.collisions)

    def trajectory(self, agent_id: int) -> Trajectory:
        idx = self.agent_order.index(agent_id)
        return Trajectory(dt=self.dt, samples=tuple(r.states[idx] for r in self.steps))

    def control_at(self, agent_id: int, k: int) -> Vec2:
        if k >= len(self.steps):
            return Vec2(0.0, 0.0)
        idx = self.agent_order.index(agent_id)
        return self.steps[k].controls[idx]


def run_episode(
    scenario: Scenario,
    solver_config: SolverConfig,
    dt: float = 0.05,
    t_max: float = 30.0,
    seed: int = 0,
    forced_order: tuple[int, ...] | None = None,
    collision_policy: str = "abort",
    smg_delta: float = DEFAULT_DELTA,
) -> EpisodeLog:
    if collision_policy not in ("abort", "continue"):
        raise ValueError("collision_policy must be 'abort' or 'continue'")
    max_travel = dt * max(a.max_speed for a in scenario.agents)
    thinnest = min(
        (2.0 * a.radius for a in scenario.agents), default=math.inf
    )
    if scenario.geometry.obstacles and max_travel >= thinnest:
        raise ValueError(
            f"dt*max_speed = {max_travel:.3f} m can tunnel past obstacles; reduce dt"
        )

    plans = {a.id: nominal_plan(a, scenario.geometry, dt=dt) for a in scenario.agents}
    smg = detect_smg(scenario, delta=smg_delta, dt=dt, plans=plans)
    solver = make_solver(solver_config, scenario, plans, smg, dt=dt, forced_order=forced_order)
    valuations_visible = solver.needs_valuations()

    order = tuple(a.id for a in scenario.agents)
    specs = {a.id: a for a in scenario.agents}
    states = {a.id: AgentState(a.start, Vec2(0.0, 0.0), 0.0) for a in scenario.agents}
    deadlock = DeadlockState()
    goal_times: dict[int, float] = {}
    gap_crossings: dict[int, float] = {}
    flag_times: dict[int, float] = {}
    collisions: list[CollisionEvent] = []
    records: list[StepRecord] = []
    termination = "timeout"
    failure = None

    def note_goals(t: float) -> None:
        for i in order:
            if i not in goal_times and states[i].position.dist(specs[i].goal) <= solver_config.goal_tol:
                goal_times[i] = t

    def gap_signed(i: int) -> float | None:
        g = scenario.geometry
        if g.gap_center is None or g.gap_normal is None:
            return None
        return (states[i].position - g.gap_center).dot(g.gap_normal)

    note_goals(0.0)
    n_steps = int(round(t_max / dt))
    for k in range(n_steps):
        t = k * dt
        views = build_views(scenario, states, t, valuations_visible)
        deadlock = detect_deadlock(
            [(specs[i], states[i]) for i in order], deadlock, dt, solver_config
        )
        for i in deadlock.flagged:
            flag_times.setdefault(i, t)
        try:
            controls = solver.step(views, t, deadlock)
            prev_signed = {i: gap_signed(i) for i in order}
            new_states = {
                i: step(states[i], specs[i], controls[i], dt) for i in order
            }
        except (ControlError, ValueError) as exc:
            failure = f"solver fault at t={t:.3f}: {exc}"
            termination = "solver_error"
            records.append(
                StepRecord(t, tuple(states[i] for i in order), tuple(Vec2(0, 0) for _ in order))
            )
            break
        records.append(
            StepRecord(
                t,
                tuple(states[i] for i in order),
                tuple(controls[i].value for i in order),
            )
        )
        states = new_states
        note_goals(t + dt)
        for i in order:
            if i in gap_crossings:
                continue
            s0, s1 = prev_signed[i], gap_signed(i)
            if s0 is not None and s1 is not None and s0 != 0.0 and (s0 < 0) != (s1 < 0):
                gap_crossings[i] = t + dt
        hits = check_collisions(
            [states[i] for i in order], [specs[i] for i in order], scenario.geometry
        )
        if hits:
            collisions.extend(hits)
            if collision_policy == "abort":
                termination = "collision_abort"
                records.append(
                    StepRecord(
                        t + dt,
                        tuple(states[i] for i in order),
                        tuple(Vec2(0, 0) for _ in order),
                    )
                )
                break
        if len(goal_times) == len(order):
            termination = "all_goals"
            records.append(
                StepRecord(
                    t + dt,
                    tuple(states[i] for i in order),
                    tuple(Vec2(0, 0) for _ in order),
                )
            )
            break
    else:
        records.append(
            StepRecord(
                n_steps * dt,
                tuple(states[i] for i in order),
                tuple(Vec2(0, 0) for _ in order),
            )
        )

    return EpisodeLog(
        scenario=scenario,
        solver=solver_config,
        dt=dt,
        t_max=t_max,
        seed=seed,
        forced_order=forced_order,
        agent_order=order,
        steps=tuple(records),
        collisions=tuple(collisions),
        goal_times=goal_times,
        gap_crossings=gap_crossings,
        deadlock_flag_times=flag_times,
        smg=smg,
        termination=termination,
        failure=failure,
    )


def make_rerun(log: EpisodeLog):
    """Counterfactual hook: re-simulate the logged config with modifications.

    This is the exact procedure behind the invasiveness and welfare-gap
    metrics, exposed so the numbers are auditable from the log alone.
    """

    def rerun(exclude: tuple[int, ...] = (), forced_order=None, solver_kind=None) -> EpisodeLog:
        scenario = log.scenario
        if exclude:
            agents = tuple(a for a in scenario.agents if a.id not in exclude)
            scenario = replace(scenario, agents=agents)
        cfg = log.solver if solver_kind is None else replace(log.solver, kind=solver_kind)
        return run_episode(
            scenario,
            cfg,
            dt=log.dt,
            t_max=log.t_max,
            seed=log.seed,
            forced_order=forced_order,
        )

    return rerun


def episode_metrics(log: EpisodeLog, counterfactuals: bool = True) -> metrics_mod.MetricsReport:
    return metrics_mod.compute_report(
        log, rerun=make_rerun(log), counterfactuals=counterfactuals
    )


# --- artifacts -------------------------------------------------------------

CSV_COLUMNS = ["t", "agent_id", "px", "py", "vx", "vy", "ux", "uy"]


def write_episode(log: EpisodeLog, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    (out_dir / "trajectories").mkdir(parents=True, exist_ok=True)
    meta = {
        "scenario": scenario_to_json(log.scenario),
        "solver": solver_config_to_json(log.solver),
        "dt": log.dt,
        "t_max": log.t_max,
        "seed": log.seed,
        "forced_order": list(log.forced_order) if log.forced_order else None,
        "agent_order": list(log.agent_order),
        "termination": log.termination,
        "failure": log.failure,
        "goal_times": {str(i): t for i, t in sorted(log.goal_times.items())},
        "gap_crossings": {str(i): t for i, t in sorted(log.gap_crossings.items())},
        "deadlock_flag_times": {str(i): t for i, t in sorted(log.deadlock_flag_times.items())},
        "collisions": [collision_to_json(e) for e in log.collisions],
        "smg": smg_to_json(log.smg),
        "steps": len(log.steps),
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    for idx, agent_id in enumerate(log.agent_order):
        path = out_dir / "trajectories" / f"robot_{agent_id}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for rec in log.steps:
                s, u = rec.states[idx], rec.controls[idx]
                writer.writerow(
                    [repr(rec.time), agent_id, repr(s.position.x), repr(s.position.y),
                     repr(s.velocity.x), repr(s.velocity.y), repr(u.x), repr(u.y)]
                )


def read_episode(log_dir: Path) -> EpisodeLog:
    log_dir = Path(log_dir)
    meta_path = log_dir / "meta.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"missing {meta_path}")
    meta = json.loads(meta_path.read_text())
    scenario = scenario_from_json(meta["scenario"])
    order = tuple(int(i) for i in meta["agent_order"])
    per_agent_rows: dict[int, list[list[float]]] = {}
    for agent_id in order:
        path = log_dir / "trajectories" / f"robot_{agent_id}.csv"
        if not path.exists():
            raise FileNotFoundError(f"missing trajectory file {path}")
        rows = []
        with path.open() as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != CSV_COLUMNS:
                raise ValueError(f"{path}: unexpected columns {header}")
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(CSV_COLUMNS):
                    raise ValueError(f"{path}: malformed row {lineno}")
                rows.append([float(x) for x in row])
        per_agent_rows[agent_id] = rows
    n_steps = meta["steps"]
    for agent_id, rows in per_agent_rows.items():
        if len(rows) != n_steps:
            raise ValueError(
                f"robot_{agent_id}.csv has {len(rows)} rows, expected {n_steps}"
            )
    records = []
    for k in range(n_steps):
        t = per_agent_rows[order[0]][k][0]
        states = tuple(
            AgentState(
                Vec2(per_agent_rows[i][k][2], per_agent_rows[i][k][3]),
                Vec2(per_agent_rows[i][k][4], per_agent_rows[i][k][5]),
                t,
            )
            for i in order
        )
        controls = tuple(
            Vec2(per_agent_rows[i][k][6], per_agent_rows[i][k][7]) for i in order
        )
        records.append(StepRecord(t, states, controls))
    return EpisodeLog(
        scenario=scenario,
        solver=solver_config_from_json(meta["solver"]),
        dt=float(meta["dt"]),
        t_max=float(meta["t_max"]),
        seed=int(meta["seed"]),
        forced_order=tuple(meta["forced_order"]) if meta["forced_order"] else None,
        agent_order=order,
        steps=tuple(records),
        collisions=tuple(collision_from_json(e) for e in meta["collisions"]),
        goal_times={int(i): t for i, t in meta["goal_times"].items()},
        gap_crossings={int(i): t for i, t in meta["gap_crossings"].items()},
        deadlock_flag_times={int(i): t for i, t in meta["deadlock_flag_times"].items()},
        smg=smg_from_json(meta["smg"]),
        termination=meta["termination"],
        failure=meta["failure"],
    )


# --- batches ---------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class BatchSpec:
    scenarios: tuple[tuple[str, ScenarioParams], ...]
    solvers: tuple[SolverConfig, ...]
    seeds: tuple[int, ...]
    dt: float = 0.05
    t_max: float = 30.0
    parallelism: int = 1
    counterfactual_metrics: bool = True

    def __post_init__(self) -> None:
        if not self.scenarios:
            raise ValueError("batch needs at least one scenario")
        if not self.solvers:
            raise ValueError("batch needs at least one solver")
        if not self.seeds:
            raise ValueError("batch needs at least one seed")
        if self.t_max <= 0:
            raise ValueError("t_max must be > 0")


AGG_COLUMNS = [
    "scenario", "solver", "episodes",
    "avg_dv_mean", "avg_dv_std",
    "path_deviation_mean", "path_deviation_std",
    "makespan_ratio_mean", "makespan_ratio_std",
    "success_rate",
    "flow_rate_mean", "flow_rate_std",
    "invasiveness_mean", "invasiveness_std",
    "social_welfare_mean", "social_welfare_std",
    "swg_mean", "swg_std",
    "deadlock_rate",
]


def _run_cell_episode(job):
    kind, params, solver_cfg, seed, dt, t_max, counterfactuals = job
    try:
        scenario = build(kind, replace(params, seed=seed))
        log = run_episode(scenario, solver_cfg, dt=dt, t_max=t_max, seed=seed)
        report = episode_metrics(log, counterfactuals=counterfactuals)
    except Exception as exc:  # hard failures are data, never batch aborts
        return {
            "avg_dv": None, "path_deviation": None, "makespan_ratio": None,
            "flow_rate": None, "invasiveness": None, "social_welfare": None,
            "swg": None, "success": False, "deadlock": False,
            "error": f"{type(exc).__name__}: {exc}",
        }
    return {
        "avg_dv": report.mean("avg_dv"),
        "path_deviation": report.mean("path_deviation"),
        "makespan_ratio": report.mean("makespan_ratio"),
        "flow_rate": report.flow_rate,
        "invasiveness": report.mean("invasiveness"),
        "social_welfare": report.social_welfare,
        "swg": report.social_welfare_gap,
        "success": report.success,
        "deadlock": report.deadlock_occurred,
        "error": None,
    }


def _mean_std(values):
    present = [v for v in values if v is not None]
    if not present:
        return None, None
    mean = sum(present) / len(present)
    std = statistics.pstdev(present) if len(present) > 1 else 0.0
    return mean, std


def run_batch(spec: BatchSpec) -> list[dict]:
    """Aggregate table rows: one per (scenario, solver), Table-1 layout.

    Episode failures are recorded per cell (they lower the success rate);
    the batch itself never aborts. Results are independent of seed order
    and of the parallelism level.
    """
    jobs = []
    keys = []
    for kind, params in spec.scenarios:
        for solver_cfg in spec.solvers:
            for seed in sorted(spec.seeds):
                jobs.append(
                    (kind, params, solver_cfg, seed, spec.dt, spec.t_max,
                     spec.counterfactual_metrics)
                )
                keys.append((kind, solver_cfg.kind, seed))
    if spec.parallelism > 1:
        with ProcessPoolExecutor(max_workers=spec.parallelism) as pool:
            results = list(pool.map(_run_cell_episode, jobs))
    else:
        results = [_run_cell_episode(j) for j in jobs]

    cells: dict[tuple[str, str], list[dict]] = {}
    for key, res in zip(keys, results):
        cells.setdefault(key[:2], []).append(res)

    rows = []
    for kind, params in spec.scenarios:
        for solver_cfg in spec.solvers:
            eps = cells[(kind, solver_cfg.kind)]
            row = {"scenario": kind, "solver": solver_cfg.kind, "episodes": len(eps)}
            for field in ("avg_dv", "path_deviation", "makespan_ratio", "flow_rate",
                          "invasiveness", "social_welfare", "swg"):
                mean, std = _mean_std([e[field] for e in eps])
                row[f"{field}_mean" if field != "swg" else "swg_mean"] = mean
                row[f"{field}_std" if field != "swg" else "swg_std"] = std
            row["success_rate"] = 100.0 * sum(e["success"] for e in eps) / len(eps)
            row["deadlock_rate"] = 100.0 * sum(e["deadlock"] for e in eps) / len(eps)
            rows.append(row)
    return rows


def aggregate_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(AGG_COLUMNS)
    for row in rows:
        writer.writerow(
            ["" if row.get(c) is None else (repr(row[c]) if isinstance(row[c], float) else row[c])
             for c in AGG_COLUMNS]
        )
    return buf.getvalue()


def render_table(rows: list[dict]) -> str:
    """Aligned-text comparison table, one row per (scenario, solver)."""
    headers = ["Scenario", "Solver", "Avg dV", "Path Dev", "Makespan R",
               "Success %", "Flow Rate", "IS", "SW", "SWG", "Deadlock %"]
    fmt_cols = [
        ("scenario", None), ("solver", None),
        ("avg_dv", "pm"), ("path_deviation", "pm"), ("makespan_ratio", "pm"),
        ("success_rate", "plain"), ("flow_rate", "pm"),
        ("invasiveness", "pm"), ("social_welfare", "pm"), ("swg", "pm"),
        ("deadlock_rate", "plain"),
    ]
    table = [headers]
    for row in rows:
        line = []
        for name, style in fmt_cols:
            if style is None:
                line.append(str(row[name]))
            elif style == "plain":
                line.append(f"{row[name]:.2f}")
            else:
                mean, std = row.get(f"{name}_mean"), row.get(f"{name}_std")
                line.append("-" if mean is None else f"{mean:.2f} ± {std:.2f}")
        table.append(line)
    widths = [max(len(r[c]) for r in table) for c in range(len(headers))]
    out = []
    for r_idx, r in enumerate(table):
        out.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(r)))
        if r_idx == 0:
            out.append("  ".join("-" * widths[c] for c in range(len(headers))))
    return "\n".join(out) + "\n"


def batch_spec_to_json(spec: BatchSpec) -> dict:
    return {
        "scenarios": [{"kind": k, "params": params_to_json(p)} for k, p in spec.scenarios],
        "solvers": [solver_config_to_json(c) for c in spec.solvers],
        "seeds": list(spec.seeds),
        "dt": spec.dt,
        "t_max": spec.t_max,
        "parallelism": spec.parallelism,
        "counterfactual_metrics": spec.counterfactual_metrics,
    }


def batch_spec_from_json(d: dict) -> BatchSpec:
    try:
        return BatchSpec(
            scenarios=tuple(
                (e["kind"], params_from_json(e["params"])) for e in d["scenarios"]
            ),
            solvers=tuple(solver_config_from_json(c) for c in d["solvers"]),
            seeds=tuple(int(s) for s in d["seeds"]),
            dt=float(d.get("dt", 0.05)),
            t_max=float(d.get("t_max", 30.0)),
            parallelism=int(d.get("parallelism", 1)),
            counterfactual_metrics=bool(d.get("counterfactual_metrics", True)),
        )
    except KeyError as exc:
        raise ValueError(f"batch spec missing field {exc}") from exc
