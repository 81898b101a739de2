"""Command-line entry point: run episodes, run batches, re-evaluate logs.

Every artifact written here carries its full configuration echo, so any
run can be reproduced from its own output directory alone. Output root
resolution: --out flag, then SMG_OUT_DIR, then the working directory.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .core import Vec2
from .harness import (
    EpisodeLog,
    aggregate_csv,
    batch_spec_from_json,
    episode_metrics,
    read_episode,
    render_table,
    run_batch,
    run_episode,
    write_episode,
)
from .metrics import MetricsReport
from .scenarios import (
    KINDS,
    ScenarioError,
    ScenarioParams,
    agent_limits,
    build,
    list_scenarios,
    override_agents,
)
from .serialize import params_from_json, params_to_json, solver_config_from_json, solver_config_to_json
from .solvers import SOLVER_KINDS, SolverConfig, SolverError

STARS = "*" * 48


def out_root(args) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    env = os.environ.get("SMG_OUT_DIR")
    return Path(env) if env else Path.cwd()


# --- run config ------------------------------------------------------------


def run_config_to_json(kind, params, overrides, solver, dt, t_max, seed) -> dict:
    return {
        "scenario": {"kind": kind, "params": params_to_json(params)},
        "agents": overrides,
        "solver": solver_config_to_json(solver),
        "dt": dt,
        "t_max": t_max,
        "seed": seed,
    }


def scenario_from_config(cfg: dict):
    kind = cfg["scenario"]["kind"]
    params = params_from_json(cfg["scenario"]["params"])
    scenario = build(kind, params)
    overrides = cfg.get("agents") or []
    starts, goals, priorities = {}, {}, {}
    for entry in overrides:
        aid = int(entry["id"])
        if "start" in entry:
            starts[aid] = Vec2(*entry["start"])
        if "goal" in entry:
            goals[aid] = Vec2(*entry["goal"])
        if "priority" in entry:
            priorities[aid] = float(entry["priority"])
    if starts or goals or priorities:
        scenario = override_agents(scenario, starts or None, goals or None, priorities or None)
    return kind, params, scenario


def metrics_to_json(report: MetricsReport) -> dict:
    return {
        "per_agent": {
            str(i): {
                "avg_dv": m.avg_dv,
                "makespan_ratio": m.makespan_ratio,
                "path_deviation": m.path_deviation,
                "ttg": m.ttg,
                "invasiveness": m.invasiveness,
                "invasiveness_degraded": m.invasiveness_degraded,
            }
            for i, m in sorted(report.per_agent.items())
        },
        "system": {
            "flow_rate": report.flow_rate,
            "makespan": report.makespan,
            "success": report.success,
            "collision_count": report.collision_count,
            "deadlock_occurred": report.deadlock_occurred,
            "social_welfare": report.social_welfare,
            "social_welfare_gap": report.social_welfare_gap,
            "swg_absent_reason": report.swg_absent_reason,
        },
    }


def print_report(log: EpisodeLog, report: MetricsReport) -> None:
    print(f"Termination: {log.termination}")
    for i, m in sorted(report.per_agent.items()):
        print(STARS)
        print(f"Robot {i} Path Deviation Metrics:")
        print(f"Hausdorff distance: {m.path_deviation:.4f}")
        print(STARS)
        print(f"Robot {i} Avg delta velocity: {m.avg_dv:.4f}")
        if m.ttg is not None:
            print(f"Robot {i} TTG: {m.ttg:.2f} s  Makespan Ratio: {m.makespan_ratio:.4f}")
        else:
            print(f"Robot {i} did not reach its goal")
        if m.invasiveness is not None:
            flag = " (degraded)" if m.invasiveness_degraded else ""
            print(f"Robot {i} Invasiveness: {m.invasiveness:.4f}{flag}")
        print(STARS)
    sys_bits = [
        f"success={report.success}",
        f"collisions={report.collision_count}",
        f"deadlock={report.deadlock_occurred}",
        f"social_welfare={report.social_welfare:.3f}",
    ]
    if report.flow_rate is not None:
        sys_bits.append(f"flow_rate={report.flow_rate:.4f}")
    if report.social_welfare_gap is not None:
        sys_bits.append(f"swg={report.social_welfare_gap:.4f}")
    print("System: " + "  ".join(sys_bits))


# --- interactive setup -----------------------------------------------------


def _prompt_int(prompt, lo, hi, reader, echo=print):
    while True:
        raw = reader(prompt)
        try:
            value = int(raw)
        except (TypeError, ValueError):
            echo(f"Please enter a number between {lo} and {hi}.")
            continue
        if lo <= value <= hi:
            return value
        echo(f"Value must be between {lo} and {hi}.")


def _prompt_float(prompt, lo, hi, reader, echo=print):
    while True:
        raw = reader(prompt)
        try:
            value = float(raw)
        except (TypeError, ValueError):
            echo(f"Please enter a coordinate between {lo:g} and {hi:g}.")
            continue
        if lo <= value <= hi:
            return value
        echo(f"Coordinate must be between {lo:g} and {hi:g}.")


def interactive_config(reader=input, echo=print) -> dict:
    echo("Welcome to the Multi-Agent Navigation Simulator")
    echo("=" * 46)
    echo("")
    echo("Available Methods:")
    for k, kind in enumerate(SOLVER_KINDS, start=1):
        echo(f"{k}. {kind}")
    method = _prompt_int(
        f"Enter method number (1-{len(SOLVER_KINDS)}): ", 1, len(SOLVER_KINDS), reader, echo
    )
    echo("")
    echo("Available environments:")
    for k, kind in enumerate(KINDS, start=1):
        echo(f"{k}. {kind}")
    env = _prompt_int(
        f"Enter environment type (1-{len(KINDS)}): ", 1, len(KINDS), reader, echo
    )
    kind = KINDS[env - 1]
    lo, hi = agent_limits(kind)
    n = _prompt_int(f"Enter number of robots ({lo}-{hi}): ", lo, hi, reader, echo)

    params = ScenarioParams(n_agents=n)
    scale = params.world_scale
    echo("")
    if kind == "doorway":
        echo("Doorway Configuration:")
        echo("- The doorway has walls at x=30-31 with a gap at y=30-34")
    echo("- X coordinates should be between 0 and 63")
    echo("- Y coordinates should be between 0 and 63")
    echo(f"- Grid positions are scaled by {scale} m per unit")
    overrides = []
    base = build(kind, params)
    for robot in range(1, n + 1):
        while True:
            echo("")
            echo(f"Robot {robot} configuration:")
            sx = _prompt_float(f"Enter start X position (0-63) for robot {robot}: ", 0, 63, reader, echo)
            sy = _prompt_float(f"Enter start Y position (0-63) for robot {robot}: ", 0, 63, reader, echo)
            gx = _prompt_float(f"Enter goal X position (0-63) for robot {robot}: ", 0, 63, reader, echo)
            gy = _prompt_float(f"Enter goal Y position (0-63) for robot {robot}: ", 0, 63, reader, echo)
            entry = {
                "id": robot - 1,
                "start": [sx * scale, sy * scale],
                "goal": [gx * scale, gy * scale],
            }
            try:
                cfg = run_config_to_json(
                    kind, params, overrides + [entry], SolverConfig(kind=SOLVER_KINDS[method - 1]),
                    0.05, 30.0, 0,
                )
                scenario_from_config(cfg)
            except ScenarioError as exc:
                echo(f"Position rejected: {exc}")
                continue
            overrides.append(entry)
            echo(
                f"Robot {robot} will move from ({sx * scale:.2f}, {sy * scale:.2f}) "
                f"to ({gx * scale:.2f}, {gy * scale:.2f})"
            )
            break
    return run_config_to_json(
        kind, params, overrides, SolverConfig(kind=SOLVER_KINDS[method - 1]), 0.05, 30.0, 0
    )


# --- subcommands -----------------------------------------------------------


def cmd_run(args) -> int:
    if args.interactive:
        cfg = interactive_config()
    elif args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
            return 1
    else:
        if not args.scenario:
            print("error: provide --config, --interactive, or --scenario", file=sys.stderr)
            return 1
        try:
            params = ScenarioParams(n_agents=args.robots, jitter=args.jitter, seed=args.seed)
            solver = SolverConfig(kind=args.solver)
        except (SolverError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        cfg = run_config_to_json(
            args.scenario, params, [], solver, args.dt, args.tmax, args.seed
        )
    try:
        kind, params, scenario = scenario_from_config(cfg)
        solver = solver_config_from_json(cfg["solver"])
    except (ScenarioError, SolverError, KeyError, ValueError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 1

    root = out_root(args)
    name = f"{kind}_{len(scenario.agents)}_robots"
    root.mkdir(parents=True, exist_ok=True)
    config_path = root / f"config_{name}.json"
    config_path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    print(f"Configuration saved to {config_path}")

    print(f"\nRunning {solver.kind} simulation")
    print("=" * 29)
    print(f"\nRunning simulation with {len(scenario.agents)} robots...")
    log = run_episode(
        scenario, solver, dt=float(cfg["dt"]), t_max=float(cfg["t_max"]),
        seed=int(cfg["seed"]),
    )
    run_dir = root / "logs" / name
    write_episode(log, run_dir)
    print(f"\nLog file generated: {run_dir / 'meta.json'}")
    print(f"Trajectory CSV files generated in: {run_dir / 'trajectories'}")

    print("\nEvaluating trajectories...\n")
    report = episode_metrics(log, counterfactuals=not args.no_counterfactuals)
    (run_dir / "metrics.json").write_text(
        json.dumps(metrics_to_json(report), indent=2, sort_keys=True) + "\n"
    )
    print_report(log, report)
    return 0


def cmd_batch(args) -> int:
    try:
        spec = batch_spec_from_json(json.loads(Path(args.spec).read_text()))
    except OSError as exc:
        print(f"error: cannot read batch spec: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: batch spec is not valid JSON (line {exc.lineno}): {exc.msg}", file=sys.stderr)
        return 1
    except (ValueError, SolverError) as exc:
        print(f"error: invalid batch spec: {exc}", file=sys.stderr)
        return 1
    rows = run_batch(spec)
    root = out_root(args)
    results = root / "results"
    results.mkdir(parents=True, exist_ok=True)
    (results / "aggregate.csv").write_text(aggregate_csv(rows))
    table = render_table(rows)
    print(table)
    print(f"Aggregate written to {results / 'aggregate.csv'}")
    return 0


def cmd_eval(args) -> int:
    try:
        log = read_episode(Path(args.log))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: unreadable log: {exc}", file=sys.stderr)
        return 1
    report = episode_metrics(log, counterfactuals=not args.no_counterfactuals)
    payload = json.dumps(metrics_to_json(report), indent=2, sort_keys=True) + "\n"
    out_path = Path(args.log) / "metrics.json"
    out_path.write_text(payload)
    print_report(log, report)
    print(f"\nMetrics written to {out_path}")
    return 0


def cmd_list(args) -> int:
    for kind, description, schema in list_scenarios():
        print(f"{kind}: {description}")
        for field, doc in schema.items():
            print(f"    {field}: {doc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smgbench",
        description=(
            "Benchmark simulator for multi-robot navigation in social "
            "mini-games: nine constrained scenarios, four baseline solvers, "
            "and the full metric suite."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one episode and write its artifacts")
    run.add_argument("--config", help="run-config JSON path")
    run.add_argument("--interactive", action="store_true", help="prompt for the setup")
    run.add_argument("--scenario", choices=KINDS, help="scenario kind (flag mode)")
    run.add_argument("--solver", default="orca", help="solver kind (flag mode)")
    run.add_argument("--robots", type=int, default=2, help="number of robots")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--jitter", type=float, default=0.0)
    run.add_argument("--dt", type=float, default=0.05)
    run.add_argument("--tmax", type=float, default=30.0)
    run.add_argument("--out", help="output root (default SMG_OUT_DIR or cwd)")
    run.add_argument("--no-counterfactuals", action="store_true",
                     help="skip invasiveness / welfare-gap rollouts")
    run.set_defaults(func=cmd_run)

    batch = sub.add_parser("batch", help="run a scenario x solver x seed batch")
    batch.add_argument("--spec", required=True, help="batch spec JSON path")
    batch.add_argument("--out", help="output root (default SMG_OUT_DIR or cwd)")
    batch.set_defaults(func=cmd_batch)

    ev = sub.add_parser("eval", help="recompute metrics from a logged episode")
    ev.add_argument("--log", required=True, help="episode log directory")
    ev.add_argument("--no-counterfactuals", action="store_true")
    ev.set_defaults(func=cmd_eval)

    ls = sub.add_parser("list-scenarios", help="list the nine scenario kinds")
    ls.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
