"""Acceptance suite: one test per release criterion, printed pass/fail.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Tolerances are fixed here and nowhere else.
"""
import json
import math
import random
import time

import pytest

from smgbench.analysis import detect_smg
from smgbench.core import AgentSpec, AgentState, Trajectory, Vec2, WorldGeometry
from smgbench.harness import (
    BatchSpec,
    aggregate_csv,
    read_episode,
    run_batch,
    run_episode,
    write_episode,
)
from smgbench.metrics import (
    avg_delta_v,
    flow_rate,
    invasiveness,
    makespan_ratio,
    path_deviation,
    social_welfare_gap,
)
from smgbench.harness import make_rerun
from smgbench.projection import HalfPlane, project
from smgbench.scenarios import Scenario, ScenarioParams, build
from smgbench.solvers import SolverConfig

from oracle_projection import disc_grid_oracle
from test_analysis import BruteForceOverlap
from test_projection import random_instance


def _report(criterion: int, label: str) -> None:
    print(f"ACCEPTANCE {criterion}: PASS - {label}")


def test_criterion_1_kernel_oracle_equivalence():
    start = time.monotonic()
    rng = random.Random(20240817)
    for trial in range(100):
        u_nom, cons, cap = random_instance(rng)
        r = project(u_nom, cons, cap)
        _, oracle_feasible, oracle_obj = disc_grid_oracle(u_nom, cons, cap)
        assert r.feasible == oracle_feasible, f"trial {trial}"
        obj = r.u_star.dist(u_nom) if r.feasible else r.max_violation
        assert abs(obj - oracle_obj) < 1e-3, f"trial {trial}: {obj} vs {oracle_obj}"
    elapsed = time.monotonic() - start
    assert elapsed < 5.0, f"kernel-oracle suite took {elapsed:.2f}s"
    _report(1, f"projection matches disc-grid oracle on 100 instances in {elapsed:.2f}s")


def test_criterion_2_metric_unit_suite():
    const = Trajectory(
        dt=0.5,
        samples=tuple(
            AgentState(Vec2(0.7 * k, 0.0), Vec2(1.4, 0.0), 0.5 * k) for k in range(8)
        ),
    )
    assert avg_delta_v(const) == 0.0

    poly = [Vec2(0, 0), Vec2(1, 0.5), Vec2(2, 0)]
    assert path_deviation(poly, poly) == 0.0
    offset = path_deviation([Vec2(0, 0), Vec2(1, 0)], [Vec2(0, 1), Vec2(1, 1)])
    assert abs(offset - 1.0) <= 1e-9

    ratios = makespan_ratio({0: 12.0, 1: 9.0, 2: 17.0})
    assert min(ratios.values()) == 1.0

    assert abs(flow_rate(2, 10.0, 2.0) - 0.1) <= 1e-12

    sc = build("crowded", ScenarioParams(n_agents=1, seed=11))
    log = run_episode(sc, SolverConfig(kind="orca"), t_max=30.0)
    value, _ = invasiveness(log, 0, make_rerun(log))
    assert value == 0.0
    _report(2, "metric unit values exact at stated tolerances")


def test_criterion_3_smg_detector():
    delta = 0.2
    hallway = build("hallway", ScenarioParams(n_agents=2))
    assert detect_smg(hallway, delta=delta).is_smg

    sep = 3 * (0.25 + 0.25)
    open_geom = WorldGeometry(obstacles=(), bounds=(-50, -50, 50, 50))
    lanes = Scenario(
        kind="parallel",
        geometry=open_geom,
        agents=(
            AgentSpec(id=0, radius=0.25, preferred_speed=1.0, max_speed=1.5,
                      start=Vec2(0, 0), goal=Vec2(8, 0)),
            AgentSpec(id=1, radius=0.25, preferred_speed=1.0, max_speed=1.5,
                      start=Vec2(0, sep), goal=Vec2(8, sep)),
        ),
        seed=0,
    )
    assert not detect_smg(lanes, delta=delta).is_smg

    doorway = build("doorway", ScenarioParams(n_agents=2))
    report = detect_smg(doorway, delta=delta)
    assert report.is_smg
    a, b = report.window
    assert b - a > delta
    oracle = BruteForceOverlap.window(
        doorway.agents[0], doorway.agents[1], doorway.geometry, delta, dt=0.01
    )
    assert oracle is not None
    assert abs(a - oracle[0]) <= 0.06 and abs(b - oracle[1]) <= 0.06
    _report(3, f"hallway SMG, far lanes non-SMG, doorway window [{a:.2f}, {b:.2f}] vs oracle")


def test_criterion_4_success_rate_reproduction():
    start = time.monotonic()
    for kind in ("auction", "impc_lite"):
        for scen in ("doorway", "hallway", "intersection"):
            for seed in range(20):
                sc = build(scen, ScenarioParams(n_agents=2, jitter=0.05, seed=seed))
                log = run_episode(sc, SolverConfig(kind=kind), t_max=30.0, seed=seed)
                assert log.termination == "all_goals", (kind, scen, seed, log.termination)
                assert log.collision_count() == 0, (kind, scen, seed)
    elapsed = time.monotonic() - start
    assert elapsed < 60.0, f"success battery took {elapsed:.1f}s"
    _report(4, f"auction+impc_lite 100.00% success, 0 collisions, 120 episodes in {elapsed:.1f}s")


def test_criterion_5_deadlock_contrast():
    sc = build("doorway", ScenarioParams(n_agents=2, jitter=0.0))
    orca_log = run_episode(sc, SolverConfig(kind="orca"), t_max=30.0)
    assert orca_log.deadlock_occurred or orca_log.termination == "timeout"
    assert orca_log.termination != "all_goals"

    rhr_log = run_episode(sc, SolverConfig(kind="cbf_rhr"), t_max=30.0)
    assert rhr_log.termination == "all_goals"
    assert rhr_log.collision_count() == 0

    # Determinism of both outcomes.
    assert run_episode(sc, SolverConfig(kind="orca"), t_max=30.0).termination == orca_log.termination
    assert run_episode(sc, SolverConfig(kind="cbf_rhr"), t_max=30.0).termination == "all_goals"
    _report(5, f"orca {orca_log.termination} (flagged={orca_log.deadlock_occurred}), cbf_rhr all_goals")


def test_criterion_6_priority_ordering():
    outcomes = {}
    for phis in ((2.0, 1.0), (1.0, 2.0), (20.0, 10.0), (10.0, 20.0)):
        sc = build("doorway", ScenarioParams(n_agents=2, jitter=0.05, seed=3, priorities=phis))
        log = run_episode(sc, SolverConfig(kind="auction"), t_max=30.0)
        assert log.termination == "all_goals", phis
        order = tuple(sorted(log.gap_crossings, key=log.gap_crossings.get))
        expected_first = 0 if phis[0] > phis[1] else 1
        assert order[0] == expected_first, (phis, order)
        outcomes[phis] = order
    assert outcomes[(2.0, 1.0)] == outcomes[(20.0, 10.0)]
    assert outcomes[(1.0, 2.0)] == outcomes[(10.0, 20.0)]
    _report(6, "gap-crossing order follows priority ranking; x10 scaling invariant")


def test_criterion_7_swg_consistency():
    sc = build("doorway", ScenarioParams(n_agents=2, jitter=0.05, seed=3, priorities=(2.0, 1.0)))
    natural = run_episode(sc, SolverConfig(kind="auction"), t_max=30.0, seed=3)
    gap, reason = social_welfare_gap(natural, make_rerun(natural))
    assert reason is None
    assert gap <= 1e-6, gap

    reversed_run = run_episode(
        sc, SolverConfig(kind="auction"), t_max=30.0, seed=3, forced_order=(1, 0)
    )
    rgap, _ = social_welfare_gap(reversed_run, make_rerun(reversed_run))
    assert rgap > 0.0
    _report(7, f"SWG natural={gap:.2e}, forced-reverse={rgap:.3f}")


def test_criterion_8_determinism(tmp_path):
    sc = build("doorway", ScenarioParams(n_agents=2, jitter=0.05, seed=9))
    log = run_episode(sc, SolverConfig(kind="auction"), t_max=30.0, seed=9)
    write_episode(log, tmp_path / "a")
    echo = read_episode(tmp_path / "a")
    replay = run_episode(
        echo.scenario, echo.solver, dt=echo.dt, t_max=echo.t_max, seed=echo.seed,
        forced_order=echo.forced_order,
    )
    write_episode(replay, tmp_path / "b")
    for i in echo.agent_order:
        a = (tmp_path / "a" / "trajectories" / f"robot_{i}.csv").read_bytes()
        b = (tmp_path / "b" / "trajectories" / f"robot_{i}.csv").read_bytes()
        assert a == b

    def batch(seeds):
        return BatchSpec(
            scenarios=(("doorway", ScenarioParams(n_agents=2, jitter=0.05)),),
            solvers=(SolverConfig(kind="auction"), SolverConfig(kind="impc_lite")),
            seeds=seeds,
            t_max=30.0,
            counterfactual_metrics=False,
        )

    csv_a = aggregate_csv(run_batch(batch((0, 1, 2))))
    csv_b = aggregate_csv(run_batch(batch((2, 0, 1))))
    csv_c = aggregate_csv(run_batch(batch((0, 1, 2))))
    assert csv_a == csv_b == csv_c
    _report(8, "trajectory CSVs and batch aggregates byte-identical across reruns/shuffles")


def test_criterion_9_flow_rate_ordering():
    spec = BatchSpec(
        scenarios=(("doorway", ScenarioParams(n_agents=2, jitter=0.05)),),
        solvers=(SolverConfig(kind="impc_lite"), SolverConfig(kind="orca")),
        seeds=tuple(range(20)),
        t_max=30.0,
        counterfactual_metrics=False,
    )
    rows = {r["solver"]: r for r in run_batch(spec)}
    impc = rows["impc_lite"]["flow_rate_mean"]
    orca = rows["orca"]["flow_rate_mean"]
    assert impc is not None and orca is not None
    assert impc > orca, f"impc {impc} vs orca {orca}"
    _report(9, f"mean doorway flow rate impc_lite={impc:.4f} > orca={orca:.4f}")
