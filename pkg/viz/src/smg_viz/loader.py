"""Read-only access to episode log directories.

The on-disk contract: meta.json (scenario geometry, agent radii, events)
plus trajectories/robot_<id>.csv with columns
t, agent_id, px, py, vx, vy, ux, uy. Nothing here ever writes to a log.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CSV_COLUMNS = ["t", "agent_id", "px", "py", "vx", "vy", "ux", "uy"]


@dataclass(frozen=True)
class AgentTrack:
    agent_id: int
    radius: float
    start: tuple[float, float]
    goal: tuple[float, float]
    times: np.ndarray  # (n,)
    positions: np.ndarray  # (n, 2)


@dataclass(frozen=True)
class EpisodeData:
    meta: dict
    obstacles: list[tuple[tuple[float, float], tuple[float, float]]]
    bounds: tuple[float, float, float, float]
    agents: list[AgentTrack]

    @property
    def step_count(self) -> int:
        return len(self.agents[0].times)


def load_episode(log_dir: str | Path) -> EpisodeData:
    log_dir = Path(log_dir)
    meta_path = log_dir / "meta.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"missing {meta_path}")
    meta = json.loads(meta_path.read_text())
    scenario = meta["scenario"]
    geometry = scenario["geometry"]
    obstacles = [
        ((seg[0][0], seg[0][1]), (seg[1][0], seg[1][1])) for seg in geometry["obstacles"]
    ]
    bounds = tuple(geometry["bounds"])
    specs = {int(a["id"]): a for a in scenario["agents"]}

    agents = []
    for agent_id in meta["agent_order"]:
        path = log_dir / "trajectories" / f"robot_{agent_id}.csv"
        if not path.exists():
            raise FileNotFoundError(f"missing trajectory file {path}")
        times, xs, ys = [], [], []
        with path.open() as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != CSV_COLUMNS:
                raise ValueError(f"{path}: unexpected columns {header}")
            for row in reader:
                times.append(float(row[0]))
                xs.append(float(row[2]))
                ys.append(float(row[3]))
        if not times:
            raise ValueError(f"{path}: no samples")
        spec = specs[int(agent_id)]
        agents.append(
            AgentTrack(
                agent_id=int(agent_id),
                radius=float(spec["radius"]),
                start=(spec["start"][0], spec["start"][1]),
                goal=(spec["goal"][0], spec["goal"][1]),
                times=np.asarray(times),
                positions=np.column_stack([xs, ys]),
            )
        )
    if not agents:
        raise ValueError(f"{log_dir}: log contains no agents")
    return EpisodeData(meta=meta, obstacles=obstacles, bounds=bounds, agents=agents)


def load_aggregate(csv_path: str | Path) -> tuple[list[str], list[dict]]:
    csv_path = Path(csv_path)
    with csv_path.open() as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        if reader.fieldnames is None or not rows:
            raise ValueError(f"{csv_path}: empty aggregate")
        return list(reader.fieldnames), rows
