"""Rendering of episode logs and aggregate tables.

Static plots show the scenario geometry with each agent's full path;
animations replay the episode at a configurable frame stride; metric
charts draw grouped bars with std error bars from an aggregate CSV.
Everything drawn comes straight from the log files; nothing is
recomputed or simulated here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.animation import FuncAnimation, PillowWriter

from .loader import EpisodeData, load_aggregate, load_episode

AGENT_COLORS = ["tab:blue", "tab:orange", "tab:green", "tab:red",
                "tab:purple", "tab:brown", "tab:pink", "tab:gray"]


@dataclass(frozen=True)
class RenderJob:
    log_dir: Path
    out_path: Path
    frame_stride: int = 1
    figsize: tuple[float, float] = (8.0, 8.0)
    goal_marker: str = "*"

    def __post_init__(self) -> None:
        if self.frame_stride < 1:
            raise ValueError("frame_stride must be >= 1")


def frame_indices(step_count: int, stride: int) -> list[int]:
    """Sampled step indices: ceil(step_count / stride) frames."""
    return list(range(0, step_count, stride))


def frame_positions(data: EpisodeData, stride: int) -> list[np.ndarray]:
    """Per-frame (n_agents, 2) position arrays; the exact drawn geometry."""
    return [
        np.array([track.positions[k] for track in data.agents])
        for k in frame_indices(data.step_count, stride)
    ]


def _draw_world(ax, data: EpisodeData) -> None:
    for (x0, y0), (x1, y1) in data.obstacles:
        ax.plot([x0, x1], [y0, y1], color="black", linewidth=3, solid_capstyle="butt")
    xmin, ymin, xmax, ymax = data.bounds
    ax.set_xlim(xmin, xmax)
    ax.set_ylim(ymin, ymax)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")


def _color(track_index: int) -> str:
    return AGENT_COLORS[track_index % len(AGENT_COLORS)]


def render_static(job: RenderJob) -> Path:
    """One image: obstacle segments, full paths, start dots, goal stars."""
    data = load_episode(job.log_dir)
    fig, ax = plt.subplots(figsize=job.figsize)
    _draw_world(ax, data)
    for idx, track in enumerate(data.agents):
        color = _color(idx)
        ax.plot(track.positions[:, 0], track.positions[:, 1],
                color=color, linewidth=1.5, label=f"robot {track.agent_id}")
        ax.plot(*track.start, marker="o", color=color, markersize=6)
        ax.plot(*track.goal, marker=job.goal_marker, color="green", markersize=14)
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title(job.log_dir.name)
    job.out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(job.out_path, dpi=100)
    plt.close(fig)
    return job.out_path


def render_animation(job: RenderJob) -> Path:
    """GIF with ceil(steps / stride) frames: discs plus trailing paths."""
    data = load_episode(job.log_dir)
    indices = frame_indices(data.step_count, job.frame_stride)
    fig, ax = plt.subplots(figsize=job.figsize)
    _draw_world(ax, data)
    discs, trails = [], []
    for idx, track in enumerate(data.agents):
        color = _color(idx)
        ax.plot(*track.goal, marker=job.goal_marker, color="green", markersize=14)
        disc = plt.Circle(tuple(track.positions[0]), track.radius, color=color, alpha=0.8)
        ax.add_patch(disc)
        discs.append(disc)
        (trail,) = ax.plot([], [], color=color, linewidth=1.0, alpha=0.6)
        trails.append(trail)

    def update(frame_no):
        k = indices[frame_no]
        for track, disc, trail in zip(data.agents, discs, trails):
            disc.center = tuple(track.positions[k])
            trail.set_data(track.positions[: k + 1, 0], track.positions[: k + 1, 1])
        return discs + trails

    anim = FuncAnimation(fig, update, frames=len(indices), blit=True)
    job.out_path.parent.mkdir(parents=True, exist_ok=True)
    anim.save(job.out_path, writer=PillowWriter(fps=10))
    plt.close(fig)
    return job.out_path


def render_metrics(csv_path: Path, metric: str, out_path: Path,
                   figsize: tuple[float, float] = (9.0, 5.0)) -> Path:
    """Grouped bars per scenario x solver with std error bars."""
    columns, rows = load_aggregate(csv_path)
    mean_col = metric if metric in columns else f"{metric}_mean"
    if mean_col not in columns:
        metrics = sorted(
            {c[:-5] for c in columns if c.endswith("_mean")}
            | {c for c in columns if c.endswith("_rate")}
        )
        raise ValueError(
            f"unknown metric {metric!r}; available: {', '.join(metrics)}"
        )
    std_col = f"{metric}_std" if f"{metric}_std" in columns else None

    scenarios = sorted({r["scenario"] for r in rows})
    solvers = sorted({r["solver"] for r in rows})
    width = 0.8 / len(solvers)
    fig, ax = plt.subplots(figsize=figsize)
    x = np.arange(len(scenarios))
    for si, solver in enumerate(solvers):
        means, stds = [], []
        for scen in scenarios:
            row = next((r for r in rows if r["scenario"] == scen and r["solver"] == solver), None)
            val = row.get(mean_col, "") if row else ""
            means.append(float(val) if val not in ("", None) else math.nan)
            sval = row.get(std_col, "") if (row and std_col) else ""
            stds.append(float(sval) if sval not in ("", None) else 0.0)
        ax.bar(x + si * width, means, width, yerr=stds, capsize=3, label=solver)
    ax.set_xticks(x + width * (len(solvers) - 1) / 2)
    ax.set_xticklabels(scenarios)
    ax.set_ylabel(metric)
    ax.set_title(f"{metric} by scenario and solver (mean ± std)")
    ax.legend()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=100)
    plt.close(fig)
    return out_path
