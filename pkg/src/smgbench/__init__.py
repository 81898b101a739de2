"""smgbench: benchmark simulator for multi-robot navigation in social mini-games."""

from .core import AgentSpec, AgentState, Trajectory, Vec2, WorldGeometry

__all__ = ["Vec2", "AgentSpec", "AgentState", "Trajectory", "WorldGeometry"]
__version__ = "0.1.0"
