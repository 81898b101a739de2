"""Offline rendering of smgbench episode logs."""

from .render import RenderJob, render_animation, render_metrics, render_static

__all__ = ["RenderJob", "render_static", "render_animation", "render_metrics"]
__version__ = "0.1.0"
