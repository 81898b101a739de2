"""smg-viz: render smgbench episode logs and aggregate tables."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import RenderJob, render_animation, render_metrics, render_static


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="smg-viz", description="Offline rendering of episode logs."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    static = sub.add_parser("static", help="trajectory plot with scenario geometry")
    static.add_argument("--log", required=True, help="episode log directory")
    static.add_argument("--out", required=True, help="output image path")

    anim = sub.add_parser("anim", help="GIF animation of the episode")
    anim.add_argument("--log", required=True)
    anim.add_argument("--out", required=True)
    anim.add_argument("--stride", type=int, default=1, help="steps per frame")

    met = sub.add_parser("metrics", help="grouped bar chart from an aggregate CSV")
    met.add_argument("--csv", required=True, help="aggregate.csv path")
    met.add_argument("--metric", required=True, help="metric column to chart")
    met.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "static":
            path = render_static(RenderJob(Path(args.log), Path(args.out)))
        elif args.command == "anim":
            path = render_animation(
                RenderJob(Path(args.log), Path(args.out), frame_stride=args.stride)
            )
        else:
            path = render_metrics(Path(args.csv), args.metric, Path(args.out))
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"Saved to: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
