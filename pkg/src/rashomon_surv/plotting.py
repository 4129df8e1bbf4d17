"""Standalone SVG rendering of a Rashomon envelope (step reference + shaded band)."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .rashomon import EnvelopeStats, RashomonEnvelope


@dataclass(frozen=True)
class Frame:
    """Affine map from (time, probability) to SVG pixel coordinates."""

    t_min: float
    t_max: float
    left: float = 70.0
    right: float = 620.0
    top: float = 40.0
    bottom: float = 350.0

    def x(self, t):
        return self.left + (np.asarray(t, float) - self.t_min) / (self.t_max - self.t_min) * (self.right - self.left)

    def y(self, p):
        return self.bottom - np.asarray(p, float) * (self.bottom - self.top)


def step_vertices(grid, values):
    """Vertices of a right-continuous step path through (grid[i], values[i])."""
    grid = np.asarray(grid, float)
    values = np.asarray(values, float)
    pts = []
    for i in range(len(grid)):
        pts.append((grid[i], values[i]))
        if i + 1 < len(grid):
            pts.append((grid[i + 1], values[i]))
    return pts


def _points(frame, pts):
    return " ".join(f"{frame.x(t):.4f},{frame.y(p):.4f}" for t, p in pts)


def render_svg(env: RashomonEnvelope, stats: EnvelopeStats | None = None, title: str = "") -> str:
    grid = env.grid
    t_min = 0.0
    t_max = float(grid[-1]) if grid[-1] > t_min else 1.0
    frame = Frame(t_min, t_max)
    width, height = 660, 400

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" data-t-min="{t_min!r}" data-t-max="{t_max!r}" '
        f'data-left="{frame.left!r}" data-right="{frame.right!r}" '
        f'data-top="{frame.top!r}" data-bottom="{frame.bottom!r}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>')

    # axes and ticks
    out.append(
        f'<path class="axes" d="M{frame.left},{frame.top} L{frame.left},{frame.bottom} '
        f'L{frame.right},{frame.bottom}" stroke="black" fill="none"/>'
    )
    for p in np.linspace(0, 1, 5):
        y = frame.y(p)
        out.append(f'<line x1="{frame.left - 4}" y1="{y:.4f}" x2="{frame.left}" y2="{y:.4f}" stroke="black"/>')
        out.append(
            f'<text x="{frame.left - 8}" y="{y + 4:.4f}" text-anchor="end" font-size="11">{p:.2f}</text>'
        )
    for t in np.linspace(t_min, t_max, 6):
        x = frame.x(t)
        out.append(f'<line x1="{x:.4f}" y1="{frame.bottom}" x2="{x:.4f}" y2="{frame.bottom + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.4f}" y="{frame.bottom + 18}" text-anchor="middle" font-size="11">{t:g}</text>')
    out.append(
        f'<text x="{(frame.left + frame.right) / 2}" y="{height - 12}" text-anchor="middle" '
        f'font-size="13">time (cycles)</text>'
    )
    out.append(
        f'<text x="18" y="{(frame.top + frame.bottom) / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {(frame.top + frame.bottom) / 2})">survival probability</text>'
    )

    if np.any(env.width > 0):
        upper = step_vertices(grid, env.upper)
        lower = step_vertices(grid, env.lower)[::-1]
        out.append(
            f'<polygon class="band" points="{_points(frame, upper + lower)}" '
            f'fill="#9e9e9e" fill-opacity="0.5" stroke="none"/>'
        )
    out.append(
        f'<polyline class="reference" points="{_points(frame, step_vertices(grid, env.reference_values))}" '
        f'fill="none" stroke="black" stroke-width="1.5"/>'
    )

    if stats is not None:
        note = (
            f"mean width {stats.mean_width:.4f}, max width {stats.max_width:.4f} "
            f"at t={stats.argmax_time:g}"
        )
        out.append(f'<text x="{frame.right}" y="{frame.top - 6}" text-anchor="end" font-size="11">{escape(note)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(env: RashomonEnvelope, stats: EnvelopeStats | None, path, title: str = "") -> None:
    Path(path).write_text(render_svg(env, stats, title))
