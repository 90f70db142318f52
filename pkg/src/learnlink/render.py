"""Deterministic SVG pictures of environments and planner output.

Obstacles are black on white, critical cells green, paths blue polylines.
Roadmap vertices are coloured by how they entered the roadmap: critical
seeds red, uniform seeds blue, steering vertices green.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .collision import Environment, Rect
from .criticality import CriticalityGrid, CriticalMask
from .roadmap import Roadmap

ORIGIN_COLORS = {"cr": "#d62728", "uniform": "#1f77b4", "steer": "#2ca02c",
                 "start": "#9467bd", "goal": "#ff7f0e"}
MASK_COLOR = "#2ca02c"
PATH_COLORS = ("#1f3fff", "#e377c2", "#17becf", "#bcbd22")


def _n(x: float) -> str:
    """Fixed precision keeps the output byte-stable."""
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


class _Canvas:
    def __init__(self, workspace, scale):
        self.x0, self.y0, self.x1, self.y1 = workspace
        self.s = scale
        self.w = (self.x1 - self.x0) * scale
        self.h = (self.y1 - self.y0) * scale

    def x(self, v):
        return _n((v - self.x0) * self.s)

    def y(self, v):
        # SVG grows downwards
        return _n((self.y1 - v) * self.s)

    def pts(self, xy):
        return " ".join(f"{self.x(a)},{self.y(b)}" for a, b in xy)

    def rect(self, xmin, ymin, xmax, ymax, attrs, body=""):
        head = (f'<rect x="{self.x(xmin)}" y="{self.y(ymax)}" width="{_n((xmax - xmin) * self.s)}" '
                f'height="{_n((ymax - ymin) * self.s)}" {attrs}')
        return f"{head}>{body}</rect>" if body else f"{head}/>"


def render_svg(env: Environment, paths=(), roadmap: Roadmap | None = None,
               grid: CriticalityGrid | None = None, mask: CriticalMask | None = None,
               points=None, scale: float = 50.0, out=None) -> str:
    """Return the SVG text; also write it to ``out`` when given."""
    for layer in (grid, mask):
        if layer is not None and tuple(layer.spec.workspace) != tuple(env.workspace):
            raise ValueError("overlay workspace does not match the environment")
    if roadmap is not None and roadmap.space != env.space:
        raise ValueError("roadmap was built for a different configuration space")
    c = _Canvas(env.workspace, scale)
    out_lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(c.w)}" height="{_n(c.h)}" '
        f'viewBox="0 0 {_n(c.w)} {_n(c.h)}">',
        f"<title>{escape(env.name or 'environment')}</title>",
        f'<rect class="free" x="0" y="0" width="{_n(c.w)}" height="{_n(c.h)}" fill="#ffffff"/>',
    ]
    if grid is not None:
        peak = float(grid.mu.max())
        cells = grid.spec.bounds()
        out_lines.append('<g class="grid">')
        for k, v in enumerate(grid.mu.reshape(-1)):
            if v > 0:
                a = v / peak
                out_lines.append(c.rect(*cells[k], f'fill="#ff7f0e" fill-opacity="{_n(a)}"'))
        out_lines.append("</g>")
    if mask is not None:
        cells = mask.spec.bounds()
        out_lines.append('<g class="mask">')
        for k in np.flatnonzero(mask.bits.reshape(-1)):
            out_lines.append(c.rect(*cells[k], f'class="mask-cell" fill="{MASK_COLOR}"'))
        out_lines.append("</g>")
    out_lines.append('<g class="obstacles">')
    for o in env.obstacles:
        title = f"<title>{escape(o.name)}</title>" if o.name else ""
        if isinstance(o, Rect):
            out_lines.append(c.rect(o.xmin, o.ymin, o.xmax, o.ymax,
                                    'class="obstacle" fill="#000000"', title))
        else:
            out_lines.append(f'<polygon class="obstacle" points="{c.pts(o.vertices)}" '
                             f'fill="#000000">{title}</polygon>')
    out_lines.append("</g>")
    if roadmap is not None:
        out_lines.append('<g class="roadmap">')
        for g in roadmap.graphs:
            for u, v, _ in g.edges():
                a, b = g.vertex(u), g.vertex(v)
                out_lines.append(f'<line x1="{c.x(a[0])}" y1="{c.y(a[1])}" x2="{c.x(b[0])}" '
                                 f'y2="{c.y(b[1])}" stroke="#999999" stroke-width="1"/>')
        for g in roadmap.graphs:
            for q, origin in zip(g.points, g.origins):
                out_lines.append(f'<circle class="vertex {origin}" cx="{c.x(q[0])}" cy="{c.y(q[1])}" '
                                 f'r="2" fill="{ORIGIN_COLORS[origin]}"/>')
        out_lines.append("</g>")
    if points is not None and len(points):
        out_lines.append('<g class="points">')
        for q in np.asarray(points, dtype=float):
            out_lines.append(f'<circle cx="{c.x(q[0])}" cy="{c.y(q[1])}" r="2.5" fill="#d62728"/>')
        out_lines.append("</g>")
    for i, path in enumerate(paths):
        p = np.asarray(path, dtype=float)
        if len(p) == 0:
            continue
        color = PATH_COLORS[i % len(PATH_COLORS)]
        out_lines.append(f'<polyline class="path" points="{c.pts(p[:, :2])}" fill="none" '
                         f'stroke="{color}" stroke-width="2"/>')
    out_lines.append(f'<rect class="border" x="0" y="0" width="{_n(c.w)}" height="{_n(c.h)}" '
                     f'fill="none" stroke="#000000" stroke-width="2"/>')
    out_lines.append("</svg>")
    svg = "\n".join(out_lines) + "\n"
    if out is not None:
        with open(out, "w") as fh:
            fh.write(svg)
    return svg
