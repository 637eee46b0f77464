"""Minimal static SVG Sankey drawing of an ordered layered graph."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .graph import LayeredGraph, Ordering

WIDTH = 960
HEIGHT = 540
MARGIN = 40
NODE_W = 14
GAP_FRAC = 0.25  # share of the column height left as gaps between nodes
PALETTE = ("#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _ribbon(x0, y0, x1, y1, thick) -> str:
    mx = (x0 + x1) / 2
    return (
        f"M{_f(x0)},{_f(y0)} C{_f(mx)},{_f(y0)} {_f(mx)},{_f(y1)} {_f(x1)},{_f(y1)} "
        f"L{_f(x1)},{_f(y1 + thick)} C{_f(mx)},{_f(y1 + thick)} {_f(mx)},{_f(y0 + thick)} {_f(x0)},{_f(y0 + thick)} Z"
    )


def _loop(x0, y0, x1, y1, low, thick) -> str:
    """Band leaving rightwards at (x0, y0), passing under the plot at ``low``, entering at (x1, y1)."""
    r = 30.0
    return (
        f"M{_f(x0)},{_f(y0)} C{_f(x0 + r)},{_f(y0)} {_f(x0 + r)},{_f(low)} {_f(x0)},{_f(low)} "
        f"L{_f(x1)},{_f(low)} C{_f(x1 - r)},{_f(low)} {_f(x1 - r)},{_f(y1)} {_f(x1)},{_f(y1)} "
        f"L{_f(x1)},{_f(y1 + thick)} C{_f(x1 - r - thick)},{_f(y1 + thick)} {_f(x1 - r - thick)},{_f(low + thick)} {_f(x1)},{_f(low + thick)} "
        f"L{_f(x0)},{_f(low + thick)} C{_f(x0 + r + thick)},{_f(low + thick)} {_f(x0 + r + thick)},{_f(y0 + thick)} {_f(x0)},{_f(y0 + thick)} Z"
    )


def render_svg(g: LayeredGraph, ordering: Ordering, path: str | Path | None = None) -> str:
    """Draw levels as columns, vertices as bars sized by flow, edges as ribbons.

    Vertices stack top to bottom by rank. Binding links leave the last
    column, run under the diagram and re-enter the first column. Dummy
    vertices are faded and unlabelled. Output is deterministic.
    """
    perms = g.perms(ordering)
    n = g.n
    loop_room = 60 if g.is_cycle else 0
    plot_h = HEIGHT - 2 * MARGIN - loop_room
    xs = [MARGIN + (WIDTH - 2 * MARGIN - NODE_W) * i / (n - 1) for i in range(n)]

    flow_in = [np.zeros(s) for s in g.sizes]
    flow_out = [np.zeros(s) for s in g.sizes]
    for i, m in enumerate(g.matrices):
        j = (i + 1) % n
        flow_out[i] += m.sum(axis=1)
        flow_in[j] += m.sum(axis=0)
    size = [np.maximum(a, b) for a, b in zip(flow_in, flow_out)]
    scale = min(plot_h * (1 - GAP_FRAC) / s.sum() for s in size)

    top = []
    for i in range(n):
        gap = plot_h * GAP_FRAC / max(g.sizes[i] - 1, 1)
        y = np.zeros(g.sizes[i])
        cur = MARGIN
        for k in perms[i]:
            y[k] = cur
            cur += size[i][k] * scale + gap
        top.append(y)

    rank = []
    for p in perms:
        r = np.empty(len(p), dtype=int)
        r[p] = np.arange(len(p))
        rank.append(r)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<g fill-opacity="0.45" stroke="none">',
    ]
    for i, m in enumerate(g.matrices):
        j = (i + 1) % n
        edges = list(zip(*np.nonzero(m)))
        # edge ends stack on each bar in the rank order of the far end
        y_out, y_in = {}, {}
        for a in range(g.sizes[i]):
            cur = top[i][a]
            for b in sorted((b for aa, b in edges if aa == a), key=lambda b: rank[j][b]):
                y_out[a, b] = cur
                cur += m[a, b] * scale
        for b in range(g.sizes[j]):
            cur = top[j][b]
            for a in sorted((a for a, bb in edges if bb == b), key=lambda a: rank[i][a]):
                y_in[a, b] = cur
                cur += m[a, b] * scale
        for a, b in sorted(edges, key=lambda e: (rank[i][e[0]], rank[j][e[1]])):
            thick = m[a, b] * scale
            ya, yb = y_out[a, b], y_in[a, b]
            colour = PALETTE[(3 * i + a) % len(PALETTE)]
            if g.is_cycle and i == n - 1:
                d = _loop(xs[i] + NODE_W, ya, xs[0], yb, MARGIN + plot_h + 0.5 * loop_room, thick)
            else:
                d = _ribbon(xs[i] + NODE_W, ya, xs[j], yb, thick)
            parts.append(f'<path d="{d}" fill="{colour}"/>')
    parts.append("</g>")
    parts.append('<g stroke="#333" stroke-width="0.5">')
    labels = []
    for i, lv in enumerate(g.levels):
        for k, v in enumerate(lv):
            dummy = v in g.dummies
            h = max(size[i][k] * scale, 1.0)
            opacity = "0.25" if dummy else "1"
            parts.append(
                f'<rect x="{_f(xs[i])}" y="{_f(top[i][k])}" width="{NODE_W}" height="{_f(h)}" fill="#555" fill-opacity="{opacity}"/>'
            )
            if not dummy:
                lx = xs[i] + NODE_W + 3 if i < n - 1 else xs[i] - 3
                anchor = "start" if i < n - 1 else "end"
                labels.append(
                    f'<text x="{_f(lx)}" y="{_f(top[i][k] + h / 2 + 4)}" text-anchor="{anchor}">{escape(v)}</text>'
                )
    parts.append("</g>")
    parts.append('<g font-family="sans-serif" font-size="11" fill="#111">')
    parts.extend(labels)
    parts.append("</g>")
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
