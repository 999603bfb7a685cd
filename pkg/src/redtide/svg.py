"""Minimal SVG emitters for the correlation heatmap and distance scatter."""

from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape


def _diverging(v: Optional[float]) -> str:
    """Blue (-1) through white (0) to red (+1); grey when undefined."""
    if v is None or math.isnan(v):
        return "#cccccc"
    v = max(-1.0, min(1.0, v))
    if v >= 0:
        r, g, b = 255, int(round(255 * (1 - v))), int(round(255 * (1 - v)))
    else:
        r, g, b = int(round(255 * (1 + v))), int(round(255 * (1 + v))), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(rows: Sequence[str], cols: Sequence[str], values: dict, title: str = "",
            cell: int = 70) -> str:
    """Grid of colored cells; ``values`` maps ``(row, col)`` to a number in [-1, 1] or None."""
    left, top = 90, 50
    width = left + cell * len(cols) + 20
    height = top + cell * len(rows) + 20
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">']
    if title:
        out.append(f'<text x="{left}" y="20" font-size="14">{escape(title)}</text>')
    for j, c in enumerate(cols):
        x = left + j * cell + cell / 2
        out.append(f'<text x="{x:g}" y="{top - 8}" text-anchor="middle">{escape(c)}</text>')
    for i, r in enumerate(rows):
        y = top + i * cell
        out.append(f'<text x="{left - 8}" y="{y + cell / 2 + 4:g}" text-anchor="end">{escape(r)}</text>')
        for j, c in enumerate(cols):
            v = values.get((r, c))
            x = left + j * cell
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                       f'fill="{_diverging(v)}" stroke="#ffffff"/>')
            label = "n/a" if v is None else f"{v:.2f}"
            out.append(f'<text x="{x + cell / 2:g}" y="{y + cell / 2 + 4:g}" '
                       f'text-anchor="middle">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def scatter(points: Sequence[tuple[float, float]], line: Optional[tuple[float, float]] = None,
            title: str = "", x_label: str = "", y_label: str = "",
            width: int = 480, height: int = 320) -> str:
    """Points with an optional ``(slope, intercept)`` line."""
    pad = 50
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">']
    if title:
        out.append(f'<text x="{pad}" y="20" font-size="14">{escape(title)}</text>')
    if points:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if x1 == x0:
            x1 = x0 + 1.0
        if y1 == y0:
            y1 = y0 + 1.0

        def px(x):
            return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

        def py(y):
            return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

        out.append(f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="#000"/>')
        out.append(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="#000"/>')
        for x, y in points:
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5" fill="#1f77b4" fill-opacity="0.6"/>')
        if line is not None:
            slope, intercept = line
            out.append(f'<line x1="{px(x0):.2f}" y1="{py(intercept + slope * x0):.2f}" '
                       f'x2="{px(x1):.2f}" y2="{py(intercept + slope * x1):.2f}" stroke="#d62728"/>')
        out.append(f'<text x="{pad}" y="{height - pad + 16}">{x0:.3g}</text>')
        out.append(f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="end">{x1:.3g}</text>')
        out.append(f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end">{y0:.3g}</text>')
        out.append(f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end">{y1:.3g}</text>')
    if x_label:
        out.append(f'<text x="{width / 2:g}" y="{height - 10}" text-anchor="middle">{escape(x_label)}</text>')
    if y_label:
        out.append(f'<text x="14" y="{height / 2:g}" transform="rotate(-90 14 {height / 2:g})" '
                   f'text-anchor="middle">{escape(y_label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
