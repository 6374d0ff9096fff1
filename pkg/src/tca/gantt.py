"""Text and SVG Gantt charts of a schedule."""

from __future__ import annotations

import math
from fractions import Fraction
from xml.sax.saxutils import escape

from .core import format_time

MARK_TEXT = {"after": ">", "before": "<", "sync": "<>"}


def _tasks(segments, markers):
    names = []
    for task in [s.task for s in segments] + [m[0] for m in markers]:
        if task not in names:
            names.append(task)
    return sorted(names)


def render_text(segments, horizon, markers=(), max_width=8):
    """One row per task and one column per tick, block labels in cells.

    A tick is the largest unit dividing every date, so fractional schedules
    get finer columns. ``markers`` are ``(task, kind, time)`` triples drawn
    on a row under their task.
    """
    times = [horizon] + [s.start for s in segments] + [s.end for s in segments] + [m[2] for m in markers]
    scale = math.lcm(*(Fraction(t).denominator for t in times))
    columns = int(horizon * scale)
    labels = [s.block for s in segments] + [MARK_TEXT[m[1]] for m in markers]
    ticks = [format_time(Fraction(k, scale)) for k in range(columns + 1)]
    width = max(min(max_width, max(len(x) for x in labels + ["."])), max(len(x) for x in ticks)) + 1
    names = _tasks(segments, markers)
    head = max([len(n) for n in names] + [4]) + 1

    def cell(text):
        return text[: width - 1].ljust(width)

    lines = ["time".ljust(head) + "|" + "".join(cell(x) for x in ticks)]
    for name in names:
        row = [""] * (columns + 1)
        for s in segments:
            if s.task != name:
                continue
            for k in range(int(s.start * scale), min(columns, int(s.end * scale))):
                row[k] = s.block
        lines.append(name.ljust(head) + "|" + "".join(cell(x) for x in row))
        marks = [""] * (columns + 1)
        any_mark = False
        for task, kind, t in markers:
            k = int(Fraction(t) * scale)
            if task == name and 0 <= k <= columns:
                marks[k] = (marks[k] + MARK_TEXT[kind]) if marks[k] and marks[k] != MARK_TEXT[kind] else MARK_TEXT[kind]
                any_mark = True
        if any_mark:
            lines.append("".ljust(head) + "|" + "".join(cell(x) for x in marks))
    return "\n".join(line.rstrip() for line in lines) + "\n"


_PALETTE = ["#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#b279a2", "#ff9da6", "#9d755d"]


def render_svg(segments, horizon, markers=(), px_per_tick=40, lane=36):
    """SVG chart: one lane per task, up-triangles for after, down for before, diamonds for sync."""
    names = _tasks(segments, markers)
    left, top = 80, 24
    width = left + int(math.ceil(horizon * px_per_tick)) + 20
    height = top + lane * len(names) + 24
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="monospace" font-size="11">'
    ]
    colors = {}
    for k in range(int(math.floor(horizon)) + 1):
        x = left + k * px_per_tick
        out.append(f'<line x1="{x}" y1="{top - 4}" x2="{x}" y2="{height - 20}" stroke="#ddd"/>')
        out.append(f'<text x="{x}" y="{top - 8}" text-anchor="middle">{k}</text>')
    for i, name in enumerate(names):
        y = top + i * lane
        out.append(f'<text x="4" y="{y + lane / 2 + 4:g}">{escape(name)}</text>')
        for s in segments:
            if s.task != name:
                continue
            color = colors.setdefault(s.block, _PALETTE[len(colors) % len(_PALETTE)])
            x0 = left + float(s.start) * px_per_tick
            w = float(s.end - s.start) * px_per_tick
            out.append(
                f'<rect x="{x0:g}" y="{y + 8}" width="{w:g}" height="{lane - 16}" fill="{color}">'
                f"<title>{escape(str(s))}</title></rect>"
            )
            out.append(f'<text x="{x0 + 3:g}" y="{y + lane / 2 + 4:g}" fill="white">{escape(s.block)}</text>')
        for task, kind, t in markers:
            if task != name:
                continue
            x = left + float(t) * px_per_tick
            if kind == "after":
                pts = f"{x - 5:g},{y + lane - 2} {x + 5:g},{y + lane - 2} {x:g},{y + lane - 10}"
            elif kind == "before":
                pts = f"{x - 5:g},{y + 2} {x + 5:g},{y + 2} {x:g},{y + 10}"
            else:
                pts = f"{x:g},{y + lane / 2 - 7:g} {x + 6:g},{y + lane / 2:g} {x:g},{y + lane / 2 + 7:g} {x - 6:g},{y + lane / 2:g}"
            out.append(f'<polygon points="{pts}" fill="black"><title>{kind} {format_time(t)}</title></polygon>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
