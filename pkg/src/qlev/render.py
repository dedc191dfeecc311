"""Deterministic SVG output for traced curves and zone maps."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

# fixed palette; a normal picks its entry from a hash of its integer entries
PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#17becf", "#8c564b", "#e377c2", "#bcbd22", "#393b79",
)
COMPACT_COLOR = "#4c72b0"
GRAY = "#9e9e9e"
ALL_COMPACT_COLOR = "#dfe7f2"


class EmptyInputError(ValueError):
    pass


@dataclass(frozen=True)
class RenderSpec:
    size: int = 800
    margin: int = 20
    stroke: float = 1.2
    boundary_stroke: float = 0.8
    strip_boundaries: bool = True
    decimals: int = 3


def normal_color(normal) -> str:
    key = ",".join(str(int(e)) for e in normal).encode()
    return PALETTE[int(hashlib.sha256(key).hexdigest(), 16) % len(PALETTE)]


def label_color(label: dict | None) -> str:
    if not label:
        return GRAY
    kind = label.get("kind")
    if kind == "Compact":
        return COMPACT_COLOR
    if kind == "OpenStrip" and label.get("normal"):
        return normal_color(label["normal"])
    return GRAY


def legend_color(legend: str) -> str:
    if legend.startswith("n="):
        return normal_color(legend[2:].split(","))
    if legend == "AllCompact":
        return ALL_COMPACT_COLOR
    return GRAY


def _fmt(v: float, decimals: int) -> str:
    s = f"{v:.{decimals}f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Frame:
    """Maps plane coordinates to canvas pixels (y up)."""

    def __init__(self, lo, hi, spec: RenderSpec):
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        span = max(float(np.max(hi - lo)), 1e-12)
        self.lo = lo
        self.hi = lo + span
        self.scale = (spec.size - 2 * spec.margin) / span
        self.spec = spec

    def xy(self, p) -> tuple[str, str]:
        d = self.spec.decimals
        x = self.spec.margin + (p[0] - self.lo[0]) * self.scale
        y = self.spec.size - self.spec.margin - (p[1] - self.lo[1]) * self.scale
        return _fmt(x, d), _fmt(y, d)


def _header(size: int) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="#ffffff"/>',
    ]


def render_trajectories(items, spec: RenderSpec = RenderSpec()) -> str:
    """SVG for serialized trajectories.

    ``items`` are dicts as written by the trace command: "points" (N x 2),
    "termination" and an optional "label" carrying kind, normal, width and
    direction2. Closed curves end their path with Z; open strips get two
    boundary lines parallel to the fitted direction when enabled.
    """
    items = list(items)
    if not items:
        raise EmptyInputError("nothing to render")
    allpts = np.vstack([np.asarray(it["points"], float) for it in items])
    frame = _Frame(allpts.min(axis=0), allpts.max(axis=0), spec)
    out = _header(spec.size)
    for it in items:
        pts = np.asarray(it["points"], float)
        label = it.get("label")
        color = label_color(label)
        closed = it.get("termination") == "Closed"
        coords = [frame.xy(p) for p in (pts[:-1] if closed and len(pts) > 2 else pts)]
        d = "M" + " L".join(f"{x} {y}" for x, y in coords) + (" Z" if closed else "")
        out.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="{spec.stroke}"/>')
        if spec.strip_boundaries and label and label.get("kind") == "OpenStrip" and "direction2" in label:
            out.extend(_strip_lines(pts, label, color, frame, spec))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _strip_lines(pts, label, color, frame, spec) -> list[str]:
    d = np.asarray(label["direction2"], float)
    d = d / np.linalg.norm(d)
    nrm = np.array([-d[1], d[0]])
    h = pts @ nrm
    s = pts @ d
    lines = []
    for off in (h.min(), h.max()):
        a = s.min() * d + off * nrm
        b = s.max() * d + off * nrm
        (x1, y1), (x2, y2) = frame.xy(a), frame.xy(b)
        lines.append(
            f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{color}" '
            f'stroke-width="{spec.boundary_stroke}" stroke-dasharray="4 3"/>'
        )
    return lines


def render_zone_map(zone: dict, spec: RenderSpec = RenderSpec()) -> str:
    """Heat map of a serialized zone map: one cell per grid sample, colored
    by legend, with boundary samples outlined."""
    zones = np.asarray(zone.get("zones", []))
    if zones.size == 0:
        raise EmptyInputError("empty zone map")
    legend = {int(k): v for k, v in zone["legend"].items()}
    boundary = np.asarray(zone.get("boundary", np.zeros_like(zones)))
    n1, n2 = zones.shape
    cell = (spec.size - 2 * spec.margin) / max(n1, n2)
    out = _header(spec.size)
    for i in range(n1):
        for j in range(n2):
            # i runs along s (x axis), j along t (y axis, up)
            x = _fmt(spec.margin + i * cell, spec.decimals)
            y = _fmt(spec.size - spec.margin - (j + 1) * cell, spec.decimals)
            w = _fmt(cell, spec.decimals)
            fill = legend_color(legend[int(zones[i, j])])
            stroke = ' stroke="#000000" stroke-width="0.5"' if boundary[i, j] else ""
            out.append(f'<rect x="{x}" y="{y}" width="{w}" height="{w}" fill="{fill}"{stroke}/>')
    y = spec.size - 4
    keys = ", ".join(f"{k}: {legend[k]}" for k in sorted(legend))
    out.append(f'<text x="{spec.margin}" y="{y}" font-size="10">{escape(keys)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
