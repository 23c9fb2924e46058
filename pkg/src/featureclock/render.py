"""Deterministic SVG scenes: scatter layers, clock glyphs, inter-group lines.

Scenes collect primitives in data coordinates; a single aspect-preserving
transform maps them to pixels when the SVG text is produced. All emitted
coordinates are rounded to 2 decimals and nothing depends on randomness or
timestamps, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

from .clockcore import Clock, unit_vector
from .errors import ComputationError
from .grouping import NOISE, GroupingResult
from .ingest import Dataset
from .intergroup import IntergroupClock

PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)
DASHES = ("", "6,3", "2,2", "8,3,2,3")
NOISE_COLOR = "#999999"

_MARGIN = 50.0
_ANNOTATION_STEP = 12.0  # degrees to nudge overlapping rim labels


@dataclass
class ScatterPoint:
    x: float
    y: float
    color: str


@dataclass
class ArrowSpec:
    angle_deg: float
    length: float  # data units
    color: str
    dash: str
    annotation: str


@dataclass
class ClockGlyph:
    cx: float
    cy: float
    radius: float
    arrows: list[ArrowSpec]
    caption: str | None = None


@dataclass
class SegmentGlyph:
    x1: float
    y1: float
    x2: float
    y2: float
    arrows: list[ArrowSpec]  # anchored at the segment midpoint


@dataclass
class CircleTrace:
    color: str
    dash: str
    points: list[tuple[float, float]]  # data coordinates, before pixel rounding


@dataclass
class CirclesGlyph:
    cx: float
    cy: float
    radius: float
    traces: list[CircleTrace]


@dataclass
class Scene:
    width: int = 900
    height: int = 600
    feature_styles: dict[str, tuple[str, str]] = field(default_factory=dict)
    points: list[ScatterPoint] = field(default_factory=list)
    clocks: list[ClockGlyph] = field(default_factory=list)
    segments: list[SegmentGlyph] = field(default_factory=list)
    circles: list[CirclesGlyph] = field(default_factory=list)
    legend: list[tuple[str, str, str]] = field(default_factory=list)

    def to_svg(self) -> str:
        return _emit(self)


def _style_for(scene: Scene, feature: str) -> tuple[str, str]:
    if feature not in scene.feature_styles:
        i = len(scene.feature_styles)
        scene.feature_styles[feature] = (
            PALETTE[i % len(PALETTE)],
            DASHES[(i // len(PALETTE)) % len(DASHES)],
        )
    return scene.feature_styles[feature]


def _add_legend(scene: Scene, label: str, color: str, dash: str = "") -> None:
    entry = (label, color, dash)
    if entry not in scene.legend:
        scene.legend.append(entry)


def render_scatter(dataset: Dataset, grouping: GroupingResult | None = None, *, canvas=(900, 600)) -> Scene:
    """Scene with one marker per embedded point, colored by group when given."""
    scene = Scene(width=int(canvas[0]), height=int(canvas[1]))
    for name in dataset.feature_names:
        _style_for(scene, name)
    if grouping is None:
        for row in dataset.Y:
            scene.points.append(ScatterPoint(float(row[0]), float(row[1]), PALETTE[0]))
        return scene
    colors = {g.id: PALETTE[g.id % len(PALETTE)] for g in grouping.groups}
    for g in grouping.groups:
        _add_legend(scene, g.name, colors[g.id])
    if bool((grouping.labels == NOISE).any()):
        _add_legend(scene, "noise", NOISE_COLOR)
    for i, row in enumerate(dataset.Y):
        gid = int(grouping.labels[i])
        color = NOISE_COLOR if gid == NOISE else colors[gid]
        scene.points.append(ScatterPoint(float(row[0]), float(row[1]), color))
    return scene


def render_clock(scene: Scene, clock: Clock, *, clock_scale: float = 1.0) -> Scene:
    """Add a clock glyph: circle, arrows scaled to the longest one, rim labels."""
    radius = clock.scale * clock_scale
    if radius <= 0:
        raise ComputationError("clock radius must be positive")
    arrows = []
    if clock.arrows:
        top = max(a.magnitude for a in clock.arrows)
        for a in clock.arrows:
            color, dash = _style_for(scene, a.feature)
            _add_legend(scene, a.feature, color, dash)
            arrows.append(
                ArrowSpec(
                    a.angle_deg,
                    radius * (a.magnitude / top if top > 0 else 0.0),
                    color,
                    dash,
                    f"{a.magnitude:.2f}",
                )
            )
    caption = None if arrows else "no significant features"
    scene.clocks.append(ClockGlyph(clock.anchor[0], clock.anchor[1], radius, arrows, caption))
    return scene


def render_intergroup(scene: Scene, clocks: list[IntergroupClock]) -> Scene:
    """Add one center-to-center segment per clock, with arrows at the midpoint."""
    for clock in clocks:
        (xa, ya), (xb, yb) = clock.centers
        half = 0.5 * math.hypot(xb - xa, yb - ya)
        arrows = []
        if clock.arrows:
            top = max(a.magnitude for a in clock.arrows)
            for a in clock.arrows:
                color, dash = _style_for(scene, a.feature)
                _add_legend(scene, a.feature, color, dash)
                length = 0.85 * half * (a.magnitude / top if top > 0 else 0.0)
                arrows.append(
                    ArrowSpec(a.angle_deg, length, color, dash, f"{a.magnitude:.2f}")
                )
        scene.segments.append(SegmentGlyph(xa, ya, xb, yb, arrows))
    return scene


def render_circles(scene: Scene, clock: Clock, *, clock_scale: float = 1.0) -> Scene:
    """Add the full-sweep view: one closed coefficient trace per drawn feature.

    Samples cover [0, 180); the sweep at theta+180 lands on the same 2D point
    (the coefficient flips sign exactly as the direction flips), so the loop
    closes by returning to the first vertex. Only features that survived
    significance filtering (the clock's arrows) are drawn.
    """
    if clock.circles is None:
        raise ComputationError("clock carries no sweep samples; rebuild with circles on")
    radius = clock.scale * clock_scale
    cx, cy = clock.anchor
    drawn = [a.feature for a in clock.arrows if a.feature in clock.circles]
    peak = 0.0
    for feature in drawn:
        for _angle, coef in clock.circles[feature]:
            peak = max(peak, abs(coef))
    scale = radius / peak if peak > 0 else 1.0
    traces = []
    for feature in drawn:
        color, dash = _style_for(scene, feature)
        _add_legend(scene, feature, color, dash)
        loop = []
        for angle, coef in clock.circles[feature]:
            ux, uy = unit_vector(angle)
            loop.append((scale * coef * ux, scale * coef * uy))
        loop.append(loop[0])
        traces.append(CircleTrace(color, dash, [(cx + px, cy + py) for px, py in loop]))
    scene.circles.append(CirclesGlyph(cx, cy, radius, traces))
    return scene


def _fmt(value: float) -> str:
    out = f"{value:.2f}"
    return "0.00" if out == "-0.00" else out


def _data_bounds(scene: Scene) -> tuple[float, float, float, float]:
    xs: list[float] = []
    ys: list[float] = []
    for p in scene.points:
        xs.append(p.x)
        ys.append(p.y)
    for c in scene.clocks:
        xs.extend((c.cx - c.radius, c.cx + c.radius))
        ys.extend((c.cy - c.radius, c.cy + c.radius))
    for s in scene.segments:
        xs.extend((s.x1, s.x2))
        ys.extend((s.y1, s.y2))
    for g in scene.circles:
        xs.extend((g.cx - g.radius, g.cx + g.radius))
        ys.extend((g.cy - g.radius, g.cy + g.radius))
        for t in g.traces:
            xs.extend(p[0] for p in t.points)
            ys.extend(p[1] for p in t.points)
    if not xs:
        return 0.0, 0.0, 1.0, 1.0
    return min(xs), min(ys), max(xs), max(ys)


def _nudged_angles(arrows: list[ArrowSpec]) -> list[float]:
    """Deterministic label angles: push overlaps apart in 12-degree steps."""
    used: list[float] = []
    out = []
    for arrow in arrows:
        angle = arrow.angle_deg % 360.0
        for _ in range(31):
            clash = any(
                min(abs(angle - u), 360.0 - abs(angle - u)) < _ANNOTATION_STEP
                for u in used
            )
            if not clash:
                break
            angle = (angle + _ANNOTATION_STEP) % 360.0
        used.append(angle)
        out.append(angle)
    return out


def _emit(scene: Scene) -> str:
    xmin, ymin, xmax, ymax = _data_bounds(scene)
    span_x = xmax - xmin if xmax > xmin else 1.0
    span_y = ymax - ymin if ymax > ymin else 1.0
    avail_w = scene.width - 2 * _MARGIN
    avail_h = scene.height - 2 * _MARGIN
    s = min(avail_w / span_x, avail_h / span_y)
    ox = _MARGIN + (avail_w - s * span_x) / 2.0
    oy = _MARGIN + (avail_h - s * span_y) / 2.0

    def tx(x: float) -> float:
        return ox + s * (x - xmin)

    def ty(y: float) -> float:
        return scene.height - (oy + s * (y - ymin))

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{scene.width}" '
        f'height="{scene.height}" viewBox="0 0 {scene.width} {scene.height}">',
        f'<rect x="0" y="0" width="{scene.width}" height="{scene.height}" fill="#ffffff"/>',
    ]

    for p in scene.points:
        parts.append(
            f'<circle cx="{_fmt(tx(p.x))}" cy="{_fmt(ty(p.y))}" r="3" '
            f'fill="{p.color}" fill-opacity="0.65"/>'
        )

    for seg in scene.segments:
        parts.append(
            f'<line x1="{_fmt(tx(seg.x1))}" y1="{_fmt(ty(seg.y1))}" '
            f'x2="{_fmt(tx(seg.x2))}" y2="{_fmt(ty(seg.y2))}" '
            f'stroke="#444444" stroke-width="1.5" stroke-dasharray="4,3"/>'
        )
        for end in ((seg.x1, seg.y1), (seg.x2, seg.y2)):
            parts.append(
                f'<circle cx="{_fmt(tx(end[0]))}" cy="{_fmt(ty(end[1]))}" r="4" '
                f'fill="#444444"/>'
            )
        mx = (seg.x1 + seg.x2) / 2.0
        my = (seg.y1 + seg.y2) / 2.0
        _emit_arrows(parts, seg.arrows, mx, my, tx, ty, s)

    for glyph in scene.clocks:
        parts.append(
            f'<circle cx="{_fmt(tx(glyph.cx))}" cy="{_fmt(ty(glyph.cy))}" '
            f'r="{_fmt(s * glyph.radius)}" fill="none" stroke="#444444" '
            f'stroke-width="1.5"/>'
        )
        if glyph.caption:
            parts.append(
                f'<text x="{_fmt(tx(glyph.cx))}" y="{_fmt(ty(glyph.cy) + s * glyph.radius + 16)}" '
                f'font-family="sans-serif" font-size="12" text-anchor="middle" '
                f'fill="#444444">{escape(glyph.caption)}</text>'
            )
        _emit_arrows(
            parts, glyph.arrows, glyph.cx, glyph.cy, tx, ty, s, rim_radius=glyph.radius
        )

    for g in scene.circles:
        parts.append(
            f'<circle cx="{_fmt(tx(g.cx))}" cy="{_fmt(ty(g.cy))}" '
            f'r="{_fmt(s * g.radius)}" fill="none" stroke="#bbbbbb" '
            f'stroke-width="1"/>'
        )
        for trace in g.traces:
            coords = " ".join(f"{_fmt(tx(x))},{_fmt(ty(y))}" for x, y in trace.points)
            dash = f' stroke-dasharray="{trace.dash}"' if trace.dash else ""
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{trace.color}" '
                f'stroke-width="1.5"{dash}/>'
            )

    x0 = scene.width - 160
    y0 = 24
    for i, (label, color, dash) in enumerate(scene.legend):
        y = y0 + 18 * i
        parts.append(
            f'<rect x="{x0}" y="{y - 9}" width="10" height="10" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{x0 + 16}" y="{y}" font-family="sans-serif" font-size="12" '
            f'fill="#222222">{escape(label)}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _emit_arrows(parts, arrows, cx, cy, tx, ty, s, *, rim_radius=None):
    label_angles = _nudged_angles(arrows)
    for arrow, label_angle in zip(arrows, label_angles):
        ux, uy = unit_vector(arrow.angle_deg)
        tip_x = cx + arrow.length * ux
        tip_y = cy + arrow.length * uy
        x1, y1 = tx(cx), ty(cy)
        x2, y2 = tx(tip_x), ty(tip_y)
        dash = f' stroke-dasharray="{arrow.dash}"' if arrow.dash else ""
        parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{arrow.color}" stroke-width="2"{dash}/>'
        )
        # arrowhead in pixel space
        px_len = math.hypot(x2 - x1, y2 - y1)
        if px_len > 0:
            hx = (x2 - x1) / px_len
            hy = (y2 - y1) / px_len
            head = min(10.0, 0.3 * px_len)
            bx = x2 - head * hx
            by = y2 - head * hy
            nx, ny = -hy, hx
            parts.append(
                f'<polygon points="{_fmt(x2)},{_fmt(y2)} '
                f'{_fmt(bx + 3.5 * nx)},{_fmt(by + 3.5 * ny)} '
                f'{_fmt(bx - 3.5 * nx)},{_fmt(by - 3.5 * ny)}" '
                f'fill="{arrow.color}"/>'
            )
        if arrow.annotation:
            lux, luy = unit_vector(label_angle)
            ring = rim_radius if rim_radius is not None else arrow.length
            lx = tx(cx + ring * lux) + 14 * lux
            ly = ty(cy + ring * luy) - 14 * luy
            parts.append(
                f'<text x="{_fmt(lx)}" y="{_fmt(ly + 4)}" font-family="sans-serif" '
                f'font-size="11" text-anchor="middle" fill="{arrow.color}">'
                f'{escape(arrow.annotation)}</text>'
            )
