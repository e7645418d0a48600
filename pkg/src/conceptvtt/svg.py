"""Tiny SVG line/band chart writer.  Enough for GP bands and uncertainty traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from html import escape
from typing import Optional, Sequence

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    base = _pow10(raw)
    step = next(m * base for m in (1, 2, 2.5, 5, 10) if m * base >= raw)
    k = math.ceil(lo / step - 1e-9)
    ticks = []
    while k * step <= hi + 1e-9 * step:
        ticks.append(round(k * step, 10))
        k += 1
    return ticks


def _pow10(x: float) -> float:
    p = 1.0
    while p > x:
        p /= 10.0
    while p * 10.0 <= x:
        p *= 10.0
    return p


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    lower: Optional[Sequence[float]] = None
    upper: Optional[Sequence[float]] = None
    color: Optional[str] = None
    dashed: bool = False
    markers: bool = False
    line: bool = True


@dataclass
class Chart:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    width: int = 640
    height: int = 400
    series: list[Series] = field(default_factory=list)
    xlim: Optional[tuple[float, float]] = None
    ylim: Optional[tuple[float, float]] = None

    margin_l, margin_r, margin_t, margin_b = 64, 150, 36, 48

    def add(self, s: Series) -> "Chart":
        if s.color is None:
            s.color = PALETTE[len(self.series) % len(PALETTE)]
        self.series.append(s)
        return self

    def _limits(self):
        xs = [v for s in self.series for v in s.x]
        ys = [v for s in self.series for arr in (s.y, s.lower, s.upper) if arr is not None for v in arr]
        x0, x1 = self.xlim or (min(xs, default=0.0), max(xs, default=1.0))
        y0, y1 = self.ylim or (min(ys, default=0.0), max(ys, default=1.0))
        if x1 == x0:
            x1 = x0 + 1.0
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        return x0, x1, y0, y1

    def render(self) -> str:
        x0, x1, y0, y1 = self._limits()
        pw = self.width - self.margin_l - self.margin_r
        ph = self.height - self.margin_t - self.margin_b

        def px(x):
            return self.margin_l + (x - x0) / (x1 - x0) * pw

        def py(y):
            return self.margin_t + (1.0 - (y - y0) / (y1 - y0)) * ph

        def pts(xs, ys):
            return " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(xs, ys))

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
               f'height="{self.height}" viewBox="0 0 {self.width} {self.height}" '
               f'font-family="sans-serif" font-size="11">',
               f'<rect width="{self.width}" height="{self.height}" fill="white"/>']
        if self.title:
            out.append(f'<text x="{self.width / 2:.1f}" y="20" text-anchor="middle" '
                       f'font-size="13">{escape(self.title)}</text>')
        # axes and ticks
        out.append(f'<rect x="{self.margin_l}" y="{self.margin_t}" width="{pw}" height="{ph}" '
                   f'fill="none" stroke="#333"/>')
        for t in nice_ticks(x0, x1):
            out.append(f'<line x1="{_fmt(px(t))}" y1="{self.margin_t + ph}" x2="{_fmt(px(t))}" '
                       f'y2="{self.margin_t + ph + 4}" stroke="#333"/>')
            out.append(f'<text x="{_fmt(px(t))}" y="{self.margin_t + ph + 16}" '
                       f'text-anchor="middle">{t:g}</text>')
        for t in nice_ticks(y0, y1):
            out.append(f'<line x1="{self.margin_l - 4}" y1="{_fmt(py(t))}" x2="{self.margin_l}" '
                       f'y2="{_fmt(py(t))}" stroke="#333"/>')
            out.append(f'<text x="{self.margin_l - 7}" y="{_fmt(py(t) + 4)}" '
                       f'text-anchor="end">{t:g}</text>')
        if self.xlabel:
            out.append(f'<text x="{self.margin_l + pw / 2:.1f}" y="{self.height - 10}" '
                       f'text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            cy = self.margin_t + ph / 2
            out.append(f'<text x="16" y="{cy:.1f}" text-anchor="middle" '
                       f'transform="rotate(-90 16 {cy:.1f})">{escape(self.ylabel)}</text>')

        for s in self.series:
            if s.lower is not None and s.upper is not None:
                poly = pts(list(s.x) + list(s.x)[::-1], list(s.upper) + list(s.lower)[::-1])
                out.append(f'<polygon points="{poly}" fill="{s.color}" fill-opacity="0.2" '
                           f'stroke="none"/>')
        for s in self.series:
            if s.line:
                dash = ' stroke-dasharray="5,3"' if s.dashed else ""
                out.append(f'<polyline points="{pts(s.x, s.y)}" fill="none" '
                           f'stroke="{s.color}" stroke-width="1.5"{dash}/>')
            if s.markers:
                out.extend(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="2.5" '
                           f'fill="{s.color}"/>' for a, b in zip(s.x, s.y))
        for i, s in enumerate(self.series):
            ly = self.margin_t + 12 + 16 * i
            lx = self.margin_l + pw + 10
            out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" '
                       f'stroke="{s.color}" stroke-width="2"/>')
            out.append(f'<text x="{lx + 24}" y="{ly}">{escape(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.render())
