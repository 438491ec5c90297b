"""Standalone SVG line charts, rendered without plotting dependencies.

Output is deterministic text for fixed input (no timestamps, stable float
formatting), so chart files can be byte-compared across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)


class ChartDataError(ValueError):
    pass


@dataclass(frozen=True)
class Series:
    name: str
    xs: Sequence[float]
    ys: Sequence[float]
    # Optional (low, high) envelope drawn as a translucent band.
    band: tuple[Sequence[float], Sequence[float]] | None = None


@dataclass(frozen=True)
class Axes:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    width: int = 640
    height: int = 420


def _check_finite(name: str, label: str, values: Sequence[float]) -> None:
    for i, v in enumerate(values):
        if not math.isfinite(v):
            raise ChartDataError(f"series {name!r}: non-finite {label}[{i}] = {v!r}")


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _fmt_tick(v: float) -> str:
    return f"{v:g}"


def render_svg(series: Sequence[Series], axes: Axes = Axes()) -> str:
    """Render line series (with optional min/max bands) to standalone SVG."""
    if not series:
        raise ChartDataError("at least one series is required")
    for s in series:
        if len(s.xs) != len(s.ys) or not s.xs:
            raise ChartDataError(f"series {s.name!r}: xs and ys must be equal nonzero length")
        _check_finite(s.name, "x", s.xs)
        _check_finite(s.name, "y", s.ys)
        if s.band is not None:
            lo, hi = s.band
            if len(lo) != len(s.xs) or len(hi) != len(s.xs):
                raise ChartDataError(f"series {s.name!r}: band length mismatch")
            _check_finite(s.name, "band-low", lo)
            _check_finite(s.name, "band-high", hi)

    xs_all = [x for s in series for x in s.xs]
    ys_all = [y for s in series for y in s.ys]
    for s in series:
        if s.band is not None:
            ys_all.extend(s.band[0])
            ys_all.extend(s.band[1])
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad_y = 0.05 * (y_hi - y_lo)
    y_lo -= pad_y
    y_hi += pad_y

    margin_l, margin_r, margin_t, margin_b = 58, 14, 30, 44
    plot_w = axes.width - margin_l - margin_r
    plot_h = axes.height - margin_t - margin_b

    def sx(x: float) -> float:
        return margin_l + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return margin_t + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{axes.width}" '
        f'height="{axes.height}" viewBox="0 0 {axes.width} {axes.height}">'
    )
    out.append('<rect width="100%" height="100%" fill="white"/>')
    if axes.title:
        out.append(
            f'<text x="{axes.width / 2:.0f}" y="18" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{_escape(axes.title)}</text>'
        )
    # gridlines and ticks
    for t in _nice_ticks(x_lo, x_hi):
        px = sx(t)
        out.append(
            f'<line x1="{_fmt(px)}" y1="{margin_t}" x2="{_fmt(px)}" '
            f'y2="{margin_t + plot_h}" stroke="#e0e0e0" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(px)}" y="{margin_t + plot_h + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt_tick(t)}</text>'
        )
    for t in _nice_ticks(y_lo, y_hi):
        py = sy(t)
        out.append(
            f'<line x1="{margin_l}" y1="{_fmt(py)}" x2="{margin_l + plot_w}" '
            f'y2="{_fmt(py)}" stroke="#e0e0e0" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{margin_l - 6}" y="{_fmt(py + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt_tick(t)}</text>'
        )
    # axes frame
    out.append(
        f'<rect x="{margin_l}" y="{margin_t}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#404040" stroke-width="1"/>'
    )
    if axes.xlabel:
        out.append(
            f'<text x="{margin_l + plot_w / 2:.0f}" y="{axes.height - 8}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">'
            f"{_escape(axes.xlabel)}</text>"
        )
    if axes.ylabel:
        cy = margin_t + plot_h / 2
        out.append(
            f'<text x="14" y="{cy:.0f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 14 {cy:.0f})">{_escape(axes.ylabel)}</text>'
        )
    # bands first so lines draw on top
    for i, s in enumerate(series):
        if s.band is None:
            continue
        color = PALETTE[i % len(PALETTE)]
        lo, hi = s.band
        pts = [f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(s.xs, hi)]
        pts += [
            f"{_fmt(sx(x))},{_fmt(sy(y))}"
            for x, y in zip(reversed(list(s.xs)), reversed(list(lo)))
        ]
        out.append(
            f'<polygon points="{" ".join(pts)}" fill="{color}" fill-opacity="0.15" '
            f'stroke="none"/>'
        )
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(s.xs, s.ys))
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
    # legend, top-right inside the plot
    for i, s in enumerate(series):
        lx = margin_l + plot_w - 150
        ly = margin_t + 14 + 16 * i
        color = PALETTE[i % len(PALETTE)]
        out.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
            f'font-size="11">{_escape(s.name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
