"""Minimal SVG line plots for trend series (no plotting dependency)."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

from .trends import TrendSeries

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

# support (users) -> (dash pattern, opacity)
STYLE_CUTOFFS = ((50, "", 1.0), (10, "6,3", 0.7), (0, "2,3", 0.4))

W, H = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 60, 150, 40, 50


def _style(support: int) -> tuple[str, float]:
    for cutoff, dash, alpha in STYLE_CUTOFFS:
        if support >= cutoff:
            return dash, alpha
    return STYLE_CUTOFFS[-1][1:]


def _x(k: float) -> float:
    return LEFT + k * (W - LEFT - RIGHT)


def _y(v: float, lo: float, hi: float) -> float:
    span = hi - lo or 1.0
    return TOP + (1.0 - (v - lo) / span) * (H - TOP - BOTTOM)


def line_plot(series: Sequence[TrendSeries], title: str, y_label: str, y_range=(0.0, 1.0)) -> str:
    """Render trends against k.  Segment style encodes the user support at its right end."""
    lo, hi = y_range
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
    ]
    x0, x1 = _x(0.0), _x(1.0)
    y0, y1 = _y(lo, lo, hi), _y(hi, lo, hi)
    out.append(f'<line x1="{x0:.1f}" y1="{y0:.1f}" x2="{x1:.1f}" y2="{y0:.1f}" stroke="black"/>')
    out.append(f'<line x1="{x0:.1f}" y1="{y0:.1f}" x2="{x0:.1f}" y2="{y1:.1f}" stroke="black"/>')
    for i in range(6):
        k = i / 5
        out.append(
            f'<text x="{_x(k):.1f}" y="{y0 + 18:.1f}" text-anchor="middle" font-family="sans-serif" font-size="11">{k:.1f}</text>'
        )
        v = lo + (hi - lo) * i / 5
        out.append(
            f'<text x="{x0 - 6:.1f}" y="{_y(v, lo, hi) + 4:.1f}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.2f}</text>'
        )
    out.append(
        f'<text x="{(x0 + x1) / 2:.1f}" y="{H - 10}" text-anchor="middle" font-family="sans-serif" font-size="12">coordination threshold k</text>'
    )
    out.append(
        f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{escape(y_label)}</text>'
    )
    for idx, s in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        pts = list(zip(s.ks, s.values, s.users))
        for (ka, va, _), (kb, vb, nb) in zip(pts, pts[1:]):
            if va is None or vb is None:
                continue
            dash, alpha = _style(nb)
            dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
            out.append(
                f'<line x1="{_x(ka):.1f}" y1="{_y(va, lo, hi):.1f}" x2="{_x(kb):.1f}" y2="{_y(vb, lo, hi):.1f}" '
                f'stroke="{color}" stroke-width="2" stroke-opacity="{alpha}"{dash_attr}/>'
            )
        for k, v, n in pts:
            if v is not None:
                _, alpha = _style(n)
                out.append(f'<circle cx="{_x(k):.1f}" cy="{_y(v, lo, hi):.1f}" r="2.5" fill="{color}" fill-opacity="{alpha}"/>')
        ly = TOP + 10 + idx * 18
        lx = W - RIGHT + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="{lx + 26}" y="{ly + 4}" font-family="sans-serif" font-size="11">{escape(str(s.community))}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_plot(path, series, title, y_label, y_range=(0.0, 1.0)) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(line_plot(series, title, y_label, y_range))
