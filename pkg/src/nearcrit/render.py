"""SVG rendering of colorings, interfaces and regions (documentation output)."""

from __future__ import annotations

import math

from .lattice import (SQRT3, Annulus, Disc, Rect, SubTriangle, TriangleDomain)

RENDER_CAP = 2048

_HEX_ANGLES = [math.radians(30 + 60 * k) for k in range(6)]


def _fmt(v: float) -> str:
    return f"{v:.5f}"


def render_svg(domain: TriangleDomain, coloring=None, path=None, regions=None,
               out: str | None = None, size: int = 720) -> str:
    """Render hex cells (filled by color), the interface, and region outlines.

    Coordinates are the rescaled unit-triangle embedding; the SVG y axis is
    flipped so the apex points up.  Returns the SVG text; writes it to
    `out` when given.  Domains above the render cap are rejected.
    """
    n = domain.n
    if n > RENDER_CAP:
        raise ValueError(f"n={n} exceeds render cap {RENDER_CAP}")
    pad = 0.06
    top = SQRT3 / 2
    width, height = 1 + 2 * pad, top + 2 * pad

    def tx(x):
        return (x + 0.5 + pad) / width * size

    def ty(y):
        return (top + pad - y) / width * size

    rc = domain.rescaled_centers
    rad = 1.0 / (SQRT3 * n)
    black = coloring.black_array() if coloring is not None else None
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
             f'width="{size}" height="{int(size * height / width)}">']
    for i in range(domain.n_sites):
        cx, cy = rc[i]
        pts = " ".join(f"{_fmt(tx(cx + rad * math.cos(a)))},"
                       f"{_fmt(ty(cy + rad * math.sin(a)))}" for a in _HEX_ANGLES)
        bc = domain.boundary_class[i]
        if bc == 1:
            fill = "#4a4a4a"
        elif bc == 2:
            fill = "#f2f2f2"
        elif black is not None and black[i]:
            fill = "#111111"
        elif black is not None:
            fill = "#ffffff"
        else:
            fill = "#dddddd"
        lines.append(f'<polygon points="{pts}" fill="{fill}" '
                     f'stroke="#999999" stroke-width="0.4"/>')
    if path is not None:
        pos = path.vertex_positions()
        pts = " ".join(f"{_fmt(tx(x))},{_fmt(ty(y))}" for x, y in pos)
        lines.append(f'<polyline points="{pts}" fill="none" stroke="#d62728" '
                     f'stroke-width="1.4"/>')
    for region in regions or ():
        lines.append(_region_svg(region, tx, ty, size / width))
    lines.append("</svg>")
    text = "\n".join(lines)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    return text


def _region_svg(region, tx, ty, scale) -> str:
    style = 'fill="none" stroke="#1f77b4" stroke-width="1.2"'
    if isinstance(region, Disc):
        return (f'<circle cx="{_fmt(tx(region.cx))}" cy="{_fmt(ty(region.cy))}" '
                f'r="{_fmt(region.radius * scale)}" {style}/>')
    if isinstance(region, Annulus):
        return (f'<circle cx="{_fmt(tx(region.cx))}" cy="{_fmt(ty(region.cy))}" '
                f'r="{_fmt(region.r_inner * scale)}" {style}/>'
                f'<circle cx="{_fmt(tx(region.cx))}" cy="{_fmt(ty(region.cy))}" '
                f'r="{_fmt(region.r_outer * scale)}" {style}/>')
    if isinstance(region, Rect):
        return (f'<rect x="{_fmt(tx(region.x_lo))}" y="{_fmt(ty(region.y_hi))}" '
                f'width="{_fmt((region.x_hi - region.x_lo) * scale)}" '
                f'height="{_fmt((region.y_hi - region.y_lo) * scale)}" {style}/>')
    if isinstance(region, SubTriangle):
        x0, y0, s = region.corner_x, region.corner_y, region.side
        pts = (f"{_fmt(tx(x0))},{_fmt(ty(y0))} {_fmt(tx(x0 + s))},{_fmt(ty(y0))} "
               f"{_fmt(tx(x0 + s / 2))},{_fmt(ty(y0 + s * SQRT3 / 2))}")
        return f'<polygon points="{pts}" {style}/>'
    raise ValueError(f"unknown region {region!r}")
