"""Minimal SVG rendering of a tiling with optional overlays."""

from typing import Iterable, Optional

import numpy as np

from .polyomino import Tiling


def _poly_path(poly: np.ndarray, tx) -> str:
    pts = " ".join(f"{x:.4f},{y:.4f}" for x, y in (tx(p) for p in poly))
    return f'<polygon points="{pts}"/>'


def render(tiling: Tiling, view_half: float = 6.0, size: int = 600,
           highlight: Iterable[int] = (), path: Optional[Iterable[int]] = None,
           boxes: Iterable = ()) -> str:
    """SVG of the cells meeting [-view_half, view_half]^2.

    ``highlight`` fills the given generators' cells, ``path`` draws a
    polyline through generators and ``boxes`` outlines unit lattice boxes.
    """
    scale = size / (2 * view_half)

    def tx(p):
        return ((p[0] + view_half) * scale, (view_half - p[1]) * scale)

    xy = tiling.xy
    near = np.flatnonzero(np.all(np.abs(xy) <= view_half + 2.0, axis=1))
    hl = set(highlight)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    out.append('<g fill="none" stroke="#999" stroke-width="0.8">')
    filled = []
    for v in near.tolist():
        poly = tiling.cells[v].polygon
        (filled if v in hl else out).append(_poly_path(poly, tx))
    out.append("</g>")
    if filled:
        out.append('<g fill="#f4b942" fill-opacity="0.6" stroke="#999" stroke-width="0.8">')
        out.extend(filled)
        out.append("</g>")
    if boxes:
        out.append('<g fill="none" stroke="#2a6fdb" stroke-width="1.2">')
        for z in boxes:
            x0, y0 = tx((z[0] - 0.5, z[1] + 0.5))
            out.append(f'<rect x="{x0:.4f}" y="{y0:.4f}" width="{scale:.4f}" height="{scale:.4f}"/>')
        out.append("</g>")
    out.append('<g fill="black">')
    for v in near.tolist():
        x, y = tx(xy[v])
        out.append(f'<circle cx="{x:.4f}" cy="{y:.4f}" r="1.6"/>')
    out.append("</g>")
    if path:
        pts = " ".join(f"{x:.4f},{y:.4f}" for x, y in (tx(xy[v]) for v in path))
        out.append(f'<polyline points="{pts}" fill="none" stroke="#c0392b" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
