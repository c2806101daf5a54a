"""SVG rendering of 2-D grids and labelings.

Unit equilateral triangle in a 1000 x 866 viewport: corner 0 bottom-left,
corner 1 bottom-right, corner 2 top.  Cells are outlined; vertices carry
their labels when a labeling is supplied; fully labeled cells are shaded.
"""

import numpy as np

from .errors import UnsupportedDimension
from .sperner import fully_labeled_indices

_W, _H = 1000.0, 866.0
_CORNERS = np.array([[0.0, _H], [_W, _H], [_W / 2.0, 0.0]])
_LABEL_COLORS = ("#c0392b", "#1a6fb5", "#1f8a4c")


def _to_xy(coords):
    coords = np.asarray(coords, dtype=np.float64)
    return coords @ _CORNERS


def render_svg(grid, labeling=None):
    """SVG text for a 2-D grid, with label annotations when given."""
    if grid.n != 2:
        raise UnsupportedDimension(f"rendering needs n=2, got n={grid.n}")
    emb = grid.embedded_vertices()
    xy = _to_xy(emb)
    shaded = set()
    if labeling is not None:
        shaded = set(int(i) for i in fully_labeled_indices(grid, labeling))

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="-40 -40 {_W + 80:.0f} {_H + 80:.0f}">',
        f'<rect x="-40" y="-40" width="{_W + 80:.0f}" height="{_H + 80:.0f}" '
        'fill="white"/>',
    ]
    for ci in range(grid.num_cells):
        pts = xy[grid.cells[ci]]
        path = " ".join(f"{p[0]:.2f},{p[1]:.2f}" for p in pts)
        fill = "#f5d78e" if ci in shaded else "none"
        parts.append(
            f'<polygon points="{path}" fill="{fill}" stroke="#444" '
            'stroke-width="1.5"/>'
        )
    radius = max(4.0, 24.0 / grid.m)
    for vi in range(grid.num_vertices):
        x, y = xy[vi]
        if labeling is None:
            parts.append(
                f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius:.1f}" '
                'fill="#444"/>'
            )
            continue
        label = int(labeling.labels[vi])
        color = _LABEL_COLORS[label % len(_LABEL_COLORS)]
        parts.append(
            f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius + 6.0:.1f}" '
            f'fill="white" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{y + 5.0:.2f}" text-anchor="middle" '
            f'font-size="{radius + 10.0:.0f}" font-family="sans-serif" '
            f'fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
