"""Hand-rolled SVG step plots for radius-accuracy curves.

No charting dependency: the curves are simple step functions, so a few
polylines and tick labels are all the output needs.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .metrics import PointOutcome

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 20, 60
_COLORS = ("#1f6fb4", "#d95f02", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _step_points(outcomes: list[PointOutcome], max_radius: float):
    """Breakpoints of r -> fraction(correct and radius >= r)."""
    radii = np.sort(np.array([o.radius for o in outcomes if o.correct]))
    n = len(outcomes)
    xs, ys = [0.0], [radii.size / n]
    for i, r in enumerate(radii):
        if r <= 0.0:
            continue
        acc_before = (radii.size - i) / n
        acc_after = (radii.size - i - 1) / n
        xs.extend([min(r, max_radius), min(r, max_radius)])
        ys.extend([acc_before, acc_after])
    xs.append(max_radius)
    ys.append(ys[-1])
    return xs, ys


def write_radius_accuracy_svg(curves: list[tuple[str, list[PointOutcome]]],
                              path: str | Path, max_radius: float = 2.0) -> Path:
    """Step plot of certified accuracy against radius, one curve per label."""
    path = Path(path)
    px = _W - _ML - _MR
    py = _H - _MT - _MB

    def sx(x: float) -> float:
        return _ML + px * (x / max_radius)

    def sy(y: float) -> float:
        return _MT + py * (1.0 - y)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{px}" height="{py}" fill="none" '
        'stroke="black" stroke-width="1"/>',
    ]
    n_xticks = 8
    for i in range(n_xticks + 1):
        x = max_radius * i / n_xticks
        parts.append(f'<line x1="{sx(x):.1f}" y1="{_MT + py}" x2="{sx(x):.1f}" '
                     f'y2="{_MT + py + 5}" stroke="black"/>')
        parts.append(f'<text x="{sx(x):.1f}" y="{_MT + py + 20}" font-size="12" '
                     f'text-anchor="middle">{x:.2f}</text>')
    for i in range(6):
        y = i / 5.0
        parts.append(f'<line x1="{_ML - 5}" y1="{sy(y):.1f}" x2="{_ML}" '
                     f'y2="{sy(y):.1f}" stroke="black"/>')
        parts.append(f'<text x="{_ML - 10}" y="{sy(y) + 4:.1f}" font-size="12" '
                     f'text-anchor="end">{y:.1f}</text>')
    parts.append(f'<text x="{_ML + px / 2:.1f}" y="{_H - 15}" font-size="14" '
                 'text-anchor="middle">radius</text>')
    parts.append(f'<text x="18" y="{_MT + py / 2:.1f}" font-size="14" text-anchor="middle" '
                 f'transform="rotate(-90 18 {_MT + py / 2:.1f})">accuracy</text>')

    for ci, (label, outcomes) in enumerate(curves):
        xs, ys = _step_points(outcomes, max_radius)
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        color = _COLORS[ci % len(_COLORS)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     'stroke-width="1.8"/>')
        parts.append(f'<text x="{_ML + px - 8}" y="{_MT + 18 + 16 * ci}" font-size="12" '
                     f'text-anchor="end" fill="{color}">{label}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")
    return path
