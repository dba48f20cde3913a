"""Self-contained SVG line plot for the similarity curves (no plotting deps)."""

from __future__ import annotations

from pathlib import Path

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")

WIDTH, HEIGHT = 640, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 24, 24, 56


def _x(w: float, w_min: float, w_max: float) -> float:
    span = (w_max - w_min) or 1.0
    return MARGIN_L + (w - w_min) / span * (WIDTH - MARGIN_L - MARGIN_R)


def _y(v: float, v_min: float, v_max: float) -> float:
    span = (v_max - v_min) or 1.0
    return HEIGHT - MARGIN_B - (v - v_min) / span * (HEIGHT - MARGIN_T - MARGIN_B)


def write_similarity_svg(
    path: str | Path,
    grid,
    curves: dict[str, list[float]],
    title: str = "interpolation similarity",
) -> Path:
    """One polyline per system over the interpolation grid."""
    grid = [float(w) for w in grid]
    w_min, w_max = min(grid), max(grid)
    all_vals = [v for vals in curves.values() for v in vals]
    v_min = min(-0.05, min(all_vals) - 0.05)
    v_max = max(1.05, max(all_vals) + 0.05)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH/2:.1f}" y="16" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif">{title}</text>',
    ]
    # axes
    x0, y0 = _x(w_min, w_min, w_max), _y(v_min, v_min, v_max)
    x1, y1 = _x(w_max, w_min, w_max), _y(v_max, v_min, v_max)
    parts.append(
        f'<line x1="{x0:.1f}" y1="{y0:.1f}" x2="{x1:.1f}" y2="{y0:.1f}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{x0:.1f}" y1="{y0:.1f}" x2="{x0:.1f}" y2="{y1:.1f}" stroke="black"/>'
    )
    for w in grid:
        xx = _x(w, w_min, w_max)
        parts.append(
            f'<line x1="{xx:.1f}" y1="{y0:.1f}" x2="{xx:.1f}" y2="{y0+4:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{xx:.1f}" y="{y0+18:.1f}" text-anchor="middle" font-size="10" '
            f'font-family="sans-serif">{w:.1f}</text>'
        )
    ticks = 5
    for i in range(ticks + 1):
        v = v_min + (v_max - v_min) * i / ticks
        yy = _y(v, v_min, v_max)
        parts.append(
            f'<line x1="{x0-4:.1f}" y1="{yy:.1f}" x2="{x0:.1f}" y2="{yy:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x0-8:.1f}" y="{yy+3:.1f}" text-anchor="end" font-size="10" '
            f'font-family="sans-serif">{v:.2f}</text>'
        )
    parts.append(
        f'<text x="{(x0+x1)/2:.1f}" y="{HEIGHT-18}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif">w</text>'
    )
    parts.append(
        f'<text x="16" y="{(y0+y1)/2:.1f}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif" transform="rotate(-90 16 {(y0+y1)/2:.1f})">'
        f"cosine similarity</text>"
    )
    # curves + legend
    for i, (name, vals) in enumerate(sorted(curves.items())):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(
            f"{_x(w, w_min, w_max):.1f},{_y(v, v_min, v_max):.1f}"
            for w, v in zip(grid, vals)
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>'
        )
        ly = MARGIN_T + 16 + 16 * i
        parts.append(
            f'<line x1="{WIDTH-190}" y1="{ly:.1f}" x2="{WIDTH-166}" y2="{ly:.1f}" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        parts.append(
            f'<text x="{WIDTH-160}" y="{ly+4:.1f}" font-size="11" '
            f'font-family="sans-serif">{name}</text>'
        )
    parts.append("</svg>")
    out = Path(path)
    out.write_text("\n".join(parts) + "\n")
    return out
