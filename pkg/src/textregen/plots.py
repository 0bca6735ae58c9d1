"""Minimal hand-written SVG line plots.

The experiment reports need exactly one chart shape: score (y) against
masking ratio (x), one curve per ratio-swept series and one flat
horizontal line per ratio-free strategy. Writing the SVG directly keeps
the pipeline free of plotting-framework contracts and makes report
bytes deterministic.
"""

from __future__ import annotations

PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#17becf", "#e377c2", "#7f7f7f", "#bcbd22",
]

WIDTH, HEIGHT = 720, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 200, 48, 56


def _fmt(x):
    return f"{x:.6g}"


class Series:
    """One plotted line: ``points`` [(x, y), ...] for curves, or a bare
    ``level`` for a flat line spanning the x-range."""

    def __init__(self, label, points=None, level=None, dashed=False):
        if (points is None) == (level is None):
            raise ValueError("exactly one of points/level required")
        self.label = label
        self.points = sorted(points) if points is not None else None
        self.level = level
        self.dashed = dashed


def line_plot_svg(title, xlabel, ylabel, series, x_range=(0.0, 1.0), y_range=(0.0, 1.0)):
    x0, x1 = x_range
    y0, y1 = y_range
    if x1 <= x0 or y1 <= y0:
        raise ValueError("degenerate axis range")
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * plot_w

    def sy(y):
        return MARGIN_T + plot_h - (y - y0) / (y1 - y0) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{MARGIN_L + plot_w / 2}" y="24" text-anchor="middle" '
        f'font-size="16">{title}</text>',
    ]
    # axes box and ticks
    out.append(
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333" stroke-width="1"/>'
    )
    n_ticks = 5
    for i in range(n_ticks + 1):
        xv = x0 + (x1 - x0) * i / n_ticks
        yv = y0 + (y1 - y0) * i / n_ticks
        out.append(
            f'<line x1="{_fmt(sx(xv))}" y1="{MARGIN_T + plot_h}" x2="{_fmt(sx(xv))}" '
            f'y2="{MARGIN_T + plot_h + 5}" stroke="#333"/>'
        )
        out.append(
            f'<text x="{_fmt(sx(xv))}" y="{MARGIN_T + plot_h + 20}" text-anchor="middle" '
            f'font-size="11">{_fmt(xv)}</text>'
        )
        out.append(
            f'<line x1="{MARGIN_L - 5}" y1="{_fmt(sy(yv))}" x2="{MARGIN_L}" '
            f'y2="{_fmt(sy(yv))}" stroke="#333"/>'
        )
        out.append(
            f'<text x="{MARGIN_L - 9}" y="{_fmt(sy(yv) + 4)}" text-anchor="end" '
            f'font-size="11">{_fmt(yv)}</text>'
        )
        out.append(
            f'<line x1="{MARGIN_L}" y1="{_fmt(sy(yv))}" x2="{MARGIN_L + plot_w}" '
            f'y2="{_fmt(sy(yv))}" stroke="#eee"/>'
        )
    out.append(
        f'<text x="{MARGIN_L + plot_w / 2}" y="{HEIGHT - 16}" text-anchor="middle" '
        f'font-size="13">{xlabel}</text>'
    )
    out.append(
        f'<text x="18" y="{MARGIN_T + plot_h / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {MARGIN_T + plot_h / 2})">{ylabel}</text>'
    )

    legend_y = MARGIN_T + 8
    for idx, s in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        if s.level is not None:
            out.append(
                f'<line x1="{MARGIN_L}" y1="{_fmt(sy(s.level))}" '
                f'x2="{MARGIN_L + plot_w}" y2="{_fmt(sy(s.level))}" '
                f'stroke="{color}" stroke-width="2"{dash}/>'
            )
        else:
            path = " ".join(
                f"{'M' if i == 0 else 'L'}{_fmt(sx(x))},{_fmt(sy(y))}"
                for i, (x, y) in enumerate(s.points)
            )
            out.append(
                f'<path d="{path}" fill="none" stroke="{color}" stroke-width="2"{dash}/>'
            )
            for x, y in s.points:
                out.append(
                    f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="2.5" fill="{color}"/>'
                )
        lx = MARGIN_L + plot_w + 12
        out.append(
            f'<line x1="{lx}" y1="{legend_y}" x2="{lx + 22}" y2="{legend_y}" '
            f'stroke="{color}" stroke-width="2"{dash}/>'
        )
        out.append(
            f'<text x="{lx + 28}" y="{legend_y + 4}" font-size="11">{s.label}</text>'
        )
        legend_y += 18
    out.append("</svg>")
    return "\n".join(out) + "\n"
