"""Static SVG line charts for convergence curves.

Hand-rolled SVG 1.1 so chart bytes are a pure function of the input
data: fixed layout, fixed palette, fixed numeric formatting.  The y
axis is log-scaled since squared-error curves span decades.
"""

import math

WIDTH = 760
HEIGHT = 500
MARGIN_LEFT = 72
MARGIN_RIGHT = 24
MARGIN_TOP = 44
MARGIN_BOTTOM = 56
MAX_POINTS = 1500
FLOOR = 1e-300

PALETTE = ["#1f6fb4", "#d1342f", "#2e8540", "#8252c7", "#c77c1a", "#3b3b3b"]


def _fmt(v):
    return f"{v:.2f}"


def _x_ticks(n_points):
    span = max(n_points - 1, 1)
    step = 10 ** max(math.floor(math.log10(span / 4)), 0) if span >= 4 else 1
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= 6:
            step *= mult
            break
    return list(range(0, span + 1, int(step)))


def render_curves_svg(curves, title="", xlabel="iteration", ylabel="squared error"):
    """Render labelled curves to an SVG document string.

    ``curves`` is a list of ``(label, values)`` pairs; values are
    plotted against their index on a log y axis.  Non-positive values
    are clamped to the smallest positive value in the data.
    """
    if not curves:
        raise ValueError("no curves to render")
    n_points = max(len(v) for _, v in curves)
    positive = [x for _, v in curves for x in v if x > FLOOR]
    lo = min(positive) if positive else 1e-16
    hi = max(positive) if positive else 1.0
    dec_lo = math.floor(math.log10(lo))
    dec_hi = math.ceil(math.log10(hi))
    if dec_hi <= dec_lo:
        dec_hi = dec_lo + 1

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def x_px(k):
        return MARGIN_LEFT + plot_w * (k / max(n_points - 1, 1))

    def y_px(value):
        logv = math.log10(max(value, 10.0**dec_lo))
        frac = (logv - dec_lo) / (dec_hi - dec_lo)
        return MARGIN_TOP + plot_h * (1.0 - min(max(frac, 0.0), 1.0))

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]

    step_dec = max(1, math.ceil((dec_hi - dec_lo) / 8))
    for dec in range(dec_lo, dec_hi + 1, step_dec):
        y = y_px(10.0**dec)
        out.append(f'<line x1="{MARGIN_LEFT}" y1="{_fmt(y)}" x2="{WIDTH - MARGIN_RIGHT}" '
                   f'y2="{_fmt(y)}" stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{MARGIN_LEFT - 6}" y="{_fmt(y + 4)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">1e{dec}</text>')
    for k in _x_ticks(n_points):
        x = x_px(k)
        out.append(f'<line x1="{_fmt(x)}" y1="{HEIGHT - MARGIN_BOTTOM}" x2="{_fmt(x)}" '
                   f'y2="{HEIGHT - MARGIN_BOTTOM + 5}" stroke="#333333" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(x)}" y="{HEIGHT - MARGIN_BOTTOM + 18}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{k}</text>')

    out.append(f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" '
               f'height="{plot_h}" fill="none" stroke="#333333" stroke-width="1"/>')
    out.append(f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">{xlabel}</text>')
    out.append(f'<text x="18" y="{HEIGHT // 2}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13" '
               f'transform="rotate(-90 18 {HEIGHT // 2})">{ylabel}</text>')

    for idx, (label, values) in enumerate(curves):
        color = PALETTE[idx % len(PALETTE)]
        stride = max(1, math.ceil(len(values) / MAX_POINTS))
        ks = list(range(0, len(values), stride))
        if ks[-1] != len(values) - 1:
            ks.append(len(values) - 1)
        pts = " ".join(f"{_fmt(x_px(k))},{_fmt(y_px(values[k]))}" for k in ks)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{pts}"/>')
        ly = MARGIN_TOP + 16 + 16 * idx
        lx = WIDTH - MARGIN_RIGHT - 180
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
                   f'font-size="12">{label}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
