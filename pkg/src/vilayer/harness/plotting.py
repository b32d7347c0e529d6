"""Standalone SVG line charts of normalized errors against epochs."""

import math
from xml.sax.saxutils import escape

from ..tensorio import atomic_write_text

COLORS = {"sgd": "#1f77b4", "adam": "#2ca02c", "vi": "#d62728"}
FALLBACK = ("#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

W, H = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 40, 50


def _color(name, i):
    for key, c in COLORS.items():
        if name.startswith(key):
            return c
    return FALLBACK[i % len(FALLBACK)]


def render_svg(series, title, ylabel):
    """``series`` maps a label to ``(epochs, values)``; values must be > 0
    to appear on the log axis (others are dropped)."""
    pts = {k: [(x, y) for x, y in zip(*v) if y > 0 and math.isfinite(y)] for k, v in series.items()}
    xs = [x for p in pts.values() for x, _ in p] or [0, 1]
    ys = [y for p in pts.values() for _, y in p] or [1]
    xmin, xmax = min(xs), max(xs)
    if xmax == xmin:
        xmax = xmin + 1
    lmin, lmax = math.floor(math.log10(min(ys))), math.ceil(math.log10(max(ys)))
    if lmax == lmin:
        lmax = lmin + 1
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def sx(x):
        return LEFT + pw * (x - xmin) / (xmax - xmin)

    def sy(y):
        return TOP + ph * (lmax - math.log10(y)) / (lmax - lmin)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" data-yscale="log">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<g class="axes" stroke="black" fill="none">'
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}"/>'
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}"/></g>',
    ]
    for e in range(lmin, lmax + 1):
        y = sy(10.0 ** e)
        out.append(f'<line class="ytick" x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT + pw}" y2="{y:.2f}" '
                   f'stroke="#ddd"/><text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end" '
                   f'font-size="11">1e{e}</text>')
    for i in range(6):
        x = xmin + (xmax - xmin) * i / 5
        out.append(f'<text x="{sx(x):.2f}" y="{TOP + ph + 18}" text-anchor="middle" '
                   f'font-size="11">{x:g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{H - 10}" text-anchor="middle" '
               f'font-size="12">epoch</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (name, p) in enumerate(pts.items()):
        color = _color(name, i)
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in p)
        out.append(f'<polyline data-series="{escape(name)}" fill="none" stroke="{color}" '
                   f'stroke-width="1.8" points="{coords}"/>')
        ly = TOP + 16 * i + 8
        out.append(f'<line x1="{LEFT + pw + 12}" y1="{ly}" x2="{LEFT + pw + 32}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/><text x="{LEFT + pw + 38}" y="{ly + 4}" '
                   f'font-size="12">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_traces(traces, path, column="l1_err", title=None):
    """Write one chart with a polyline per trace, errors normalized to 1 at
    epoch 0."""
    series = {name: (t.column("epoch").tolist(), t.normalized(column).tolist())
              for name, t in traces.items()}
    label = {"l1_err": "normalized averaged l1 error",
             "l2_err": "normalized averaged l2 error"}.get(column, column)
    atomic_write_text(path, render_svg(series, title or label, label))
