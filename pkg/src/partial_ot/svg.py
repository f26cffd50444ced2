"""Very small SVG line-plot emitter (axes + polylines, no dependencies).

Plot output is a reproduction aid, not a charting product; only what the
sweep command needs is implemented.
"""

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _scale(vs, lo, hi, out_lo, out_hi):
    span = hi - lo or 1.0
    return [out_lo + (v - lo) / span * (out_hi - out_lo) for v in vs]


def render_panels(panels, width=760, panel_height=240, margin=48):
    """Render stacked panels of labelled curves to an SVG string.

    panels: list of dicts {"title": str, "curves": [{"x": [...], "y": [...],
    "label": str}, ...]}.  Axis ranges are shared within a panel.
    """
    height = margin + len(panels) * (panel_height + margin)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="monospace" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for p_i, panel in enumerate(panels):
        top = margin // 2 + p_i * (panel_height + margin)
        bottom = top + panel_height
        left, right = margin, width - margin // 2
        xs = [v for c in panel["curves"] for v in c["x"]]
        ys = [v for c in panel["curves"] for v in c["y"]]
        if not xs:
            continue
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(0.0, min(ys)), max(ys) * 1.05 or 1.0
        out.append(f'<text x="{left}" y="{top - 4}">{panel["title"]}</text>')
        out.append(
            f'<rect x="{left}" y="{top}" width="{right - left}" height="{panel_height}" '
            'fill="none" stroke="#444"/>'
        )
        for val, anchor, x, y in (
            (x_lo, "start", left, bottom + 14),
            (x_hi, "end", right, bottom + 14),
            (y_hi, "end", left - 4, top + 10),
            (y_lo, "end", left - 4, bottom),
        ):
            out.append(f'<text x="{x}" y="{y}" text-anchor="{anchor}">{val:.4g}</text>')
        for c_i, curve in enumerate(panel["curves"]):
            color = _COLORS[c_i % len(_COLORS)]
            px = _scale(curve["x"], x_lo, x_hi, left, right)
            py = _scale(curve["y"], y_lo, y_hi, bottom, top)
            pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(px, py))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.4"/>')
            label = curve.get("label")
            if label:
                out.append(
                    f'<text x="{right - 100}" y="{top + 14 + 13 * c_i}" fill="{color}">{label}</text>'
                )
    out.append("</svg>")
    return "\n".join(out)


def step_curve(breaks, values):
    """x/y arrays tracing a piecewise-constant function as a step polyline."""
    xs, ys = [], []
    for lo, hi, v in zip(breaks[:-1], breaks[1:], values):
        xs.extend([lo, hi])
        ys.extend([v, v])
    return xs, ys
