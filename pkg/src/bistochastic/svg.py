"""Minimal deterministic SVG quiver plots for planar gradient fields."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .errors import InputError, UnsupportedDimensionError

__all__ = ["emit_quiver_svg", "quiver_svg"]

WIDTH = 600.0
MARGIN = 20.0
ARROW_FRACTION = 0.03


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def quiver_svg(points, field, title: str = "") -> str:
    """Render arrows ``field[i]`` anchored at ``points[i]`` as SVG 1.1 text.

    Arrow lengths are scaled so that the 95th-percentile field magnitude
    spans 3% of the canvas width.
    """
    P = np.asarray(points, dtype=float)
    F = np.asarray(field, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2 or F.shape != P.shape:
        dim = P.shape[1] if P.ndim == 2 else P.ndim
        raise UnsupportedDimensionError(f"quiver plots need planar data, got d={dim}")
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(F))):
        raise InputError("points and field must be finite")

    lo = P.min(axis=0)
    span = P.max(axis=0) - lo
    flat = span == 0
    lo = np.where(flat, lo - 0.5, lo)
    span = np.where(flat, 1.0, span)
    scale = (WIDTH - 2 * MARGIN) / span[0]
    height = span[1] * scale + 2 * MARGIN

    def to_canvas(xy):
        return MARGIN + (xy[..., 0] - lo[0]) * scale, height - MARGIN - (xy[..., 1] - lo[1]) * scale

    lengths = np.linalg.norm(F, axis=1)
    ref = float(np.percentile(lengths, 95)) if lengths.size else 0.0
    arrow_scale = ARROW_FRACTION * WIDTH / ref if ref > 0 else 0.0

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_fmt(WIDTH)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(WIDTH)} {_fmt(height)}">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append('<rect width="100%" height="100%" fill="white"/>')
    cx, cy = to_canvas(P)
    out.append('<g fill="black">')
    for x, y in zip(cx, cy):
        out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="1.2"/>')
    out.append("</g>")
    out.append('<g stroke="steelblue" stroke-width="1" fill="steelblue">')
    for x, y, (fx, fy), length in zip(cx, cy, F, lengths):
        if length == 0 or arrow_scale == 0:
            continue
        dx, dy = fx * arrow_scale, -fy * arrow_scale
        tx, ty = x + dx, y + dy
        ux, uy = dx / np.hypot(dx, dy), dy / np.hypot(dx, dy)
        head = min(4.0, 0.4 * np.hypot(dx, dy))
        left = (tx - head * (ux - 0.5 * uy), ty - head * (uy + 0.5 * ux))
        right = (tx - head * (ux + 0.5 * uy), ty - head * (uy - 0.5 * ux))
        out.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(y)}" x2="{_fmt(tx)}" y2="{_fmt(ty)}"/>'
        )
        out.append(
            f'<polygon points="{_fmt(tx)},{_fmt(ty)} {_fmt(left[0])},{_fmt(left[1])} '
            f'{_fmt(right[0])},{_fmt(right[1])}"/>'
        )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_quiver_svg(points, field, path, title: str = "") -> None:
    text = quiver_svg(points, field, title)
    with open(path, "w") as fh:
        fh.write(text)
