"""Minimal deterministic SVG 1.1 writer for the diagram and the density map."""

from __future__ import annotations

import math

import numpy as np

from .melnikov import PointKind

W, H, PAD = 720, 540, 48

_COLOURS = {
    "sn": "#222222", "hopf": "#d62728", "ns": "#ff7f0e", "rhc": "#1f77b4",
    "chc": "#2ca02c", "snp": "#9467bd",
}
_GLYPHS = {
    PointKind.B: "square", PointKind.Z: "diamond", PointKind.N: "circle",
    PointKind.K: "triangle", PointKind.H: "cross",
}


def _n(v: float) -> str:
    return f"{v:.3f}"


class _Frame:
    def __init__(self, xlim, ylim, width=W, height=H):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.w, self.h = width, height

    def __call__(self, x, y):
        px = PAD + (x - self.x0) / (self.x1 - self.x0) * (self.w - 2 * PAD)
        py = self.h - PAD - (y - self.y0) / (self.y1 - self.y0) * (self.h - 2 * PAD)
        return px, py


def _header(width, height, title):
    return [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>{title}</title>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]


def _text(x, y, s, size=12, anchor="start"):
    s = s.replace("&", "&amp;").replace("<", "&lt;")
    return (f'<text x="{_n(x)}" y="{_n(y)}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}">{s}</text>')


def _polyline(frame, xs, ys, colour, width=1.2, closed=False):
    pts = " ".join(f"{_n(a)},{_n(b)}" for a, b in (frame(x, y) for x, y in zip(xs, ys))
                   if math.isfinite(a) and math.isfinite(b))
    tag = "polygon" if closed else "polyline"
    return f'<{tag} points="{pts}" fill="none" stroke="{colour}" stroke-width="{width}"/>'


def _glyph(frame, x, y, kind, r=4.0):
    px, py = frame(x, y)
    shape = _GLYPHS[kind]
    if shape == "square":
        return f'<rect x="{_n(px - r)}" y="{_n(py - r)}" width="{_n(2 * r)}" height="{_n(2 * r)}" fill="#000000"/>'
    if shape == "circle":
        return f'<circle cx="{_n(px)}" cy="{_n(py)}" r="{_n(r)}" fill="#1f77b4" stroke="#000000"/>'
    if shape == "diamond":
        pts = f"{_n(px)},{_n(py - r)} {_n(px + r)},{_n(py)} {_n(px)},{_n(py + r)} {_n(px - r)},{_n(py)}"
        return f'<polygon points="{pts}" fill="#e377c2" stroke="#000000"/>'
    if shape == "triangle":
        pts = f"{_n(px)},{_n(py - r)} {_n(px + r)},{_n(py + r)} {_n(px - r)},{_n(py + r)}"
        return f'<polygon points="{pts}" fill="#ff7f0e" stroke="#000000"/>'
    return (f'<path d="M{_n(px - r)},{_n(py - r)} L{_n(px + r)},{_n(py + r)} '
            f'M{_n(px - r)},{_n(py + r)} L{_n(px + r)},{_n(py - r)}" stroke="#9467bd" stroke-width="2"/>')


def diagram_svg(bundle) -> str:
    """Omega-plane diagram: resonance annulus, curves by colour, points by glyph."""
    om = np.concatenate([c.omega for c in bundle.curves if c.kind == "sn"], axis=1)
    m = 0.1
    frame = _Frame((om[0].min() - m, om[0].max() + m), (om[1].min() - m, om[1].max() + m))
    out = _header(W, H, f"bifurcation diagram eps={bundle.config.epsilon:g} phi={bundle.config.phi:g}")
    for c in bundle.curves:
        closed = c.kind == "sn"
        out.append(_polyline(frame, c.omega[0], c.omega[1], _COLOURS.get(c.kind, "#7f7f7f"),
                             1.0 if closed else 1.5, closed))
    for p in bundle.points:
        out.append(_glyph(frame, p.omega[0], p.omega[1], p.kind))
    y = 20
    for kind, col in _COLOURS.items():
        out.append(f'<line x1="{W - 120}" y1="{y - 4}" x2="{W - 100}" y2="{y - 4}" stroke="{col}" stroke-width="2"/>')
        out.append(_text(W - 94, y, kind, 11))
        y += 15
    out.append(_text(PAD, H - 12, "Omega_x", 12))
    out.append(_text(12, PAD - 12, "Omega_y", 12))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _diverging(v: float, vmax: float) -> str:
    """Blue below zero, red above, white at zero; log-compressed magnitude."""
    t = math.log1p(abs(v)) / math.log1p(vmax) if vmax > 0 else 0.0
    t = min(1.0, t)
    fade = int(round(255 * (1 - t)))
    return f"#{fade:02x}{fade:02x}ff" if v < 0 else f"#ff{fade:02x}{fade:02x}"


def density_svg(grid) -> str:
    """``d alpha~/dE`` over the ``(rho, u)`` plane; chc at ``u = 1``, centres at ``u = 0``."""
    rho, u, ap = grid.rho, grid.u, grid.alpha_prime
    frame = _Frame((-1.0, 1.0), (0.0, 1.0))
    vmax = float(np.nanmax(np.abs(ap)))
    out = _header(W, H, "alpha~ derivative along the cpo family")
    dr = np.diff(rho).min() if len(rho) > 1 else 2.0
    du = np.diff(u).min() if len(u) > 1 else 1.0
    for i, r in enumerate(rho):
        for j, uu in enumerate(u):
            x0, y0 = frame(r - dr / 2, uu + du / 2)
            x1, y1 = frame(r + dr / 2, uu - du / 2)
            out.append(f'<rect x="{_n(x0)}" y="{_n(y0)}" width="{_n(x1 - x0)}" height="{_n(y1 - y0)}" '
                       f'fill="{_diverging(float(ap[i, j]), vmax)}" stroke="none"/>')
    (ax0, ay0), (ax1, ay1) = frame(-1, 1), frame(1, 0)
    out.append(f'<rect x="{_n(ax0)}" y="{_n(ay0)}" width="{_n(ax1 - ax0)}" height="{_n(ay1 - ay0)}" '
               f'fill="none" stroke="#000000"/>')
    out.append(_text(W / 2, ay0 - 8, "chc curve (u = 1)", 12, "middle"))
    out.append(_text(W / 2, ay1 + 18, "curve of centres (u = 0)", 12, "middle"))
    mx, mr, mu = grid.max_alpha_prime()
    out.append(_text(PAD, H - 8, f"max = {mx:.4g} at rho = {mr:.3f}, u = {mu:.3g}", 11))
    out.append(_text(ax1 + 4, (ay0 + ay1) / 2, "rho", 12))
    out.append("</svg>")
    return "\n".join(out) + "\n"
