"""SVG still frames and the per-agent minimum-barrier chart."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InvalidInput, IoError
from .sets import find_interior_point, membership_margin

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
          "#e377c2", "#17becf"]


def smoothed_boundary(s, lam, n_rays: int = 180, iters: int = 50) -> np.ndarray:
    """Points on ``membership_margin = 0`` found by bisection along rays."""
    c = find_interior_point(s, lam, smoothed=True)
    out = np.empty((n_rays, 2))
    for k, a in enumerate(np.linspace(0, 2 * np.pi, n_rays, endpoint=False)):
        d = np.array([np.cos(a), np.sin(a)])
        hi = 1.0
        while membership_margin(s, c + hi * d, lam) <= 0:
            hi *= 2
            if hi > 1e6:
                raise InvalidInput("smoothed set looks unbounded along a ray")
        lo = 0.0
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if membership_margin(s, c + mid * d, lam) <= 0:
                lo = mid
            else:
                hi = mid
        out[k] = c + hi * d
    return out


def point_in_polygon(p, poly) -> bool:
    """Even-odd ray test."""
    x, y = p
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y) and x < x1 + (y - y1) * (x2 - x1) / (y2 - y1):
            inside = not inside
    return inside


def _star(cx, cy, r):
    pts = []
    for k in range(10):
        rr = r if k % 2 == 0 else 0.45 * r
        a = np.pi / 2 + k * np.pi / 5
        pts.append((cx + rr * np.cos(a), cy + rr * np.sin(a)))
    return pts


def _pts(P, tf):
    return " ".join("%.4f,%.4f" % tf(x, y) for x, y in P)


def _write(path, text):
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e.strerror}") from None


def frame_svg(sets, lam, goals, t, extent, size=600, colors=COLORS) -> str:
    (x0, x1), (y0, y1) = extent
    scale = size / max(x1 - x0, y1 - y0)

    def tf(x, y):
        return (x - x0) * scale, (y1 - y) * scale

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white"/>']
    for i, (s, g) in enumerate(zip(sets, goals)):
        col = colors[i % len(colors)]
        parts.append(f'<polygon points="{_pts(_star(g[0], g[1], 0.25), tf)}" fill="{col}"/>')
    for i, s in enumerate(sets):
        col = colors[i % len(colors)]
        parts.append(f'<polygon points="{_pts(smoothed_boundary(s, lam[i]), tf)}" '
                     f'fill="{col}" fill-opacity="0.25" stroke="none"/>')
        parts.append(f'<polygon points="{_pts(s.vertices(lam[i]), tf)}" fill="{col}" '
                     f'stroke="black" stroke-width="1"/>')
    parts.append(f'<text x="8" y="20" font-family="sans-serif" font-size="14">'
                 f't = {t:.2f} s</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def chart_svg(t, h_min, labels, width=640, height=360, colors=COLORS) -> str:
    pad_l, pad_r, pad_t, pad_b = 60, 110, 20, 40
    h = np.where(np.isfinite(h_min), h_min, np.nan)
    lo = min(0.0, np.nanmin(h)) if np.isfinite(h).any() else 0.0
    hi = max(np.nanmax(h), lo + 1e-9) if np.isfinite(h).any() else 1.0
    t0, t1 = float(t[0]), float(max(t[-1], t[0] + 1e-9))
    W, H = width - pad_l - pad_r, height - pad_t - pad_b

    def tf(x, y):
        return pad_l + (x - t0) / (t1 - t0) * W, pad_t + (hi - y) / (hi - lo) * H

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<rect x="{pad_l}" y="{pad_t}" width="{W}" height="{H}" fill="none" stroke="black"/>']
    zx0, zy = tf(t0, 0.0)
    zx1, _ = tf(t1, 0.0)
    parts.append(f'<line x1="{zx0:.2f}" y1="{zy:.2f}" x2="{zx1:.2f}" y2="{zy:.2f}" '
                 f'stroke="gray" stroke-dasharray="6,4"/>')
    for i, name in enumerate(labels):
        col = colors[i % len(colors)]
        ok = np.isfinite(h[:, i])
        if ok.any():
            pts = " ".join("%.2f,%.2f" % tf(a, b) for a, b in zip(t[ok], h[ok, i]))
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{col}" '
                         f'stroke-width="1.5"/>')
        ly = pad_t + 16 * (i + 1)
        parts.append(f'<text x="{width - pad_r + 8}" y="{ly}" font-family="sans-serif" '
                     f'font-size="12" fill="{col}">{name}</text>')
    for y, txt in ((pad_t + 4, f"{hi:.3g}"), (pad_t + H, f"{lo:.3g}")):
        parts.append(f'<text x="4" y="{y}" font-family="sans-serif" font-size="11">{txt}</text>')
    parts.append(f'<text x="{pad_l + W / 2 - 20}" y="{height - 10}" font-family="sans-serif" '
                 f'font-size="12">t [s]</text>')
    parts.append(f'<text x="4" y="{pad_t + H / 2}" font-family="sans-serif" '
                 f'font-size="12">min h</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def selected_ticks(n_ticks: int, every_k: int) -> list:
    """Ticks ``0, k, 2k, ...``; none when ``k`` exceeds the number of steps."""
    if every_k < 1:
        raise InvalidInput("every_k must be >= 1")
    steps = n_ticks - 1
    if every_k > steps:
        return []
    return list(range(0, steps + 1, every_k))


def render_frames(trace, cfg, every_k: int, out_dir) -> list:
    """Write ``frame_XXXXX.svg`` per selected tick plus ``h_min.svg``; return paths."""
    if trace.n_ticks == 0:
        raise InvalidInput("empty trace")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoError(f"cannot create {out}: {e.strerror}") from None
    sets = [a.shape.build(cfg.agent_epsilon(a)) for a in cfg.agents]
    goals = [np.array(a.goal) for a in cfg.agents]
    xy = np.concatenate([trace.lam[:, :, :2].reshape(-1, 2), np.array(goals)])
    r = max(max(np.linalg.norm(s.vertices(), axis=1).max() for s in sets), 0.3) + 0.5
    lo, hi = xy.min(axis=0) - r, xy.max(axis=0) + r
    side = (hi - lo).max()
    mid = 0.5 * (lo + hi)
    extent = ((mid[0] - side / 2, mid[0] + side / 2), (mid[1] - side / 2, mid[1] + side / 2))
    paths = []
    for k in selected_ticks(trace.n_ticks, every_k):
        p = out / f"frame_{k:05d}.svg"
        _write(p, frame_svg(sets, trace.lam[k], goals, trace.t[k], extent))
        paths.append(p)
    p = out / "h_min.svg"
    _write(p, chart_svg(trace.t, trace.h_min, trace.agent_ids))
    paths.append(p)
    return paths
