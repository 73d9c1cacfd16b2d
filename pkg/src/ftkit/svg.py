"""Minimal SVG 1.1 polyline plots, one time series per file."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT, PAD = 640, 360, 48
MAX_POINTS = 2000


def polyline_svg(t: np.ndarray, y: np.ndarray, title: str = "") -> str:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size > MAX_POINTS:
        idx = np.unique(np.linspace(0, t.size - 1, MAX_POINTS).astype(int))
        t, y = t[idx], y[idx]
    t0, t1 = float(t[0]), float(t[-1]) if t[-1] > t[0] else float(t[0]) + 1.0
    lo, hi = float(np.min(y)), float(np.max(y))
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    px = PAD + (t - t0) / (t1 - t0) * (WIDTH - 2 * PAD)
    py = HEIGHT - PAD - (y - lo) / (hi - lo) * (HEIGHT - 2 * PAD)
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}">\n'
        f'  <rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
        f'  <rect x="{PAD}" y="{PAD}" width="{WIDTH - 2 * PAD}" height="{HEIGHT - 2 * PAD}" '
        'fill="none" stroke="#888"/>\n'
        f'  <text x="{WIDTH / 2}" y="{PAD / 2}" text-anchor="middle" font-size="14">{escape(title)}</text>\n'
        f'  <text x="{PAD}" y="{HEIGHT - PAD / 3}" font-size="11">t={t0:g}</text>\n'
        f'  <text x="{WIDTH - PAD}" y="{HEIGHT - PAD / 3}" text-anchor="end" font-size="11">t={t1:g}</text>\n'
        f'  <text x="4" y="{PAD + 4}" font-size="11">{hi:.4g}</text>\n'
        f'  <text x="4" y="{HEIGHT - PAD}" font-size="11">{lo:.4g}</text>\n'
        f'  <polyline fill="none" stroke="#1f77b4" stroke-width="1.2" points="{pts}"/>\n'
        "</svg>\n"
    )


def write_state_plots(traj, directory: str | Path) -> list[Path]:
    """Write ``<prefix><i>.svg`` for every state of ``traj``; returns the paths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(traj.dim):
        name = f"{traj.state_prefix}{i + 1}"
        p = out / f"{name}.svg"
        p.write_text(polyline_svg(traj.times, traj.states[:, i], name))
        paths.append(p)
    return paths
