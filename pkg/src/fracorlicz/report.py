"""Deterministic JSON / CSV / SVG writers.

Every file carries the package version and the effective configuration so
that identical runs produce byte-identical artifacts.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__

__all__ = ["header_lines", "write_json", "write_csv", "write_solution_csv", "write_line_chart"]


def _plain(obj):
    """Convert numpy scalars / arrays and non-finite floats to JSON-safe values."""
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def header_lines(config: Mapping) -> list[str]:
    cfg = " ".join(f"{k}={config[k]}" for k in sorted(config))
    return [f"# fracorlicz {__version__}", f"# config: {cfg}"]


def write_json(path: str | Path, payload: Mapping, config: Mapping) -> None:
    doc = {"version": __version__, "config": _plain(dict(config)), **_plain(dict(payload))}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence], config: Mapping) -> None:
    buf = io.StringIO()
    for line in header_lines(config):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def write_solution_csv(path: str | Path, u, config: Mapping) -> None:
    grid = u.grid
    cols = ["x", "y"][: grid.dimension] + ["value"]
    rows = ([*grid.nodes[k].tolist(), float(u.values[k])] for k in grid.interior)
    write_csv(path, cols, rows, config)


def write_line_chart(
    path: str | Path,
    x: Sequence[float],
    y: Sequence[float],
    config: Mapping,
    xlabel: str = "p",
    ylabel: str = "sup error",
    log_x: bool = True,
) -> None:
    """Minimal SVG line chart (log2 x-axis by default)."""
    W, H, pad = 480, 320, 56
    xs = np.log2(np.asarray(x, float)) if log_x else np.asarray(x, float)
    ys = np.asarray(y, float)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = 0.0, float(ys.max()) if ys.size and ys.max() > 0 else 1.0
    x1 = x1 if x1 > x0 else x0 + 1.0

    def px(v):
        return pad + (v - x0) / (x1 - x0) * (W - 2 * pad)

    def py(v):
        return H - pad - (v - y0) / (y1 - y0) * (H - 2 * pad)

    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, ys))
    cfg = " ".join(f"{k}={config[k]}" for k in sorted(config)).replace("--", "-")
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f"<!-- fracorlicz {__version__} -->",
        f"<!-- config: {cfg} -->",
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H - pad}" stroke="black"/>',
        f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{pts}"/>',
    ]
    for a, b, lab in zip(xs, ys, x):
        out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" fill="steelblue"/>')
        out.append(
            f'<text x="{px(a):.2f}" y="{H - pad + 16}" font-size="11" text-anchor="middle">{lab:g}</text>'
        )
    for frac in (0.0, 0.5, 1.0):
        v = y0 + frac * (y1 - y0)
        out.append(f'<text x="{pad - 6}" y="{py(v) + 4:.2f}" font-size="11" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{W / 2:.0f}" y="{H - 12}" font-size="12" text-anchor="middle">{xlabel}</text>')
    out.append(
        f'<text x="14" y="{H / 2:.0f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {H / 2:.0f})">{ylabel}</text>'
    )
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
