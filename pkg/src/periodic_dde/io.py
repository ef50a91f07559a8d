"""CSV/JSON/SVG writers. Every file is written to a temp file and renamed into place."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from html import escape
from pathlib import Path

import numpy as np

OUTPUT_ENV = "PERIODIC_DDE_OUT"


def output_dir(default: str | os.PathLike = "out") -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or default)


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path


def csv_text(times, states, downsample: int = 1) -> str:
    """Header ``t,x1,...,xn`` then one row per (downsampled) time, 17 significant digits."""
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float).reshape(len(times), -1)
    keep = np.arange(0, len(times), max(1, int(downsample)))
    if keep[-1] != len(times) - 1:
        keep = np.append(keep, len(times) - 1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(states.shape[1])])
    for k in keep:
        w.writerow(["%.17g" % times[k]] + ["%.17g" % v for v in states[k]])
    return buf.getvalue()


def write_csv(path, times, states, downsample: int = 1) -> Path:
    return atomic_write(path, csv_text(times, states, downsample))


def read_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.array(rows[1:], dtype=float)
    return data[:, 0], data[:, 1:]


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write(path, json_text(obj))


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def svg_text(series, title: str = "", xlabel: str = "t", ylabel: str = "",
             width: int = 640, height: int = 360, max_points: int = 2000) -> str:
    """Minimal line plot. ``series`` is a list of ``(label, x, y)``."""
    ml, mr, mt, mb = 60, 130, 30, 40
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([np.asarray(x, float) for _, x, _ in series])
    ys = np.concatenate([np.asarray(y, float) for _, _, y in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return ml + (np.asarray(x) - x0) / (x1 - x0) * pw

    def py(y):
        return mt + (y1 - np.asarray(y)) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for k in range(5):
        fx = x0 + k * (x1 - x0) / 4
        fy = y0 + k * (y1 - y0) / 4
        out.append(f'<text x="{px(fx):.1f}" y="{mt + ph + 15}" text-anchor="middle">{fx:.4g}</text>')
        out.append(f'<text x="{ml - 5}" y="{py(fy) + 4:.1f}" text-anchor="end">{fy:.4g}</text>')
    if title:
        out.append(f'<text x="{ml + pw / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 5}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{mt + ph / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 14 {mt + ph / 2})">{escape(ylabel)}</text>')
    for k, (label, x, y) in enumerate(series):
        x, y = np.asarray(x, float), np.asarray(y, float)
        step = max(1, len(x) // max_points)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(x[::step]), py(y[::step])))
        color = _COLORS[k % len(_COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = mt + 12 + 16 * k
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 34}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, series, **kw) -> Path:
    return atomic_write(path, svg_text(series, **kw))
