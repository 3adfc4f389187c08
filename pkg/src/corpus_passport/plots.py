"""Self-contained SVG charts rendered straight from a report dict.

Axis ranges add a 5% margin on each side of the data range. Heatmaps use
a linear grayscale ramp: the smallest u-matrix value is white, the
largest black; a constant matrix renders in a single mid-gray.
"""
from __future__ import annotations

import math
import re
from html import escape
from pathlib import Path

WIDTH, HEIGHT = 800, 500
MARGIN = dict(left=70, right=20, top=40, bottom=110)
PAD = 0.05
FLAT_GRAY = 128


def _num(x: float) -> str:
    """Fixed formatting for coordinates so output is byte-stable."""
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def _data(x) -> str:
    return repr(x) if isinstance(x, float) else str(x)


def _padded(lo: float, hi: float):
    span = hi - lo
    if span == 0:
        span = abs(lo) or 1.0
        return lo - span * PAD, hi + span * PAD
    return lo - span * PAD, hi + span * PAD


class _Svg:
    def __init__(self, title: str, width: int = WIDTH, height: int = HEIGHT):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
            f'<title>{escape(title)}</title>',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
            f'<text x="{width / 2:.0f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        ]

    def add(self, element: str):
        self.parts.append(element)

    def text(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


class _Axes:
    def __init__(self, xlo, xhi, ylo, yhi, width=WIDTH, height=HEIGHT, margin=MARGIN):
        self.xlo, self.xhi, self.ylo, self.yhi = xlo, xhi, ylo, yhi
        self.x0, self.x1 = margin["left"], width - margin["right"]
        self.y0, self.y1 = height - margin["bottom"], margin["top"]

    def px(self, x):
        return self.x0 + (x - self.xlo) / (self.xhi - self.xlo) * (self.x1 - self.x0)

    def py(self, y):
        return self.y0 + (y - self.ylo) / (self.yhi - self.ylo) * (self.y1 - self.y0)

    def frame(self, svg, xlabel, ylabel):
        svg.add(f'<line x1="{self.x0}" y1="{self.y0}" x2="{self.x1}" y2="{self.y0}" stroke="#000"/>')
        svg.add(f'<line x1="{self.x0}" y1="{self.y0}" x2="{self.x0}" y2="{self.y1}" stroke="#000"/>')
        svg.add(f'<text x="{(self.x0 + self.x1) / 2:.0f}" y="{HEIGHT - 8}" text-anchor="middle">{escape(xlabel)}</text>')
        svg.add(f'<text x="16" y="{(self.y0 + self.y1) / 2:.0f}" text-anchor="middle" '
                f'transform="rotate(-90 16 {(self.y0 + self.y1) / 2:.0f})">{escape(ylabel)}</text>')


def frequency_chart(report: dict) -> str:
    entries = report["frequency"]
    svg = _Svg(f"{len(entries)} most frequent terms")
    top = max((e["count"] for e in entries), default=1)
    ax = _Axes(0, max(len(entries), 1), 0, _padded(0, top)[1])
    ax.frame(svg, "term", "count")
    slot = (ax.x1 - ax.x0) / max(len(entries), 1)
    for i, e in enumerate(entries):
        x = ax.x0 + i * slot + slot * 0.1
        y = ax.py(e["count"])
        svg.add(f'<rect class="bar" x="{_num(x)}" y="{_num(y)}" width="{_num(slot * 0.8)}" '
                f'height="{_num(ax.y0 - y)}" fill="#4a6fa5" data-term="{escape(e["term"])}" '
                f'data-value="{_data(e["count"])}"/>')
        cx = x + slot * 0.4
        svg.add(f'<text x="{_num(cx)}" y="{ax.y0 + 12}" text-anchor="end" '
                f'transform="rotate(-60 {_num(cx)} {ax.y0 + 12})">{escape(e["term"])}</text>')
    return svg.text()


def zipf_chart(report: dict) -> str:
    z = report["zipf"]
    counts = z["counts"]
    xs = [math.log10(r) for r in range(1, len(counts) + 1)]
    ys = [math.log10(c) for c in counts]
    svg = _Svg("rank-frequency (log10-log10) with least-squares fit")
    ax = _Axes(*_padded(min(xs), max(xs)), *_padded(min(ys), max(ys)))
    ax.frame(svg, "log10 rank", "log10 count")
    for r, (x, y) in enumerate(zip(xs, ys), start=1):
        svg.add(f'<circle class="point" cx="{_num(ax.px(x))}" cy="{_num(ax.py(y))}" r="2" '
                f'fill="#4a6fa5" data-rank="{r}" data-value="{counts[r - 1]}"/>')
    xa, xb = xs[0], xs[-1]
    ya, yb = z["intercept"] + z["slope"] * xa, z["intercept"] + z["slope"] * xb
    svg.add(f'<line class="fit" x1="{_num(ax.px(xa))}" y1="{_num(ax.py(ya))}" x2="{_num(ax.px(xb))}" '
            f'y2="{_num(ax.py(yb))}" stroke="#c0392b" stroke-width="1.5" '
            f'data-slope="{_data(z["slope"])}" data-intercept="{_data(z["intercept"])}" '
            f'data-r-squared="{_data(z["r_squared"])}"/>')
    return svg.text()


def gray_level(value: float, lo: float, hi: float) -> int:
    """Monotone ramp: lo -> 255 (white), hi -> 0 (black)."""
    if hi <= lo:
        return FLAT_GRAY
    return int(round(255 * (1.0 - (value - lo) / (hi - lo))))


def umatrix_heatmap(section: dict, title: str) -> str:
    values = section["umatrix"]
    rows, cols = len(values), len(values[0]) if values else 0
    cell = min(20, 440 // max(rows, cols, 1))
    width, height = cols * cell + 40, rows * cell + 70
    svg = _Svg(title, width, height)
    flat = [v for row in values for v in row]
    lo, hi = min(flat), max(flat)
    for r, row in enumerate(values):
        for c, v in enumerate(row):
            g = gray_level(v, lo, hi)
            svg.add(f'<rect class="cell" x="{20 + c * cell}" y="{40 + r * cell}" width="{cell}" '
                    f'height="{cell}" fill="rgb({g},{g},{g})" data-row="{r}" data-col="{c}" '
                    f'data-value="{_data(v)}"/>')
    return svg.text()


def projection_scatter(proj: dict, title: str) -> str:
    pts = proj["points"]
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    svg = _Svg(title)
    ax = _Axes(*_padded(min(xs), max(xs)), *_padded(min(ys), max(ys)))
    ax.frame(svg, "t-SNE 1", "t-SNE 2")
    for label, (x, y) in zip(proj["labels"], pts):
        query = label == proj["query"]
        colour = "#c0392b" if query else "#4a6fa5"
        cx, cy = ax.px(x), ax.py(y)
        svg.add(f'<circle class="{"query" if query else "point"}" cx="{_num(cx)}" cy="{_num(cy)}" '
                f'r="{4 if query else 3}" fill="{colour}" data-label="{escape(label)}" '
                f'data-x="{_data(x)}" data-y="{_data(y)}"/>')
        weight = ' font-weight="bold"' if query else ""
        svg.add(f'<text x="{_num(cx + 5)}" y="{_num(cy - 5)}"{weight}>{escape(label)}</text>')
    return svg.text()


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", text.lower()).strip("_") or "term"


def render_plots(report: dict, out_dir) -> dict:
    """Write the fixed plot set; returns {name: path}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    docs = {
        "frequency.svg": frequency_chart(report),
        "zipf.svg": zipf_chart(report),
        "umatrix_words.svg": umatrix_heatmap(report["som_words"], "u-matrix, word map"),
        "umatrix_docs.svg": umatrix_heatmap(report["som_docs"], "u-matrix, document map"),
    }
    for i, (q, proj) in enumerate(sorted(report.get("projections", {}).items())):
        docs[f"tsne_{i:02d}_{_slug(q)}.svg"] = projection_scatter(proj, f"similarity space of '{q}'")
    paths = {}
    for name, text in docs.items():
        path = out / name
        path.write_text(text, encoding="utf-8")
        paths[name] = path
    return paths
