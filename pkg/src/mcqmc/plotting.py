"""Byte-deterministic SVG emission for experiment CSVs.

No plotting library: identical input bytes must give identical output bytes,
so the SVG is assembled from fixed-format strings only.  Two kinds:

* ``loglog``: every numeric column against ``n`` as a polyline;
* ``bracket``: ``(lower, upper)`` pairs as vertical segments, with any bound
  columns overlaid as curves.
"""

from __future__ import annotations

import math
from pathlib import Path

from .errors import SchemaError

__all__ = ["emit_plot"]

WIDTH, HEIGHT = 720, 540
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 20, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    body = [ln for ln in lines if not ln.startswith("#")]
    if not body:
        raise SchemaError(f"{path}: no header row found")
    header = [c.strip() for c in body[0].split(",")]
    rows = [ln.split(",") for ln in body[1:]]
    # trailing summary rows (e.g. the slope line) are not data points
    rows = [r for r in rows if r and r[0] not in ("slope",)]
    return header, rows


def _f(v: float) -> str:
    return format(v, ".3f")


class _LogAxes:
    def __init__(self, xs: list[float], ys: list[float]):
        xs = [x for x in xs if x > 0] or [1.0, 10.0]
        ys = [y for y in ys if y > 0] or [1e-3, 1.0]
        self.x_lo, self.x_hi = _pad_decades(min(xs), max(xs))
        self.y_lo, self.y_hi = _pad_decades(min(ys), max(ys))

    def px(self, x: float) -> float:
        t = (math.log10(x) - math.log10(self.x_lo)) / (math.log10(self.x_hi) - math.log10(self.x_lo))
        return MARGIN_L + t * (WIDTH - MARGIN_L - MARGIN_R)

    def py(self, y: float) -> float:
        t = (math.log10(y) - math.log10(self.y_lo)) / (math.log10(self.y_hi) - math.log10(self.y_lo))
        return HEIGHT - MARGIN_B - t * (HEIGHT - MARGIN_T - MARGIN_B)


def _pad_decades(lo: float, hi: float) -> tuple[float, float]:
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    if lo_e == hi_e:
        hi_e += 1
    return 10.0**lo_e, 10.0**hi_e


def _axes_svg(ax: _LogAxes) -> list[str]:
    parts = [
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{WIDTH - MARGIN_L - MARGIN_R}" '
        f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="none" stroke="black" stroke-width="1"/>'
    ]
    e = math.log10(ax.x_lo)
    while e <= math.log10(ax.x_hi) + 1e-9:
        x = 10.0**e
        px = ax.px(x)
        parts.append(f'<line x1="{_f(px)}" y1="{HEIGHT - MARGIN_B}" x2="{_f(px)}" y2="{HEIGHT - MARGIN_B + 6}" stroke="black"/>')
        parts.append(f'<text x="{_f(px)}" y="{HEIGHT - MARGIN_B + 22}" font-size="12" text-anchor="middle">1e{int(e)}</text>')
        e += 1
    e = math.log10(ax.y_lo)
    while e <= math.log10(ax.y_hi) + 1e-9:
        y = 10.0**e
        py = ax.py(y)
        parts.append(f'<line x1="{MARGIN_L - 6}" y1="{_f(py)}" x2="{MARGIN_L}" y2="{_f(py)}" stroke="black"/>')
        parts.append(f'<text x="{MARGIN_L - 10}" y="{_f(py + 4)}" font-size="12" text-anchor="end">1e{int(e)}</text>')
        e += 1
    return parts


def emit_plot(csv_path: str | Path, kind: str, out_path: str | Path) -> Path:
    """Render a CSV as a standalone SVG; deterministic for identical inputs."""
    if kind not in ("loglog", "bracket"):
        raise SchemaError(f"plot kind must be 'loglog' or 'bracket', got {kind!r}")
    header, rows = _read_csv(csv_path)
    if "n" not in header:
        raise SchemaError(f"{csv_path}: missing required column 'n'")
    n_idx = header.index("n")
    if kind == "bracket":
        for col in ("lower", "upper"):
            if col not in header:
                raise SchemaError(f"{csv_path}: missing required column '{col}'")
    ns = [float(r[n_idx]) for r in rows]
    series: list[tuple[str, list[float]]] = []
    for j, name in enumerate(header):
        if j == n_idx:
            continue
        try:
            vals = [float(r[j]) for r in rows]
        except (ValueError, IndexError):
            continue
        series.append((name, vals))
    all_y = [v for _, vals in series for v in vals if v > 0]
    ax = _LogAxes(ns, all_y)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    parts.extend(_axes_svg(ax))
    if kind == "bracket":
        lo_idx = header.index("lower")
        hi_idx = header.index("upper")
        for r in rows:
            x, lo, hi = float(r[n_idx]), float(r[lo_idx]), float(r[hi_idx])
            lo = max(lo, ax.y_lo)
            hi = max(hi, ax.y_lo)
            parts.append(
                f'<line x1="{_f(ax.px(x))}" y1="{_f(ax.py(lo))}" x2="{_f(ax.px(x))}" '
                f'y2="{_f(ax.py(hi))}" stroke="{PALETTE[0]}" stroke-width="2" class="bracket"/>'
            )
        curve_names = [s for s in series if s[0] not in ("lower", "upper", "delta")]
    else:
        curve_names = series
    for c_i, (name, vals) in enumerate(curve_names):
        pts = [
            f"{_f(ax.px(x))},{_f(ax.py(max(v, ax.y_lo)))}"
            for x, v in zip(ns, vals)
            if v > 0
        ]
        if not pts:
            continue
        color = PALETTE[(c_i + (1 if kind == "bracket" else 0)) % len(PALETTE)]
        parts.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{WIDTH - MARGIN_R - 10}" y="{MARGIN_T + 16 + 14 * c_i}" font-size="12" '
            f'text-anchor="end" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(parts) + "\n")
    return out
