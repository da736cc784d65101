"""Plot data for result tables: gnuplot blocks and a plain SVG line chart."""

from __future__ import annotations

from pathlib import Path
from typing import Any

from .table import ResultTable

_W, _H, _PAD = 640, 400, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f")


def isotonic(values: list[float]) -> list[float]:
    """Least-squares nondecreasing fit (pool adjacent violators)."""
    blocks: list[list[float]] = []  # [mean, weight]
    for v in values:
        blocks.append([float(v), 1.0])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            m2, w2 = blocks.pop()
            m1, w1 = blocks.pop()
            blocks.append([(m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2])
    out: list[float] = []
    for mean, w in blocks:
        out.extend([mean] * int(w))
    return out


def curves(table: ResultTable, x: str = "m", y: str = "frequency", group: str = "s",
           where: dict[str, Any] | None = None) -> dict[Any, list[tuple[float, float]]]:
    for col in (x, y, group, *(where or {})):
        if col not in table.names:
            raise KeyError(f"unknown column {col!r}")
    out: dict[Any, list[tuple[float, float]]] = {}
    for rec in table.records():
        if where and any(rec[k] != v for k, v in where.items()):
            continue
        out.setdefault(rec[group], []).append((float(rec[x]), float(rec[y])))
    return {k: sorted(v) for k, v in sorted(out.items())}


def _gnuplot(data, x, y, group) -> str:
    lines = [f"# {x} {y}  (one block per {group})"]
    for key, pts in data.items():
        lines.append("")
        lines.append("")
        lines.append(f"# {group}={key}")
        lines.extend(f"{px:.17g} {py:.17g}" for px, py in pts)
    return "\n".join(lines) + "\n"


def _svg(data, x, y, group) -> str:
    xs = [p[0] for pts in data.values() for p in pts]
    ys = [p[1] for pts in data.values() for p in pts]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(min(ys), 0.0), max(max(ys), 1.0)) if ys else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(v):
        return _PAD + (v - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def sy(v):
        return _H - _PAD - (v - y0) / (y1 - y0) * (_H - 2 * _PAD)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<text x="{_W / 2:.1f}" y="{_H - 12}" text-anchor="middle" font-size="14">{x}</text>',
        f'<text x="14" y="{_H / 2:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 14 {_H / 2:.1f})">{y}</text>',
        f'<text x="{_PAD}" y="{_H - _PAD + 16}" font-size="11">{x0:g}</text>',
        f'<text x="{_W - _PAD}" y="{_H - _PAD + 16}" text-anchor="end" font-size="11">{x1:g}</text>',
        f'<text x="{_PAD - 6}" y="{_H - _PAD}" text-anchor="end" font-size="11">{y0:g}</text>',
        f'<text x="{_PAD - 6}" y="{_PAD + 4}" text-anchor="end" font-size="11">{y1:g}</text>',
    ]
    for i, (key, pts) in enumerate(data.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{sx(px):.3f},{sy(py):.3f}" for px, py in pts)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        ly = _PAD + 16 * i
        parts.append(f'<text x="{_W - _PAD - 4}" y="{ly}" text-anchor="end" font-size="12" '
                     f'fill="{color}">{group}={key}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plotdata(table: ResultTable, out_prefix, x: str = "m", y: str = "frequency",
                  group: str = "s", where: dict[str, Any] | None = None) -> tuple[Path, Path]:
    """Write ``<prefix>.dat`` (gnuplot ``index`` blocks) and ``<prefix>.svg``."""
    data = curves(table, x, y, group, where)
    prefix = Path(out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    dat = prefix.with_suffix(".dat")
    svg = prefix.with_suffix(".svg")
    dat.write_text(_gnuplot(data, x, y, group), encoding="utf-8")
    svg.write_text(_svg(data, x, y, group), encoding="utf-8")
    return dat, svg
