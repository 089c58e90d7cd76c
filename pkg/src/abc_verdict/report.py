"""Experiment reports: CSV with aggregate footers, and static SVG plots.

CSV layout: one header row, one row per replicate, then ``# key=value``
footer lines holding the aggregates. Floats are written with 17 significant
digits so a reader recovers the exact doubles, and the footer can be
recomputed from the rows digit for digit.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable
from xml.sax.saxutils import escape

import numpy as np

from .abc import fmt

FACTORIZATION_TOL = 1e-9
FACTORIZATION_COLUMNS = ("log_b12", "log_beta", "log_g")


class InvariantViolation(RuntimeError):
    def __init__(self, invariant: str, detail: str):
        super().__init__(f"{invariant}: {detail}")
        self.invariant = invariant
        self.detail = detail


@dataclass
class ExperimentReport:
    experiment: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    aggregator: Callable[[list[dict]], dict] | None = field(default=None, repr=False)
    plot: dict = field(default_factory=dict, repr=False)

    @property
    def aggregates(self) -> dict:
        if self.aggregator is None or not self.rows:
            return {}
        return self.aggregator(self.rows)

    def column(self, name: str, **where) -> np.ndarray:
        """Values of one column (``None`` -> NaN), optionally filtered by equality."""
        out = [
            np.nan if r[name] is None else r[name]
            for r in self.rows
            if all(r[k] == v for k, v in where.items())
        ]
        return np.asarray(out, dtype=np.float64)


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt(value)
    return str(value)


def parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def factorization_tolerance(*logs: float) -> float:
    """Absolute tolerance for log B12 = log g + log B^eta on one row.

    1e-9, widened in proportion to the magnitude of the terms once they pass
    1e3: a double near 1e7 is only resolved to ~2e-9, so a fixed absolute
    bound cannot be met there by any float64 computation.
    """
    scale = max((abs(v) for v in logs), default=0.0)
    return FACTORIZATION_TOL * max(1.0, scale / 1e3)


def check_factorization(report: ExperimentReport) -> None:
    if not all(c in report.columns for c in FACTORIZATION_COLUMNS):
        return
    for i, row in enumerate(report.rows):
        b12, beta, g = (row[c] for c in FACTORIZATION_COLUMNS)
        resid = b12 - (g + beta)
        if not abs(resid) < factorization_tolerance(b12, beta, g):
            raise InvariantViolation(
                "factorization",
                f"experiment={report.experiment} row={i} residual={resid!r}",
            )


def report_to_csv(report: ExperimentReport) -> str:
    check_factorization(report)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([format_cell(row[c]) for c in report.columns])
    for key, value in report.aggregates.items():
        buf.write(f"# {key}={format_cell(value)}\n")
    return buf.getvalue()


def parse_report_csv(text: str) -> tuple[list[str], list[dict], dict[str, str]]:
    """Inverse of :func:`report_to_csv`: (columns, rows, raw footer strings)."""
    body = [line for line in text.splitlines() if not line.startswith("#")]
    footer = {}
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            footer[key] = value
    reader = csv.reader(body)
    columns = next(reader)
    rows = [{c: parse_cell(v) for c, v in zip(columns, rec)} for rec in reader]
    return columns, rows, footer


def verify_footer(report: ExperimentReport, text: str) -> None:
    """Recompute aggregates from the emitted rows and compare with the footer."""
    if report.aggregator is None:
        return
    _, rows, footer = parse_report_csv(text)
    if not rows:
        return
    recomputed = {k: format_cell(v) for k, v in report.aggregator(rows).items()}
    if recomputed != footer:
        bad = sorted(k for k in set(recomputed) | set(footer) if recomputed.get(k) != footer.get(k))
        raise InvariantViolation("aggregates", f"experiment={report.experiment} keys={','.join(bad)}")


# -- SVG ------------------------------------------------------------------------

_PANEL_W, _PANEL_H = 360, 300
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 40, 48
_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * abs(hi) and len(out) < 20:
        out.append(t)
        t += step
    return out


def _range(values: np.ndarray) -> tuple[float, float]:
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def _panel(x: np.ndarray, y: np.ndarray, *, ox: float, title: str, xlabel: str, ylabel: str,
           colour: str, hist: np.ndarray | None = None, xr=None, yr=None) -> list[str]:
    x0, x1 = xr or _range(x)
    y0, y1 = yr or _range(y)
    w = _PANEL_W - _MARGIN_L - _MARGIN_R
    h = _PANEL_H - _MARGIN_T - _MARGIN_B
    left, top = ox + _MARGIN_L, _MARGIN_T

    def sx(v):
        return left + (v - x0) / (x1 - x0) * w

    def sy(v):
        return top + h - (v - y0) / (y1 - y0) * h

    out = [f'<g class="panel">',
           f'<rect x="{left:.2f}" y="{top:.2f}" width="{w:.2f}" height="{h:.2f}" fill="none" stroke="#444"/>',
           f'<text x="{ox + _PANEL_W / 2:.2f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<text x="{left + w / 2:.2f}" y="{_PANEL_H - 8:.2f}" text-anchor="middle" font-size="12">'
           f"{escape(xlabel)}</text>",
           f'<text transform="translate({ox + 14:.2f},{top + h / 2:.2f}) rotate(-90)" text-anchor="middle" '
           f'font-size="12">{escape(ylabel)}</text>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.2f}" y1="{top + h:.2f}" x2="{sx(t):.2f}" y2="{top + h + 4:.2f}" stroke="#444"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{top + h + 16:.2f}" text-anchor="middle" font-size="10">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{left - 4:.2f}" y1="{sy(t):.2f}" x2="{left:.2f}" y2="{sy(t):.2f}" stroke="#444"/>')
        out.append(f'<text x="{left - 6:.2f}" y="{sy(t) + 3:.2f}" text-anchor="end" font-size="10">{t:g}</text>')
    if hist is not None:
        counts, edges = hist
        peak = counts.max() if counts.size and counts.max() > 0 else 1
        for c, a, b in zip(counts, edges[:-1], edges[1:]):
            bh = c / peak * h
            out.append(f'<rect class="bar" x="{sx(a):.2f}" y="{top + h - bh:.2f}" width="{max(sx(b) - sx(a), 0):.2f}" '
                       f'height="{bh:.2f}" fill="{colour}" fill-opacity="0.25"/>')
    for xv, yv in zip(x, y):
        if np.isfinite(xv) and np.isfinite(yv):
            out.append(f'<circle class="marker" cx="{sx(xv):.2f}" cy="{sy(yv):.2f}" r="1.6" fill="{colour}" '
                       f'fill-opacity="0.5"/>')
    out.append("</g>")
    return out


def report_to_svg(report: ExperimentReport) -> str:
    """Render the report's plot description.

    ``report.plot`` holds ``x``, ``y``, axis labels, an optional ``split``
    column (one panel per distinct value) and an optional ``hist`` flag, in
    which case ``y`` is replaced by a deterministic jitter under a histogram
    of ``x``.
    """
    spec = report.plot
    split = spec.get("split")
    groups = sorted({r[split] for r in report.rows}) if split else [None]
    panels = []
    for gi, g in enumerate(groups):
        rows = [r for r in report.rows if split is None or r[split] == g]
        x = np.array([np.nan if r[spec["x"]] is None else r[spec["x"]] for r in rows], dtype=np.float64)
        hist = None
        yr = None
        if spec.get("hist"):
            finite = x[np.isfinite(x)]
            hist = np.histogram(finite, bins=40) if finite.size else None
            # deterministic jitter so every row still gets a marker
            y = (np.arange(x.size) * 0.6180339887498949) % 1.0 * 0.2
            yr = (0.0, 1.0)
        else:
            y = np.array([np.nan if r[spec["y"]] is None else r[spec["y"]] for r in rows], dtype=np.float64)
        title = spec.get("title", report.experiment)
        if split:
            title = f"{title} ({spec.get('split_label', split)} {g})"
        panels += _panel(x, y, ox=gi * _PANEL_W, title=title, xlabel=spec["xlabel"], ylabel=spec["ylabel"],
                         colour=_COLOURS[gi % len(_COLOURS)], hist=hist, yr=yr)
    width = _PANEL_W * len(groups)
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{_PANEL_H}" '
            f'viewBox="0 0 {width} {_PANEL_H}" font-family="sans-serif">')
    return "\n".join(['<?xml version="1.0" encoding="UTF-8"?>', head, *panels, "</svg>"]) + "\n"


def emit_outputs(report: ExperimentReport, out_dir: str | Path, plot: bool = False) -> list[Path]:
    """Write ``<out_dir>/<experiment>.csv`` (and ``.svg`` with ``plot``)."""
    out_dir = Path(out_dir)
    text = report_to_csv(report)
    verify_footer(report, text)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{report.experiment}.csv"
        path.write_text(text, encoding="utf-8", newline="")
        written.append(path)
        if plot and report.plot:
            svg = out_dir / f"{report.experiment}.svg"
            svg.write_text(report_to_svg(report), encoding="utf-8")
            written.append(svg)
    except OSError as exc:
        raise OSError(f"could not write report for {report.experiment} under {out_dir}: {exc}") from exc
    return written
