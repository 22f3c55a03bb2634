"""Standalone SVG risk-coverage plots.

Shading roles:

* ``auor`` fills the area under a model's optimal-risk curve.
* ``e_aurc`` fills the excess between empirical and optimal curves over the
  whole visible range.
* ``e_auoptrc`` splits that excess at the optimal point: the part after it
  (the E-AUoptRC region) and the part before it get separate fills.

Output is a pure function of the input: no timestamps, ids or randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import EmptyPlot
from .metrics import FdMetrics, evaluate_fd
from .selection import RankedSet, RCCurve, empirical_risk_curve, optimal_risk_curve

SHADE_TOKENS = ("auor", "e_aurc", "e_auoptrc")
MAX_POINTS = 2000

PALETTE = ("#1b7837", "#2166ac", "#b2182b", "#762a83", "#e08214", "#35978f", "#8c510a", "#4d4d4d")
FILL_OPTIMAL = "#bdbdbd"
FILL_BEFORE_OP = "#fee08b"
FILL_AFTER_OP = "#f4a6c6"
STAR = "#d7191c"


@dataclass(frozen=True)
class PlotSpec:
    shade: frozenset[str] = frozenset()
    coverage_min: float = 0.0
    show_optimal: bool = True
    markers: bool = True
    width: int = 720
    height: int = 480
    title: str | None = None

    def __post_init__(self):
        unknown = set(self.shade) - set(SHADE_TOKENS)
        if unknown:
            raise ValueError(f"unknown shade token(s): {', '.join(sorted(unknown))}")
        if not (0.0 <= self.coverage_min < 1.0):
            raise ValueError(f"coverage_min must lie in [0, 1), got {self.coverage_min}")


def parse_shade(text: str | None) -> frozenset[str]:
    if not text:
        return frozenset()
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    unknown = [t for t in tokens if t not in SHADE_TOKENS]
    if unknown:
        raise ValueError(f"unknown shade token(s): {', '.join(unknown)}; choose from {', '.join(SHADE_TOKENS)}")
    return frozenset(tokens)


@dataclass(frozen=True)
class ModelCurves:
    name: str
    empirical: RCCurve
    optimal: RCCurve
    metrics: FdMetrics

    @property
    def n(self) -> int:
        return self.empirical.n


def model_curves(name: str, ranked: RankedSet) -> ModelCurves:
    return ModelCurves(
        name,
        empirical_risk_curve(ranked),
        optimal_risk_curve(ranked.n, ranked.n_correct),
        evaluate_fd(ranked),
    )


def _fmt(x: float) -> str:
    s = f"{x:.2f}"
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def _stride_indices(lo: int, hi: int) -> np.ndarray:
    """Up to MAX_POINTS prefix lengths in [lo, hi], uniform stride, both ends kept."""
    count = hi - lo + 1
    stride = max(1, math.ceil(count / (MAX_POINTS - 1)))
    idx = np.arange(lo, hi + 1, stride, dtype=np.int64)
    if idx[-1] != hi:
        idx = np.append(idx, hi)
    return idx


def _nice_ceiling(v: float) -> float:
    if v <= 0:
        return 0.1
    step = 0.05 if v <= 0.5 else 0.1
    return min(1.0, math.ceil(v / step - 1e-9) * step)


class _Frame:
    def __init__(self, spec: PlotSpec, y_max: float):
        self.spec = spec
        self.left, self.right, self.top, self.bottom = 64, 180, 36 if spec.title else 20, 52
        self.pw = spec.width - self.left - self.right
        self.ph = spec.height - self.top - self.bottom
        self.x0 = spec.coverage_min
        self.y_max = y_max

    def x(self, c: float) -> float:
        return self.left + (c - self.x0) / (1.0 - self.x0) * self.pw

    def y(self, r: float) -> float:
        return self.top + self.ph - (r / self.y_max) * self.ph

    def pts(self, cov: np.ndarray, risk: np.ndarray) -> str:
        return " ".join(f"{_fmt(self.x(c))},{_fmt(self.y(r))}" for c, r in zip(cov.tolist(), risk.tolist()))


def render_rc_svg(spec: PlotSpec, curves: Sequence[ModelCurves]) -> str:
    """Render one or more models' RC curves as an SVG 1.1 document."""
    if not curves:
        raise EmptyPlot("nothing to plot: no curves given")

    visible = []
    for mc in curves:
        n = mc.n
        lo = max(1, math.ceil(spec.coverage_min * n - 1e-9))
        if lo / n < spec.coverage_min:
            lo += 1
        lo = min(lo, n)
        visible.append(lo)
    peak = max(float(mc.empirical.risks[lo - 1 :].max()) for mc, lo in zip(curves, visible))
    frame = _Frame(spec, _nice_ceiling(peak * 1.05))

    out: list[str] = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{spec.width}" height="{spec.height}" '
        f'viewBox="0 0 {spec.width} {spec.height}" font-family="Helvetica, Arial, sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{spec.width}" height="{spec.height}" fill="#ffffff"/>',
    ]
    if spec.title:
        out.append(f'<text x="{spec.width / 2:g}" y="22" text-anchor="middle" font-size="14">{escape(spec.title)}</text>')
    out.append(
        f'<clipPath id="plot-area"><rect x="{frame.left}" y="{frame.top}" width="{frame.pw}" height="{frame.ph}"/></clipPath>'
    )

    out.append('<g clip-path="url(#plot-area)">')
    for mc, lo in zip(curves, visible):
        out.extend(_shading(spec, frame, mc, lo))
    out.append("</g>")

    out.extend(_axes(frame))

    out.append('<g clip-path="url(#plot-area)" fill="none" stroke-width="1.6">')
    for k, (mc, lo) in enumerate(zip(curves, visible)):
        colour = PALETTE[k % len(PALETTE)]
        idx = _stride_indices(lo, mc.n)
        cov = idx / mc.n
        out.append(
            f'<polyline stroke="{colour}" points="{frame.pts(cov, mc.empirical.risks[idx - 1])}"/>'
        )
        if spec.show_optimal:
            out.append(
                f'<polyline stroke="{colour}" stroke-dasharray="5,4" stroke-opacity="0.8" '
                f'points="{frame.pts(cov, mc.optimal.risks[idx - 1])}"/>'
            )
    out.append("</g>")

    if spec.markers:
        for mc in curves:
            acc = mc.metrics.accuracy
            if acc >= spec.coverage_min:
                out.append(_star(frame.x(acc), frame.y(0.0), 7.0))

    out.extend(_legend(spec, frame, curves))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _polygon(frame: _Frame, cov: np.ndarray, upper: np.ndarray, lower: np.ndarray, fill: str) -> str:
    top = frame.pts(cov, upper)
    bottom = frame.pts(cov[::-1], lower[::-1])
    return f'<polygon fill="{fill}" fill-opacity="0.6" stroke="none" points="{top} {bottom}"/>'


def _shading(spec: PlotSpec, frame: _Frame, mc: ModelCurves, lo: int) -> list[str]:
    parts: list[str] = []
    n = mc.n
    emp, opt = mc.empirical.risks, mc.optimal.risks
    if "auor" in spec.shade:
        idx = _stride_indices(lo, n)
        parts.append(_polygon(frame, idx / n, opt[idx - 1], np.zeros(idx.shape[0]), FILL_OPTIMAL))
    if "e_auoptrc" in spec.shade:
        i_op = mc.metrics.n_correct or 0
        split = max(i_op, lo)
        if split > lo:
            idx = _stride_indices(lo, split)
            parts.append(_polygon(frame, idx / n, emp[idx - 1], opt[idx - 1], FILL_BEFORE_OP))
        idx = _stride_indices(split, n)
        parts.append(_polygon(frame, idx / n, emp[idx - 1], opt[idx - 1], FILL_AFTER_OP))
    elif "e_aurc" in spec.shade:
        idx = _stride_indices(lo, n)
        parts.append(_polygon(frame, idx / n, emp[idx - 1], opt[idx - 1], FILL_BEFORE_OP))
    return parts


def _axes(frame: _Frame) -> list[str]:
    x_lo, x_hi = frame.left, frame.left + frame.pw
    y_lo, y_hi = frame.top + frame.ph, frame.top
    parts = [
        '<g stroke="#000000" stroke-width="1" fill="none">',
        f'<line x1="{x_lo}" y1="{y_lo}" x2="{x_hi}" y2="{y_lo}"/>',
        f'<line x1="{x_lo}" y1="{y_lo}" x2="{x_lo}" y2="{y_hi}"/>',
        "</g>",
        '<g font-size="11" fill="#000000">',
    ]
    start = frame.x0
    ticks = [round(start + j * 0.1, 10) for j in range(int(round((1.0 - start) / 0.1)) + 1)]
    if not ticks or ticks[-1] < 1.0:
        ticks.append(1.0)
    for c in ticks:
        if c < start - 1e-12 or c > 1.0 + 1e-12:
            continue
        x = _fmt(frame.x(c))
        parts.append(f'<line x1="{x}" y1="{y_lo}" x2="{x}" y2="{y_lo + 5}" stroke="#000000"/>')
        parts.append(f'<text x="{x}" y="{y_lo + 18}" text-anchor="middle">{c:.2f}</text>')
    n_y = 5
    for j in range(n_y + 1):
        r = frame.y_max * j / n_y
        y = _fmt(frame.y(r))
        parts.append(f'<line x1="{x_lo - 5}" y1="{y}" x2="{x_lo}" y2="{y}" stroke="#000000"/>')
        parts.append(f'<text x="{x_lo - 8}" y="{y}" text-anchor="end" dominant-baseline="middle">{r:.2f}</text>')
    parts.append(f'<text x="{(x_lo + x_hi) / 2:g}" y="{y_lo + 40}" text-anchor="middle" font-size="13">Coverage</text>')
    parts.append(
        f'<text x="18" y="{(y_lo + y_hi) / 2:g}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {(y_lo + y_hi) / 2:g})">Risk</text>'
    )
    parts.append("</g>")
    return parts


def _star(cx: float, cy: float, r: float) -> str:
    pts = []
    for j in range(10):
        radius = r if j % 2 == 0 else r * 0.45
        ang = -math.pi / 2 + j * math.pi / 5
        pts.append(f"{_fmt(cx + radius * math.cos(ang))},{_fmt(cy + radius * math.sin(ang))}")
    return f'<polygon fill="{STAR}" stroke="#000000" stroke-width="0.5" points="{" ".join(pts)}"/>'


def _legend(spec: PlotSpec, frame: _Frame, curves: Sequence[ModelCurves]) -> list[str]:
    x = frame.left + frame.pw + 16
    y = frame.top + 8
    parts = ['<g font-size="11" fill="#000000">']
    for k, mc in enumerate(curves):
        colour = PALETTE[k % len(PALETTE)]
        parts.append(f'<line x1="{x}" y1="{y}" x2="{x + 22}" y2="{y}" stroke="{colour}" stroke-width="2"/>')
        parts.append(f'<text x="{x + 28}" y="{y}" dominant-baseline="middle">{escape(mc.name)}</text>')
        y += 16
        m = mc.metrics
        for label, value in (
            ("AURC", m.aurc * 1e3),
            ("E-AURC", m.e_aurc * 1e3),
            ("E-AUoptRC", m.e_auoptrc * 1e3),
        ):
            parts.append(f'<text x="{x + 28}" y="{y}" dominant-baseline="middle">{label} {value:.2f}e-3</text>')
            y += 14
        parts.append(f'<text x="{x + 28}" y="{y}" dominant-baseline="middle">ACC {m.accuracy * 100:.2f}%  TI {m.trust_index:.3f}</text>')
        y += 20
    if spec.show_optimal:
        parts.append(f'<line x1="{x}" y1="{y}" x2="{x + 22}" y2="{y}" stroke="#000000" stroke-dasharray="5,4"/>')
        parts.append(f'<text x="{x + 28}" y="{y}" dominant-baseline="middle">optimal risk</text>')
        y += 16
    if spec.markers:
        parts.append(_star(x + 11, y, 6.0))
        parts.append(f'<text x="{x + 28}" y="{y}" dominant-baseline="middle">optimal point</text>')
        y += 16
    roles = []
    if "auor" in spec.shade:
        roles.append((FILL_OPTIMAL, "AUOR"))
    if "e_auoptrc" in spec.shade:
        roles.append((FILL_BEFORE_OP, "excess before op"))
        roles.append((FILL_AFTER_OP, "E-AUoptRC"))
    elif "e_aurc" in spec.shade:
        roles.append((FILL_BEFORE_OP, "E-AURC"))
    for fill, label in roles:
        parts.append(f'<rect x="{x}" y="{y - 5}" width="22" height="10" fill="{fill}" fill-opacity="0.6"/>')
        parts.append(f'<text x="{x + 28}" y="{y}" dominant-baseline="middle">{label}</text>')
        y += 16
    parts.append("</g>")
    return parts
