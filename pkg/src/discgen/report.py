"""Figure data (histograms with KDE, boxplots, scatter) and SVG rendering.

Quantiles use linear interpolation between order statistics (type 7).
SVG output is plain text built from fixed-precision numbers, so identical
inputs always give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from html import escape

import numpy as np

from .core_data import PARAMETERS, DiscontinuitySet
from .errors import ConstantInput
from .metrics import pearson

KDE_POINTS = 512
KDE_REACH = 4.0  # curve support extends this many bandwidths past the data

UNITS = {"dip_direction": "deg", "dip_angle": "deg", "trace_length": "m"}


def _values(x, parameter=None) -> np.ndarray:
    if isinstance(x, DiscontinuitySet):
        return x.column(parameter).copy()
    return np.asarray(x, dtype=float).ravel()


def kde_bandwidth(x: np.ndarray, fallback: float) -> float:
    h = 1.06 * float(np.std(x)) * x.size ** (-0.2)
    return h if h > 0.0 else fallback


def gaussian_kde(x: np.ndarray, grid: np.ndarray, h: float) -> np.ndarray:
    u = (grid[:, None] - x[None, :]) / h
    return np.exp(-0.5 * u * u).sum(axis=1) / (x.size * h * math.sqrt(2.0 * math.pi))


@dataclass
class HistogramSpec:
    parameter: str
    edges: list
    observed_counts: list
    generated_counts: list | None
    kde_x: list
    observed_density: list
    generated_density: list | None
    observed_label: str = "observed"
    generated_label: str = "generated"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "observed", "generated"])
        for k in range(len(self.observed_counts)):
            gen = self.generated_counts[k] if self.generated_counts is not None else ""
            w.writerow([self.edges[k], self.edges[k + 1], self.observed_counts[k], gen])
        return buf.getvalue()


def build_histogram(observed, generated=None, parameter: str = "dip_direction",
                    bins: int = 20, labels=("observed", "generated")) -> HistogramSpec:
    """Shared-edge histograms plus Silverman-bandwidth Gaussian KDE curves.

    ``generated`` may be ``None`` for an observed-only figure.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    obs = _values(observed, parameter)
    gen = None if generated is None else _values(generated, parameter)
    both = obs if gen is None else np.concatenate([obs, gen])
    lo, hi = float(both.min()), float(both.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    fallback = (hi - lo) / bins
    h_obs = kde_bandwidth(obs, fallback)
    h_gen = None if gen is None else kde_bandwidth(gen, fallback)
    reach = KDE_REACH * max(h_obs, h_gen or 0.0)
    grid = np.linspace(float(both.min()) - reach, float(both.max()) + reach, KDE_POINTS)
    return HistogramSpec(
        parameter=parameter,
        edges=edges.tolist(),
        observed_counts=np.histogram(obs, edges)[0].tolist(),
        generated_counts=None if gen is None else np.histogram(gen, edges)[0].tolist(),
        kde_x=grid.tolist(),
        observed_density=gaussian_kde(obs, grid, h_obs).tolist(),
        generated_density=None if gen is None else gaussian_kde(gen, grid, h_gen).tolist(),
        observed_label=labels[0],
        generated_label=labels[1],
    )


@dataclass
class BoxplotStats:
    label: str
    n: int
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def box_stats(x, label: str = "") -> BoxplotStats:
    x = np.sort(np.asarray(x, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("boxplot needs at least one value")
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75], method="linear")
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    outliers = x[(x < lo_fence) | (x > hi_fence)]
    return BoxplotStats(label, int(x.size), float(med), float(q1), float(q3),
                        float(inside.min()), float(inside.max()), outliers.tolist())


def build_boxplot(sets, parameter: str | None = None, labels=None) -> list[BoxplotStats]:
    """Box statistics for each set (raw arrays, or sets plus a parameter name)."""
    out = []
    for i, s in enumerate(sets):
        if isinstance(s, DiscontinuitySet):
            label = labels[i] if labels else s.name
        else:
            label = labels[i] if labels else f"set {i + 1}"
        out.append(box_stats(_values(s, parameter), label))
    return out


@dataclass
class BoxplotFigure:
    """Several boxes on one axis, as rendered."""

    parameter: str
    boxes: list


@dataclass
class ScatterSpec:
    observed: list
    generated: list | None
    r_observed: float | None
    r_generated: float | None
    observed_label: str = "observed"
    generated_label: str = "generated"

    def to_dict(self) -> dict:
        return asdict(self)


def _safe_r(points: np.ndarray) -> float | None:
    try:
        return pearson(points[:, 0], points[:, 1])
    except ConstantInput:
        return None


def build_scatter(observed: DiscontinuitySet, generated: DiscontinuitySet | None = None,
                  labels=("observed", "generated")) -> ScatterSpec:
    """Dip direction vs dip angle points with the Pearson r of each set."""
    obs = observed.data[:, :2]
    gen = None if generated is None else generated.data[:, :2]
    return ScatterSpec(
        observed=obs.tolist(),
        generated=None if gen is None else gen.tolist(),
        r_observed=_safe_r(obs),
        r_generated=None if gen is None else _safe_r(gen),
        observed_label=labels[0],
        generated_label=labels[1],
    )


# --- SVG ----------------------------------------------------------------

@dataclass(frozen=True)
class SvgStyle:
    width: int = 640
    height: int = 420
    margin_left: int = 64
    margin_right: int = 24
    margin_top: int = 40
    margin_bottom: int = 52
    font_size: int = 12
    observed_color: str = "#1f77b4"
    generated_color: str = "#d62728"
    font_family: str = "sans-serif"


def _n(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9) * step
    ticks, k = [], 0
    while first + k * step <= hi + 1e-9 * step:
        ticks.append(round(first + k * step, 10))
        k += 1
    return ticks


def _tick_label(v: float) -> str:
    if v == int(v) and abs(v) < 1e6:
        return str(int(v))
    return f"{v:.3g}"


class _Canvas:
    def __init__(self, style: SvgStyle, xlim, ylim):
        self.s = style
        self.xlim, self.ylim = xlim, ylim
        self.x0, self.x1 = style.margin_left, style.width - style.margin_right
        self.y0, self.y1 = style.height - style.margin_bottom, style.margin_top
        self.parts: list[str] = []

    def px(self, x):
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo) * (self.x1 - self.x0)

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 - (y - lo) / (hi - lo) * (self.y0 - self.y1)

    def add(self, text: str):
        self.parts.append(text)

    def text(self, x, y, s, anchor="middle", size=None, extra=""):
        size = size or self.s.font_size
        self.add(f'<text x="{_n(x)}" y="{_n(y)}" font-size="{size}" '
                 f'text-anchor="{anchor}"{extra}>{escape(s)}</text>')

    def axes(self, title, xlabel, ylabel, xticks=True):
        s = self.s
        self.add(f'<rect x="{self.x0}" y="{self.y1}" width="{self.x1 - self.x0}" '
                 f'height="{self.y0 - self.y1}" fill="none" stroke="#333" stroke-width="1"/>')
        if xticks:
            for t in nice_ticks(*self.xlim):
                x = self.px(t)
                self.add(f'<line x1="{_n(x)}" y1="{self.y0}" x2="{_n(x)}" y2="{self.y0 + 5}" stroke="#333"/>')
                self.text(x, self.y0 + 18, _tick_label(t))
        for t in nice_ticks(*self.ylim):
            y = self.py(t)
            self.add(f'<line x1="{self.x0 - 5}" y1="{_n(y)}" x2="{self.x0}" y2="{_n(y)}" stroke="#333"/>')
            self.text(self.x0 - 8, y + 4, _tick_label(t), anchor="end")
        self.text(s.width / 2, s.margin_top - 16, title, size=s.font_size + 2)
        self.text((self.x0 + self.x1) / 2, s.height - 12, xlabel)
        cy = (self.y0 + self.y1) / 2
        self.text(16, cy, ylabel, extra=f' transform="rotate(-90 16 {_n(cy)})"')

    def legend(self, entries):
        x = self.x1 - 150
        for i, (label, color) in enumerate(entries):
            y = self.y1 + 16 + 18 * i
            self.add(f'<rect x="{_n(x)}" y="{_n(y - 9)}" width="12" height="12" fill="{color}" fill-opacity="0.6"/>')
            self.text(x + 18, y + 1, label, anchor="start")

    def document(self) -> str:
        s = self.s
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{s.width}" height="{s.height}" '
                f'viewBox="0 0 {s.width} {s.height}" font-family="{s.font_family}">')
        body = "\n".join(self.parts)
        return f'{head}\n<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n'


def _label(parameter: str) -> str:
    return f"{parameter.replace('_', ' ')} ({UNITS.get(parameter, '')})"


def _render_histogram(spec: HistogramSpec, style: SvgStyle) -> str:
    edges = np.array(spec.edges)
    series = [(np.array(spec.observed_counts), np.array(spec.observed_density),
               spec.observed_label, style.observed_color)]
    if spec.generated_counts is not None:
        series.append((np.array(spec.generated_counts), np.array(spec.generated_density),
                       spec.generated_label, style.generated_color))
    widths = np.diff(edges)
    dens = [c / (c.sum() * widths) for c, *_ in series]
    ymax = max(max(float(d.max()) for d in dens), max(float(k.max()) for _, k, *_ in series))
    kx = np.array(spec.kde_x)
    xlim = (min(float(edges[0]), float(kx[0])), max(float(edges[-1]), float(kx[-1])))
    cv = _Canvas(style, xlim, (0.0, ymax * 1.08 or 1.0))
    for (counts, kde, label, color), d in zip(series, dens):
        for k in range(len(counts)):
            x, w = cv.px(edges[k]), cv.px(edges[k + 1]) - cv.px(edges[k])
            y = cv.py(d[k])
            cv.add(f'<rect x="{_n(x)}" y="{_n(y)}" width="{_n(w)}" height="{_n(cv.y0 - y)}" '
                   f'fill="{color}" fill-opacity="0.35" stroke="{color}" stroke-width="0.5"/>')
        pts = " ".join(f"{_n(cv.px(a))},{_n(cv.py(b))}" for a, b in zip(kx, kde))
        cv.add(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
    cv.axes(f"Distribution of {spec.parameter.replace('_', ' ')}", _label(spec.parameter),
            "probability density")
    cv.legend([(label, color) for _, _, label, color in series])
    return cv.document()


def _render_boxplot(fig: BoxplotFigure, style: SvgStyle) -> str:
    boxes = fig.boxes
    lo = min(min([b.whisker_low] + b.outliers) for b in boxes)
    hi = max(max([b.whisker_high] + b.outliers) for b in boxes)
    pad = (hi - lo) * 0.05 or 0.5
    cv = _Canvas(style, (0.0, float(len(boxes))), (lo - pad, hi + pad))
    colors = [style.observed_color, style.generated_color]
    for i, b in enumerate(boxes):
        color = colors[i % len(colors)] if len(boxes) <= 2 else "#555555"
        cx = cv.px(i + 0.5)
        half = (cv.x1 - cv.x0) / len(boxes) * 0.2
        yq1, yq3, ym = cv.py(b.q1), cv.py(b.q3), cv.py(b.median)
        cv.add(f'<line x1="{_n(cx)}" y1="{_n(cv.py(b.whisker_low))}" x2="{_n(cx)}" y2="{_n(yq1)}" stroke="#333"/>')
        cv.add(f'<line x1="{_n(cx)}" y1="{_n(yq3)}" x2="{_n(cx)}" y2="{_n(cv.py(b.whisker_high))}" stroke="#333"/>')
        for w in (b.whisker_low, b.whisker_high):
            yw = cv.py(w)
            cv.add(f'<line x1="{_n(cx - half / 2)}" y1="{_n(yw)}" x2="{_n(cx + half / 2)}" y2="{_n(yw)}" stroke="#333"/>')
        cv.add(f'<rect x="{_n(cx - half)}" y="{_n(yq3)}" width="{_n(2 * half)}" height="{_n(yq1 - yq3)}" '
               f'fill="{color}" fill-opacity="0.35" stroke="{color}"/>')
        cv.add(f'<line x1="{_n(cx - half)}" y1="{_n(ym)}" x2="{_n(cx + half)}" y2="{_n(ym)}" stroke="#000" stroke-width="2"/>')
        for o in b.outliers:
            cv.add(f'<circle cx="{_n(cx)}" cy="{_n(cv.py(o))}" r="2.5" fill="none" stroke="{color}"/>')
        cv.text(cx, cv.y0 + 18, b.label)
    cv.axes(f"Boxplot of {fig.parameter.replace('_', ' ')}", "", _label(fig.parameter), xticks=False)
    return cv.document()


def _render_scatter(spec: ScatterSpec, style: SvgStyle) -> str:
    series = [(np.array(spec.observed), spec.observed_label, spec.r_observed, style.observed_color)]
    if spec.generated is not None:
        series.append((np.array(spec.generated), spec.generated_label, spec.r_generated,
                       style.generated_color))
    allpts = np.vstack([s[0] for s in series])
    xlo, xhi = float(allpts[:, 0].min()), float(allpts[:, 0].max())
    ylo, yhi = float(allpts[:, 1].min()), float(allpts[:, 1].max())
    xpad, ypad = (xhi - xlo) * 0.05 or 1.0, (yhi - ylo) * 0.05 or 1.0
    cv = _Canvas(style, (xlo - xpad, xhi + xpad), (ylo - ypad, yhi + ypad))
    for pts, _, _, color in series:
        for x, y in pts:
            cv.add(f'<circle cx="{_n(cv.px(x))}" cy="{_n(cv.py(y))}" r="2" fill="{color}" fill-opacity="0.5"/>')
    cv.axes("Dip direction vs dip angle", _label("dip_direction"), _label("dip_angle"))
    entries = []
    for _, label, r, color in series:
        rtxt = "n/a" if r is None else f"{r:.2f}"
        entries.append((f"{label} (r = {rtxt})", color))
    cv.legend(entries)
    return cv.document()


def render_svg(spec, style: SvgStyle | None = None) -> str:
    """Render a histogram, boxplot (a list of :class:`BoxplotStats` or a
    :class:`BoxplotFigure`) or scatter spec to a standalone SVG document."""
    style = style or SvgStyle()
    if isinstance(spec, HistogramSpec):
        return _render_histogram(spec, style)
    if isinstance(spec, ScatterSpec):
        return _render_scatter(spec, style)
    if isinstance(spec, BoxplotStats):
        spec = BoxplotFigure("value", [spec])
    elif isinstance(spec, list):
        spec = BoxplotFigure("value", spec)
    if isinstance(spec, BoxplotFigure):
        return _render_boxplot(spec, style)
    raise TypeError(f"cannot render {type(spec).__name__}")


def figure_bundle(observed: DiscontinuitySet, generated: DiscontinuitySet | None,
                  bins: int = 20, labels=("observed", "generated")) -> dict[str, str]:
    """Every figure for one comparison, keyed by file name."""
    out = {}
    for p in PARAMETERS:
        out[f"hist_{p}.svg"] = render_svg(build_histogram(observed, generated, p, bins, labels))
        sets = [observed] if generated is None else [observed, generated]
        out[f"box_{p}.svg"] = render_svg(
            BoxplotFigure(p, build_boxplot(sets, p, list(labels[:len(sets)]))))
    out["scatter_dipdir_dipangle.svg"] = render_svg(build_scatter(observed, generated, labels))
    return out
