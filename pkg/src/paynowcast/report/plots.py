"""Plot-data emission: one CSV per figure plus a bare-bones SVG rendering.

CSV headers per kind::

    boxplot             series,q1,median,q3,whisker_low,whisker_high,outliers
    decomposition       period,observed,trend,seasonal,residual
    scatter_matrix      period,<one column per series>
    regression_band     x,fitted,lower,upper
    qq                  theoretical,sample
    residual_vs_fitted  fitted,residual
    residual_histogram  bin_left,bin_right,count
    influence           index,leverage,studentized,cooks_d

Empty cells mark undefined values.  ``outliers`` is a ``;``-joined list.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ..descriptive import BoxplotStats, boxplot_stats
from ..errors import UnsupportedKind

KINDS = (
    "boxplot",
    "decomposition",
    "scatter_matrix",
    "regression_band",
    "qq",
    "residual_vs_fitted",
    "residual_histogram",
    "influence",
)

W, H, M = 640, 400, 40


def _cell(v):
    if v is None:
        return ""
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def histogram(values, bins="fd"):
    """Counts and edges; Freedman-Diaconis binning unless ``bins`` is given."""
    x = np.asarray(values, dtype=float)
    if isinstance(bins, str):
        q1, q3 = np.percentile(x, [25, 75])
        if bins == "fd" and (q3 - q1) == 0:
            bins = "sturges"
    counts, edges = np.histogram(x, bins=bins)
    return counts, edges


# -- SVG ----------------------------------------------------------------------

class _Scale:
    def __init__(self, lo, hi, a, b):
        if not (math.isfinite(lo) and math.isfinite(hi)):
            lo, hi = 0.0, 1.0
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        self.lo, self.hi, self.a, self.b = lo, hi, a, b

    def __call__(self, v):
        return self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)


def _finite(vals):
    return [float(v) for v in vals if v is not None and math.isfinite(float(v))]


def _frame(title, body, width=W, height=H):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
        f'width="{width}" height="{height}">\n'
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>\n'
        + "".join(body)
        + "</svg>\n"
    )


def _axes(x0, y0, x1, y1):
    return (f'<line x1="{x0:.1f}" y1="{y1:.1f}" x2="{x1:.1f}" y2="{y1:.1f}" stroke="black"/>\n'
            f'<line x1="{x0:.1f}" y1="{y0:.1f}" x2="{x0:.1f}" y2="{y1:.1f}" stroke="black"/>\n')


def _scatter_panel(xs, ys, box, color="steelblue", line=None):
    x0, y0, x1, y1 = box
    pts = [(x, y) for x, y in zip(xs, ys) if x is not None and y is not None
           and math.isfinite(x) and math.isfinite(y)]
    allx = [p[0] for p in pts] + ([v for v, _ in line] if line else [])
    ally = [p[1] for p in pts] + ([v for _, v in line] if line else [])
    sx = _Scale(min(allx, default=0.0), max(allx, default=1.0), x0, x1)
    sy = _Scale(min(ally, default=0.0), max(ally, default=1.0), y1, y0)
    out = [_axes(x0, y0, x1, y1)]
    for x, y in pts:
        out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" fill="{color}"/>\n')
    if line:
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in line)
        out.append(f'<polyline points="{path}" fill="none" stroke="crimson"/>\n')
    return out


def _line_panel(series, box, colors=("black", "crimson", "gray")):
    x0, y0, x1, y1 = box
    n = max(len(s) for s in series)
    vals = _finite(v for s in series for v in s)
    sx = _Scale(0, max(n - 1, 1), x0, x1)
    sy = _Scale(min(vals, default=0.0), max(vals, default=1.0), y1, y0)
    out = [_axes(x0, y0, x1, y1)]
    for s, c in zip(series, colors):
        seg = [f"{sx(i):.2f},{sy(v):.2f}" for i, v in enumerate(s) if v is not None and math.isfinite(v)]
        if seg:
            out.append(f'<polyline points="{" ".join(seg)}" fill="none" stroke="{c}"/>\n')
    return out


def _svg_boxplot(stats, title):
    names = list(stats)
    k = max(len(names), 1)
    body = []
    slot = (W - 2 * M) / k
    for i, name in enumerate(names):
        b = stats[name]
        vals = _finite([b.whisker_low, b.whisker_high, *b.outliers])
        sy = _Scale(min(vals), max(vals), H - M, M)
        cx = M + slot * (i + 0.5)
        hw = slot * 0.3
        body.append(f'<line x1="{cx:.1f}" y1="{sy(b.whisker_low):.2f}" x2="{cx:.1f}" y2="{sy(b.whisker_high):.2f}" stroke="black"/>\n')
        top, bot = sy(b.q3), sy(b.q1)
        body.append(f'<rect x="{cx - hw:.1f}" y="{top:.2f}" width="{2 * hw:.1f}" height="{max(bot - top, 0.5):.2f}" '
                    f'fill="lightsteelblue" stroke="black"/>\n')
        body.append(f'<line x1="{cx - hw:.1f}" y1="{sy(b.median):.2f}" x2="{cx + hw:.1f}" y2="{sy(b.median):.2f}" stroke="crimson"/>\n')
        for o in b.outliers:
            body.append(f'<circle cx="{cx:.1f}" cy="{sy(o):.2f}" r="2.5" fill="none" stroke="black"/>\n')
        body.append(f'<text x="{cx:.1f}" y="{H - 10}" text-anchor="middle" font-size="10">{escape(name)}</text>\n')
    return _frame(title, body)


def _svg_histogram(counts, edges, title):
    sx = _Scale(float(edges[0]), float(edges[-1]), M, W - M)
    sy = _Scale(0.0, float(max(counts.max(), 1)), H - M, M)
    body = [_axes(M, M, W - M, H - M)]
    for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
        x, w = sx(lo), max(sx(hi) - sx(lo), 0.5)
        body.append(f'<rect x="{x:.2f}" y="{sy(c):.2f}" width="{w:.2f}" height="{sy(0) - sy(c):.2f}" '
                    f'fill="steelblue" stroke="white"/>\n')
    return _frame(title, body)


def _panels(k):
    cols = min(k, 3)
    rows = math.ceil(k / cols)
    pw, ph = (W - M) / cols, (H - M) / rows
    return [(M / 2 + (i % cols) * pw + 15, M + (i // cols) * ph + 5,
             M / 2 + (i % cols + 1) * pw - 5, M + (i // cols + 1) * ph - 15) for i in range(k)]


# -- emission -----------------------------------------------------------------

def _boxplot(data):
    stats = {}
    for name, v in dict(data).items():
        stats[name] = v if isinstance(v, BoxplotStats) else boxplot_stats(v)
    rows = [[name, _cell(b.q1), _cell(b.median), _cell(b.q3), _cell(b.whisker_low), _cell(b.whisker_high),
             ";".join(repr(float(o)) for o in b.outliers)] for name, b in stats.items()]
    header = ["series", "q1", "median", "q3", "whisker_low", "whisker_high", "outliers"]
    return _csv(header, rows), (lambda title: _svg_boxplot(stats, title))


def _decomposition(res):
    series = [res.observed.values.tolist(), res.trend.values.tolist()]
    boxes = [(M, M, W - M, H / 2 - 10), (M, H / 2 + 10, W - M, H - M)]

    def svg(title):
        body = _line_panel(series, boxes[0])
        body += _line_panel([res.seasonal.values.tolist(), res.residual.values.tolist()], boxes[1],
                            colors=("darkgreen", "gray"))
        return _frame(title, body)

    return res.to_csv(), svg


def _scatter_matrix(frame):
    names = frame.names

    def svg(title):
        target = names[-1]
        others = names[:-1] or names
        body = []
        for name, box in zip(others, _panels(len(others))):
            body += _scatter_panel(frame[name].tolist(), frame[target].tolist(), box)
            body.append(f'<text x="{(box[0] + box[2]) / 2:.1f}" y="{box[3] + 12:.1f}" text-anchor="middle" '
                        f'font-size="10">{escape(name)} vs {escape(target)}</text>\n')
        return _frame(title, body)

    return frame.to_csv(), svg


def _regression_band(data):
    x, fitted, lower, upper = (np.asarray(data[k], dtype=float) for k in ("x", "fitted", "lower", "upper"))
    order = np.argsort(x, kind="stable")
    rows = [[_cell(x[i]), _cell(fitted[i]), _cell(lower[i]), _cell(upper[i])] for i in order]
    y_obs = data.get("y")

    def svg(title):
        xs = x[order].tolist()
        box = (M, M, W - M, H - M)
        pts_y = np.asarray(y_obs, dtype=float)[order].tolist() if y_obs is not None else fitted[order].tolist()
        allv = _finite([*pts_y, *lower, *upper])
        sx = _Scale(min(xs), max(xs), M, W - M)
        sy = _Scale(min(allv), max(allv), H - M, M)
        body = [_axes(*box)]
        band = [f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs, upper[order])]
        band += [f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(reversed(xs), lower[order][::-1])]
        body.append(f'<polygon points="{" ".join(band)}" fill="lightsteelblue" stroke="none"/>\n')
        for a, b in zip(xs, pts_y):
            body.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="steelblue"/>\n')
        line = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs, fitted[order]))
        body.append(f'<polyline points="{line}" fill="none" stroke="crimson"/>\n')
        return _frame(title, body)

    return _csv(["x", "fitted", "lower", "upper"], rows), svg


def _qq(points):
    pts = [(float(a), float(b)) for a, b in points]
    rows = [[_cell(a), _cell(b)] for a, b in pts]

    def svg(title):
        lo = min(min(a, b) for a, b in pts)
        hi = max(max(a, b) for a, b in pts)
        return _frame(title, _scatter_panel([a for a, _ in pts], [b for _, b in pts], (M, M, W - M, H - M),
                                            line=[(lo, lo), (hi, hi)]))

    return _csv(["theoretical", "sample"], rows), svg


def _residual_vs_fitted(data):
    fitted = np.asarray(data["fitted"], dtype=float)
    resid = np.asarray(data["residual"] if "residual" in data else data["residuals"], dtype=float)
    rows = [[_cell(f), _cell(r)] for f, r in zip(fitted, resid)]

    def svg(title):
        lo, hi = float(fitted.min()), float(fitted.max())
        return _frame(title, _scatter_panel(fitted.tolist(), resid.tolist(), (M, M, W - M, H - M),
                                            line=[(lo, 0.0), (hi, 0.0)]))

    return _csv(["fitted", "residual"], rows), svg


def _residual_histogram(data, bins="fd"):
    values = data["residuals"] if isinstance(data, dict) else data
    if isinstance(data, dict):
        bins = data.get("bins", bins)
    counts, edges = histogram(values, bins)
    rows = [[_cell(lo), _cell(hi), str(int(c))] for lo, hi, c in zip(edges[:-1], edges[1:], counts)]
    return _csv(["bin_left", "bin_right", "count"], rows), (lambda title: _svg_histogram(counts, edges, title))


def _influence(records):
    rows = [[str(r.index), _cell(r.leverage), _cell(r.studentized_residual), _cell(r.cooks_distance)]
            for r in records]

    def svg(title):
        lev = [r.leverage for r in records]
        stud = [r.studentized_residual for r in records]
        body = _scatter_panel(lev, stud, (M, M, W - M, H - M), color="darkorange")
        return _frame(title, body)

    return _csv(["index", "leverage", "studentized", "cooks_d"], rows), svg


_EMITTERS = {
    "boxplot": _boxplot,
    "decomposition": _decomposition,
    "scatter_matrix": _scatter_matrix,
    "regression_band": _regression_band,
    "qq": _qq,
    "residual_vs_fitted": _residual_vs_fitted,
    "residual_histogram": _residual_histogram,
    "influence": _influence,
}


def render_plot_data(kind, data):
    """Return ``(csv_text, svg_text)`` for ``kind`` without touching disk."""
    if kind not in _EMITTERS:
        raise UnsupportedKind(f"unsupported plot kind {kind!r}; expected one of {', '.join(KINDS)}")
    text, svg = _EMITTERS[kind](data)
    return text, svg(kind.replace("_", " "))


def emit_plot_data(kind, data, out_dir, name=None, svg=True):
    """Write ``<name>.csv`` (and ``<name>.svg``) under ``out_dir``; return the CSV path."""
    text, svg_text = render_plot_data(kind, data)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = name or kind
    path = out_dir / f"{stem}.csv"
    path.write_text(text, encoding="utf-8", newline="")
    if svg:
        (out_dir / f"{stem}.svg").write_text(svg_text, encoding="utf-8")
    return path
