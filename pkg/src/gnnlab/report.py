"""Summary tables and small hand-written SVG line charts from a metrics CSV."""

import csv
import io
import statistics
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]
SUMMARY_COLUMNS = ["b", "beta", "runs", "reached", "itr2loss_median", "itr2acc_median",
                   "time2acc_s_median", "throughput_median"]


def _median(values):
    values = [v for v in values if v is not None]
    return statistics.median(values) if values else None


def summarize(rows):
    """One row per (b, beta) with medians over seeds and eta; missing values are skipped."""
    groups = {}
    for row in rows:
        groups.setdefault((row["b"], row["beta"]), []).append(row)
    out = []
    for (b, beta) in sorted(groups):
        grp = groups[(b, beta)]
        out.append({
            "b": b,
            "beta": beta,
            "runs": len(grp),
            "reached": sum(r["itr2loss"] is not None for r in grp),
            "itr2loss_median": _median(r["itr2loss"] for r in grp),
            "itr2acc_median": _median(r["itr2acc"] for r in grp),
            "time2acc_s_median": _median(r["time2acc_s"] for r in grp),
            "throughput_median": _median(r["throughput"] for r in grp),
        })
    return out


def format_summary(summary):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in summary:
        w.writerow(["" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c])
                    for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def series_by(summary, x_key, group_key, y_key="itr2loss_median"):
    """{group value: [(x, y), ...]} sorted by x, dropping points without a y value."""
    series = {}
    for row in summary:
        if row[y_key] is None:
            continue
        series.setdefault(row[group_key], []).append((row[x_key], row[y_key]))
    return {k: sorted(v) for k, v in sorted(series.items())}


def _ticks(lo, hi, count=5):
    if hi == lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + k * step for k in range(count)]


def _num(v):
    return f"{v:.4g}"


def line_chart(series, title, x_label, y_label, legend_prefix="", width=640, height=400):
    """SVG text for a set of named polylines over shared linear axes."""
    left, right, top, bottom = 70, 150, 40, 55
    pw, ph = width - left - right, height - top - bottom
    points = [p for pts in series.values() for p in pts]
    xs = [p[0] for p in points] or [0.0, 1.0]
    ys = [p[1] for p in points] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line class="axis" x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line class="axis" x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.2f}" y1="{top + ph}" x2="{sx(t):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{top + ph + 18}" text-anchor="middle">{_num(t)}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{sy(t):.2f}" x2="{left}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{sy(t) + 4:.2f}" text-anchor="end">{_num(t)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(x_label)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(y_label)}</text>')
    for k, (name, pts) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline data-series="{escape(str(name))}" points="{coords}" fill="none" '
                   f'stroke="{color}" stroke-width="2"/>')
        for x, y in pts:
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{color}"/>')
        ly = top + 10 + 18 * k
        out.append(f'<line x1="{left + pw + 15}" y1="{ly}" x2="{left + pw + 35}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 40}" y="{ly + 4}">{escape(legend_prefix + str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def charts(summary):
    """The two standard charts: iteration-to-loss vs b (one line per beta) and vs beta (one line per b)."""
    by_b = line_chart(series_by(summary, "b", "beta"), "Iteration-to-loss vs batch size",
                      "batch size b", "iterations to target loss", legend_prefix="beta=")
    by_beta = line_chart(series_by(summary, "beta", "b"), "Iteration-to-loss vs fan-out",
                         "fan-out beta", "iterations to target loss", legend_prefix="b=")
    return {"itr2loss_vs_b.svg": by_b, "itr2loss_vs_beta.svg": by_beta}
