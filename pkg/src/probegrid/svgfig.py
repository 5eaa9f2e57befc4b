"""Self-contained SVG renderings of the four aggregate figures.

No external dependencies: plain strings, inline styles, one hatch pattern
definition per document for undefined cells. Every renderer returns a
complete, well-formed SVG document.
"""

from __future__ import annotations

from .analysis import BandTable, BestLayerHistogram, HeatmapMatrix, LayerCurve
from .errors import ValidationError
from .types import MetricKind

_FONT = 'font-family="Helvetica,Arial,sans-serif"'
_RAW_COLOR = "#d62728"  # raw-value baseline dot
_PRED_COLOR = "#ff7f0e"  # prediction baseline dot
_LINE_COLOR = "#1f77b4"

_HATCH = (
    '<defs><pattern id="undef" width="6" height="6" patternUnits="userSpaceOnUse">'
    '<rect width="6" height="6" fill="#f0f0f0"/>'
    '<path d="M0,6 L6,0" stroke="#9a9a9a" stroke-width="1"/>'
    "</pattern></defs>"
)


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _document(width: float, height: float, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">'
    )
    background = f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="#ffffff"/>'
    return "\n".join([head, _HATCH, background] + body + ["</svg>"])


def _lerp_color(c0: tuple[int, int, int], c1: tuple[int, int, int], t: float) -> str:
    t = min(1.0, max(0.0, t))
    r, g, b = (round(a + (b_ - a) * t) for a, b_ in zip(c0, c1))
    return f"#{r:02x}{g:02x}{b:02x}"


def rank_color(rank: int, total: int) -> str:
    """Blue for the best-ranked source, red for the worst."""
    t = rank / max(1, total - 1)
    return _lerp_color((31, 119, 180), (214, 39, 40), t)


def heat_color(t: float) -> str:
    """0 -> near white, 1 -> dark blue."""
    return _lerp_color((247, 251, 255), (8, 48, 107), t)


def shared_scale(value: float, kind: MetricKind) -> float:
    """Common color scale for mixed metrics: AUC maps to 2*AUC-1 clamped to
    [0, 1]; R^2 clamps to [0, 1]. Invertible and printed in the legend."""
    if kind is MetricKind.AUC:
        return min(1.0, max(0.0, 2.0 * value - 1.0))
    return min(1.0, max(0.0, value))


# ---------------------------------------------------------------------------
# Shared axis helpers


def _value_range(values: list[float]) -> tuple[float, float]:
    low = min(values + [0.0])
    high = max(values + [1.0])
    pad = 0.05 * (high - low)
    return low - pad, high + pad


def _ticks(low: float, high: float, count: int = 5) -> list[float]:
    step = (high - low) / (count - 1)
    return [low + i * step for i in range(count)]


class _Panel:
    """Maps (layer index, metric value) to pixel coordinates in one plot box."""

    def __init__(self, x: float, y: float, width: float, height: float,
                 layers: list[int], low: float, high: float):
        self.x, self.y, self.w, self.h = x, y, width, height
        self.layers = layers
        self.low, self.high = low, high

    def px(self, layer: int) -> float:
        if len(self.layers) == 1:
            return self.x + self.w / 2
        i = self.layers.index(layer)
        return self.x + i * self.w / (len(self.layers) - 1)

    def py(self, value: float) -> float:
        t = (value - self.low) / (self.high - self.low) if self.high > self.low else 0.5
        return self.y + self.h - t * self.h

    def frame(self, body: list[str]) -> None:
        body.append(
            f'<rect x="{self.x:.1f}" y="{self.y:.1f}" width="{self.w:.1f}" height="{self.h:.1f}" '
            f'fill="none" stroke="#444444" stroke-width="1"/>'
        )

    def axes(self, body: list[str], with_x_labels: bool = True, with_y_labels: bool = True) -> None:
        for tick in _ticks(self.low, self.high):
            y = self.py(tick)
            body.append(
                f'<line x1="{self.x:.1f}" y1="{y:.1f}" x2="{self.x + self.w:.1f}" y2="{y:.1f}" '
                f'stroke="#dddddd" stroke-width="0.5"/>'
            )
            if with_y_labels:
                body.append(
                    f'<text x="{self.x - 5:.1f}" y="{y + 3:.1f}" text-anchor="end" '
                    f'font-size="9" {_FONT}>{tick:.2f}</text>'
                )
        if with_x_labels:
            for layer in self.layers:
                x = self.px(layer)
                body.append(
                    f'<text x="{x:.1f}" y="{self.y + self.h + 12:.1f}" text-anchor="middle" '
                    f'font-size="9" {_FONT}>{layer}</text>'
                )

    def polyline(self, body: list[str], points: dict[int, float | None], color: str,
                 dotted: bool = False, width: float = 1.5) -> None:
        dash = ' stroke-dasharray="4,3"' if dotted else ""
        segment: list[str] = []
        for layer in self.layers:
            value = points.get(layer)
            if value is None:
                if len(segment) >= 2:
                    body.append(
                        f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash} '
                        f'points="{" ".join(segment)}"/>'
                    )
                segment = []
                continue
            segment.append(f"{self.px(layer):.1f},{self.py(value):.1f}")
        if len(segment) >= 2:
            body.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash} '
                f'points="{" ".join(segment)}"/>'
            )
        for layer in self.layers:
            value = points.get(layer)
            if value is not None:
                body.append(
                    f'<circle cx="{self.px(layer):.1f}" cy="{self.py(value):.1f}" r="2" fill="{color}"/>'
                )


# ---------------------------------------------------------------------------
# Figure: layer curves (panel per (target row, source column))


def render_layer_curves(curves: list[LayerCurve]) -> str:
    if not curves:
        raise ValidationError("no curves to render")
    sources = sorted({c.source for c in curves})
    targets = sorted({c.target for c in curves})
    layers = sorted({layer for c in curves for layer in c.layers})
    by_key = {(c.source, c.target): c for c in curves}

    panel_w, panel_h, gap = 150.0, 100.0, 18.0
    left, top = 105.0, 50.0
    width = left + len(sources) * (panel_w + gap) + 30.0
    height = top + len(targets) * (panel_h + gap + 14.0) + 40.0
    body: list[str] = []

    finite = [v for c in curves for v in list(c.values.values()) + [c.raw_baseline, c.prediction_baseline]
              if v is not None]
    low, high = _value_range(finite)

    for col, source in enumerate(sources):
        x = left + col * (panel_w + gap)
        body.append(
            f'<text x="{x + panel_w / 2:.1f}" y="{top - 12:.1f}" text-anchor="middle" '
            f'font-size="11" {_FONT}>source: {_escape(source)}</text>'
        )
    for row, target in enumerate(targets):
        y = top + row * (panel_h + gap + 14.0)
        body.append(
            f'<text x="12" y="{y + panel_h / 2:.1f}" font-size="11" {_FONT}>{_escape(target)}</text>'
        )
        for col, source in enumerate(sources):
            x = left + col * (panel_w + gap)
            panel = _Panel(x, y, panel_w, panel_h, layers, low, high)
            panel.frame(body)
            panel.axes(body, with_x_labels=row == len(targets) - 1, with_y_labels=col == 0)
            curve = by_key.get((source, target))
            if curve is None:
                continue
            panel.polyline(body, curve.values, _LINE_COLOR, dotted=source == target)
            for baseline, color in ((curve.raw_baseline, _RAW_COLOR), (curve.prediction_baseline, _PRED_COLOR)):
                if baseline is not None:
                    body.append(
                        f'<circle cx="{x + panel_w - 8:.1f}" cy="{panel.py(baseline):.1f}" r="3.5" '
                        f'fill="{color}"/>'
                    )
    body.append(
        f'<text x="{left:.1f}" y="{height - 12:.1f}" font-size="10" {_FONT}>'
        f'x: layer index; dots at panel right: '
        f'<tspan fill="{_RAW_COLOR}">raw-value</tspan> / '
        f'<tspan fill="{_PRED_COLOR}">prediction</tspan> baselines; dotted = same task</text>'
    )
    return _document(width, height, body)


# ---------------------------------------------------------------------------
# Figure: best-layer histogram


def render_best_layer_histogram(hist: BestLayerHistogram) -> str:
    if not hist.counts:
        raise ValidationError("empty histogram")
    layers = sorted(hist.counts)
    max_count = max(hist.counts.values())
    bar_w, gap = 36.0, 10.0
    left, top, plot_h = 60.0, 40.0, 220.0
    width = left + len(layers) * (bar_w + gap) + 40.0
    height = top + plot_h + 70.0
    body: list[str] = []
    for i, layer in enumerate(layers):
        count = hist.counts[layer]
        h = plot_h * count / max_count
        x = left + i * (bar_w + gap)
        y = top + plot_h - h
        body.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w}" height="{h:.1f}" fill="{_LINE_COLOR}"/>')
        body.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{y - 4:.1f}" text-anchor="middle" font-size="10" {_FONT}>{count}</text>'
        )
        body.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{top + plot_h + 14:.1f}" text-anchor="middle" '
            f'font-size="10" {_FONT}>{layer}</text>'
        )
    body.append(
        f'<line x1="{left - 6:.1f}" y1="{top + plot_h:.1f}" x2="{width - 30:.1f}" y2="{top + plot_h:.1f}" '
        f'stroke="#444444" stroke-width="1"/>'
    )
    body.append(
        f'<text x="{left:.1f}" y="{top + plot_h + 34:.1f}" font-size="10" {_FONT}>'
        f"best layer per off-diagonal (source, target) pair; "
        f"{hist.excluded} pair(s) excluded as all-undefined</text>"
    )
    body.append(f'<text x="{left:.1f}" y="20" font-size="12" {_FONT}>Best-performing layer counts</text>')
    return _document(width, height, body)


# ---------------------------------------------------------------------------
# Figure: per-target band plot


def render_band_table(band: BandTable) -> str:
    if not band.rows:
        raise ValidationError("empty band table")
    layers = list(band.layers)
    finite = [v for row in band.rows for v in row.values.values() if v is not None]
    low, high = _value_range(finite)
    left, top, plot_w, plot_h = 70.0, 46.0, 420.0, 260.0
    legend_w = 190.0
    width = left + plot_w + legend_w
    height = top + plot_h + 60.0
    panel = _Panel(left, top, plot_w, plot_h, layers, low, high)
    body: list[str] = []
    panel.frame(body)
    panel.axes(body)
    total = len(band.rows)
    for row in band.rows:
        color = rank_color(row.self_rank, total)
        panel.polyline(body, row.values, color, dotted=row.same_task, width=2.0 if row.same_task else 1.3)
    legend_x = left + plot_w + 18.0
    for i, row in enumerate(sorted(band.rows, key=lambda r: r.self_rank)):
        y = top + 10 + i * 16.0
        color = rank_color(row.self_rank, total)
        dash = ' stroke-dasharray="4,3"' if row.same_task else ""
        body.append(f'<line x1="{legend_x}" y1="{y}" x2="{legend_x + 22}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/>')
        suffix = " (same task)" if row.same_task else ""
        body.append(
            f'<text x="{legend_x + 28}" y="{y + 3:.1f}" font-size="10" {_FONT}>'
            f"{_escape(row.source)}{suffix}</text>"
        )
    body.append(
        f'<text x="{left:.1f}" y="22" font-size="12" {_FONT}>All sources for target "{_escape(band.target)}" '
        f"({band.metric_kind.value}); line color: blue = best self-performance, red = worst</text>"
    )
    body.append(
        f'<text x="{left:.1f}" y="{height - 16:.1f}" font-size="10" {_FONT}>x: layer index</text>'
    )
    return _document(width, height, body)


# ---------------------------------------------------------------------------
# Figure: cross-task heatmap


def render_heatmap(matrix: HeatmapMatrix) -> str:
    if not matrix.row_tasks or not matrix.col_tasks:
        raise ValidationError("empty heatmap")
    cols = list(matrix.col_tasks) + (["random_uniform"] if matrix.random_column is not None else [])
    cell = 26.0
    left, top = 150.0, 130.0
    width = left + len(cols) * cell + 180.0
    height = top + len(matrix.row_tasks) * cell + 60.0
    body: list[str] = []

    def cell_value(i: int, j: int) -> float | None:
        if matrix.random_column is not None and j == len(cols) - 1:
            return matrix.random_column[i]
        return matrix.values[i][j]

    for j, col in enumerate(cols):
        x = left + j * cell + cell / 2
        weight = ' font-weight="bold"' if col == "random_uniform" else ""
        body.append(
            f'<text x="{x:.1f}" y="{top - 8:.1f}" text-anchor="start" font-size="9" {_FONT}{weight} '
            f'transform="rotate(-60 {x:.1f} {top - 8:.1f})">{_escape(col)}</text>'
        )
    for i, row_task in enumerate(matrix.row_tasks):
        y = top + i * cell
        body.append(
            f'<text x="{left - 6:.1f}" y="{y + cell / 2 + 3:.1f}" text-anchor="end" font-size="9" {_FONT}>'
            f"{_escape(row_task)} [{matrix.kinds[row_task].value}]</text>"
        )
        for j in range(len(cols)):
            x = left + j * cell
            value = cell_value(i, j)
            if value is None:
                fill = "url(#undef)"
            else:
                fill = heat_color(shared_scale(value, matrix.kinds[row_task]))
            body.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{cell}" height="{cell}" fill="{fill}" '
                f'stroke="#ffffff" stroke-width="1"/>'
            )
    legend_x = left + len(cols) * cell + 20.0
    for i in range(11):
        t = i / 10.0
        body.append(
            f'<rect x="{legend_x:.1f}" y="{top + (10 - i) * 14.0:.1f}" width="16" height="14" '
            f'fill="{heat_color(t)}"/>'
        )
        body.append(
            f'<text x="{legend_x + 22:.1f}" y="{top + (10 - i) * 14.0 + 11:.1f}" font-size="9" {_FONT}>{t:.1f}</text>'
        )
    body.append(
        f'<text x="{legend_x:.1f}" y="{top - 14:.1f}" font-size="9" {_FONT}>shared scale</text>'
    )
    body.append(
        f'<text x="20" y="24" font-size="12" {_FONT}>Cross-task heatmap, layer {matrix.layer_id}: '
        f"rows = targets, columns = sources</text>"
    )
    body.append(
        f'<text x="20" y="40" font-size="10" {_FONT}>color scale: AUC cells show 2*AUC-1 clamped to [0,1]; '
        f"R&#178; cells show R&#178; clamped to [0,1]; hatched = undefined; "
        f"ordering: binary tasks, then continuous, each by anchor-source "
        f'("{_escape(matrix.anchor_source)}") metric</text>'
    )
    return _document(width, height, body)
