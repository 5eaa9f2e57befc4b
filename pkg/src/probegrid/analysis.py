"""Aggregates derived from a results table: per-pair layer curves,
best-layer histograms, per-target band tables, and the single-layer
cross-task heatmap.

Every aggregate is a pure function of the results rows, so recomputing
from a re-parsed results.csv yields identical output. Undefined metric
values stay None end to end and render as blanks/hatching, never as 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ValidationError
from .types import MetricKind, ProbeResult, SourceKind


@dataclass(frozen=True)
class LayerCurve:
    """Metric-by-layer for one (source, target) pair, with baseline dots."""

    source: str
    target: str
    metric_kind: MetricKind
    values: dict[int, float | None]  # layer_id -> value; None = undefined
    raw_baseline: float | None
    prediction_baseline: float | None

    @property
    def layers(self) -> list[int]:
        return sorted(self.values)


@dataclass(frozen=True)
class BestLayerHistogram:
    counts: dict[int, int]  # layer_id -> number of pairs peaking there
    excluded: int  # off-diagonal pairs with no defined layer value
    n_pairs: int  # all off-diagonal pairs considered


@dataclass(frozen=True)
class BandRow:
    source: str
    same_task: bool
    self_rank: int  # 0 = best self-performance among the band's sources
    self_value: float | None  # best-layer metric of (source, source)
    values: dict[int, float | None]


@dataclass(frozen=True)
class BandTable:
    target: str
    metric_kind: MetricKind
    layers: tuple[int, ...]
    rows: tuple[BandRow, ...]


@dataclass(frozen=True)
class HeatmapMatrix:
    """Single-layer cross-task matrix. Rows are targets, columns are
    sources; both follow the same task ordering (binary tasks first, then
    continuous, each block sorted by the anchor-source metric). A trailing
    random-uniform column is included when the report carries random rows.
    """

    layer_id: int
    anchor_source: str
    row_tasks: tuple[str, ...]
    col_tasks: tuple[str, ...]
    values: tuple[tuple[float | None, ...], ...]  # [row][col]
    random_column: tuple[float | None, ...] | None
    kinds: dict[str, MetricKind]


# ---------------------------------------------------------------------------
# Row indexing


class _Index:
    def __init__(self, results: Iterable[ProbeResult]):
        self.embedding: dict[tuple[str, str], dict[int, float | None]] = {}
        self.raw: dict[tuple[str, str], float | None] = {}
        self.prediction: dict[tuple[str, str], float | None] = {}
        self.random: dict[str, float | None] = {}
        self.kinds: dict[str, MetricKind] = {}
        sources: set[str] = set()
        targets: set[str] = set()
        layers: set[int] = set()
        for row in results:
            spec = row.spec
            self.kinds[spec.target] = row.metric_kind
            if spec.source_kind is SourceKind.EMBEDDING:
                sources.add(spec.source_task)
                targets.add(spec.target)
                layers.add(spec.layer_id)
                self.embedding.setdefault((spec.source_task, spec.target), {})[spec.layer_id] = row.value
            elif spec.source_kind is SourceKind.RAW:
                self.raw[(spec.source_task, spec.target)] = row.value
            elif spec.source_kind is SourceKind.PREDICTION:
                self.prediction[(spec.source_task, spec.target)] = row.value
            elif spec.source_kind is SourceKind.RANDOM:
                self.random[spec.target] = row.value
        self.sources = sorted(sources)
        self.targets = sorted(targets)
        self.layers = sorted(layers)

    def best_layer_value(self, source: str, target: str) -> float | None:
        per_layer = self.embedding.get((source, target), {})
        best = None
        for layer in sorted(per_layer):
            value = per_layer[layer]
            if value is not None and (best is None or value > best):
                best = value
        return best


# ---------------------------------------------------------------------------
# Aggregates


def layer_curves(
    results: Sequence[ProbeResult],
    sources: Sequence[str] | None = None,
    targets: Sequence[str] | None = None,
) -> list[LayerCurve]:
    index = _Index(results)
    keep_sources = list(sources) if sources is not None else index.sources
    keep_targets = list(targets) if targets is not None else index.targets
    curves = []
    for source in keep_sources:
        for target in keep_targets:
            per_layer = index.embedding.get((source, target))
            if per_layer is None:
                continue
            curves.append(
                LayerCurve(
                    source=source,
                    target=target,
                    metric_kind=index.kinds[target],
                    values={layer: per_layer.get(layer) for layer in index.layers},
                    raw_baseline=index.raw.get((source, target)),
                    prediction_baseline=index.prediction.get((source, target)),
                )
            )
    return curves


def best_layer_histogram(results: Sequence[ProbeResult]) -> BestLayerHistogram:
    """Per off-diagonal (source, target) pair, the layer where the metric
    peaks. Same-task pairs are excluded; ties break toward the smallest
    layer_id; pairs with no defined layer value are counted as excluded."""
    index = _Index(results)
    counts: dict[int, int] = {}
    excluded = 0
    n_pairs = 0
    for (source, target), per_layer in sorted(index.embedding.items()):
        if source == target:
            continue
        n_pairs += 1
        best_layer = None
        best_value = None
        for layer in sorted(per_layer):
            value = per_layer[layer]
            if value is None:
                continue
            if best_value is None or value > best_value:
                best_layer, best_value = layer, value
        if best_layer is None:
            excluded += 1
        else:
            counts[best_layer] = counts.get(best_layer, 0) + 1
    if n_pairs == 0:
        raise ValidationError("no off-diagonal (source, target) pairs in results")
    return BestLayerHistogram(counts=dict(sorted(counts.items())), excluded=excluded, n_pairs=n_pairs)


def band_table(results: Sequence[ProbeResult], target: str) -> BandTable:
    """All sources' layer curves for one target, each annotated with a
    same-task flag and the rank of that source's own-task performance
    (0 = best; color key for rendering)."""
    index = _Index(results)
    if target not in index.targets:
        raise ValidationError(f"target {target!r} not in results; available: {index.targets}")
    self_values = {source: index.best_layer_value(source, source) for source in index.sources}
    # Rank sources by self-performance, best first, undefined last.
    ordered = sorted(
        index.sources,
        key=lambda s: (self_values[s] is None, -(self_values[s] or 0.0), s),
    )
    rank_of = {source: rank for rank, source in enumerate(ordered)}
    rows = []
    for source in index.sources:
        per_layer = index.embedding.get((source, target), {})
        rows.append(
            BandRow(
                source=source,
                same_task=source == target,
                self_rank=rank_of[source],
                self_value=self_values[source],
                values={layer: per_layer.get(layer) for layer in index.layers},
            )
        )
    return BandTable(
        target=target,
        metric_kind=index.kinds[target],
        layers=tuple(index.layers),
        rows=tuple(rows),
    )


def heatmap(results: Sequence[ProbeResult], layer_id: int, anchor_source: str) -> HeatmapMatrix:
    """Cross-task matrix at one layer. Tasks are ordered binary-first, then
    continuous; within each block descending by the task's target metric
    under the anchor source at this layer (undefined last, names break
    ties)."""
    index = _Index(results)
    if anchor_source not in index.sources:
        raise ValidationError(
            f"anchor source {anchor_source!r} not in results; available sources: {index.sources}"
        )
    if layer_id not in index.layers:
        raise ValidationError(f"layer {layer_id} not in results; available layers: {index.layers}")

    def anchor_value(task: str) -> float | None:
        return index.embedding.get((anchor_source, task), {}).get(layer_id)

    def block(kind: MetricKind) -> list[str]:
        tasks = [t for t in index.targets if index.kinds[t] is kind]
        return sorted(tasks, key=lambda t: (anchor_value(t) is None, -(anchor_value(t) or 0.0), t))

    ordered = block(MetricKind.AUC) + block(MetricKind.R2)
    cols = [t for t in ordered if t in index.sources]
    cols += sorted(s for s in index.sources if s not in ordered)

    values = tuple(
        tuple(index.embedding.get((source, target), {}).get(layer_id) for source in cols)
        for target in ordered
    )
    random_column = tuple(index.random.get(t) for t in ordered) if index.random else None
    return HeatmapMatrix(
        layer_id=layer_id,
        anchor_source=anchor_source,
        row_tasks=tuple(ordered),
        col_tasks=tuple(cols),
        values=values,
        random_column=random_column,
        kinds={t: index.kinds[t] for t in index.targets},
    )


# ---------------------------------------------------------------------------
# Tabular output


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_curves_csv(curves: Sequence[LayerCurve], path: Path | str) -> None:
    lines = ["source,target,metric_kind,point_kind,layer_id,value"]
    for curve in curves:
        for layer in curve.layers:
            lines.append(
                f"{curve.source},{curve.target},{curve.metric_kind.value},layer,{layer},{_fmt(curve.values[layer])}"
            )
        lines.append(
            f"{curve.source},{curve.target},{curve.metric_kind.value},raw,,{_fmt(curve.raw_baseline)}"
        )
        lines.append(
            f"{curve.source},{curve.target},{curve.metric_kind.value},prediction,,{_fmt(curve.prediction_baseline)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", "utf-8")


def write_histogram_csv(hist: BestLayerHistogram, path: Path | str) -> None:
    lines = ["layer_id,count"]
    lines.extend(f"{layer},{count}" for layer, count in hist.counts.items())
    Path(path).write_text("\n".join(lines) + "\n", "utf-8")


def write_histogram_json(hist: BestLayerHistogram, path: Path | str) -> None:
    payload = {
        "counts": {str(layer): count for layer, count in hist.counts.items()},
        "excluded": hist.excluded,
        "n_pairs": hist.n_pairs,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", "utf-8")


def write_band_csv(band: BandTable, path: Path | str) -> None:
    lines = ["target,source,same_task,self_rank,self_value,layer_id,value"]
    for row in band.rows:
        for layer in band.layers:
            lines.append(
                f"{band.target},{row.source},{str(row.same_task).lower()},{row.self_rank},"
                f"{_fmt(row.self_value)},{layer},{_fmt(row.values.get(layer))}"
            )
    Path(path).write_text("\n".join(lines) + "\n", "utf-8")


def write_heatmap_csv(matrix: HeatmapMatrix, path: Path | str) -> None:
    header = ["target"] + list(matrix.col_tasks)
    if matrix.random_column is not None:
        header.append("random_uniform")
    lines = [",".join(header)]
    for i, target in enumerate(matrix.row_tasks):
        cells = [target] + [_fmt(v) for v in matrix.values[i]]
        if matrix.random_column is not None:
            cells.append(_fmt(matrix.random_column[i]))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", "utf-8")


def write_heatmap_json(matrix: HeatmapMatrix, path: Path | str) -> None:
    payload = {
        "layer_id": matrix.layer_id,
        "anchor_source": matrix.anchor_source,
        "row_tasks": list(matrix.row_tasks),
        "col_tasks": list(matrix.col_tasks),
        "kinds": {t: k.value for t, k in matrix.kinds.items()},
        "values": [[v for v in row] for row in matrix.values],
        "random_column": list(matrix.random_column) if matrix.random_column is not None else None,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", "utf-8")
