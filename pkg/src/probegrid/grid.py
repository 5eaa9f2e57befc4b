"""Enumeration and execution of the full probe grid plus baselines.

The unit of work is a cell: one (source, layer) embedding design, one raw-
value source, one prediction source, or the random-uniform source. All
targets of a cell are fitted sequentially in declared order against one
shared Gram factorization, so a cell's rows never depend on scheduling.
Cells run on a thread pool; completed cells stream to a write-ahead file so
an interrupted run can resume; the final table is sorted by a total key,
making results.csv byte-identical for any worker count.

results.csv columns:
``source,source_kind,layer_id,target,metric_kind,value,n_train,n_test,lambda,status``
with source_kind one of embedding|raw|prediction|random, empty value for
undefined metrics, and empty layer_id for non-embedding sources.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .errors import AbortRun, DegenerateInputError, SingularDesignError, ValidationError
from .ingest import serialize_labels, serialize_predictions
from .metrics import auc, r_squared
from .solver import DEFAULT_RIDGE_SCALES, TargetColumn, build_gram, fit_targets, predict
from .stablehash import unit_interval
from .types import (
    RANDOM_SOURCE_NAME,
    STATUS_INSUFFICIENT_ROWS,
    STATUS_MISSING_SOURCE,
    STATUS_OK,
    STATUS_SINGULAR,
    STATUS_UNDEFINED_METRIC,
    LabelTable,
    LayerEmbedding,
    MetricKind,
    ProbeResult,
    ProbeSpec,
    SourceKind,
    SplitAssignment,
    VariableKind,
    metric_for,
)

RESULTS_HEADER = "source,source_kind,layer_id,target,metric_kind,value,n_train,n_test,lambda,status"

Predictions = dict[str, tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class GridConfig:
    """Run configuration; every field lands in the provenance record."""

    test_fraction: float = 0.125
    split_seed: int = 1
    random_seed: int = 1
    ridge_scales: tuple[float, ...] = DEFAULT_RIDGE_SCALES
    exact_masks: bool = False
    sources: tuple[str, ...] | None = None  # None = all manifest sources
    targets: tuple[str, ...] | None = None  # None = all label variables
    layers: tuple[int, ...] | None = None  # None = all layers
    anchor_source: str | None = None  # None = "eye_position" when present

    def to_dict(self) -> dict:
        return {
            "test_fraction": self.test_fraction,
            "split_seed": self.split_seed,
            "random_seed": self.random_seed,
            "ridge_scales": list(self.ridge_scales),
            "exact_masks": self.exact_masks,
            "sources": list(self.sources) if self.sources is not None else None,
            "targets": list(self.targets) if self.targets is not None else None,
            "layers": list(self.layers) if self.layers is not None else None,
            "anchor_source": self.anchor_source,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GridConfig":
        kwargs = {}
        for key in (
            "test_fraction",
            "split_seed",
            "random_seed",
            "ridge_scales",
            "exact_masks",
            "sources",
            "targets",
            "layers",
            "anchor_source",
        ):
            if key in data and data[key] is not None:
                value = data[key]
                if key in ("ridge_scales", "sources", "targets", "layers"):
                    value = tuple(value)
                kwargs[key] = value
        unknown = set(data) - {
            "test_fraction",
            "split_seed",
            "random_seed",
            "ridge_scales",
            "exact_masks",
            "sources",
            "targets",
            "layers",
            "anchor_source",
        }
        if unknown:
            raise ValidationError(f"unknown config key(s): {sorted(unknown)}")
        return cls(**kwargs)


@dataclass(frozen=True)
class GridReport:
    results: tuple[ProbeResult, ...]
    provenance: dict | None = None


# ---------------------------------------------------------------------------
# Row codec (must be the exact inverse of itself: analysis re-reads the CSV)


def result_to_fields(result: ProbeResult) -> list[str]:
    spec = result.spec
    return [
        spec.source_task,
        spec.source_kind.value,
        "" if spec.layer_id is None else str(spec.layer_id),
        spec.target,
        result.metric_kind.value,
        "" if result.value is None else repr(float(result.value)),
        str(result.n_train),
        str(result.n_test),
        repr(float(result.ridge_lambda_used)),
        result.status,
    ]


def fields_to_result(fields: Sequence[str]) -> ProbeResult:
    if len(fields) != 10:
        raise ValidationError(f"results row has {len(fields)} fields, expected 10")
    source, kind, layer, target, metric, value, n_train, n_test, lam, status = fields
    spec = ProbeSpec(
        source_kind=SourceKind(kind),
        source_task=source,
        target=target,
        layer_id=int(layer) if layer != "" else None,
    )
    return ProbeResult(
        spec=spec,
        metric_kind=MetricKind(metric),
        value=float(value) if value != "" else None,
        n_train=int(n_train),
        n_test=int(n_test),
        ridge_lambda_used=float(lam),
        status=status,
    )


_KIND_RANK = {
    SourceKind.EMBEDDING: 0,
    SourceKind.RAW: 1,
    SourceKind.PREDICTION: 2,
    SourceKind.RANDOM: 3,
}


def _row_sort_key(result: ProbeResult):
    spec = result.spec
    layer = spec.layer_id if spec.layer_id is not None else -1
    return (spec.source_task, spec.target, _KIND_RANK[spec.source_kind], layer)


def write_results_csv(report: GridReport, path: Path | str) -> None:
    lines = [RESULTS_HEADER]
    lines.extend(",".join(result_to_fields(r)) for r in report.results)
    Path(path).write_text("\n".join(lines) + "\n", "utf-8")


def load_results(path: Path | str, provenance_path: Path | str | None = None) -> GridReport:
    text = Path(path).read_text("utf-8")
    lines = text.splitlines()
    if not lines or lines[0] != RESULTS_HEADER:
        raise ValidationError(f"results file {path}: unexpected header")
    results = tuple(fields_to_result(line.split(",")) for line in lines[1:] if line)
    provenance = None
    if provenance_path is not None and Path(provenance_path).exists():
        provenance = json.loads(Path(provenance_path).read_text("utf-8"))
    return GridReport(results=results, provenance=provenance)


def write_provenance(report: GridReport, path: Path | str) -> None:
    Path(path).write_text(json.dumps(report.provenance, indent=2, sort_keys=True) + "\n", "utf-8")


# ---------------------------------------------------------------------------
# Scoring helpers


def _score_probe(
    spec: ProbeSpec,
    probe,
    features: np.ndarray,
    target: TargetColumn,
    metric_kind: MetricKind,
    usable_train: int,
    test_rows: np.ndarray,
    lambda_used: float,
    status: str = STATUS_OK,
) -> ProbeResult:
    """Score a fitted probe (or record why there is nothing to score)."""
    n_test = int(test_rows.sum())
    value = None
    if probe is not None:
        scores = predict(probe, features[test_rows])
        truths = target.values[test_rows]
        if metric_kind is MetricKind.AUC:
            value = auc(scores, truths)
        else:
            value = r_squared(scores, truths)
        status = STATUS_OK if value is not None else STATUS_UNDEFINED_METRIC
    return ProbeResult(
        spec=spec,
        metric_kind=metric_kind,
        value=value,
        n_train=usable_train,
        n_test=n_test,
        ridge_lambda_used=lambda_used,
        status=status,
    )


def _target_columns(label_table: LabelTable, targets: Sequence[str]) -> list[TargetColumn]:
    cols = []
    for name in targets:
        values, present = label_table.column(name)
        cols.append(TargetColumn(name=name, values=values, present=present))
    return cols


def _run_embedding_cell(
    embedding: LayerEmbedding,
    target_cols: Sequence[TargetColumn],
    kinds: Sequence[MetricKind],
    split: SplitAssignment,
    config: GridConfig,
) -> list[ProbeResult]:
    features = embedding.matrix
    train = split.train_mask
    test = split.test_mask
    label = f"{embedding.source_task}/layer {embedding.layer_id}"

    cache = None
    cache_status = STATUS_OK
    try:
        cache = build_gram(features, train, config.ridge_scales, label=label)
    except DegenerateInputError:
        cache_status = STATUS_INSUFFICIENT_ROWS
    except SingularDesignError:
        cache_status = STATUS_SINGULAR

    rows: list[ProbeResult] = []
    if cache is not None and not config.exact_masks:
        probes = fit_targets(
            cache, features, target_cols, train, ridge_scales=config.ridge_scales, source_key=label
        )
    else:
        probes = [None] * len(target_cols)

    for target, kind, probe in zip(target_cols, kinds, probes):
        spec = ProbeSpec.embedding(embedding.source_task, embedding.layer_id, target.name)
        usable_train = int((train & target.present).sum())
        test_rows = test & target.present
        status = cache_status
        lambda_used = cache.lambda_ if cache is not None else 0.0
        if cache is not None and config.exact_masks:
            try:
                probe = fit_targets(
                    cache,
                    features,
                    [target],
                    train,
                    exact_masks=True,
                    ridge_scales=config.ridge_scales,
                    source_key=label,
                )[0]
            except DegenerateInputError:
                probe, status = None, STATUS_INSUFFICIENT_ROWS
            except SingularDesignError:
                probe, status = None, STATUS_SINGULAR
            if probe is not None:
                lambda_used = probe.lambda_used
        if cache is not None and probe is None and status == STATUS_OK:
            status = STATUS_INSUFFICIENT_ROWS
        rows.append(
            _score_probe(spec, probe, features, target, kind, usable_train, test_rows, lambda_used, status)
        )
    return rows


def _run_1d_cell(
    spec_of: Callable[[str], ProbeSpec],
    feature_values: np.ndarray,
    feature_present: np.ndarray,
    target_cols: Sequence[TargetColumn],
    kinds: Sequence[MetricKind],
    split: SplitAssignment,
    config: GridConfig,
    label: str,
) -> list[ProbeResult]:
    """Baseline path: a single scalar feature through the identical
    solver/metric pipeline. Rows are usable only where both the feature and
    the target are present, so the Gram is rebuilt per target."""
    features = np.asarray(feature_values, dtype=np.float64).reshape(-1, 1)
    rows: list[ProbeResult] = []
    for target, kind in zip(target_cols, kinds):
        spec = spec_of(target.name)
        usable_train = split.train_mask & feature_present & target.present
        test_rows = split.test_mask & feature_present & target.present
        n_usable = int(usable_train.sum())
        probe = None
        status = STATUS_OK
        lambda_used = 0.0
        if n_usable < 2:
            status = STATUS_INSUFFICIENT_ROWS
        else:
            safe = usable_train & np.isfinite(features[:, 0])
            if int(safe.sum()) < 2:
                status = STATUS_INSUFFICIENT_ROWS
            else:
                try:
                    cache = build_gram(features, usable_train, config.ridge_scales, label=label)
                    probe = fit_targets(
                        cache, features, [target], usable_train,
                        ridge_scales=config.ridge_scales, source_key=label,
                    )[0]
                    lambda_used = cache.lambda_
                except DegenerateInputError:
                    status = STATUS_INSUFFICIENT_ROWS
                except SingularDesignError:
                    status = STATUS_SINGULAR
        rows.append(
            _score_probe(spec, probe, features, target, kind, n_usable, test_rows, lambda_used, status)
        )
    return rows


def _missing_source_rows(
    spec_of: Callable[[str], ProbeSpec],
    target_cols: Sequence[TargetColumn],
    kinds: Sequence[MetricKind],
) -> list[ProbeResult]:
    return [
        ProbeResult(
            spec=spec_of(target.name),
            metric_kind=kind,
            value=None,
            n_train=0,
            n_test=0,
            ridge_lambda_used=0.0,
            status=STATUS_MISSING_SOURCE,
        )
        for target, kind in zip(target_cols, kinds)
    ]


def random_uniform_features(label_table: LabelTable, seed: int) -> np.ndarray:
    """The random baseline's per-image uniform(0,1) feature: a pure function
    of (seed, image_id), like the split hash."""
    return np.array(
        [unit_interval(seed, RANDOM_SOURCE_NAME, img) for img in label_table.image_ids],
        dtype=np.float64,
    )


# ---------------------------------------------------------------------------
# Public single-probe baselines


def baseline_raw_value(
    source_var: str,
    target_var: str,
    label_table: LabelTable,
    split: SplitAssignment,
    ridge_scales: Sequence[float] = DEFAULT_RIDGE_SCALES,
) -> ProbeResult:
    """1-D least squares from one variable's raw values to a target,
    scored on test rows where both are present."""
    config = GridConfig(ridge_scales=tuple(ridge_scales))
    values, present = label_table.column(source_var)
    target = _target_column(label_table, target_var)
    kind = metric_for(label_table.variable(target_var).kind)
    return _run_1d_cell(
        lambda t: ProbeSpec.raw_value(source_var, t),
        values, present, [target], [kind], split, config, f"raw:{source_var}",
    )[0]


def baseline_prediction(
    source_task: str,
    prediction: tuple[np.ndarray, np.ndarray],
    target_var: str,
    label_table: LabelTable,
    split: SplitAssignment,
    ridge_scales: Sequence[float] = DEFAULT_RIDGE_SCALES,
) -> ProbeResult:
    """1-D least squares from a source model's scalar predictions."""
    config = GridConfig(ridge_scales=tuple(ridge_scales))
    values, present = prediction
    target = _target_column(label_table, target_var)
    kind = metric_for(label_table.variable(target_var).kind)
    return _run_1d_cell(
        lambda t: ProbeSpec.prediction(source_task, t),
        values, present, [target], [kind], split, config, f"prediction:{source_task}",
    )[0]


def baseline_random_source(
    target_var: str,
    label_table: LabelTable,
    split: SplitAssignment,
    seed: int,
    ridge_scales: Sequence[float] = DEFAULT_RIDGE_SCALES,
) -> ProbeResult:
    """1-D least squares from a seeded uniform(0,1) per-image feature."""
    config = GridConfig(ridge_scales=tuple(ridge_scales), random_seed=seed)
    features = random_uniform_features(label_table, seed)
    present = np.ones(label_table.n_images, dtype=bool)
    target = _target_column(label_table, target_var)
    kind = metric_for(label_table.variable(target_var).kind)
    return _run_1d_cell(
        lambda t: ProbeSpec.random_uniform(t),
        features, present, [target], [kind], split, config, "random_uniform",
    )[0]


def _target_column(label_table: LabelTable, name: str) -> TargetColumn:
    values, present = label_table.column(name)
    return TargetColumn(name=name, values=values, present=present)


# ---------------------------------------------------------------------------
# Content digests (provenance defaults when no file digests are supplied)


def _digest_labels(label_table: LabelTable) -> str:
    return hashlib.sha256(serialize_labels(label_table)).hexdigest()


def _digest_embeddings(embeddings: Sequence[LayerEmbedding]) -> str:
    digest = hashlib.sha256()
    for emb in sorted(embeddings, key=lambda e: (e.source_task, e.layer_id)):
        digest.update(emb.source_task.encode())
        digest.update(str(emb.layer_id).encode())
        digest.update(emb.matrix.tobytes())
    return digest.hexdigest()


def _digest_predictions(image_ids: Sequence[str], predictions: Predictions) -> str:
    ordered = {task: predictions[task] for task in sorted(predictions)}
    return hashlib.sha256(serialize_predictions(list(image_ids), ordered)).hexdigest()


# ---------------------------------------------------------------------------
# Write-ahead log


class _Wal:
    """Append-only JSONL of completed cells keyed by a provenance digest.

    One header line, then one line per completed cell. A rerun with the
    same digest skips those cells; a digest mismatch restarts cleanly.
    """

    def __init__(self, path: Path, digest: str):
        self.path = path
        self.digest = digest
        self._handle = None

    def load_completed(self, resume: bool) -> dict[tuple, list[ProbeResult]]:
        completed: dict[tuple, list[ProbeResult]] = {}
        if resume and self.path.exists():
            valid_lines: list[str] = []
            try:
                with open(self.path, "r", encoding="utf-8") as handle:
                    lines = handle.read().split("\n")
                header = json.loads(lines[0])
                if header.get("kind") == "header" and header.get("digest") == self.digest:
                    valid_lines.append(lines[0])
                    for line in lines[1:]:
                        if not line:
                            continue
                        try:
                            record = json.loads(line)
                            rows = [fields_to_result(fields) for fields in record["rows"]]
                        except (json.JSONDecodeError, KeyError, ValidationError, ValueError):
                            break  # torn tail write; drop it and everything after
                        completed[tuple(record["cell"])] = rows
                        valid_lines.append(line)
            except (json.JSONDecodeError, OSError, IndexError):
                completed = {}
                valid_lines = []
            if completed:
                # Rewrite so the file is a clean prefix before appending.
                with open(self.path, "w", encoding="utf-8") as handle:
                    handle.write("\n".join(valid_lines) + "\n")
                self._handle = open(self.path, "a", encoding="utf-8")
                return completed
        self._handle = open(self.path, "w", encoding="utf-8")
        self._handle.write(json.dumps({"kind": "header", "digest": self.digest}) + "\n")
        self._handle.flush()
        return {}

    def append(self, cell: tuple, rows: list[ProbeResult]) -> None:
        record = {"cell": list(cell), "rows": [result_to_fields(r) for r in rows]}
        self._handle.write(json.dumps(record) + "\n")
        self._handle.flush()

    def close(self, delete: bool) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None
        if delete and self.path.exists():
            self.path.unlink()


# ---------------------------------------------------------------------------
# The grid


def _resolve_filters(
    embeddings: Sequence[LayerEmbedding],
    label_table: LabelTable,
    predictions: Predictions,
    config: GridConfig,
):
    available_sources = sorted({e.source_task for e in embeddings})
    available_layers = sorted({e.layer_id for e in embeddings})
    variables = label_table.variable_names()

    if config.sources is not None:
        unknown = [s for s in config.sources if s not in available_sources]
        if unknown:
            raise ValidationError(f"unknown source(s) in filter: {unknown}; available: {available_sources}")
        sources = [s for s in available_sources if s in config.sources]
    else:
        sources = available_sources

    if config.targets is not None:
        unknown = [t for t in config.targets if t not in variables]
        if unknown:
            raise ValidationError(f"unknown target(s) in filter: {unknown}; available: {variables}")
        targets = [t for t in variables if t in config.targets]
    else:
        targets = list(variables)

    if config.layers is not None:
        unknown = [l for l in config.layers if l not in available_layers]
        if unknown:
            raise ValidationError(f"unknown layer(s) in filter: {unknown}; available: {available_layers}")
        layers = [l for l in available_layers if l in config.layers]
    else:
        layers = available_layers

    pred_sources = [s for s in sorted(predictions) if config.sources is None or s in config.sources]
    return sources, targets, layers, pred_sources


def run_grid(
    embeddings: Sequence[LayerEmbedding],
    label_table: LabelTable,
    predictions: Predictions | None = None,
    config: GridConfig | None = None,
    *,
    workers: int = 1,
    wal_path: Path | str | None = None,
    resume: bool = False,
    progress: Callable[[int, int, tuple], None] | None = None,
    labels_digest: str | None = None,
    manifest_digest: str | None = None,
    predictions_digest: str | None = None,
) -> GridReport:
    """Fit and score every probe in the grid; returns the sorted report.

    For each (source, layer) embedding cell the Gram is built once and all
    targets are fitted against it; raw-value, prediction, and random-uniform
    baselines use 1-D features through the identical solver/metric path.
    ``progress(done, total, cell)`` may raise AbortRun to stop; completed
    cells stay in the write-ahead file for ``resume=True`` to pick up.
    """
    predictions = predictions or {}
    config = config or GridConfig()
    sources, targets, layers, pred_sources = _resolve_filters(embeddings, label_table, predictions, config)

    split = _split_for(label_table, config)
    target_cols = _target_columns(label_table, targets)
    kinds = [metric_for(label_table.variable(t).kind) for t in targets]

    emb_by_key = {
        (e.source_task, e.layer_id): e
        for e in embeddings
        if e.source_task in sources and e.layer_id in layers
    }

    cells: list[tuple] = []
    for source, layer in sorted(emb_by_key):
        cells.append(("embedding", source, str(layer)))
    for source in sources:
        cells.append(("raw", source))
    for source in pred_sources:
        cells.append(("prediction", source))
    cells.append(("random",))

    provenance = {
        "format_version": 1,
        "engine_version": __version__,
        "config": config.to_dict(),
        "labels_digest": labels_digest or _digest_labels(label_table),
        "manifest_digest": manifest_digest or _digest_embeddings(list(emb_by_key.values())),
        "predictions_digest": predictions_digest
        or (_digest_predictions(label_table.image_ids, predictions) if predictions else None),
    }
    digest = hashlib.sha256(json.dumps(provenance, sort_keys=True).encode()).hexdigest()
    provenance["provenance_digest"] = digest

    def run_cell(cell: tuple) -> list[ProbeResult]:
        kind = cell[0]
        if kind == "embedding":
            emb = emb_by_key[(cell[1], int(cell[2]))]
            return _run_embedding_cell(emb, target_cols, kinds, split, config)
        if kind == "raw":
            source = cell[1]
            try:
                values, present = label_table.column(source)
            except KeyError:
                return _missing_source_rows(
                    lambda t: ProbeSpec.raw_value(source, t), target_cols, kinds
                )
            return _run_1d_cell(
                lambda t: ProbeSpec.raw_value(source, t),
                values, present, target_cols, kinds, split, config, f"raw:{source}",
            )
        if kind == "prediction":
            source = cell[1]
            values, present = predictions[source]
            return _run_1d_cell(
                lambda t: ProbeSpec.prediction(source, t),
                values, present, target_cols, kinds, split, config, f"prediction:{source}",
            )
        if kind == "random":
            features = random_uniform_features(label_table, config.random_seed)
            present = np.ones(label_table.n_images, dtype=bool)
            return _run_1d_cell(
                ProbeSpec.random_uniform,
                features, present, target_cols, kinds, split, config, "random_uniform",
            )
        raise ValidationError(f"unknown cell kind {kind!r}")

    wal = None
    completed: dict[tuple, list[ProbeResult]] = {}
    if wal_path is not None:
        wal = _Wal(Path(wal_path), digest)
        completed = wal.load_completed(resume)
        completed = {cell: rows for cell, rows in completed.items() if cell in set(cells)}

    pending = [cell for cell in cells if cell not in completed]
    total = len(cells)
    done = len(completed)
    aborted: BaseException | None = None

    pool = ThreadPoolExecutor(max_workers=max(1, workers))
    try:
        futures = {pool.submit(run_cell, cell): cell for cell in pending}
        for future in as_completed(futures):
            cell = futures[future]
            rows = future.result()  # cell failures abort the run
            if wal is not None:
                wal.append(cell, rows)
            completed[cell] = rows
            done += 1
            if progress is not None:
                try:
                    progress(done, total, cell)
                except AbortRun as exc:
                    aborted = exc
                    break
    finally:
        pool.shutdown(wait=True, cancel_futures=True)
        if wal is not None:
            wal.close(delete=aborted is None and len(completed) == total)

    if aborted is not None:
        raise aborted

    rows = [row for cell in cells for row in completed[cell]]
    rows.sort(key=_row_sort_key)
    return GridReport(results=tuple(rows), provenance=provenance)


def _split_for(label_table: LabelTable, config: GridConfig) -> SplitAssignment:
    from .ingest import assign_split

    return assign_split(label_table, config.test_fraction, config.split_seed)


def expected_row_count(n_sources: int, n_targets: int, n_layers: int, n_pred_sources: int) -> int:
    """sources*targets*layers embedding rows + sources*targets raw rows +
    pred_sources*targets prediction rows + targets random rows."""
    return n_sources * n_targets * n_layers + n_sources * n_targets + n_pred_sources * n_targets + n_targets
