"""Aggregate derivations: histogram tie-breaks and exclusions, band
annotation, heatmap ordering (with an independent re-sort oracle), and the
pure-function-of-the-CSV contract."""

import pytest

from probegrid import analysis, grid
from probegrid.errors import ValidationError
from probegrid.types import (
    MetricKind,
    ProbeResult,
    ProbeSpec,
    STATUS_UNDEFINED_METRIC,
)


def _emb(source, target, layer, value, kind=MetricKind.R2):
    return ProbeResult(
        spec=ProbeSpec.embedding(source, layer, target),
        metric_kind=kind,
        value=value,
        n_train=10,
        n_test=5,
        ridge_lambda_used=0.0,
        status="ok" if value is not None else STATUS_UNDEFINED_METRIC,
    )


def _random_row(target, value, kind=MetricKind.R2):
    return ProbeResult(
        spec=ProbeSpec.random_uniform(target),
        metric_kind=kind,
        value=value,
        n_train=10,
        n_test=5,
        ridge_lambda_used=0.0,
    )


class TestBestLayerHistogram:
    def test_single_pair_peak(self):
        rows = [_emb("a", "b", l, v) for l, v in [(0, 0.1), (3, 0.9), (5, 0.4)]]
        hist = analysis.best_layer_histogram(rows)
        assert hist.counts == {3: 1}
        assert hist.excluded == 0

    def test_tie_breaks_toward_smaller_layer(self):
        rows = [_emb("a", "b", l, v) for l, v in [(5, 0.7), (9, 0.7), (1, 0.2)]]
        hist = analysis.best_layer_histogram(rows)
        assert hist.counts == {5: 1}

    def test_same_task_pairs_excluded(self):
        rows = [_emb("a", "a", 0, 0.9), _emb("a", "b", 0, 0.5)]
        hist = analysis.best_layer_histogram(rows)
        assert hist.n_pairs == 1
        assert hist.counts == {0: 1}

    def test_undefined_layers_skipped_and_counted(self):
        rows = [
            _emb("a", "b", 0, None), _emb("a", "b", 1, 0.3),
            _emb("a", "c", 0, None), _emb("a", "c", 1, None),
        ]
        hist = analysis.best_layer_histogram(rows)
        assert hist.counts == {1: 1}
        assert hist.excluded == 1

    def test_total_count_identity(self, midpeak_run):
        hist = analysis.best_layer_histogram(midpeak_run.report.results)
        n = len({r.spec.source_task for r in midpeak_run.report.results if r.spec.layer_id is not None})
        assert sum(hist.counts.values()) + hist.excluded == n * n - n

    def test_no_pairs_rejected(self):
        with pytest.raises(ValidationError):
            analysis.best_layer_histogram([_emb("a", "a", 0, 0.9)])


class TestBandTable:
    def test_same_task_flag_and_ranks(self):
        rows = [
            _emb("a", "a", 0, 0.9), _emb("b", "b", 0, 0.5), _emb("c", "c", 0, None),
            _emb("a", "t", 0, 0.4), _emb("b", "t", 0, 0.6), _emb("c", "t", 0, 0.1),
            _emb("a", "c", 0, 0.0), _emb("b", "c", 0, 0.0), _emb("c", "a", 0, 0.0),
            _emb("c", "b", 0, 0.0), _emb("a", "b", 0, 0.0), _emb("b", "a", 0, 0.0),
            _emb("t", "t", 0, 0.2), _emb("t", "a", 0, 0.0), _emb("t", "b", 0, 0.0),
            _emb("t", "c", 0, 0.0),
        ]
        band = analysis.band_table(rows, "t")
        by_source = {row.source: row for row in band.rows}
        assert by_source["t"].same_task is True
        assert by_source["a"].same_task is False
        # self values: a=0.9, b=0.5, t=0.2, c=None -> ranks a=0, b=1, t=2, c=3
        assert by_source["a"].self_rank == 0
        assert by_source["b"].self_rank == 1
        assert by_source["t"].self_rank == 2
        assert by_source["c"].self_rank == 3

    def test_unknown_target_rejected(self, demo_run):
        with pytest.raises(ValidationError, match="available"):
            analysis.band_table(demo_run.report.results, "nope")

    def test_easy_source_tops_hard_target_band(self, height_run):
        band = analysis.band_table(height_run.report.results, "height_like")
        best = {
            row.source: max(v for v in row.values.values() if v is not None)
            for row in band.rows
        }
        same_task = best["height_like"]
        assert best["testosterone_like"] > same_task


class TestHeatmap:
    def _rows(self):
        rows = []
        tasks = [("b1", MetricKind.AUC), ("b2", MetricKind.AUC), ("b3", MetricKind.AUC),
                 ("c1", MetricKind.R2), ("c2", MetricKind.R2)]
        anchor_vals = {"b1": 0.6, "b2": 0.9, "b3": 0.9, "c1": 0.2, "c2": 0.7}
        for target, kind in tasks:
            for source, _ in tasks:
                value = anchor_vals[target] if source == "anchor" else 0.5
                rows.append(_emb(source, target, 12, 0.5, kind))
            rows.append(_emb("anchor", target, 12, anchor_vals[target], kind))
            rows.append(_random_row(target, 0.01, kind))
        rows.append(_emb("anchor", "anchor", 12, 0.5, MetricKind.R2))
        return rows

    def test_binary_block_first_and_tie_break(self):
        matrix = analysis.heatmap(self._rows(), 12, "anchor")
        assert matrix.row_tasks[:3] == ("b2", "b3", "b1")  # 0.9 tie -> name order
        assert set(matrix.row_tasks[3:]) >= {"c1", "c2"}
        assert matrix.row_tasks[3] == "c2"  # 0.7 before 0.2

    def test_missing_anchor_lists_sources(self):
        with pytest.raises(ValidationError, match="available sources"):
            analysis.heatmap(self._rows(), 12, "nope")

    def test_random_column_present(self):
        matrix = analysis.heatmap(self._rows(), 12, "anchor")
        assert matrix.random_column is not None
        assert len(matrix.random_column) == len(matrix.row_tasks)

    def test_ordering_matches_resort_oracle(self, demo_run, tmp_path):
        path = tmp_path / "results.csv"
        grid.write_results_csv(demo_run.report, path)
        # Independent oracle: re-sort straight from the CSV text.
        anchor, layer = "eye_position", 1
        by_target = {}
        kinds = {}
        for line in path.read_text().splitlines()[1:]:
            source, source_kind, layer_id, target, metric, value, *_ = line.split(",")
            kinds[target] = metric
            if source == anchor and source_kind == "embedding" and layer_id == str(layer):
                by_target[target] = float(value) if value else None
        expected = sorted(
            (t for t in kinds if kinds[t] == "auc"),
            key=lambda t: (by_target.get(t) is None, -(by_target.get(t) or 0), t),
        ) + sorted(
            (t for t in kinds if kinds[t] == "r2"),
            key=lambda t: (by_target.get(t) is None, -(by_target.get(t) or 0), t),
        )
        matrix = analysis.heatmap(demo_run.report.results, layer, anchor)
        assert list(matrix.row_tasks) == expected

    def test_ordering_is_stable(self, demo_run):
        a = analysis.heatmap(demo_run.report.results, 1, "eye_position")
        b = analysis.heatmap(demo_run.report.results, 1, "eye_position")
        assert a.row_tasks == b.row_tasks
        assert a.values == b.values


class TestPureFunctionOfCsv:
    def test_aggregates_from_reparsed_csv_are_identical(self, demo_run, tmp_path):
        path = tmp_path / "results.csv"
        grid.write_results_csv(demo_run.report, path)
        reloaded = grid.load_results(path).results

        assert analysis.best_layer_histogram(reloaded) == analysis.best_layer_histogram(
            demo_run.report.results
        )
        assert analysis.band_table(reloaded, "age") == analysis.band_table(
            demo_run.report.results, "age"
        )
        assert analysis.heatmap(reloaded, 1, "eye_position") == analysis.heatmap(
            demo_run.report.results, 1, "eye_position"
        )
        assert analysis.layer_curves(reloaded) == analysis.layer_curves(demo_run.report.results)
