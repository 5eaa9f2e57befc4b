"""Shared fixtures: generated scenario datasets and grid runs, built once
per session because several test modules inspect the same outputs."""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for _oracles

from probegrid import analysis, grid, ingest, synth


@dataclass
class ScenarioRun:
    scenario: synth.SynthScenario
    out: synth.SynthOutput
    table: object
    embeddings: list
    predictions: dict
    report: grid.GridReport
    config: grid.GridConfig


def _run_scenario(scenario: synth.SynthScenario, root: Path, config: grid.GridConfig | None = None) -> ScenarioRun:
    out = synth.generate(scenario, root / scenario.name)
    meta = ingest.load_variable_meta(out.meta_path)
    table = ingest.load_labels(out.labels_path, meta)
    embeddings = ingest.load_embeddings(ingest.load_manifest(out.manifest_path), table)
    predictions = ingest.load_predictions(out.predictions_path, table)
    config = config or grid.GridConfig()
    report = grid.run_grid(embeddings, table, predictions, config)
    return ScenarioRun(scenario, out, table, embeddings, predictions, report, config)


@pytest.fixture(scope="session")
def demo_run(tmp_path_factory) -> ScenarioRun:
    return _run_scenario(synth.demo_scenario(), tmp_path_factory.mktemp("demo"))


@pytest.fixture(scope="session")
def height_run(tmp_path_factory) -> ScenarioRun:
    return _run_scenario(synth.height_like_scenario(), tmp_path_factory.mktemp("height"))


@pytest.fixture(scope="session")
def midpeak_run(tmp_path_factory) -> ScenarioRun:
    return _run_scenario(synth.midpeak_scenario(), tmp_path_factory.mktemp("midpeak"))


@pytest.fixture(scope="session")
def plateau_run(tmp_path_factory) -> ScenarioRun:
    return _run_scenario(synth.plateau_scenario(), tmp_path_factory.mktemp("plateau"))


def embedding_value_index(report: grid.GridReport) -> dict:
    """(source, target, layer_id) -> metric value for embedding rows."""
    return {
        (r.spec.source_task, r.spec.target, r.spec.layer_id): r.value
        for r in report.results
        if r.spec.layer_id is not None
    }
