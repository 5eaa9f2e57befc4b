"""CLI behavior: diagnostics and exit codes, end-to-end runs, report
generation, flag/help coverage, and crash-resume via a real SIGKILL."""

import hashlib
import json
import os
import signal
import subprocess
import sys
import time
from pathlib import Path

import pytest

from probegrid import cli, synth
from probegrid.types import VariableKind


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def demo_data(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("cli_demo")
    assert cli.main(["synth", "--demo", "demo", "--out-dir", str(out)]) == 0
    return out


def _input_flags(data: Path) -> list[str]:
    return [
        "--manifest", str(data / "manifest.json"),
        "--labels", str(data / "labels.csv"),
        "--meta", str(data / "variables.json"),
        "--predictions", str(data / "predictions.csv"),
    ]


class TestValidate:
    def test_clean_output_passes(self, demo_data, capsys):
        assert cli.main(["validate", *_input_flags(demo_data)]) == 0
        out = capsys.readouterr().out
        assert "0 errors" in out

    def test_truncated_matrix_reports_bytes(self, demo_data, tmp_path, capsys):
        import shutil

        broken = tmp_path / "broken"
        shutil.copytree(demo_data, broken)
        target = next(broken.glob("*.f32"))
        target.write_bytes(target.read_bytes()[:-4])
        assert cli.main(["validate", *_input_flags(broken)]) == 1
        out = capsys.readouterr().out
        assert "expected" in out and "found" in out

    def test_unknown_variable_kind_named(self, demo_data, tmp_path, capsys):
        meta = json.loads((demo_data / "variables.json").read_text())
        meta[0]["kind"] = "ordinal"
        bad_meta = tmp_path / "variables.json"
        bad_meta.write_text(json.dumps(meta))
        flags = _input_flags(demo_data)
        flags[5] = str(bad_meta)
        assert cli.main(["validate", *flags]) == 1
        out = capsys.readouterr().out
        assert "ordinal" in out and meta[0]["name"] in out


class TestRun:
    def test_row_count_and_idempotence(self, demo_data, tmp_path, capsys):
        out_dir = tmp_path / "run"
        args = ["run", *_input_flags(demo_data), "--out-dir", str(out_dir)]
        assert cli.main(args) == 0
        results = out_dir / "results.csv"
        lines = results.read_text().splitlines()
        assert len(lines) - 1 == 4 * 4 * 3 + 16 + 16 + 4
        first = _sha(results)
        assert cli.main(args) == 0
        assert _sha(results) == first
        provenance = json.loads((out_dir / "provenance.json").read_text())
        assert provenance["config"]["test_fraction"] == 0.125

    def test_worker_count_from_flag_and_env(self, demo_data, tmp_path, monkeypatch):
        a = tmp_path / "w1"
        b = tmp_path / "w8"
        assert cli.main(["run", *_input_flags(demo_data), "--out-dir", str(a), "--workers", "1"]) == 0
        monkeypatch.setenv("PROBEGRID_WORKERS", "8")
        assert cli.main(["run", *_input_flags(demo_data), "--out-dir", str(b)]) == 0
        assert _sha(a / "results.csv") == _sha(b / "results.csv")

    def test_target_filter(self, demo_data, tmp_path):
        out_dir = tmp_path / "filtered"
        assert cli.main([
            "run", *_input_flags(demo_data), "--out-dir", str(out_dir), "--targets", "age",
        ]) == 0
        lines = (out_dir / "results.csv").read_text().splitlines()[1:]
        assert lines
        assert all(line.split(",")[3] == "age" for line in lines)

    def test_config_file_with_flag_override(self, demo_data, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"split_seed": 5, "test_fraction": 0.2}))
        out_dir = tmp_path / "cfg"
        assert cli.main([
            "run", *_input_flags(demo_data), "--out-dir", str(out_dir),
            "--config", str(config), "--test-fraction", "0.25",
        ]) == 0
        provenance = json.loads((out_dir / "provenance.json").read_text())
        assert provenance["config"]["split_seed"] == 5  # from file
        assert provenance["config"]["test_fraction"] == 0.25  # flag wins


@pytest.fixture(scope="module")
def run_dir(demo_data, tmp_path_factory) -> Path:
    out_dir = tmp_path_factory.mktemp("run_for_report")
    assert cli.main(["run", *_input_flags(demo_data), "--out-dir", str(out_dir)]) == 0
    return out_dir


class TestReport:
    def test_all_kinds(self, run_dir, tmp_path):
        rep = tmp_path / "rep"
        results = str(run_dir / "results.csv")
        assert cli.main(["report", "--results", results, "--out-dir", str(rep),
                         "--kind", "layer-curves"]) == 0
        assert cli.main(["report", "--results", results, "--out-dir", str(rep),
                         "--kind", "best-layer-hist"]) == 0
        assert cli.main(["report", "--results", results, "--out-dir", str(rep),
                         "--kind", "bands", "--target", "age"]) == 0
        assert cli.main(["report", "--results", results, "--out-dir", str(rep),
                         "--kind", "heatmap", "--layer", "1"]) == 0
        names = {p.name for p in rep.iterdir()}
        assert {"layer_curves.csv", "layer_curves.svg", "best_layer_hist.csv",
                "best_layer_hist.json", "best_layer_hist.svg", "bands_age.csv",
                "bands_age.svg", "heatmap_layer1.csv", "heatmap_layer1.json",
                "heatmap_layer1.svg"} <= names

    def test_unknown_kind_is_usage_error(self, run_dir, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["report", "--results", str(run_dir / "results.csv"),
                      "--out-dir", str(tmp_path), "--kind", "pie"])
        assert excinfo.value.code == 1

    def test_bands_requires_target(self, run_dir, tmp_path, capsys):
        code = cli.main(["report", "--results", str(run_dir / "results.csv"),
                         "--out-dir", str(tmp_path), "--kind", "bands"])
        assert code == 1

    def test_missing_anchor_lists_sources(self, tmp_path, capsys):
        # height_like has no eye_position task; heatmap without an anchor
        # must fail and name the available sources.
        data = tmp_path / "data"
        scenario = synth.height_like_scenario(n_patients=300)
        synth.write_scenario(scenario, tmp_path / "scenario.json")
        assert cli.main(["synth", "--scenario", str(tmp_path / "scenario.json"),
                         "--out-dir", str(data)]) == 0
        out_dir = tmp_path / "run"
        assert cli.main([
            "run",
            "--manifest", str(data / "manifest.json"),
            "--labels", str(data / "labels.csv"),
            "--meta", str(data / "variables.json"),
            "--out-dir", str(out_dir),
        ]) == 0
        code = cli.main(["report", "--results", str(out_dir / "results.csv"),
                         "--out-dir", str(tmp_path / "rep"), "--kind", "heatmap", "--layer", "1"])
        assert code == 1
        err = capsys.readouterr().err
        assert "height_like" in err and "testosterone_like" in err


class TestHelp:
    def test_every_flag_appears_in_help(self, capsys):
        for sub in ("validate", "run", "report", "synth"):
            with pytest.raises(SystemExit) as excinfo:
                cli.main([sub, "--help"])
            assert excinfo.value.code == 0
            help_text = capsys.readouterr().out
            parser = cli.build_parser()
            subparser = parser._subparsers._group_actions[0].choices[sub]
            for action in subparser._actions:
                for option in action.option_strings:
                    assert option in help_text, f"{sub}: {option} missing from --help"

    def test_env_override_documented(self, capsys):
        with pytest.raises(SystemExit):
            cli.main(["run", "--help"])
        assert "PROBEGRID_WORKERS" in capsys.readouterr().out


class TestKillResume:
    def _scenario(self) -> synth.SynthScenario:
        tasks = tuple(
            synth.SynthTask(
                f"task_{i}",
                VariableKind.CONTINUOUS if i % 2 else VariableKind.BINARY,
                tuple(1.0 if j == i else 0.0 for j in range(10)),
                noise=0.4,
                missing_rate=0.05,
            )
            for i in range(10)
        )
        layers = tuple(
            synth.SynthLayer(i, channels=64, relevance=0.5 + 0.5 * (i % 2), nuisance=2)
            for i in range(16)
        )
        return synth.SynthScenario(
            name="killtest", seed=23, n_patients=3000, tasks=tasks, layers=layers,
            source_names=("task_0", "task_1", "task_2"),
        )

    def test_sigkill_midway_then_resume_matches_clean_run(self, tmp_path):
        data = tmp_path / "data"
        synth.generate(self._scenario(), data)
        flags = [
            "--manifest", str(data / "manifest.json"),
            "--labels", str(data / "labels.csv"),
            "--meta", str(data / "variables.json"),
            "--predictions", str(data / "predictions.csv"),
            "--exact-masks", "--workers", "1",
        ]
        clean_dir = tmp_path / "clean"
        assert cli.main(["run", *flags, "--out-dir", str(clean_dir)]) == 0

        killed_dir = tmp_path / "killed"
        total_cells = 3 * 16 + 3 + 3 + 1
        process = subprocess.Popen(
            [sys.executable, "-m", "probegrid.cli", "run", *flags, "--out-dir", str(killed_dir)],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        wal = killed_dir / "results.csv.wal"
        killed = False
        deadline = time.monotonic() + 120
        while process.poll() is None and time.monotonic() < deadline:
            if wal.exists():
                committed = max(0, wal.read_text().count("\n") - 1)
                if committed >= total_cells // 2:
                    os.kill(process.pid, signal.SIGKILL)
                    killed = True
                    break
            time.sleep(0.02)
        process.wait(timeout=120)

        if killed:
            assert wal.exists(), "write-ahead file must survive the kill"
            assert not (killed_dir / "results.csv").exists()
        assert cli.main(["run", *flags, "--out-dir", str(killed_dir), "--resume"]) == 0
        assert not wal.exists()
        assert _sha(killed_dir / "results.csv") == _sha(clean_dir / "results.csv")
        assert killed, "run finished before 50% of cells; enlarge the scenario"
