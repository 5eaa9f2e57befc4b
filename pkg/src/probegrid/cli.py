"""Command-line entry point: validate inputs, run the grid, derive reports,
generate synthetic datasets.

Exit codes: 0 ok, 1 validation or usage error, 2 runtime abort.
Configuration precedence: flags > --config JSON file > built-in defaults;
the effective configuration is recorded in the run's provenance JSON.
The worker count may also come from the PROBEGRID_WORKERS environment
variable (flag wins); it never changes output bytes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import __version__, analysis, grid, ingest, svgfig, synth
from .errors import AbortRun, ProbeGridError, ValidationError

REPORT_KINDS = ("layer-curves", "best-layer-hist", "bands", "heatmap")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _csv_list(raw: str) -> tuple[str, ...]:
    return tuple(part for part in raw.split(",") if part)


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(part) for part in raw.split(",") if part)


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(part) for part in raw.split(",") if part)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="probegrid",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"probegrid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_inputs(p, predictions_required=False):
        p.add_argument("--manifest", required=True, help="embedding container manifest.json")
        p.add_argument("--labels", required=True, help="labels CSV (image_id,patient_id,<var...>)")
        p.add_argument("--meta", required=True, help="variable meta JSON ([{name, kind}])")
        p.add_argument("--predictions", required=predictions_required, default=None,
                       help="optional predictions CSV (image_id,<source_task...>)")

    p_val = sub.add_parser("validate", help="check manifest/labels/predictions coherence")
    add_inputs(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="execute the probe grid and write results.csv")
    add_inputs(p_run)
    p_run.add_argument("--out-dir", required=True, help="directory for results.csv + provenance.json")
    p_run.add_argument("--config", default=None, help="JSON config file (flags override it)")
    p_run.add_argument("--test-fraction", type=float, default=None, help="held-out patient fraction (default 0.125)")
    p_run.add_argument("--split-seed", type=int, default=None, help="seed for the patient-grouped split")
    p_run.add_argument("--random-seed", type=int, default=None, help="seed for the random-uniform baseline")
    p_run.add_argument("--ridge-scales", type=_float_list, default=None,
                       help="comma-separated ridge schedule scales (x trace/d)")
    p_run.add_argument("--exact-masks", action="store_true", default=None,
                       help="rebuild the Gram per target over exactly the label-present rows")
    p_run.add_argument("--sources", type=_csv_list, default=None, help="comma-separated source filter")
    p_run.add_argument("--targets", type=_csv_list, default=None, help="comma-separated target filter")
    p_run.add_argument("--layers", type=_int_list, default=None, help="comma-separated layer_id filter")
    p_run.add_argument("--anchor-source", default=None, help="task ordering anchor for heatmap reports")
    p_run.add_argument("--workers", type=int, default=None,
                       help="worker threads (default: PROBEGRID_WORKERS env var, else 1); output bytes do not depend on it")
    p_run.add_argument("--resume", action="store_true", default=False,
                       help="skip cells already in the write-ahead file from an interrupted run")
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("report", help="derive aggregate tables and SVG figures from results.csv")
    p_rep.add_argument("--results", required=True, help="results.csv from a grid run")
    p_rep.add_argument("--out-dir", required=True, help="directory for aggregate CSV/JSON/SVG files")
    p_rep.add_argument("--kind", required=True, choices=REPORT_KINDS, help="which aggregate to derive")
    p_rep.add_argument("--layer", type=int, default=None, help="layer_id (heatmap)")
    p_rep.add_argument("--anchor-source", default=None,
                       help='heatmap task-ordering anchor (default: "eye_position" when present)')
    p_rep.add_argument("--target", default=None, help="target task (bands)")
    p_rep.add_argument("--sources", type=_csv_list, default=None, help="source filter (layer-curves)")
    p_rep.add_argument("--targets", type=_csv_list, default=None, help="target filter (layer-curves)")
    p_rep.set_defaults(func=cmd_report)

    p_syn = sub.add_parser("synth", help="generate a synthetic dataset in the container format")
    group = p_syn.add_mutually_exclusive_group(required=True)
    group.add_argument("--scenario", default=None, help="scenario spec JSON")
    group.add_argument("--demo", choices=sorted(synth.BUILTIN_SCENARIOS), default=None,
                       help="built-in scenario")
    p_syn.add_argument("--out-dir", required=True, help="output directory")
    p_syn.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_syn.set_defaults(func=cmd_synth)
    return parser


# ---------------------------------------------------------------------------
# validate


def _collect_diagnostics(args) -> tuple[list[str], list[str]]:
    errors: list[str] = []
    warnings: list[str] = []

    manifest = None
    try:
        manifest = ingest.load_manifest(args.manifest)
    except (ValidationError, OSError) as exc:
        errors.append(str(exc))

    meta = None
    try:
        meta = ingest.load_variable_meta(args.meta)
    except (ValidationError, OSError, json.JSONDecodeError) as exc:
        errors.append(f"variable meta: {exc}")

    table = None
    if meta is not None:
        try:
            table = ingest.load_labels(Path(args.labels), meta)
        except (ValidationError, OSError) as exc:
            errors.append(str(exc))

    if manifest is not None and table is not None:
        try:
            ingest.load_embeddings(manifest, table)
        except (ValidationError, OSError) as exc:
            errors.append(str(exc))
        variables = set(table.variable_names())
        for source in manifest.sources:
            if source.source_task not in variables:
                warnings.append(
                    f"source {source.source_task!r} is not a label variable; "
                    f"its raw-value baseline rows will be empty"
                )

    if args.predictions is not None and table is not None:
        try:
            predictions = ingest.load_predictions(Path(args.predictions), table)
        except (ValidationError, OSError) as exc:
            errors.append(str(exc))
        else:
            if manifest is not None:
                known = {s.source_task for s in manifest.sources}
                for task in predictions:
                    if task not in known:
                        warnings.append(f"predictions column {task!r} has no embedding source")
    return errors, warnings


def cmd_validate(args) -> int:
    errors, warnings = _collect_diagnostics(args)
    for message in errors:
        print(f"ERROR: {message}")
    for message in warnings:
        print(f"WARNING: {message}")
    print(f"{len(errors)} errors, {len(warnings)} warnings")
    return 0 if not errors else 1


# ---------------------------------------------------------------------------
# run


def _build_config(args) -> grid.GridConfig:
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"config file {args.config}: {exc}") from exc
    for key, value in (
        ("test_fraction", args.test_fraction),
        ("split_seed", args.split_seed),
        ("random_seed", args.random_seed),
        ("ridge_scales", args.ridge_scales),
        ("exact_masks", args.exact_masks),
        ("sources", args.sources),
        ("targets", args.targets),
        ("layers", args.layers),
        ("anchor_source", args.anchor_source),
    ):
        if value is not None:
            data[key] = value
    return grid.GridConfig.from_dict(data)


def _worker_count(args) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    env = os.environ.get("PROBEGRID_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValidationError(f"PROBEGRID_WORKERS must be an integer, got {env!r}") from exc
    return 1


def cmd_run(args) -> int:
    errors, _ = _collect_diagnostics(args)
    if errors:
        for message in errors:
            print(f"ERROR: {message}")
        return 1

    config = _build_config(args)
    manifest = ingest.load_manifest(args.manifest)
    meta = ingest.load_variable_meta(args.meta)
    table = ingest.load_labels(Path(args.labels), meta)
    embeddings = ingest.load_embeddings(manifest, table)
    predictions = (
        ingest.load_predictions(Path(args.predictions), table) if args.predictions is not None else {}
    )

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"

    def progress(done: int, total: int, _cell) -> None:
        if done == total or done % 25 == 0:
            print(f"  {done}/{total} cells", file=sys.stderr)

    try:
        report = grid.run_grid(
            embeddings,
            table,
            predictions,
            config,
            workers=_worker_count(args),
            wal_path=results_path.with_suffix(".csv.wal"),
            resume=args.resume,
            progress=progress,
            labels_digest=ingest.sha256_file(args.labels),
            manifest_digest=ingest.sha256_file(args.manifest),
            predictions_digest=(
                ingest.sha256_file(args.predictions) if args.predictions is not None else None
            ),
        )
    except (AbortRun, KeyboardInterrupt):
        print("aborted; completed cells retained in the write-ahead file", file=sys.stderr)
        return 2

    grid.write_results_csv(report, results_path)
    grid.write_provenance(report, out_dir / "provenance.json")
    print(f"wrote {results_path} ({len(report.results)} rows)")
    return 0


# ---------------------------------------------------------------------------
# report


def _resolve_anchor(args, report: grid.GridReport, sources: list[str]) -> str:
    if args.anchor_source is not None:
        return args.anchor_source
    configured = None
    if report.provenance:
        configured = report.provenance.get("config", {}).get("anchor_source")
    if configured is not None:
        return configured
    if "eye_position" in sources:
        return "eye_position"
    raise ValidationError(
        f"no anchor source given and no 'eye_position' task; available sources: {sources}"
    )


def cmd_report(args) -> int:
    results_path = Path(args.results)
    provenance_path = results_path.parent / "provenance.json"
    report = grid.load_results(results_path, provenance_path)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.kind == "layer-curves":
        curves = analysis.layer_curves(report.results, args.sources, args.targets)
        analysis.write_curves_csv(curves, out_dir / "layer_curves.csv")
        (out_dir / "layer_curves.svg").write_text(svgfig.render_layer_curves(curves), "utf-8")
        print(f"wrote {out_dir}/layer_curves.csv and .svg ({len(curves)} curves)")
    elif args.kind == "best-layer-hist":
        hist = analysis.best_layer_histogram(report.results)
        analysis.write_histogram_csv(hist, out_dir / "best_layer_hist.csv")
        analysis.write_histogram_json(hist, out_dir / "best_layer_hist.json")
        (out_dir / "best_layer_hist.svg").write_text(svgfig.render_best_layer_histogram(hist), "utf-8")
        print(f"wrote {out_dir}/best_layer_hist.csv, .json, .svg")
    elif args.kind == "bands":
        if args.target is None:
            raise ValidationError("--kind bands requires --target")
        band = analysis.band_table(report.results, args.target)
        analysis.write_band_csv(band, out_dir / f"bands_{args.target}.csv")
        (out_dir / f"bands_{args.target}.svg").write_text(svgfig.render_band_table(band), "utf-8")
        print(f"wrote {out_dir}/bands_{args.target}.csv and .svg")
    elif args.kind == "heatmap":
        if args.layer is None:
            raise ValidationError("--kind heatmap requires --layer")
        sources = sorted({r.spec.source_task for r in report.results if r.spec.layer_id is not None})
        anchor = _resolve_anchor(args, report, sources)
        matrix = analysis.heatmap(report.results, args.layer, anchor)
        analysis.write_heatmap_csv(matrix, out_dir / f"heatmap_layer{args.layer}.csv")
        analysis.write_heatmap_json(matrix, out_dir / f"heatmap_layer{args.layer}.json")
        (out_dir / f"heatmap_layer{args.layer}.svg").write_text(svgfig.render_heatmap(matrix), "utf-8")
        print(f"wrote {out_dir}/heatmap_layer{args.layer}.csv, .json, .svg")
    return 0


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    if args.scenario is not None:
        scenario = synth.load_scenario(args.scenario)
    else:
        scenario = synth.BUILTIN_SCENARIOS[args.demo]()
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    output = synth.generate(scenario, args.out_dir)
    print(f"wrote scenario {scenario.name!r} to {output.out_dir}")
    print(f"  manifest:    {output.manifest_path}")
    print(f"  labels:      {output.labels_path}")
    print(f"  meta:        {output.meta_path}")
    print(f"  predictions: {output.predictions_path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ProbeGridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
