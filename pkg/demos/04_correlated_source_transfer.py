#!/usr/bin/env python3
"""A hard target is predicted better from a correlated easy source's
embeddings than from embeddings trained on the target itself.

The scenario: `height_like` has so much label noise that its best possible
R^2 is 0.3, which also limits how much signal a model trained on it can
embed. `testosterone_like` shares half its loading vector with the hard
target but is nearly noiseless, so its embeddings carry the shared latent
at high fidelity. The generator's Gaussian structure makes every ceiling
computable in closed form, and the grid's estimates land on top of them.
"""

from pathlib import Path

from probegrid import analysis, grid, ingest, svgfig, synth

OUT = Path(__file__).parent / "output" / "correlated_source"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    scenario = synth.height_like_scenario()
    out = synth.generate(scenario, OUT / "data")

    meta = ingest.load_variable_meta(out.meta_path)
    table = ingest.load_labels(out.labels_path, meta)
    embeddings = ingest.load_embeddings(ingest.load_manifest(out.manifest_path), table)
    predictions = ingest.load_predictions(out.predictions_path, table)
    report = grid.run_grid(embeddings, table, predictions, grid.GridConfig(), workers=4)

    print(f"{'source -> height_like':34s} {'layer':>5s} {'measured':>9s} {'ceiling':>8s}")
    for source in ("height_like", "testosterone_like", "sex_like"):
        for layer in (0, 1, 2):
            measured = next(
                r.value for r in report.results
                if r.spec.source_task == source and r.spec.target == "height_like"
                and r.spec.layer_id == layer
            )
            ceiling = synth.analytic_best_r2(scenario, source, "height_like", layer)
            print(f"{source:34s} {layer:5d} {measured:9.3f} {ceiling:8.3f}")

    band = analysis.band_table(report.results, "height_like")
    (OUT / "bands_height_like.svg").write_text(svgfig.render_band_table(band))
    best = {
        row.source: max(v for v in row.values.values() if v is not None)
        for row in band.rows
    }
    print(f"\nbest-layer R^2 on height_like: same-task {best['height_like']:.3f} "
          f"vs correlated source {best['testosterone_like']:.3f}")
    print(f"band figure: {OUT / 'bands_height_like.svg'}")


if __name__ == "__main__":
    main()
