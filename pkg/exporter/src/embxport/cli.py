"""Command-line wrapper: embx-export --model m.pt --layers a b c --images dir --out dir."""

from __future__ import annotations

import argparse
import sys

from .exporter import ExportConfig, ExportError, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embx-export",
        description="Extract intermediate CNN activations into the probegrid embedding container.",
    )
    parser.add_argument("--model", required=True,
                        help="path to a torch.save()d nn.Module or a TorchScript archive")
    parser.add_argument("--layers", required=True, nargs="+",
                        help="qualified module names to hook (see model.named_modules())")
    parser.add_argument("--images", required=True, help="directory of images; ids are filename stems")
    parser.add_argument("--out", required=True, help="output directory for the container")
    parser.add_argument("--source-name", default=None, help="source task name (default: model file stem)")
    parser.add_argument("--batch", type=int, default=16, help="inference batch size")
    parser.add_argument("--image-size", type=int, default=224, help="square resize applied to every image")
    parser.add_argument("--mean", type=float, nargs=3, default=None, help="normalization mean (3 floats)")
    parser.add_argument("--std", type=float, nargs=3, default=None, help="normalization std (3 floats)")
    parser.add_argument("--defer-pooling", action="store_true",
                        help="store spatial activations and record (h, w) in the manifest instead of pooling here")
    parser.add_argument("--prediction-index", type=int, default=0,
                        help="model output column written to predictions.csv")
    parser.add_argument("--labels", default=None,
                        help="optional labels CSV to re-emit aligned to the exported image ids")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kwargs = {}
    if args.mean is not None:
        kwargs["mean"] = tuple(args.mean)
    if args.std is not None:
        kwargs["std"] = tuple(args.std)
    try:
        config = ExportConfig(
            model_ref=args.model,
            hook_points=tuple(args.layers),
            image_dir=args.images,
            out_dir=args.out,
            source_name=args.source_name,
            batch_size=args.batch,
            image_size=args.image_size,
            defer_pooling=args.defer_pooling,
            prediction_index=args.prediction_index,
            labels_csv=args.labels,
            **kwargs,
        )
        result = export(config)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"exported {len(result.image_ids)} images "
          f"({len(result.skipped)} skipped) to {result.manifest_path.parent}")
    print(f"  manifest:    {result.manifest_path}")
    print(f"  predictions: {result.predictions_path}")
    print(f"  layer dims:  {result.layer_dims_path}")
    if result.labels_path is not None:
        print(f"  labels:      {result.labels_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
