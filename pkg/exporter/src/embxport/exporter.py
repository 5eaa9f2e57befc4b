"""Extract intermediate activations from a pretrained CNN over an image
folder and write the probegrid embedding container.

One forward pass per batch serves every hook point; activations are
spatially average-pooled (or stored spatially with --defer-pooling, leaving
the pooling to the consumer) and written as raw little-endian float32
matrices plus a manifest. The model's scalar output per image goes to a
predictions CSV, and a layer_dims.csv records each hooked layer's channel
count. Image ids are filename stems; row order is sorted ids.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tif", ".tiff", ".webp"}
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


class ExportError(Exception):
    """Configuration or input problem that prevents the export."""


@dataclass(frozen=True)
class ExportConfig:
    model_ref: str  # path to a torch.save()d module or a TorchScript archive
    hook_points: tuple[str, ...]  # qualified module names, e.g. "features.3"
    image_dir: Path
    out_dir: Path
    source_name: str | None = None  # default: model file stem
    batch_size: int = 16
    image_size: int = 224
    mean: tuple[float, float, float] = IMAGENET_MEAN
    std: tuple[float, float, float] = IMAGENET_STD
    defer_pooling: bool = False
    prediction_index: int = 0  # column of the model output written as the prediction
    labels_csv: Path | None = None  # optional passthrough, re-ordered to exported ids

    def __post_init__(self):
        if not self.hook_points:
            raise ExportError("at least one hook point is required")
        object.__setattr__(self, "image_dir", Path(self.image_dir))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.labels_csv is not None:
            object.__setattr__(self, "labels_csv", Path(self.labels_csv))
        if self.batch_size < 1 or self.image_size < 1:
            raise ExportError("batch_size and image_size must be >= 1")


@dataclass
class ExportResult:
    manifest_path: Path
    predictions_path: Path
    layer_dims_path: Path
    labels_path: Path | None
    image_ids: list[str]
    skipped: list[str] = field(default_factory=list)


def load_model(model_ref: str) -> torch.nn.Module:
    """Load a torch.save()d nn.Module (the class must be importable)."""
    path = Path(model_ref)
    if not path.exists():
        raise ExportError(f"model file not found: {model_ref}")
    try:
        model = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        try:
            torch.jit.load(path, map_location="cpu")
        except Exception:
            raise ExportError(f"could not load {model_ref}: {exc}") from exc
        raise ExportError(
            f"{model_ref} is a TorchScript archive; forward hooks cannot attach to "
            f"ScriptModules. Save the eager module instead: torch.save(model, path)."
        ) from exc
    if not isinstance(model, torch.nn.Module):
        raise ExportError(f"{model_ref} did not contain a torch module (got {type(model).__name__})")
    model.eval()
    return model


def resolve_hooks(model: torch.nn.Module, hook_points: tuple[str, ...]) -> dict[str, torch.nn.Module]:
    named = dict(model.named_modules())
    missing = [name for name in hook_points if name not in named]
    if missing:
        available = sorted(name for name in named if name)
        raise ExportError(
            f"hook point(s) not in the model graph: {missing}; available: {available}"
        )
    return {name: named[name] for name in hook_points}


def _list_images(image_dir: Path) -> list[Path]:
    if not image_dir.is_dir():
        raise ExportError(f"image directory not found: {image_dir}")
    files = [p for p in image_dir.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS]
    stems: dict[str, Path] = {}
    for path in files:
        if path.stem in stems:
            raise ExportError(f"duplicate image id {path.stem!r}: {stems[path.stem].name} and {path.name}")
        stems[path.stem] = path
    return [stems[stem] for stem in sorted(stems)]


def _load_image(path: Path, config: ExportConfig) -> torch.Tensor | None:
    try:
        with Image.open(path) as image:
            image = image.convert("RGB").resize(
                (config.image_size, config.image_size), Image.BILINEAR
            )
    except (UnidentifiedImageError, OSError):
        return None
    array = np.asarray(image, dtype=np.float32) / 255.0
    array = (array - np.asarray(config.mean, dtype=np.float32)) / np.asarray(config.std, dtype=np.float32)
    return torch.from_numpy(array.transpose(2, 0, 1))


def _activation_to_batch(name: str, output) -> torch.Tensor:
    if isinstance(output, (tuple, list)):
        output = output[0]
    if not isinstance(output, torch.Tensor):
        raise ExportError(f"hook {name!r} produced {type(output).__name__}, not a tensor")
    if output.ndim not in (2, 4):
        raise ExportError(
            f"hook {name!r} produced a {output.ndim}-D activation; expected [B, C] or [B, C, H, W]"
        )
    return output.detach().to(torch.float32).cpu()


def export(config: ExportConfig) -> ExportResult:
    """Run the model over the image folder and write the container."""
    model = load_model(config.model_ref)
    hooks = resolve_hooks(model, config.hook_points)
    source = config.source_name or Path(config.model_ref).stem

    captured: dict[str, torch.Tensor] = {}
    handles = []
    for name, module in hooks.items():
        def grab(module_, inputs_, output, name=name):
            captured[name] = _activation_to_batch(name, output)

        handles.append(module.register_forward_hook(grab))

    image_ids: list[str] = []
    skipped: list[str] = []
    per_hook: dict[str, list[np.ndarray]] = {name: [] for name in config.hook_points}
    predictions: list[float] = []

    try:
        paths = _list_images(config.image_dir)
        batch_items: list[tuple[str, torch.Tensor]] = []

        def flush():
            if not batch_items:
                return
            ids = [item[0] for item in batch_items]
            batch = torch.stack([item[1] for item in batch_items])
            captured.clear()
            with torch.no_grad():
                output = model(batch)
            if isinstance(output, (tuple, list)):
                output = output[0]
            output = output.detach().to(torch.float32).cpu()
            if output.ndim == 1:
                output = output.reshape(-1, 1)
            if output.ndim != 2 or config.prediction_index >= output.shape[1]:
                raise ExportError(
                    f"model output shaped {tuple(output.shape)} has no column "
                    f"{config.prediction_index} for predictions"
                )
            for name in config.hook_points:
                if name not in captured:
                    raise ExportError(f"hook {name!r} never fired; is the module used in forward()?")
                per_hook[name].append(captured[name].numpy())
            predictions.extend(float(v) for v in output[:, config.prediction_index])
            image_ids.extend(ids)
            batch_items.clear()

        for path in paths:
            tensor = _load_image(path, config)
            if tensor is None:
                print(f"warning: skipping undecodable image {path.name}", file=sys.stderr)
                skipped.append(path.stem)
                continue
            batch_items.append((path.stem, tensor))
            if len(batch_items) >= config.batch_size:
                flush()
        flush()
    finally:
        for handle in handles:
            handle.remove()

    if not image_ids:
        raise ExportError(f"no decodable images in {config.image_dir}")

    return _write_container(config, source, image_ids, per_hook, predictions, skipped)


def _pool(stacked: np.ndarray) -> np.ndarray:
    if stacked.ndim == 2:
        return stacked
    return stacked.astype(np.float64).mean(axis=(2, 3)).astype(np.float32)


def _write_container(
    config: ExportConfig,
    source: str,
    image_ids: list[str],
    per_hook: dict[str, list[np.ndarray]],
    predictions: list[float],
    skipped: list[str],
) -> ExportResult:
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)

    ids_name = "image_ids.txt"
    (out / ids_name).write_text("".join(f"{i}\n" for i in image_ids), "utf-8")

    layers = []
    dims_rows = []
    for layer_id, name in enumerate(config.hook_points):
        stacked = np.concatenate(per_hook[name], axis=0)
        channels = stacked.shape[1]
        dims_rows.append((layer_id, channels))
        filename = f"{source}_layer{layer_id:02d}.f32"
        if stacked.ndim == 4 and config.defer_pooling:
            spatial = [stacked.shape[2], stacked.shape[3]]
            payload = np.ascontiguousarray(stacked.transpose(0, 2, 3, 1), dtype="<f4")
        else:
            spatial = None
            payload = np.ascontiguousarray(_pool(stacked), dtype="<f4")
        payload.tofile(out / filename)
        layers.append({
            "layer_id": layer_id,
            "layer_name": name,
            "file": filename,
            "rows": len(image_ids),
            "channels": int(channels),
            "spatial": spatial,
            "dtype": "f32le",
        })

    notes = (
        f"exported from {Path(config.model_ref).name}; "
        f"preprocessing: RGB, bilinear resize to {config.image_size}x{config.image_size}, "
        f"scale 1/255, normalize mean={tuple(config.mean)} std={tuple(config.std)}; "
        f"pooling: {'deferred to consumer' if config.defer_pooling else 'exporter-side spatial mean'}; "
        f"prediction: model output column {config.prediction_index}"
    )
    manifest = {
        "format_version": 1,
        "dataset_name": f"{source}_export",
        "image_ids_file": ids_name,
        "notes": notes,
        "sources": [{"source_task": source, "layers": layers}],
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", "utf-8")

    predictions_path = out / "predictions.csv"
    with io.StringIO() as buffer:
        buffer.write(f"image_id,{source}\n")
        for image_id, value in zip(image_ids, predictions):
            buffer.write(f"{image_id},{value!r}\n")
        predictions_path.write_text(buffer.getvalue(), "utf-8")

    layer_dims_path = out / "layer_dims.csv"
    layer_dims_path.write_text(
        "layer_id,channels\n" + "".join(f"{i},{c}\n" for i, c in dims_rows), "utf-8"
    )

    labels_path = None
    if config.labels_csv is not None:
        labels_path = out / "labels.csv"
        _passthrough_labels(config.labels_csv, image_ids, labels_path)

    return ExportResult(
        manifest_path=manifest_path,
        predictions_path=predictions_path,
        layer_dims_path=layer_dims_path,
        labels_path=labels_path,
        image_ids=image_ids,
        skipped=skipped,
    )


def _passthrough_labels(source_csv: Path, image_ids: list[str], out_path: Path) -> None:
    """Re-emit the labels CSV with exactly the exported ids, in export order."""
    with open(source_csv, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ExportError(f"labels file {source_csv} is empty") from None
        if not header or header[0] != "image_id":
            raise ExportError(f"labels file {source_csv} must start with an image_id column")
        rows = {row[0]: row for row in reader if row}
    missing = [i for i in image_ids if i not in rows]
    if missing:
        raise ExportError(
            f"labels file {source_csv} lacks rows for {len(missing)} exported image(s), "
            f"e.g. {missing[:5]}"
        )
    with open(out_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for image_id in image_ids:
            writer.writerow(rows[image_id])
