"""Container formats and loaders: embedding manifest + raw float32 matrix
files, labels CSV, variable-kind JSON, predictions CSV, patient-grouped
splitting, and spatial average pooling.

Format version 1 container layout:

* ``manifest.json``  - schema below; paths are relative to the manifest.
* image ids file     - UTF-8, one id per line, no trailing blank line.
* ``*.f32`` matrices - headerless little-endian float32, row-major;
  pooled layers are [rows x channels], spatial layers
  [rows x h x w x channels]. Validated by exact byte length.
* labels CSV         - header ``image_id,patient_id,<var...>``; empty cell
  means the label is missing.
* variable meta JSON - ``[{"name": ..., "kind": "binary"|"continuous"}]``.
* predictions CSV    - header ``image_id,<source_task...>``.

Storage is float32; everything downstream of ingest computes in float64,
because Gram accumulation over thousands of rows in float32 loses the
digits exact regression depends on.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .stablehash import unit_interval
from .types import (
    LabelTable,
    LayerEmbedding,
    SplitAssignment,
    TaskVariable,
    VariableKind,
    check_identifier,
)

FORMAT_VERSION = 1
_DTYPE_NAME = "f32le"
_F32 = np.dtype("<f4")


# ---------------------------------------------------------------------------
# Manifest


@dataclass(frozen=True)
class ManifestLayer:
    layer_id: int
    layer_name: str
    file: str
    rows: int
    channels: int
    spatial: tuple[int, int] | None  # (h, w) when stored pre-pooling
    dtype: str = _DTYPE_NAME

    @property
    def values_per_row(self) -> int:
        if self.spatial is None:
            return self.channels
        h, w = self.spatial
        return h * w * self.channels

    @property
    def expected_bytes(self) -> int:
        return self.rows * self.values_per_row * _F32.itemsize


@dataclass(frozen=True)
class ManifestSource:
    source_task: str
    layers: tuple[ManifestLayer, ...]


@dataclass(frozen=True)
class EmbeddingManifest:
    dataset_name: str
    image_ids_file: str
    sources: tuple[ManifestSource, ...]
    notes: str = ""
    base_dir: Path = Path(".")

    def path_of(self, relative: str) -> Path:
        return self.base_dir / relative


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ValidationError(f"manifest: missing {key!r} in {where}")
    return mapping[key]


def parse_manifest(data: dict, base_dir: Path | str = ".") -> EmbeddingManifest:
    version = _require(data, "format_version", "top level")
    if version != FORMAT_VERSION:
        raise ValidationError(f"manifest: unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    sources = []
    seen_tasks = set()
    for entry in _require(data, "sources", "top level"):
        task = check_identifier(_require(entry, "source_task", "source entry"), "source_task")
        if task in seen_tasks:
            raise ValidationError(f"manifest: duplicate source_task {task!r}")
        seen_tasks.add(task)
        layers = []
        previous_id = -1
        for layer in _require(entry, "layers", f"source {task!r}"):
            where = f"source {task!r} layer entry"
            dtype = _require(layer, "dtype", where)
            if dtype != _DTYPE_NAME:
                raise ValidationError(f"manifest: dtype must be {_DTYPE_NAME!r} in version 1, got {dtype!r}")
            layer_id = int(_require(layer, "layer_id", where))
            if layer_id <= previous_id:
                raise ValidationError(
                    f"manifest: layer_ids of source {task!r} must be strictly increasing "
                    f"({layer_id} after {previous_id})"
                )
            previous_id = layer_id
            spatial = layer.get("spatial")
            if spatial is not None:
                spatial = (int(spatial[0]), int(spatial[1]))
                if spatial[0] < 1 or spatial[1] < 1:
                    raise ValidationError(f"manifest: spatial dims must be >= 1, got {spatial}")
            channels = int(_require(layer, "channels", where))
            rows = int(_require(layer, "rows", where))
            if channels < 1 or rows < 0:
                raise ValidationError(f"manifest: bad rows/channels ({rows}, {channels}) in {where}")
            layers.append(
                ManifestLayer(
                    layer_id=layer_id,
                    layer_name=str(_require(layer, "layer_name", where)),
                    file=str(_require(layer, "file", where)),
                    rows=rows,
                    channels=channels,
                    spatial=spatial,
                )
            )
        sources.append(ManifestSource(source_task=task, layers=tuple(layers)))
    return EmbeddingManifest(
        dataset_name=str(_require(data, "dataset_name", "top level")),
        image_ids_file=str(_require(data, "image_ids_file", "top level")),
        sources=tuple(sources),
        notes=str(data.get("notes", "")),
        base_dir=Path(base_dir),
    )


def load_manifest(path: Path | str) -> EmbeddingManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest {path}: invalid JSON ({exc})") from exc
    return parse_manifest(data, base_dir=path.parent)


def manifest_to_dict(manifest: EmbeddingManifest) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "dataset_name": manifest.dataset_name,
        "image_ids_file": manifest.image_ids_file,
        "notes": manifest.notes,
        "sources": [
            {
                "source_task": source.source_task,
                "layers": [
                    {
                        "layer_id": layer.layer_id,
                        "layer_name": layer.layer_name,
                        "file": layer.file,
                        "rows": layer.rows,
                        "channels": layer.channels,
                        "spatial": list(layer.spatial) if layer.spatial else None,
                        "dtype": layer.dtype,
                    }
                    for layer in source.layers
                ],
            }
            for source in manifest.sources
        ],
    }


# ---------------------------------------------------------------------------
# Image ids


def load_image_ids(path: Path | str) -> list[str]:
    text = Path(path).read_text("utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    ids = []
    for i, line in enumerate(lines):
        if line == "":
            raise ValidationError(f"image ids file {path}: blank line at line {i + 1}")
        ids.append(check_identifier(line, "image_id"))
    if len(set(ids)) != len(ids):
        raise ValidationError(f"image ids file {path}: duplicate ids")
    return ids


def write_image_ids(ids: list[str], path: Path | str) -> None:
    Path(path).write_text("".join(f"{i}\n" for i in ids), "utf-8")


# ---------------------------------------------------------------------------
# Labels


def load_variable_meta(path: Path | str) -> dict[str, VariableKind]:
    entries = json.loads(Path(path).read_text("utf-8"))
    meta: dict[str, VariableKind] = {}
    for entry in entries:
        name = check_identifier(entry["name"], "variable name")
        try:
            kind = VariableKind(entry["kind"])
        except ValueError:
            raise ValidationError(
                f"variable meta: unknown kind {entry['kind']!r} for {name!r} "
                f"(expected 'binary' or 'continuous')"
            ) from None
        if name in meta:
            raise ValidationError(f"variable meta: duplicate variable {name!r}")
        meta[name] = kind
    return meta


def write_variable_meta(meta: dict[str, VariableKind], path: Path | str) -> None:
    entries = [{"name": name, "kind": kind.value} for name, kind in meta.items()]
    Path(path).write_text(json.dumps(entries, indent=2) + "\n", "utf-8")


def _parse_cell(raw: str, column: str, image_id: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ValidationError(
            f"non-numeric value {raw!r} in column {column!r} at image {image_id!r}"
        ) from None
    if not np.isfinite(value):
        raise ValidationError(
            f"non-finite value {raw!r} in column {column!r} at image {image_id!r}; "
            f"missing values must be empty cells"
        )
    return value


def load_labels(source: Path | str | bytes, meta: dict[str, VariableKind]) -> LabelTable:
    """Parse a labels CSV into a validated LabelTable.

    ``meta`` must declare a kind for every variable column present; empty
    cells become missing values. Rejects duplicate image ids, undeclared
    variables, and binary columns holding anything but 0/1.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = Path(source).read_text("utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("labels: empty CSV") from None
    if header[:2] != ["image_id", "patient_id"]:
        raise ValidationError(f"labels: header must start with image_id,patient_id; got {header[:2]}")
    var_names = header[2:]
    for name in var_names:
        if name not in meta:
            raise ValidationError(f"labels: variable {name!r} not declared in variable meta")
    variables = tuple(TaskVariable(name, meta[name]) for name in var_names)

    image_ids: list[str] = []
    patient_ids: list[str] = []
    rows: list[list[float]] = []
    masks: list[list[bool]] = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValidationError(f"labels: line {line_no} has {len(row)} fields, expected {len(header)}")
        image_id, patient_id = row[0], row[1]
        image_ids.append(image_id)
        patient_ids.append(patient_id)
        values = []
        present = []
        for name, raw in zip(var_names, row[2:]):
            if raw == "":
                values.append(np.nan)
                present.append(False)
            else:
                values.append(_parse_cell(raw, name, image_id))
                present.append(True)
        rows.append(values)
        masks.append(present)

    values = np.array(rows, dtype=np.float64).reshape(len(image_ids), len(variables))
    present = np.array(masks, dtype=bool).reshape(len(image_ids), len(variables))
    return LabelTable(
        image_ids=tuple(image_ids),
        patient_ids=tuple(patient_ids),
        variables=variables,
        values=values,
        present=present,
    )


def _format_value(value: float, kind: VariableKind) -> str:
    if kind is VariableKind.BINARY:
        return "1" if value == 1.0 else "0"
    return repr(float(value))


def serialize_labels(table: LabelTable) -> bytes:
    """Inverse of load_labels for tables the engine wrote itself:
    serialize(load(x)) == x byte-for-byte for generated files."""
    out = io.StringIO()
    names = table.variable_names()
    out.write("image_id,patient_id," + ",".join(names) + "\n")
    for i, (img, pat) in enumerate(zip(table.image_ids, table.patient_ids)):
        cells = []
        for j, var in enumerate(table.variables):
            if table.present[i, j]:
                cells.append(_format_value(float(table.values[i, j]), var.kind))
            else:
                cells.append("")
        out.write(f"{img},{pat}," + ",".join(cells) + "\n")
    return out.getvalue().encode("utf-8")


def write_labels_csv(table: LabelTable, path: Path | str) -> None:
    Path(path).write_bytes(serialize_labels(table))


# ---------------------------------------------------------------------------
# Embeddings


def pool_spatial(tensor: np.ndarray) -> np.ndarray:
    """Average an [n, h, w, c] activation tensor over its spatial positions.

    out[i, k] = mean over the h*w positions of tensor[i, :, :, k],
    accumulated in float64.
    """
    tensor = np.asarray(tensor)
    if tensor.ndim != 4:
        raise ValidationError(f"pool_spatial expects [n, h, w, c], got shape {tensor.shape}")
    n, h, w, c = tensor.shape
    if h < 1 or w < 1:
        raise ValidationError(f"pool_spatial: spatial dims must be >= 1, got ({h}, {w})")
    return tensor.astype(np.float64, copy=False).mean(axis=(1, 2))


def _load_matrix(layer: ManifestLayer, path: Path, source_task: str) -> np.ndarray:
    actual = os.path.getsize(path)
    expected = layer.expected_bytes
    if actual != expected:
        raise ValidationError(
            f"embedding file {path} for {source_task}/layer {layer.layer_id}: "
            f"expected {expected} bytes, found {actual}"
        )
    flat = np.fromfile(path, dtype=_F32)
    bad = np.nonzero(~np.isfinite(flat))[0]
    if bad.size:
        per_row = layer.values_per_row
        row, offset = divmod(int(bad[0]), per_row)
        col = offset % layer.channels  # channel index, spatial or not
        raise ValidationError(
            f"embedding file {path} for {source_task}/layer {layer.layer_id}: "
            f"non-finite value at (row {row}, col {col})"
        )
    if layer.spatial is None:
        matrix = flat.reshape(layer.rows, layer.channels).astype(np.float64)
    else:
        h, w = layer.spatial
        tensor = flat.reshape(layer.rows, h, w, layer.channels)
        matrix = pool_spatial(tensor)
    return matrix


def load_embeddings(manifest: EmbeddingManifest, label_table: LabelTable) -> list[LayerEmbedding]:
    """Load every (source, layer) matrix, pooling spatial entries.

    The manifest's image ids file must equal the label table's image ids in
    order; every matrix is validated by byte length and finiteness and
    promoted to float64.
    """
    ids = load_image_ids(manifest.path_of(manifest.image_ids_file))
    if tuple(ids) != label_table.image_ids:
        raise ValidationError(
            "embedding container image ids do not match the label table "
            f"({len(ids)} ids vs {label_table.n_images} rows; first difference at "
            f"index {_first_difference(ids, label_table.image_ids)})"
        )
    embeddings: list[LayerEmbedding] = []
    for source in manifest.sources:
        for layer in source.layers:
            if layer.rows != label_table.n_images:
                raise ValidationError(
                    f"embedding {source.source_task}/layer {layer.layer_id}: "
                    f"rows={layer.rows} but label table has {label_table.n_images} images"
                )
            matrix = _load_matrix(layer, manifest.path_of(layer.file), source.source_task)
            embeddings.append(
                LayerEmbedding(
                    source_task=source.source_task,
                    layer_id=layer.layer_id,
                    layer_name=layer.layer_name,
                    matrix=matrix,
                )
            )
    return embeddings


def _first_difference(a, b) -> int:
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i
    return min(len(a), len(b))


def write_matrix_f32(array: np.ndarray, path: Path | str) -> None:
    """Write a [n, c] or [n, h, w, c] array as raw little-endian float32."""
    array = np.asarray(array)
    if array.ndim not in (2, 4):
        raise ValidationError(f"matrix files hold 2-D or 4-D arrays, got shape {array.shape}")
    np.ascontiguousarray(array, dtype=_F32).tofile(path)


def write_container(
    out_dir: Path | str,
    dataset_name: str,
    image_ids: list[str],
    sources: dict[str, list[tuple[int, str, np.ndarray]]],
    notes: str = "",
) -> Path:
    """Write a complete format-1 container and return the manifest path.

    ``sources`` maps source_task -> [(layer_id, layer_name, array)] where
    each array is [n, channels] (pooled) or [n, h, w, channels] (spatial).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ids_file = "image_ids.txt"
    write_image_ids(image_ids, out_dir / ids_file)

    manifest_sources = []
    for task in sources:
        layer_entries = []
        for layer_id, layer_name, array in sources[task]:
            array = np.asarray(array)
            filename = f"{task}_layer{layer_id:02d}.f32"
            write_matrix_f32(array, out_dir / filename)
            spatial = None if array.ndim == 2 else (array.shape[1], array.shape[2])
            layer_entries.append(
                ManifestLayer(
                    layer_id=layer_id,
                    layer_name=layer_name,
                    file=filename,
                    rows=array.shape[0],
                    channels=array.shape[-1],
                    spatial=spatial,
                )
            )
        manifest_sources.append(ManifestSource(source_task=task, layers=tuple(layer_entries)))

    manifest = EmbeddingManifest(
        dataset_name=dataset_name,
        image_ids_file=ids_file,
        sources=tuple(manifest_sources),
        notes=notes,
        base_dir=out_dir,
    )
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest_to_dict(manifest), indent=2) + "\n", "utf-8")
    return manifest_path


# ---------------------------------------------------------------------------
# Train/test split


def assign_split(label_table: LabelTable, test_fraction: float, seed: int) -> SplitAssignment:
    """Patient-grouped split: patient p lands in test iff
    fmix64(fnv1a_64(decimal seed + NUL + p)) / 2^64 < test_fraction.

    Pure function of (patient_id, seed, test_fraction): invariant to image
    order, to the set of other patients, and to platform.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    by_patient: dict[str, bool] = {}
    test_mask = np.empty(label_table.n_images, dtype=bool)
    for i, patient in enumerate(label_table.patient_ids):
        flag = by_patient.get(patient)
        if flag is None:
            flag = unit_interval(seed, patient) < test_fraction
            by_patient[patient] = flag
        test_mask[i] = flag
    return SplitAssignment(test_mask=test_mask, test_fraction=test_fraction, seed=seed)


# ---------------------------------------------------------------------------
# Predictions


def load_predictions(
    source: Path | str | bytes, label_table: LabelTable
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Parse a predictions CSV into {source_task: (values, present)} aligned
    to the label table's image order. Rows may come in any order; images
    absent from the CSV simply have no prediction."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = Path(source).read_text("utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("predictions: empty CSV") from None
    if not header or header[0] != "image_id":
        raise ValidationError(f"predictions: header must start with image_id, got {header[:1]}")
    tasks = header[1:]
    for task in tasks:
        check_identifier(task, "prediction source_task")
    if len(set(tasks)) != len(tasks):
        raise ValidationError("predictions: duplicate source_task column")

    row_of = {img: i for i, img in enumerate(label_table.image_ids)}
    n = label_table.n_images
    values = np.full((n, len(tasks)), np.nan)
    present = np.zeros((n, len(tasks)), dtype=bool)
    seen: set[str] = set()
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValidationError(f"predictions: line {line_no} has {len(row)} fields, expected {len(header)}")
        image_id = row[0]
        if image_id not in row_of:
            raise ValidationError(f"predictions: unknown image_id {image_id!r} at line {line_no}")
        if image_id in seen:
            raise ValidationError(f"predictions: duplicate image_id {image_id!r} at line {line_no}")
        seen.add(image_id)
        i = row_of[image_id]
        for j, raw in enumerate(row[1:]):
            if raw == "":
                continue
            values[i, j] = _parse_cell(raw, tasks[j], image_id)
            present[i, j] = True

    out: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for j, task in enumerate(tasks):
        vals = values[:, j].copy()
        mask = present[:, j].copy()
        vals.setflags(write=False)
        mask.setflags(write=False)
        out[task] = (vals, mask)
    return out


def serialize_predictions(image_ids: list[str], predictions: dict[str, tuple[np.ndarray, np.ndarray]]) -> bytes:
    out = io.StringIO()
    tasks = list(predictions)
    out.write("image_id," + ",".join(tasks) + "\n")
    for i, img in enumerate(image_ids):
        cells = []
        for task in tasks:
            values, present = predictions[task]
            cells.append(repr(float(values[i])) if present[i] else "")
        out.write(f"{img}," + ",".join(cells) + "\n")
    return out.getvalue().encode("utf-8")


def write_predictions_csv(
    image_ids: list[str], predictions: dict[str, tuple[np.ndarray, np.ndarray]], path: Path | str
) -> None:
    Path(path).write_bytes(serialize_predictions(image_ids, predictions))


# ---------------------------------------------------------------------------
# Digests


def sha256_file(path: Path | str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
