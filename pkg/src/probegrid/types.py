"""Domain types shared by every module of the probe-grid engine.

All types are immutable after construction (arrays are marked read-only),
so instances can be shared freely across concurrent workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# Identifier strings (image ids, patient ids, task names) must stay free of
# CSV structure so results files never need quoting.
_FORBIDDEN_ID_CHARS = set(',"\n\r')


def check_identifier(name: str, what: str) -> str:
    if not name:
        raise ValidationError(f"{what} must be a non-empty string")
    bad = _FORBIDDEN_ID_CHARS.intersection(name)
    if bad:
        raise ValidationError(f"{what} {name!r} contains forbidden character(s) {sorted(bad)}")
    return name


class VariableKind(str, enum.Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class MetricKind(str, enum.Enum):
    AUC = "auc"
    R2 = "r2"


def metric_for(kind: VariableKind) -> MetricKind:
    """AUC scores binary targets, R^2 scores continuous ones."""
    return MetricKind.AUC if kind is VariableKind.BINARY else MetricKind.R2


@dataclass(frozen=True)
class TaskVariable:
    """One task variable: a name plus whether it is binary or continuous."""

    name: str
    kind: VariableKind

    def __post_init__(self):
        check_identifier(self.name, "variable name")
        if not isinstance(self.kind, VariableKind):
            object.__setattr__(self, "kind", VariableKind(self.kind))


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LabelTable:
    """Per-image values for all task variables, with explicit missing masks.

    ``values[i, j]`` holds variable ``j`` for image ``i``; entries where
    ``present[i, j]`` is False are missing and hold NaN so that accidental
    unmasked use poisons results loudly instead of silently.
    """

    image_ids: tuple[str, ...]
    patient_ids: tuple[str, ...]
    variables: tuple[TaskVariable, ...]
    values: np.ndarray  # float64 [n_images, n_variables]
    present: np.ndarray  # bool    [n_images, n_variables]

    def __post_init__(self):
        n, v = len(self.image_ids), len(self.variables)
        if len(self.patient_ids) != n:
            raise ValidationError(f"{len(self.patient_ids)} patient ids for {n} image ids")
        if len(set(self.image_ids)) != n:
            raise ValidationError("duplicate image_id in label table")
        for img in self.image_ids:
            check_identifier(img, "image_id")
        for pat in self.patient_ids:
            check_identifier(pat, "patient_id")
        names = [var.name for var in self.variables]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate variable name in label table")

        values = np.ascontiguousarray(self.values, dtype=np.float64)
        present = np.ascontiguousarray(self.present, dtype=bool)
        if values.shape != (n, v) or present.shape != (n, v):
            raise ValidationError(
                f"values/present must be shaped ({n}, {v}); got {values.shape} and {present.shape}"
            )
        values = values.copy()
        values[~present] = np.nan
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "present", _readonly(present))

        for j, var in enumerate(self.variables):
            mask = present[:, j]
            if int(mask.sum()) < 2:
                raise ValidationError(f"variable {var.name!r} has fewer than 2 present values")
            if var.kind is VariableKind.BINARY:
                col = values[mask, j]
                bad = np.nonzero((col != 0.0) & (col != 1.0))[0]
                if bad.size:
                    row = int(np.nonzero(mask)[0][bad[0]])
                    raise ValidationError(
                        f"binary variable {var.name!r} has value {col[bad[0]]!r} "
                        f"at image {self.image_ids[row]!r} (row {row})"
                    )

    @property
    def n_images(self) -> int:
        return len(self.image_ids)

    def variable_names(self) -> list[str]:
        return [var.name for var in self.variables]

    def variable(self, name: str) -> TaskVariable:
        try:
            return self.variables[self.column_index(name)]
        except KeyError:
            raise KeyError(f"no variable named {name!r}") from None

    def column_index(self, name: str) -> int:
        idx = self._index().get(name)
        if idx is None:
            raise KeyError(f"no variable named {name!r}")
        return idx

    def column(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """Return (values, present) for one variable, aligned to image order."""
        j = self.column_index(name)
        return self.values[:, j], self.present[:, j]

    def _index(self) -> dict[str, int]:
        cached = getattr(self, "_name_to_col", None)
        if cached is None:
            cached = {var.name: j for j, var in enumerate(self.variables)}
            object.__setattr__(self, "_name_to_col", cached)
        return cached


@dataclass(frozen=True)
class LayerEmbedding:
    """Pooled activations for one (source task, layer): rows are images,
    columns are channels."""

    source_task: str
    layer_id: int
    layer_name: str
    matrix: np.ndarray  # float64 [n_images, channels]

    def __post_init__(self):
        check_identifier(self.source_task, "source_task")
        if self.layer_id < 0:
            raise ValidationError(f"layer_id must be >= 0, got {self.layer_id}")
        matrix = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] < 1:
            raise ValidationError(f"embedding matrix must be 2-D with >= 1 channel, got {matrix.shape}")
        if not np.isfinite(matrix).all():
            row, col = np.argwhere(~np.isfinite(matrix))[0]
            raise ValidationError(
                f"non-finite value in embedding {self.source_task}/layer {self.layer_id} "
                f"at (row {row}, col {col})"
            )
        object.__setattr__(self, "matrix", _readonly(matrix))

    @property
    def n_images(self) -> int:
        return self.matrix.shape[0]

    @property
    def channels(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class SplitAssignment:
    """Patient-grouped train/test assignment, a pure function of
    (patient_id, seed, test_fraction)."""

    test_mask: np.ndarray  # bool per image; True = test
    test_fraction: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValidationError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        object.__setattr__(self, "test_mask", _readonly(np.asarray(self.test_mask, dtype=bool)))

    @property
    def train_mask(self) -> np.ndarray:
        return ~self.test_mask


class SourceKind(str, enum.Enum):
    EMBEDDING = "embedding"
    RAW = "raw"
    PREDICTION = "prediction"
    RANDOM = "random"


RANDOM_SOURCE_NAME = "random_uniform"


@dataclass(frozen=True)
class ProbeSpec:
    """What one probe regresses: a feature source and a target variable."""

    source_kind: SourceKind
    source_task: str  # RANDOM_SOURCE_NAME for the random-uniform source
    target: str
    layer_id: int | None = None  # set only for embedding sources

    def __post_init__(self):
        if (self.layer_id is not None) != (self.source_kind is SourceKind.EMBEDDING):
            raise ValidationError("layer_id is required for embedding sources and forbidden otherwise")

    @classmethod
    def embedding(cls, source_task: str, layer_id: int, target: str) -> "ProbeSpec":
        return cls(SourceKind.EMBEDDING, source_task, target, layer_id)

    @classmethod
    def raw_value(cls, source_task: str, target: str) -> "ProbeSpec":
        return cls(SourceKind.RAW, source_task, target)

    @classmethod
    def prediction(cls, source_task: str, target: str) -> "ProbeSpec":
        return cls(SourceKind.PREDICTION, source_task, target)

    @classmethod
    def random_uniform(cls, target: str) -> "ProbeSpec":
        return cls(SourceKind.RANDOM, RANDOM_SOURCE_NAME, target)


# Row status values used in results tables.
STATUS_OK = "ok"
STATUS_UNDEFINED_METRIC = "undefined_metric"
STATUS_INSUFFICIENT_ROWS = "insufficient_train_rows"
STATUS_SINGULAR = "singular"
STATUS_MISSING_SOURCE = "missing_source_variable"


@dataclass(frozen=True)
class ProbeResult:
    """Scored outcome of one fitted probe.

    ``value`` is None exactly when ``status != "ok"``: the metric was
    undefined (single-class test set, zero test variance, fewer than 2
    usable rows) or the fit itself failed.
    """

    spec: ProbeSpec
    metric_kind: MetricKind
    value: float | None
    n_train: int
    n_test: int
    ridge_lambda_used: float
    status: str = STATUS_OK

    def __post_init__(self):
        if (self.value is None) != (self.status != STATUS_OK):
            raise ValidationError("value must be present iff status is 'ok'")
        if self.value is not None and self.metric_kind is MetricKind.AUC:
            if not 0.0 <= self.value <= 1.0:
                raise ValidationError(f"AUC {self.value} outside [0, 1]")
        if self.ridge_lambda_used < 0.0:
            raise ValidationError("ridge_lambda_used must be >= 0")
