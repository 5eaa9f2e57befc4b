"""probegrid: cross-task grids of linear probes over pooled CNN embeddings.

Train and score a linear probe for every (source task, target task, layer)
triple, plus raw-value, prediction, and random-uniform baselines; derive
layer curves, best-layer histograms, per-target band tables, and the
single-layer cross-task heatmap from the results table.
"""

__version__ = "0.1.0"

from .errors import (
    AbortRun,
    DegenerateInputError,
    ProbeGridError,
    SingularDesignError,
    ValidationError,
)
from .types import (
    LabelTable,
    LayerEmbedding,
    MetricKind,
    ProbeResult,
    ProbeSpec,
    SourceKind,
    SplitAssignment,
    TaskVariable,
    VariableKind,
)

__all__ = [
    "AbortRun",
    "DegenerateInputError",
    "LabelTable",
    "LayerEmbedding",
    "MetricKind",
    "ProbeGridError",
    "ProbeResult",
    "ProbeSpec",
    "SingularDesignError",
    "SourceKind",
    "SplitAssignment",
    "TaskVariable",
    "ValidationError",
    "VariableKind",
    "__version__",
]
