"""embxport: dump pooled intermediate CNN activations into the probegrid
embedding container format."""

__version__ = "0.1.0"

from .exporter import ExportConfig, ExportError, ExportResult, export, load_model, resolve_hooks

__all__ = [
    "ExportConfig",
    "ExportError",
    "ExportResult",
    "export",
    "load_model",
    "resolve_hooks",
    "__version__",
]
