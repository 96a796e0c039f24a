"""Attention extraction bridge: causal-LM attention to probe-ready dumps."""

__version__ = "0.1.0"

from .extract import (
    DatasetError,
    ExtractionConfig,
    ExtractionReport,
    compute_spans,
    extract,
    read_items,
    write_dump,
)

__all__ = [
    "DatasetError",
    "ExtractionConfig",
    "ExtractionReport",
    "compute_spans",
    "extract",
    "read_items",
    "write_dump",
    "__version__",
]
