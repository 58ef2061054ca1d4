"""Figure and table rendering for graphbench CSV outputs."""

from .common import SchemaError
from .heatmap import HeatmapRender, HeatmapSpec, IncompleteGridError, render_heatmap
from .table import render_table

__version__ = "0.1.0"

__all__ = [
    "HeatmapRender",
    "HeatmapSpec",
    "IncompleteGridError",
    "SchemaError",
    "__version__",
    "render_heatmap",
    "render_table",
]
