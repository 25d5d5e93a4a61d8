from .jsonreport import PipelineReport, clean_numbers, export_json, load_schema, parse_json
from .plots import KINDS, emit_plot_data, histogram, render_plot_data
from .summary import render_summary_text

__all__ = [
    "KINDS",
    "PipelineReport",
    "clean_numbers",
    "emit_plot_data",
    "export_json",
    "histogram",
    "load_schema",
    "parse_json",
    "render_plot_data",
    "render_summary_text",
]
