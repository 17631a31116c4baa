"""Benchmark figure rendering from CSV tables.

Consumes curve.csv (budget, rate, ci_low, ci_high) and latency.csv
(budget, cumulative_fraction) files and renders performance curves and
latency CDFs.  Knows nothing about how the tables were produced.
"""

from rtdec_plot.plots import (
    CurveSeries,
    LatencySeries,
    PlotSpec,
    RenderResult,
    read_curve_csv,
    read_latency_csv,
    render_curve,
    render_latency,
)

__all__ = [
    "CurveSeries",
    "LatencySeries",
    "PlotSpec",
    "RenderResult",
    "read_curve_csv",
    "read_latency_csv",
    "render_curve",
    "render_latency",
]

__version__ = "0.1.0"
