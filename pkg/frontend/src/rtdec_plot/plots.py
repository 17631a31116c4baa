"""Render performance curves and latency CDFs from benchmark CSVs.

Rendering is deterministic: a fixed style profile, a fixed SVG hash salt,
and no timestamps in the output, so identical inputs give identical
bytes.  Every render also writes a `<image>.data.csv` sidecar carrying
the plotted points verbatim, so the figure's contents can be audited
without parsing the image.

Log-scale rate axes cannot show zeros; a zero rate is drawn at the
documented floor 1/(10 * trials) and flagged in-figure, while the
sidecar keeps the true zero.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

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

CURVE_HEADER = ["budget", "rate", "ci_low", "ci_high"]
LATENCY_HEADER = ["budget", "cumulative_fraction"]

# fixed style profile: identical inputs must give identical bytes
STYLE = {
    "figure.figsize": (6.4, 4.4),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 10.0,
    "axes.grid": True,
    "grid.alpha": 0.35,
    "svg.hashsalt": "rtdec-plot",
    "path.simplify": False,
}

SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                 "#8c564b", "#17becf", "#7f7f7f")
MARKER_COLOR = "#444444"


@dataclass(frozen=True)
class CurveSeries:
    label: str
    budgets: tuple
    rates: tuple
    ci_low: tuple
    ci_high: tuple


@dataclass(frozen=True)
class LatencySeries:
    label: str
    budgets: tuple
    fractions: tuple


@dataclass(frozen=True)
class PlotSpec:
    """Inputs and styling for one figure.

    labels defaults to the CSV file stems.  trials is only needed when a
    curve contains zero rates, to place the log-axis floor.
    """

    inputs: tuple
    out: str
    labels: Optional[tuple] = None
    trials: Optional[int] = None
    t_ref: Optional[float] = None
    t_gen: Optional[float] = None
    t_max: Optional[float] = None
    title: str = ""

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not self.inputs:
            raise ValueError("need at least one input series")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != len(self.inputs):
                raise ValueError("one label per input series")
        if self.trials is not None and self.trials < 1:
            raise ValueError("trials must be positive")

    def series_labels(self) -> list[str]:
        if self.labels is not None:
            return list(self.labels)
        return [os.path.splitext(os.path.basename(p))[0] for p in self.inputs]

    def markers(self) -> dict[str, float]:
        out = {}
        for name, value in (("T_ref", self.t_ref), ("T_gen", self.t_gen),
                            ("T_max", self.t_max)):
            if value is not None:
                out[name] = float(value)
        return out


@dataclass(frozen=True)
class RenderResult:
    image_path: str
    data_path: str
    markers: dict = field(compare=False)
    floored: tuple = ()


def _read_rows(path: str, header: list[str]) -> list[dict]:
    with open(path, newline="") as fp:
        reader = csv.DictReader(fp)
        if reader.fieldnames != header:
            raise ValueError(
                f"{path}: expected columns {header}, got {reader.fieldnames}")
        rows = [{k: float(v) for k, v in row.items()} for row in reader]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def read_curve_csv(path: str, label: str) -> CurveSeries:
    rows = _read_rows(path, CURVE_HEADER)
    budgets = tuple(r["budget"] for r in rows)
    if list(budgets) != sorted(budgets):
        raise ValueError(f"{path}: budgets must be ascending")
    for r in rows:
        if not 0.0 <= r["rate"] <= 1.0:
            raise ValueError(f"{path}: rate outside [0, 1]")
        if not r["ci_low"] <= r["rate"] <= r["ci_high"]:
            raise ValueError(f"{path}: interval does not bracket the rate")
    return CurveSeries(label, budgets,
                       tuple(r["rate"] for r in rows),
                       tuple(r["ci_low"] for r in rows),
                       tuple(r["ci_high"] for r in rows))


def read_latency_csv(path: str, label: str) -> LatencySeries:
    rows = _read_rows(path, LATENCY_HEADER)
    budgets = tuple(r["budget"] for r in rows)
    fractions = tuple(r["cumulative_fraction"] for r in rows)
    if list(budgets) != sorted(budgets):
        raise ValueError(f"{path}: budgets must be ascending")
    if any(b < a for a, b in zip(fractions, fractions[1:])):
        raise ValueError(f"{path}: fractions must be non-decreasing")
    if any(not 0.0 <= f <= 1.0 for f in fractions):
        raise ValueError(f"{path}: fractions outside [0, 1]")
    return LatencySeries(label, budgets, fractions)


def _fmt(x: float) -> str:
    return "%.9g" % x


def _write_sidecar(path: str, header: list[str], rows) -> str:
    data_path = path + ".data.csv"
    with open(data_path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[0]] + [_fmt(v) for v in row[1:]])
    return data_path


def _draw_markers(ax, markers: dict[str, float]) -> None:
    for name, x in sorted(markers.items()):
        ax.axvline(x, color=MARKER_COLOR, linestyle="--", linewidth=1.0)
        ax.annotate(name, xy=(x, 1.0), xycoords=("data", "axes fraction"),
                    xytext=(3, -3), textcoords="offset points",
                    ha="left", va="top", fontsize=9, color=MARKER_COLOR)


def _save(fig, path: str) -> None:
    # strip volatile metadata so identical inputs give identical bytes
    if path.lower().endswith(".svg"):
        metadata = {"Date": None}
    elif path.lower().endswith(".png"):
        metadata = {"Software": None}
    else:
        metadata = None
    fig.savefig(path, metadata=metadata)
    plt.close(fig)


def render_curve(spec: PlotSpec) -> RenderResult:
    """Rate-versus-budget lines with confidence bands, log rate axis."""
    labels = spec.series_labels()
    series = [read_curve_csv(path, label)
              for path, label in zip(spec.inputs, labels)]

    floor = None
    if any(0.0 in s.rates for s in series):
        if spec.trials is None:
            raise ValueError("zero rates need trials to place the floor")
        floor = 1.0 / (10.0 * spec.trials)

    floored = []
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.set_yscale("log")
        for color, s in zip(SERIES_COLORS, series):
            shown = []
            for budget, rate in zip(s.budgets, s.rates):
                if rate == 0.0:
                    shown.append(floor)
                    floored.append((s.label, budget))
                else:
                    shown.append(rate)
            positive = [v for v in shown + list(s.ci_high) if v > 0]
            clip = min(positive) / 10.0 if floor is None else floor
            band_low = [max(v, clip) for v in s.ci_low]
            band_high = [max(v, clip) for v in s.ci_high]
            ax.fill_between(s.budgets, band_low, band_high,
                            color=color, alpha=0.2, linewidth=0)
            ax.plot(s.budgets, shown, color=color, marker="o",
                    markersize=4, label=s.label)
        if floored:
            ax.axhline(floor, color=MARKER_COLOR, linestyle=":",
                       linewidth=0.8)
            ax.annotate(f"zero rates drawn at 1/(10*trials) = {floor:g}",
                        xy=(0.02, 0.02), xycoords="axes fraction",
                        fontsize=8, color=MARKER_COLOR)
        _draw_markers(ax, spec.markers())
        ax.set_xlabel("cycle budget")
        ax.set_ylabel("logical error rate")
        if spec.title:
            ax.set_title(spec.title)
        ax.legend(loc="best")
        fig.tight_layout()
        _save(fig, spec.out)

    rows = []
    for s in series:
        for values in zip(s.budgets, s.rates, s.ci_low, s.ci_high):
            rows.append((s.label,) + values)
    data_path = _write_sidecar(spec.out, ["series"] + CURVE_HEADER, rows)
    return RenderResult(spec.out, data_path, spec.markers(), tuple(floored))


def render_latency(spec: PlotSpec) -> RenderResult:
    """Cumulative latency fractions as step plots with budget markers."""
    labels = spec.series_labels()
    series = [read_latency_csv(path, label)
              for path, label in zip(spec.inputs, labels)]

    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for color, s in zip(SERIES_COLORS, series):
            ax.step(s.budgets, s.fractions, where="post", color=color,
                    marker="o", markersize=4, label=s.label)
        _draw_markers(ax, spec.markers())
        ax.set_xlabel("cycle budget")
        ax.set_ylabel("cumulative fraction decoded")
        ax.set_ylim(0.0, 1.05)
        if spec.title:
            ax.set_title(spec.title)
        ax.legend(loc="lower right")
        fig.tight_layout()
        _save(fig, spec.out)

    rows = []
    for s in series:
        for budget, fraction in zip(s.budgets, s.fractions):
            rows.append((s.label, budget, fraction))
    data_path = _write_sidecar(spec.out, ["series"] + LATENCY_HEADER, rows)
    return RenderResult(spec.out, data_path, spec.markers())
