"""Delimited output and SVG figures for benchmark results.

CSV floats are written with `repr`, whose shortest round-trip guarantee makes
write/read an exact identity. Figures are rendered without pyplot so the
module stays headless and thread-safe, and SVGs are byte-deterministic: the
hash salt is pinned and the date metadata removed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .harness import AggregateSeries, EvalRecord, RunTrace

TRACE_COLUMNS = (
    "function",
    "algorithm",
    "run_id",
    "eval_index",
    "batch_index",
    "value",
    "best_value",
    "batch_time_s",
    "cum_time_s",
    "objective_time_s",
)

AGGREGATE_COLUMNS = (
    "function",
    "algorithm",
    "n_runs",
    "eval_index",
    "mean_best",
    "best_ci_half_width",
    "mean_cum_time_s",
    "time_ci_half_width",
    "mean_log10_time",
    "log10_ci_half_width",
)

PALETTE = {
    "bo": "#1f77b4",
    "cmaes": "#ff7f0e",
    "es": "#2ca02c",
    "pso": "#d62728",
}

LABELS = {
    "bo": "BO",
    "cmaes": "CMA-ES",
    "es": "EA",
    "pso": "PSO",
}

SVG_HASH_SALT = "optbench"


class PlotDataError(ValueError):
    """A requested figure has no finite data to draw for some series."""


def _fmt(value: float) -> str:
    return repr(float(value))


def write_traces_csv(traces, path) -> None:
    """Write per-evaluation rows, sorted, skipping failed traces."""
    rows = []
    for trace in traces:
        if trace.failed:
            continue
        for record in trace.records:
            rows.append(
                (
                    trace.function,
                    trace.algorithm,
                    trace.run_id,
                    record.eval_index,
                    record.batch_index,
                    record.value,
                    record.best_value,
                    record.batch_time_s,
                    record.cum_time_s,
                    record.objective_time_s,
                )
            )
    rows.sort(key=lambda row: (row[0], row[1], row[2], row[3]))
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for function, algorithm, run_id, eval_index, batch_index, *floats in rows:
            writer.writerow(
                [function, algorithm, str(run_id), str(eval_index), str(batch_index)]
                + [_fmt(x) for x in floats]
            )


def read_traces_csv(path) -> list[RunTrace]:
    """Inverse of `write_traces_csv`; parse errors carry the offending line number."""
    traces: dict[tuple[str, str, int], RunTrace] = {}
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != list(TRACE_COLUMNS):
            raise ValueError(f"{path}:1: expected header {','.join(TRACE_COLUMNS)}")
        for line, row in enumerate(reader, start=2):
            if len(row) != len(TRACE_COLUMNS):
                raise ValueError(f"{path}:{line}: expected {len(TRACE_COLUMNS)} fields, got {len(row)}")
            try:
                function, algorithm = row[0], row[1]
                run_id, eval_index, batch_index = (int(x) for x in row[2:5])
                value, best, batch_s, cum_s, objective_s = (float(x) for x in row[5:])
            except ValueError as exc:
                raise ValueError(f"{path}:{line}: {exc}") from None
            key = (function, algorithm, run_id)
            trace = traces.get(key)
            if trace is None:
                trace = traces[key] = RunTrace(function=function, algorithm=algorithm, run_id=run_id)
            trace.records.append(
                EvalRecord(
                    eval_index=eval_index,
                    batch_index=batch_index,
                    value=value,
                    best_value=best,
                    batch_time_s=batch_s,
                    cum_time_s=cum_s,
                    objective_time_s=objective_s,
                )
            )
    return list(traces.values())


def write_aggregates_csv(series, path) -> None:
    rows = []
    for agg in series:
        for i, eval_index in enumerate(agg.eval_indices):
            rows.append(
                (
                    agg.function,
                    agg.algorithm,
                    agg.n_runs,
                    int(eval_index),
                    agg.mean_best[i],
                    agg.best_ci_half_width[i],
                    agg.mean_cum_time_s[i],
                    agg.time_ci_half_width[i],
                    agg.mean_log10_time[i],
                    agg.log10_ci_half_width[i],
                )
            )
    rows.sort(key=lambda row: (row[0], row[1], row[3]))
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(AGGREGATE_COLUMNS)
        for function, algorithm, n_runs, eval_index, *floats in rows:
            writer.writerow(
                [function, algorithm, str(n_runs), str(eval_index)] + [_fmt(x) for x in floats]
            )


@dataclass(frozen=True)
class SeriesStyle:
    color: str
    label: str


def style_for(name: str) -> SeriesStyle:
    return SeriesStyle(color=PALETTE.get(name, "#7f7f7f"), label=LABELS.get(name, name))


@dataclass(frozen=True)
class PlotSeries:
    name: str
    x: np.ndarray
    mean: np.ndarray
    half_width: np.ndarray | None = None  # None suppresses the band
    style: SeriesStyle | None = None


@dataclass(frozen=True)
class PlotSpec:
    title: str
    x_label: str
    y_label: str
    series: tuple[PlotSeries, ...]


def padded_range(low: float, high: float, fraction: float = 0.05) -> tuple[float, float]:
    """Widen [low, high] by `fraction` of its span; degenerate spans get a unit pad."""
    if not (np.isfinite(low) and np.isfinite(high)) or low > high:
        raise ValueError(f"invalid range [{low}, {high}]")
    span = high - low
    if span == 0.0:
        span = max(abs(high), 1.0)
    pad = fraction * span
    return low - pad, high + pad


def build_figure(spec: PlotSpec) -> Figure:
    """Draw one comparison figure; every series carries a stable SVG gid."""
    fig = Figure(figsize=(7.0, 4.5), dpi=100)
    ax = fig.add_subplot()
    lows = []
    highs = []
    for series in spec.series:
        style = series.style or style_for(series.name)
        mean = np.asarray(series.mean, dtype=float)
        finite = np.isfinite(mean)
        if not finite.any():
            raise PlotDataError(f"series {series.name!r} has no finite values in {spec.title!r}")
        if series.half_width is not None:
            half = np.asarray(series.half_width, dtype=float)
            band = np.isfinite(half) & finite
            if band.any():
                ax.fill_between(
                    np.asarray(series.x)[band],
                    (mean - half)[band],
                    (mean + half)[band],
                    color=style.color,
                    alpha=0.2,
                    linewidth=0,
                    gid=f"band-{series.name}",
                )
                lows.append((mean - half)[band].min())
                highs.append((mean + half)[band].max())
        ax.plot(
            np.asarray(series.x)[finite],
            mean[finite],
            color=style.color,
            label=style.label,
            gid=f"series-{series.name}",
        )
        lows.append(mean[finite].min())
        highs.append(mean[finite].max())
    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    ax.set_title(spec.title)
    ax.set_ylim(*padded_range(min(lows), max(highs)))
    ax.legend(loc="best")
    return fig


def render_plot(spec: PlotSpec, path) -> None:
    """Render `spec` to an SVG whose bytes depend only on the data."""
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        fig = build_figure(spec)
        fig.savefig(path, format="svg", metadata={"Date": None})


def render_reports(aggregates, out_dir) -> list[Path]:
    """Write per-function figures; time figures appear only when times were measured.

    Returns the written paths: `<function>_quality.svg` always, plus
    `<function>_time.svg` and `<function>_logtime.svg` when any cumulative
    time in that function's series is positive.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_function: dict[str, list[AggregateSeries]] = {}
    for agg in aggregates:
        by_function.setdefault(agg.function, []).append(agg)
    written = []
    for function, group in by_function.items():
        def series(values, widths):
            return tuple(
                PlotSeries(
                    name=agg.algorithm,
                    x=agg.eval_indices,
                    mean=values(agg),
                    half_width=widths(agg) if agg.n_runs >= 2 else None,
                )
                for agg in group
            )

        quality = PlotSpec(
            title=f"{function}: solution quality",
            x_label="evaluations",
            y_label="best objective value",
            series=series(lambda a: a.mean_best, lambda a: a.best_ci_half_width),
        )
        path = out_dir / f"{function}_quality.svg"
        render_plot(quality, path)
        written.append(path)
        if not any(np.any(agg.mean_cum_time_s > 0.0) for agg in group):
            continue
        time_spec = PlotSpec(
            title=f"{function}: cumulative wall-clock time",
            x_label="evaluations",
            y_label="cumulative seconds",
            series=series(lambda a: a.mean_cum_time_s, lambda a: a.time_ci_half_width),
        )
        path = out_dir / f"{function}_time.svg"
        render_plot(time_spec, path)
        written.append(path)
        log_spec = PlotSpec(
            title=f"{function}: cumulative wall-clock time (log scale)",
            x_label="evaluations",
            y_label="log10 cumulative seconds",
            series=series(lambda a: a.mean_log10_time, lambda a: a.log10_ci_half_width),
        )
        path = out_dir / f"{function}_logtime.svg"
        render_plot(log_spec, path)
        written.append(path)
    return written
