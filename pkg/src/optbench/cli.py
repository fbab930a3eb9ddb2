"""Command-line interface: run experiments, re-render reports, list names.

Settings resolve in precedence order: explicit flag, then config file, then
the OPTBENCH_OUT_DIR environment variable (output directory only), then the
built-in defaults. Config files are flat `key=value` lines; `#` starts a
comment and list values are comma-separated.
"""

from __future__ import annotations

import os
from pathlib import Path

import click

from . import harness, report
from .algorithms import ALGORITHM_NAMES
from .objectives import DEFAULT_DIMENSION, FUNCTION_NAMES, make_objective

DEFAULT_EVALUATIONS = 1500
DEFAULT_BO_EVALUATIONS = 300
DEFAULT_RUNS = 10
DEFAULT_SEED = 42
DEFAULT_OUT = "results"
ENV_OUT = "OPTBENCH_OUT_DIR"

_LIST_KEYS = {"function", "algorithm"}
_INT_KEYS = {"dim", "evals", "bo_evals", "runs", "seed", "jobs"}
_BOOL_KEYS = {"timing"}
_CONFIG_KEYS = _LIST_KEYS | _INT_KEYS | _BOOL_KEYS | {"out"}

ALGORITHM_SUMMARIES = {
    "bo": "Bayesian optimization (GP surrogate, UCB acquisition)",
    "cmaes": "covariance matrix adaptation evolution strategy",
    "es": "(mu+lambda) evolution strategy",
    "pso": "global-best particle swarm",
}


def load_config(path: str) -> dict:
    """Parse a flat key=value config file, reporting errors with line numbers."""
    settings: dict = {}
    with open(path) as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not sep or not key:
                raise click.UsageError(f"{path}:{line_number}: expected key=value")
            if key not in _CONFIG_KEYS:
                valid = ", ".join(sorted(_CONFIG_KEYS))
                raise click.UsageError(f"{path}:{line_number}: unknown key {key!r}; valid keys: {valid}")
            if key in _LIST_KEYS:
                settings[key] = tuple(item.strip() for item in value.split(",") if item.strip())
            elif key in _INT_KEYS:
                try:
                    settings[key] = int(value)
                except ValueError:
                    raise click.UsageError(f"{path}:{line_number}: {key} expects an integer") from None
            elif key in _BOOL_KEYS:
                if value.lower() not in ("true", "false"):
                    raise click.UsageError(f"{path}:{line_number}: {key} expects true or false")
                settings[key] = value.lower() == "true"
            else:
                settings[key] = value
    return settings


def _resolve_out(flag: str | None, config: dict) -> Path:
    return Path(flag or config.get("out") or os.environ.get(ENV_OUT) or DEFAULT_OUT)


def _validate_names(names, valid, kind: str) -> tuple:
    for name in names:
        if name not in valid:
            raise click.UsageError(f"unknown {kind} {name!r}; valid {kind}s: {', '.join(valid)}")
    return tuple(names)


@click.group()
@click.version_option(package_name="optbench")
def main():
    """Benchmark Bayesian and evolutionary optimizers on classic test functions."""


@main.command()
@click.option("--function", "functions", multiple=True, help="Objective to include (repeatable).")
@click.option("--algorithm", "algorithms", multiple=True, help="Algorithm to include (repeatable).")
@click.option("--dim", type=int, default=None, help="Problem dimension.")
@click.option("--evals", type=int, default=None, help="Evaluation budget per run.")
@click.option("--bo-evals", type=int, default=None, help="Evaluation budget for BO runs.")
@click.option("--runs", type=int, default=None, help="Independent runs per cell.")
@click.option("--seed", type=int, default=None, help="Base seed; run i uses seed+i.")
@click.option("--timing/--no-timing", default=None, help="Measure wall-clock time (sequential) or not (parallel).")
@click.option("--jobs", type=int, default=None, help="Worker processes when timing is off.")
@click.option("--out", default=None, help="Output directory.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="key=value config file.")
def run(functions, algorithms, dim, evals, bo_evals, runs, seed, timing, jobs, out, config_path):
    """Run the benchmark and write traces.csv, aggregates.csv, and figures."""
    config = load_config(config_path) if config_path else {}
    functions = _validate_names(
        functions or config.get("function") or FUNCTION_NAMES, FUNCTION_NAMES, "function"
    )
    algorithms = _validate_names(
        algorithms or config.get("algorithm") or ALGORITHM_NAMES, ALGORITHM_NAMES, "algorithm"
    )
    dim = dim if dim is not None else config.get("dim", DEFAULT_DIMENSION)
    evals = evals if evals is not None else config.get("evals", DEFAULT_EVALUATIONS)
    bo_evals = bo_evals if bo_evals is not None else config.get("bo_evals", DEFAULT_BO_EVALUATIONS)
    runs = runs if runs is not None else config.get("runs", DEFAULT_RUNS)
    seed = seed if seed is not None else config.get("seed", DEFAULT_SEED)
    timing = timing if timing is not None else config.get("timing", True)
    jobs = jobs if jobs is not None else config.get("jobs")
    if dim < 1:
        raise click.UsageError("dim must be positive")
    if runs < 1:
        raise click.UsageError("runs must be positive")
    for label, budget in (("evals", evals), ("bo-evals", bo_evals)):
        if budget <= 0 or budget % harness.BATCH_SIZE:
            raise click.UsageError(f"{label} must be a positive multiple of {harness.BATCH_SIZE}")
    out_dir = _resolve_out(out, config)
    out_dir.mkdir(parents=True, exist_ok=True)

    traces = harness.run_experiment(
        functions,
        algorithms,
        dimension=dim,
        evaluations=evals,
        bo_evaluations=bo_evals,
        runs=runs,
        base_seed=seed,
        timing=timing,
        jobs=jobs,
        event_log=click.echo,
    )
    _write_outputs(traces, out_dir, allow_single=runs == 1)

    dead_cells = [
        f"{function}/{algorithm}"
        for (function, algorithm), group in _group_cells(traces).items()
        if all(trace.failed for trace in group)
    ]
    if dead_cells:
        raise click.ClickException("all runs failed for: " + ", ".join(sorted(dead_cells)))


@main.command()
@click.option("--out", default=None, help="Directory holding traces.csv.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="key=value config file.")
def plot(out, config_path):
    """Re-render aggregates.csv and figures from an existing traces.csv."""
    config = load_config(config_path) if config_path else {}
    out_dir = _resolve_out(out, config)
    traces_path = out_dir / "traces.csv"
    if not traces_path.exists():
        raise click.ClickException(f"missing {traces_path}; run `optbench run` first")
    try:
        traces = report.read_traces_csv(traces_path)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    if not traces:
        raise click.ClickException(f"{traces_path} holds no evaluation rows")
    allow_single = any(len(group) == 1 for group in _group_cells(traces).values())
    _write_outputs(traces, out_dir, allow_single=allow_single)


@main.command("list")
def list_names():
    """List available objective functions and algorithms."""
    click.echo("functions:")
    for name in FUNCTION_NAMES:
        space = make_objective(name, 1).space
        click.echo(f"  {name}  domain [{space.lower[0]:g}, {space.upper[0]:g}] per dimension")
    click.echo("algorithms:")
    for name in ALGORITHM_NAMES:
        click.echo(f"  {name}  {ALGORITHM_SUMMARIES[name]}")


def _group_cells(traces) -> dict:
    cells: dict = {}
    for trace in traces:
        cells.setdefault((trace.function, trace.algorithm), []).append(trace)
    return cells


def _write_outputs(traces, out_dir: Path, allow_single: bool) -> None:
    traces_path = out_dir / "traces.csv"
    report.write_traces_csv(traces, traces_path)
    click.echo(f"wrote {traces_path}")
    if allow_single:
        click.echo("note: single run per cell, confidence bands omitted")
    series = harness.aggregate(traces, allow_single=allow_single)
    aggregates_path = out_dir / "aggregates.csv"
    report.write_aggregates_csv(series, aggregates_path)
    click.echo(f"wrote {aggregates_path}")
    for path in report.render_reports(series, out_dir):
        click.echo(f"wrote {path}")
    for agg in series:
        click.echo(
            f"{agg.function} {agg.algorithm}: mean best {agg.mean_best[-1]:.6g} "
            f"over {agg.n_runs} runs"
        )
