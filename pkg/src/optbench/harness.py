"""Experiment harness: drives ask/tell optimizers and records quality and cost.

Timing attribution works in batches of `BATCH_SIZE` evaluations. The time an
`ask` takes lands in the batch of the first evaluation it produces, and the
time a `tell` takes lands in the batch that starts afterwards. The tell after
the final evaluation is skipped, so the per-batch times always sum exactly to
the run's total measured time.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .gp import NumericalError
from .objectives import BudgetExhausted, EvalCounter, ObjectiveSpec, counted_evaluate, make_objective

BATCH_SIZE = 10
WARMUP_BUDGET = 50


@dataclass(frozen=True)
class EvalRecord:
    """One objective evaluation; time columns are cumulative except batch_time_s."""

    eval_index: int  # 1-based
    batch_index: int  # 1-based, ceil(eval_index / BATCH_SIZE)
    value: float
    best_value: float
    batch_time_s: float  # total duration of this record's batch
    cum_time_s: float
    objective_time_s: float


@dataclass
class RunTrace:
    function: str
    algorithm: str
    run_id: int
    records: list[EvalRecord] = field(default_factory=list)
    failed: bool = False
    error: str | None = None

    @property
    def best_value(self) -> float:
        return self.records[-1].best_value if self.records else np.inf

    @property
    def total_time_s(self) -> float:
        return self.records[-1].cum_time_s if self.records else 0.0

    @property
    def n_evaluations(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class BatchTiming:
    batch_index: int
    total_s: float
    objective_s: float

    @property
    def optimizer_s(self) -> float:
        return self.total_s - self.objective_s


@dataclass(frozen=True)
class AggregateSeries:
    """Across-run summary of one (function, algorithm) cell at batch ends."""

    function: str
    algorithm: str
    n_runs: int
    eval_indices: np.ndarray
    mean_best: np.ndarray
    best_ci_half_width: np.ndarray
    mean_cum_time_s: np.ndarray
    time_ci_half_width: np.ndarray
    mean_log10_time: np.ndarray
    log10_ci_half_width: np.ndarray


def _zero_clock() -> float:
    return 0.0


def run_single(
    spec: ObjectiveSpec,
    optimizer,
    budget: int,
    run_id: int,
    timing: bool = True,
    algorithm: str | None = None,
) -> RunTrace:
    """Drive one optimizer against one objective until the budget is spent.

    A numerical failure inside the optimizer marks the trace failed and keeps
    the records gathered so far; running out of budget is the normal exit.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    clock = time.perf_counter if timing else _zero_clock
    counter = EvalCounter(budget=budget)
    rows: list[tuple[int, int, float, float, float, float]] = []
    batch_optimizer: dict[int, float] = {}
    batch_objective: dict[int, float] = {}
    pending = 0.0
    best = np.inf
    cum_objective = 0.0
    cum_total = 0.0
    failed = False
    error = None
    try:
        while counter.remaining > 0:
            start = clock()
            candidates = np.atleast_2d(np.asarray(optimizer.ask(), dtype=float))
            pending += clock() - start
            if candidates.shape[0] == 0:
                raise ValueError("optimizer.ask returned no candidates")
            evaluated = []
            observed = []
            first_of_ask = True
            for x in candidates:
                if counter.remaining == 0:
                    break
                start = clock()
                value = counted_evaluate(spec, counter, x)
                elapsed = clock() - start
                index = counter.total_evaluations
                batch = (index + BATCH_SIZE - 1) // BATCH_SIZE
                if first_of_ask:
                    batch_optimizer[batch] = batch_optimizer.get(batch, 0.0) + pending
                    cum_total += pending
                    pending = 0.0
                    first_of_ask = False
                batch_objective[batch] = batch_objective.get(batch, 0.0) + elapsed
                cum_objective += elapsed
                cum_total += elapsed
                best = min(best, value)
                rows.append((index, batch, value, best, cum_total, cum_objective))
                evaluated.append(x)
                observed.append(value)
            if counter.remaining == 0:
                break  # skip the final tell so batch times partition the total
            start = clock()
            optimizer.tell(np.asarray(evaluated), np.asarray(observed))
            pending += clock() - start
    except BudgetExhausted:
        pass
    except NumericalError as exc:
        failed = True
        error = str(exc)
    records = [
        EvalRecord(
            eval_index=index,
            batch_index=batch,
            value=value,
            best_value=best_value,
            batch_time_s=batch_optimizer.get(batch, 0.0) + batch_objective.get(batch, 0.0),
            cum_time_s=cum_time,
            objective_time_s=objective_time,
        )
        for index, batch, value, best_value, cum_time, objective_time in rows
    ]
    return RunTrace(
        function=spec.name,
        algorithm=algorithm or type(optimizer).__name__,
        run_id=run_id,
        records=records,
        failed=failed,
        error=error,
    )


def measure_batch_time(records: list[EvalRecord]) -> list[BatchTiming]:
    """Per-batch durations recovered from a record stream."""
    timings = []
    previous_objective = 0.0
    current = None
    for record in records:
        if current is None or record.batch_index != current:
            if current is not None:
                timings.append(BatchTiming(current, total, last_objective - previous_objective))
                previous_objective = last_objective
            current = record.batch_index
            total = record.batch_time_s
        last_objective = record.objective_time_s
    if current is not None:
        timings.append(BatchTiming(current, total, last_objective - previous_objective))
    return timings


def _run_cell(function: str, algorithm: str, dimension: int, budget: int, seed: int, timing: bool) -> RunTrace:
    # imported here so the harness stays import-light and process-pool friendly
    from .algorithms import make_optimizer

    spec = make_objective(function, dimension)
    optimizer = make_optimizer(algorithm, spec.space, seed=seed)
    return run_single(spec, optimizer, budget=budget, run_id=seed, timing=timing, algorithm=algorithm)


def _run_cell_args(args) -> RunTrace:
    return _run_cell(*args)


def run_experiment(
    functions,
    algorithms,
    dimension: int = 10,
    evaluations: int = 1500,
    bo_evaluations: int = 300,
    runs: int = 10,
    base_seed: int = 42,
    timing: bool = True,
    jobs: int | None = None,
    event_log: Callable[[str], None] | None = None,
) -> list[RunTrace]:
    """Run every (function, algorithm, seed) cell and return the traces.

    With timing on, runs execute strictly sequentially and each algorithm gets
    one discarded warm-up beforehand, so measured wall-clock times are not
    polluted by interpreter or library start-up costs. With timing off the
    runs are independent and fan out over a process pool.
    """
    functions = list(functions)
    algorithms = list(algorithms)
    if runs < 1:
        raise ValueError("runs must be positive")
    if evaluations % BATCH_SIZE or evaluations <= 0:
        raise ValueError(f"evaluations must be a positive multiple of {BATCH_SIZE}")
    if bo_evaluations % BATCH_SIZE or bo_evaluations <= 0:
        raise ValueError(f"bo_evaluations must be a positive multiple of {BATCH_SIZE}")
    log = event_log or (lambda message: None)

    def budget_for(algorithm: str) -> int:
        return bo_evaluations if algorithm == "bo" else evaluations

    tasks = [
        (function, algorithm, dimension, budget_for(algorithm), base_seed + run_index, timing)
        for function in functions
        for algorithm in algorithms
        for run_index in range(runs)
    ]
    if timing:
        if jobs is not None and jobs > 1:
            log("timing mode runs sequentially; ignoring --jobs")
        warmed: set[str] = set()
        traces = []
        for function, algorithm, dim, budget, seed, _ in tasks:
            if algorithm not in warmed:
                log(f"warm-up algorithm={algorithm}")
                _run_cell(function, algorithm, dim, min(WARMUP_BUDGET, budget), base_seed, True)
                warmed.add(algorithm)
            trace = _run_cell(function, algorithm, dim, budget, seed, True)
            log(_trace_line(trace))
            traces.append(trace)
        return traces
    if jobs == 1 or len(tasks) == 1:
        traces = [_run_cell_args(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            traces = list(executor.map(_run_cell_args, tasks))
    for trace in traces:
        log(_trace_line(trace))
    return traces


def _trace_line(trace: RunTrace) -> str:
    if trace.failed:
        return (
            f"run function={trace.function} algorithm={trace.algorithm} "
            f"seed={trace.run_id} FAILED: {trace.error}"
        )
    return (
        f"run function={trace.function} algorithm={trace.algorithm} "
        f"seed={trace.run_id} evals={trace.n_evaluations} "
        f"best={trace.best_value:.6g} time={trace.total_time_s:.3f}s"
    )


def _ci_half_width(samples: np.ndarray) -> np.ndarray:
    n = samples.shape[0]
    if n < 2:
        return np.full(samples.shape[1], np.nan)
    return 1.96 * samples.std(axis=0, ddof=1) / np.sqrt(n)


def aggregate(traces, allow_single: bool = False) -> list[AggregateSeries]:
    """Summarize traces per (function, algorithm) cell at batch ends.

    Failed traces are skipped. Cells with a single run are rejected unless
    `allow_single` is set, in which case the confidence channels are NaN.
    """
    cells: dict[tuple[str, str], list[RunTrace]] = {}
    for trace in traces:
        if trace.failed or not trace.records:
            continue
        cells.setdefault((trace.function, trace.algorithm), []).append(trace)
    series = []
    for (function, algorithm), group in cells.items():
        n_runs = len(group)
        if n_runs < 2 and not allow_single:
            raise ValueError(
                f"cell function={function} algorithm={algorithm} has a single run; "
                "confidence intervals need at least 2 (pass allow_single to override)"
            )
        per_trace = []
        for trace in group:
            ends: dict[int, EvalRecord] = {}
            for record in trace.records:
                ends[record.batch_index] = record  # records are ordered, last one wins
            per_trace.append(ends)
        batch_ids = sorted(per_trace[0])
        eval_indices = [per_trace[0][batch].eval_index for batch in batch_ids]
        for ends in per_trace[1:]:
            if sorted(ends) != batch_ids or [ends[b].eval_index for b in batch_ids] != eval_indices:
                raise ValueError(
                    f"cell function={function} algorithm={algorithm} mixes runs "
                    "with different batch structures"
                )
        best = np.array([[ends[b].best_value for b in batch_ids] for ends in per_trace])
        times = np.array([[ends[b].cum_time_s for b in batch_ids] for ends in per_trace])
        mean_log = np.full(len(batch_ids), np.nan)
        log_half_width = np.full(len(batch_ids), np.nan)
        positive = np.all(times > 0.0, axis=0)
        if positive.any():
            log_times = np.log10(times[:, positive])
            mean_log[positive] = log_times.mean(axis=0)
            if n_runs >= 2:
                log_half_width[positive] = _ci_half_width(log_times)
        series.append(
            AggregateSeries(
                function=function,
                algorithm=algorithm,
                n_runs=n_runs,
                eval_indices=np.array(eval_indices),
                mean_best=best.mean(axis=0),
                best_ci_half_width=_ci_half_width(best),
                mean_cum_time_s=times.mean(axis=0),
                time_ci_half_width=_ci_half_width(times),
                mean_log10_time=mean_log,
                log10_ci_half_width=log_half_width,
            )
        )
    return series
