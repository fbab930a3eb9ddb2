"""Tests for the experiment harness: timing attribution, traces, aggregation."""

import time

import numpy as np
import pytest

from optbench import harness
from optbench.algorithms import make_optimizer
from optbench.gp import NumericalError
from optbench.harness import (
    BATCH_SIZE,
    AggregateSeries,
    EvalRecord,
    RunTrace,
    aggregate,
    measure_batch_time,
    run_experiment,
    run_single,
)
from optbench.objectives import make_objective


class StubOptimizer:
    """Deterministic optimizer that proposes a fixed-size batch per ask."""

    def __init__(self, dimension, batch=BATCH_SIZE, fail_tell_after=None):
        self.dimension = dimension
        self.batch = batch
        self.fail_tell_after = fail_tell_after
        self.tells = 0

    def ask(self):
        return np.zeros((self.batch, self.dimension))

    def tell(self, candidates, values):
        self.tells += 1
        if self.fail_tell_after is not None and self.tells > self.fail_tell_after:
            raise NumericalError("stub failure")


class TickingClock:
    """Fake perf_counter advancing one second per call, so every timed
    section (ask, one evaluation, tell) lasts exactly 1.0s."""

    def __init__(self):
        self.now = 0.0

    def __call__(self):
        self.now += 1.0
        return self.now


def batch_end_trace(function, algorithm, run_id, best_at_ends, time_at_ends):
    records = [
        EvalRecord(
            eval_index=BATCH_SIZE * (i + 1),
            batch_index=i + 1,
            value=best,
            best_value=best,
            batch_time_s=0.0,
            cum_time_s=cum_time,
            objective_time_s=0.0,
        )
        for i, (best, cum_time) in enumerate(zip(best_at_ends, time_at_ends))
    ]
    return RunTrace(function=function, algorithm=algorithm, run_id=run_id, records=records)


class TestRunSingleTiming:
    def test_scripted_clock_attribution(self, monkeypatch):
        monkeypatch.setattr(time, "perf_counter", TickingClock())
        spec = make_objective("rastrigin", 2)
        trace = run_single(spec, StubOptimizer(2), budget=20, run_id=0, algorithm="stub")
        assert trace.n_evaluations == 20
        # batch 1: one 1s ask + ten 1s evaluations
        assert trace.records[9].batch_time_s == pytest.approx(11.0)
        # batch 2 additionally absorbs the 1s tell that preceded its ask
        assert trace.records[19].batch_time_s == pytest.approx(12.0)
        assert trace.records[19].cum_time_s == pytest.approx(23.0)
        assert trace.records[19].objective_time_s == pytest.approx(20.0)
        timings = measure_batch_time(trace.records)
        assert [t.batch_index for t in timings] == [1, 2]
        assert [t.total_s for t in timings] == pytest.approx([11.0, 12.0])
        assert [t.objective_s for t in timings] == pytest.approx([10.0, 10.0])
        assert [t.optimizer_s for t in timings] == pytest.approx([1.0, 2.0])

    def test_final_tell_excluded_so_batches_partition_total(self, monkeypatch):
        clock = TickingClock()
        monkeypatch.setattr(time, "perf_counter", clock)
        spec = make_objective("rastrigin", 2)
        optimizer = StubOptimizer(2)
        trace = run_single(spec, optimizer, budget=30, run_id=0)
        assert optimizer.tells == 2  # the tell after the last batch is skipped
        batch_sum = sum(t.total_s for t in measure_batch_time(trace.records))
        assert batch_sum == pytest.approx(trace.total_time_s, abs=1e-9)

    def test_sleeping_objective_fills_objective_channel(self):
        spec = make_objective("rastrigin", 2)
        slow = type(spec)(
            name=spec.name,
            fn=lambda x: (time.sleep(0.002), spec.fn(x))[1],
            space=spec.space,
            known_optimum_location=spec.known_optimum_location,
            known_optimum_value=spec.known_optimum_value,
        )
        trace = run_single(slow, StubOptimizer(2), budget=20, run_id=0)
        for timing in measure_batch_time(trace.records):
            assert 0.015 <= timing.objective_s <= 2.0
            assert timing.optimizer_s >= 0.0
        assert trace.total_time_s == pytest.approx(
            sum(t.total_s for t in measure_batch_time(trace.records)), abs=1e-9
        )

    def test_timing_off_zeroes_every_channel(self):
        spec = make_objective("griewank", 2)
        optimizer = make_optimizer("pso", spec.space, seed=0)
        trace = run_single(spec, optimizer, budget=30, run_id=0, timing=False)
        for record in trace.records:
            assert record.batch_time_s == 0.0
            assert record.cum_time_s == 0.0
            assert record.objective_time_s == 0.0

    def test_cum_time_nondecreasing(self):
        spec = make_objective("rastrigin", 2)
        optimizer = make_optimizer("cmaes", spec.space, seed=1)
        trace = run_single(spec, optimizer, budget=50, run_id=1)
        times = [record.cum_time_s for record in trace.records]
        assert all(a <= b for a, b in zip(times, times[1:]))


class TestRunSingleRecords:
    def test_indices_batches_and_best_values(self):
        spec = make_objective("rastrigin", 3)
        optimizer = make_optimizer("pso", spec.space, seed=3)
        trace = run_single(spec, optimizer, budget=50, run_id=3, timing=False)
        values = [record.value for record in trace.records]
        for i, record in enumerate(trace.records, start=1):
            assert record.eval_index == i
            assert record.batch_index == (i + BATCH_SIZE - 1) // BATCH_SIZE
            assert record.best_value == min(values[:i])

    def test_greedy_ask_is_cut_at_budget(self):
        spec = make_objective("rastrigin", 2)
        trace = run_single(spec, StubOptimizer(2, batch=15), budget=10, run_id=0)
        assert trace.n_evaluations == 10
        assert not trace.failed

    def test_numerical_failure_keeps_partial_trace(self):
        spec = make_objective("rastrigin", 2)
        optimizer = StubOptimizer(2, fail_tell_after=1)
        trace = run_single(spec, optimizer, budget=50, run_id=0)
        assert trace.failed
        assert "stub failure" in trace.error
        assert trace.n_evaluations == 20  # two asks happened before the bad tell

    def test_algorithm_label_defaults_to_class_name(self):
        spec = make_objective("rastrigin", 2)
        trace = run_single(spec, StubOptimizer(2), budget=10, run_id=0)
        assert trace.algorithm == "StubOptimizer"

    def test_budget_must_be_positive(self):
        spec = make_objective("rastrigin", 2)
        with pytest.raises(ValueError):
            run_single(spec, StubOptimizer(2), budget=0, run_id=0)


class TestAggregate:
    def test_hand_computed_confidence_interval(self):
        traces = [
            batch_end_trace("rastrigin", "pso", i, best_at_ends=[5.0], time_at_ends=[t])
            for i, t in enumerate([1.0, 2.0, 3.0])
        ]
        (series,) = aggregate(traces)
        assert series.n_runs == 3
        assert series.mean_cum_time_s[0] == pytest.approx(2.0)
        assert series.time_ci_half_width[0] == pytest.approx(1.96 / np.sqrt(3.0), rel=1e-12)
        assert series.time_ci_half_width[0] == pytest.approx(1.1316, abs=1e-4)
        # constant quality channel collapses to zero width
        assert series.mean_best[0] == 5.0
        assert series.best_ci_half_width[0] == 0.0

    def test_identical_traces_have_zero_width(self):
        traces = [
            batch_end_trace("griewank", "es", i, [3.0, 2.0], [1.0, 2.0]) for i in range(4)
        ]
        (series,) = aggregate(traces)
        np.testing.assert_array_equal(series.best_ci_half_width, np.zeros(2))
        np.testing.assert_array_equal(series.time_ci_half_width, np.zeros(2))
        np.testing.assert_array_equal(series.mean_best, [3.0, 2.0])

    def test_log_time_channel(self):
        traces = [
            batch_end_trace("schwefel", "bo", 0, [1.0], [10.0]),
            batch_end_trace("schwefel", "bo", 1, [1.0], [1000.0]),
        ]
        (series,) = aggregate(traces)
        assert series.mean_log10_time[0] == pytest.approx(2.0)
        assert series.mean_cum_time_s[0] == pytest.approx(505.0)

    def test_log_time_nan_when_timing_off(self):
        traces = [
            batch_end_trace("schwefel", "bo", i, [1.0, 0.5], [0.0, 0.0]) for i in range(3)
        ]
        (series,) = aggregate(traces)
        assert np.isnan(series.mean_log10_time).all()
        assert np.isnan(series.log10_ci_half_width).all()

    def test_single_run_rejected_without_override(self):
        traces = [batch_end_trace("rastrigin", "pso", 0, [1.0], [1.0])]
        with pytest.raises(ValueError, match="single run"):
            aggregate(traces)
        (series,) = aggregate(traces, allow_single=True)
        assert series.n_runs == 1
        assert np.isnan(series.best_ci_half_width).all()
        assert np.isnan(series.time_ci_half_width).all()

    def test_mixed_batch_structure_rejected(self):
        traces = [
            batch_end_trace("rastrigin", "pso", 0, [1.0, 1.0], [1.0, 2.0]),
            batch_end_trace("rastrigin", "pso", 1, [1.0], [1.0]),
        ]
        with pytest.raises(ValueError, match="batch structure"):
            aggregate(traces)

    def test_failed_traces_are_skipped(self):
        good = [batch_end_trace("rastrigin", "pso", i, [1.0], [1.0]) for i in range(2)]
        bad = batch_end_trace("rastrigin", "pso", 9, [0.0], [0.5])
        bad.failed = True
        (series,) = aggregate(good + [bad])
        assert series.n_runs == 2
        assert series.mean_best[0] == 1.0

    def test_cells_keep_first_appearance_order(self):
        traces = []
        for algorithm in ("pso", "es"):
            for run in range(2):
                traces.append(batch_end_trace("rastrigin", algorithm, run, [1.0], [1.0]))
        series = aggregate(traces)
        assert [s.algorithm for s in series] == ["pso", "es"]

    def test_series_lengths_agree(self):
        traces = [
            batch_end_trace("griewank", "es", i, [3.0, 2.0, 1.5], [1.0, 2.0, 3.0])
            for i in range(3)
        ]
        (series,) = aggregate(traces)
        assert isinstance(series, AggregateSeries)
        for channel in (
            series.mean_best,
            series.best_ci_half_width,
            series.mean_cum_time_s,
            series.time_ci_half_width,
            series.mean_log10_time,
            series.log10_ci_half_width,
        ):
            assert channel.shape == series.eval_indices.shape


class TestRunExperiment:
    def test_smallest_grid(self):
        traces = run_experiment(
            ["rastrigin"], ["pso"], dimension=2, evaluations=10, runs=1, timing=False
        )
        assert len(traces) == 1
        assert traces[0].n_evaluations == 10

    def test_grid_shape_and_seed_derivation(self):
        traces = run_experiment(
            ["rastrigin", "griewank"],
            ["pso", "es"],
            dimension=2,
            evaluations=20,
            runs=2,
            base_seed=100,
            timing=False,
        )
        assert len(traces) == 8
        cells = {(t.function, t.algorithm) for t in traces}
        assert cells == {
            ("rastrigin", "pso"),
            ("rastrigin", "es"),
            ("griewank", "pso"),
            ("griewank", "es"),
        }
        for function, algorithm in cells:
            ids = [
                t.run_id for t in traces if (t.function, t.algorithm) == (function, algorithm)
            ]
            assert ids == [100, 101]

    def test_bo_budget_override(self):
        traces = run_experiment(
            ["rastrigin"],
            ["bo", "pso"],
            dimension=2,
            evaluations=30,
            bo_evaluations=10,
            runs=1,
            timing=False,
        )
        by_algorithm = {t.algorithm: t for t in traces}
        assert by_algorithm["bo"].n_evaluations == 10
        assert by_algorithm["pso"].n_evaluations == 30

    def test_pool_matches_sequential(self):
        kwargs = dict(
            functions=["rastrigin"],
            algorithms=["pso", "es"],
            dimension=2,
            evaluations=20,
            runs=2,
            base_seed=7,
            timing=False,
        )
        sequential = run_experiment(jobs=1, **kwargs)
        pooled = run_experiment(jobs=2, **kwargs)
        assert len(sequential) == len(pooled)
        for left, right in zip(sequential, pooled):
            assert (left.function, left.algorithm, left.run_id) == (
                right.function,
                right.algorithm,
                right.run_id,
            )
            assert [r.value for r in left.records] == [r.value for r in right.records]

    def test_timing_mode_warms_up_each_algorithm_once(self):
        log = []
        run_experiment(
            ["rastrigin"],
            ["pso", "es"],
            dimension=2,
            evaluations=20,
            runs=2,
            timing=True,
            event_log=log.append,
        )
        warmups = [line for line in log if line.startswith("warm-up")]
        assert warmups == ["warm-up algorithm=pso", "warm-up algorithm=es"]
        run_lines = [line for line in log if line.startswith("run ")]
        assert len(run_lines) == 4

    def test_timing_mode_ignores_jobs(self):
        log = []
        run_experiment(
            ["rastrigin"],
            ["pso"],
            dimension=2,
            evaluations=10,
            runs=1,
            timing=True,
            jobs=4,
            event_log=log.append,
        )
        assert any("ignoring --jobs" in line for line in log)

    def test_rejects_bad_budgets_and_runs(self):
        with pytest.raises(ValueError):
            run_experiment(["rastrigin"], ["pso"], evaluations=15, timing=False)
        with pytest.raises(ValueError):
            run_experiment(["rastrigin"], ["pso"], bo_evaluations=5, timing=False)
        with pytest.raises(ValueError):
            run_experiment(["rastrigin"], ["pso"], runs=0, timing=False)

    def test_value_columns_identical_across_timing_modes(self):
        kwargs = dict(
            functions=["griewank"],
            algorithms=["es"],
            dimension=2,
            evaluations=20,
            runs=2,
            base_seed=5,
        )
        timed = run_experiment(timing=True, **kwargs)
        untimed = run_experiment(timing=False, **kwargs)
        for left, right in zip(timed, untimed):
            assert [r.value for r in left.records] == [r.value for r in right.records]
