import math
import unittest

import numpy as np

from hawkes_agg.binned_mle import BinnedConfig
from hawkes_agg.config import ExperimentConfig
from hawkes_agg.experiment import (
    ExperimentResult,
    ExperimentRunner,
    RunRecord,
    fit_seed,
    parameter_sort_key,
    record_from_outcome,
    run_experiment,
    run_replicate,
)
from hawkes_agg.models import HawkesParams, Method, MethodOutcome, RunStatus


FIG1 = HawkesParams.exponential(0.5, 0.9, 2.0)


def small_config(**overrides):
    settings = {
        "truth": FIG1,
        "horizon": 40.0,
        "deltas": (0.5, 1.0),
        "replicates": 2,
        "methods": (Method.INAR, Method.BINNED, Method.CONTINUOUS_ORACLE),
        "seed": 11,
        "binned": BinnedConfig(starts=1),
    }
    settings.update(overrides)
    return ExperimentConfig(**settings)


def failed_record(replicate=0, method=Method.INAR):
    return RunRecord(method, 1.0, replicate, RunStatus.FAILED, message="TooFewBins: x")


class InlineExecutor:
    def __init__(self, workers):
        self.workers = workers
        self.mapped = 0

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        return False

    def map(self, function, *iterables):
        for arguments in zip(*iterables):
            self.mapped += 1
            yield function(*arguments)


class RunRecordTests(unittest.TestCase):
    def test_status_and_estimates_must_agree(self):
        with self.assertRaises(ValueError):
            RunRecord(Method.INAR, 1.0, 0, RunStatus.OK)
        with self.assertRaises(ValueError):
            RunRecord(
                Method.INAR, 1.0, 0, RunStatus.FAILED, (("nu", 0.5),), message="x"
            )
        with self.assertRaises(ValueError):
            RunRecord(Method.INAR, 1.0, 0, RunStatus.OK, (("nu", 0.5),), (("beta", 0.1),))
        with self.assertRaises(ValueError):
            RunRecord(Method.INAR, 1.0, -1, RunStatus.OK, (("nu", 0.5),))
        with self.assertRaises(ValueError):
            RunRecord(Method.INAR, 0.0, 0, RunStatus.OK, (("nu", 0.5),))

    def test_flat_row_restores_the_record(self):
        record = RunRecord(
            "binned",
            0.25,
            3,
            "boundary",
            (("nu", 0.4), ("alpha", 0.8), ("beta", 2.5)),
            (("nu", -0.1), ("alpha", -0.1), ("beta", 0.5)),
            1.5,
            "edge",
        )

        row = record.to_row()

        self.assertEqual(row["est_alpha"], 0.8)
        self.assertEqual(row["bias_beta"], 0.5)
        self.assertEqual(RunRecord.from_row(row), record)
        self.assertEqual(RunRecord.from_dict(record.to_dict()), record)

    def test_row_with_missing_values(self):
        row = failed_record().to_row()
        row.update({"est_nu": math.nan, "bias_nu": math.nan})
        row["message"] = math.nan

        restored = RunRecord.from_row(row)

        self.assertEqual(restored.estimates, ())
        self.assertEqual(restored.message, "")

    def test_wall_time_does_not_affect_equality(self):
        first = RunRecord(Method.MCEM, 1.0, 0, RunStatus.OK, (("nu", 0.5),), wall_seconds=1.0)
        second = RunRecord(Method.MCEM, 1.0, 0, RunStatus.OK, (("nu", 0.5),), wall_seconds=9.0)

        self.assertEqual(first, second)

    def test_parameter_order(self):
        names = sorted(["beta", "zeta", "nu", "alpha", "c"], key=parameter_sort_key)

        self.assertEqual(names, ["nu", "alpha", "beta", "c", "zeta"])


class RecordFromOutcomeTests(unittest.TestCase):
    def test_bias_is_estimate_minus_truth(self):
        outcome = MethodOutcome(RunStatus.OK, HawkesParams.exponential(0.6, 0.8, 2.5))

        record = record_from_outcome(
            outcome,
            method=Method.BINNED,
            delta=1.0,
            replicate=2,
            truth=FIG1,
            wall_seconds=0.1,
        )

        bias = record.bias_map
        self.assertAlmostEqual(bias["nu"], 0.1)
        self.assertAlmostEqual(bias["alpha"], -0.1)
        self.assertAlmostEqual(bias["beta"], 0.5)

    def test_failed_outcome_keeps_the_message(self):
        outcome = MethodOutcome(RunStatus.SINGULAR, message="SingularDesign: rank")

        record = record_from_outcome(
            outcome,
            method=Method.INAR,
            delta=0.5,
            replicate=0,
            truth=FIG1,
            wall_seconds=0.0,
        )

        self.assertIs(record.status, RunStatus.SINGULAR)
        self.assertEqual(record.estimates, ())
        self.assertEqual(record.message, "SingularDesign: rank")


class FitSeedTests(unittest.TestCase):
    def test_seeds_differ_by_method_delta_and_replicate(self):
        cfg = small_config()
        seeds = {
            fit_seed(cfg, replicate, delta, method)
            for replicate in (0, 1)
            for delta in (0.5, 1.0)
            for method in Method
        }

        self.assertEqual(len(seeds), 16)
        self.assertEqual(
            fit_seed(cfg, 1, 0.5, Method.MCEM), fit_seed(cfg, 1, 0.5, Method.MCEM)
        )


class RunReplicateTests(unittest.TestCase):
    def test_one_record_per_delta_and_method(self):
        cfg = small_config()

        records = run_replicate(cfg, 1)

        self.assertEqual(
            [(record.delta, record.method) for record in records],
            [
                (delta, method)
                for delta in (0.5, 1.0)
                for method in (Method.INAR, Method.BINNED, Method.CONTINUOUS_ORACLE)
            ],
        )
        self.assertTrue(all(record.replicate == 1 for record in records))

    def test_replicates_are_reproducible(self):
        cfg = small_config()

        self.assertEqual(run_replicate(cfg, 0), run_replicate(cfg, 0))
        self.assertNotEqual(run_replicate(cfg, 0), run_replicate(cfg, 1))

    def test_oracle_is_fitted_once_per_replicate(self):
        cfg = small_config(methods=(Method.CONTINUOUS_ORACLE,))

        first, second = run_replicate(cfg, 0)

        self.assertIs(first.status, second.status)
        self.assertEqual(first.estimates, second.estimates)
        self.assertEqual(first.wall_seconds, second.wall_seconds)

    def test_unexpected_estimator_errors_become_failed_records(self):
        cfg = small_config()
        calls = []

        class SingularEstimator:
            def fit(self, data, *, seed=0):
                calls.append(seed)
                raise np.linalg.LinAlgError("Singular matrix")

        def estimators(_cfg):
            singular = SingularEstimator()
            return {Method.INAR: singular, Method.BINNED: singular}, singular

        records = run_replicate(cfg, 0, estimators=estimators)

        self.assertEqual(len(records), 6)
        self.assertEqual(len(calls), 5)
        for record in records:
            with self.subTest(method=record.method, delta=record.delta):
                self.assertIs(record.status, RunStatus.FAILED)
                self.assertEqual(record.message, "LinAlgError: Singular matrix")


class ExperimentResultTests(unittest.TestCase):
    def test_exit_code_follows_failure_threshold(self):
        ok = RunRecord(Method.INAR, 1.0, 0, RunStatus.OK, (("nu", 0.5),))
        records = (failed_record(), failed_record(1), ok)

        strict = ExperimentResult(small_config(failure_threshold=0.5), records)
        lenient = ExperimentResult(small_config(failure_threshold=0.7), records)

        self.assertEqual(strict.failures, 2)
        self.assertAlmostEqual(strict.failure_fraction, 2 / 3)
        self.assertEqual(strict.exit_code, 3)
        self.assertEqual(lenient.exit_code, 0)
        self.assertEqual(ExperimentResult(small_config(), ()).exit_code, 0)


class ExperimentRunnerTests(unittest.TestCase):
    def test_parallel_run_matches_sequential_run(self):
        executors = []

        def factory(workers):
            executor = InlineExecutor(workers)
            executors.append(executor)
            return executor

        runner = ExperimentRunner(executor_factory=factory)
        sequential = runner.run(small_config())
        parallel = runner.run(small_config(workers=2))

        self.assertEqual(parallel.records, sequential.records)
        self.assertEqual(len(executors), 1)
        self.assertEqual(executors[0].workers, 2)
        self.assertEqual(executors[0].mapped, 2)

    def test_records_are_ordered_and_progress_is_reported(self):
        messages = []

        result = ExperimentRunner().run(
            small_config(methods=(Method.INAR,)), progress=messages.append
        )

        self.assertEqual(
            [(record.replicate, record.delta) for record in result.records],
            [(0, 0.5), (0, 1.0), (1, 0.5), (1, 1.0)],
        )
        self.assertEqual(len(messages), 2)
        self.assertTrue(messages[0].startswith("Replicate 1/2: 2 record(s)"))

    def test_run_experiment_returns_records(self):
        cfg = small_config(replicates=1, methods=(Method.INAR,))

        self.assertEqual(run_experiment(cfg), run_replicate(cfg, 0))


if __name__ == "__main__":
    unittest.main()
