import json
from pathlib import Path
import tempfile
import unittest

from hawkes_agg.adapters.sequence_files import SequenceFiles
from hawkes_agg.application import (
    FitRequest,
    HawkesAggApplication,
    exit_code_for,
    format_fatal_result,
)
from hawkes_agg.binned_mle import BinnedConfig
from hawkes_agg.config import ExperimentConfig
from hawkes_agg.errors import (
    ConfigError,
    InvalidParameterError,
    SequenceFormatError,
    SummaryError,
)
from hawkes_agg.experiment import ExperimentResult, RunRecord
from hawkes_agg.mcem import McemConfig
from hawkes_agg.models import BinSpec, HawkesParams, Method, RunStatus


FIG1 = HawkesParams.exponential(0.5, 0.9, 2.0)
OK_RECORD = RunRecord(
    Method.INAR,
    1.0,
    0,
    RunStatus.OK,
    (("nu", 0.45), ("alpha", 0.85), ("beta", 2.1)),
    (("nu", -0.05), ("alpha", -0.05), ("beta", 0.1)),
)
FAILED_RECORD = RunRecord(
    Method.MCEM, 1.0, 0, RunStatus.FAILED, message="AllZeroCounts: empty"
)


class ResultRunner:
    def __init__(self, records):
        self.records = tuple(records)
        self.calls = []

    def run(self, cfg, *, progress=None):
        self.calls.append(cfg)
        if progress is not None:
            progress("Replicate 1/1: done")
        return ExperimentResult(cfg, self.records, 0.5)


class FailingRunner:
    def __init__(self, error):
        self.error = error

    def run(self, cfg, *, progress=None):
        raise self.error


class RecordingRecordStore:
    def __init__(self, records=()):
        self.records = tuple(records)
        self.calls = []

    def write_records(self, records, output_dir):
        self.calls.append(("records", tuple(records), output_dir))
        return (output_dir / "records.csv",)

    def read_records(self, path):
        self.calls.append(("read", path))
        if not self.records:
            raise SummaryError(f"Cannot read records from {path}")
        return self.records

    def write_summary(self, summary, output_dir):
        self.calls.append(("summary", summary, output_dir))
        return (output_dir / "summary.csv",)


class RecordingPlots:
    def __init__(self):
        self.calls = []

    def render(self, summary, output_dir):
        self.calls.append((summary, output_dir))
        return (output_dir / "bias_vs_delta.svg",)


def build_application(runner=None, records=None):
    return HawkesAggApplication(
        runner or ResultRunner([OK_RECORD]),
        records or RecordingRecordStore(),
        RecordingPlots(),
        SequenceFiles(),
    )


class FatalResultTests(unittest.TestCase):
    def test_exit_codes_and_format(self):
        self.assertEqual(exit_code_for(ConfigError("bad")), 2)
        self.assertEqual(exit_code_for(RuntimeError("boom")), 1)
        self.assertEqual(
            format_fatal_result(ConfigError("bad key")),
            "Result: failed\nExit code: 2\nFatal: ConfigError: bad key",
        )
        self.assertIn("Fatal: RuntimeError: RuntimeError()", format_fatal_result(RuntimeError()))


class FitRequestTests(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(InvalidParameterError):
            FitRequest(Method.INAR, Path("events.csv"), from_events=True)
        with self.assertRaises(InvalidParameterError):
            FitRequest(Method.BINNED, Path("c.csv"), trace_output=Path("t.json"))
        with self.assertRaises(InvalidParameterError):
            FitRequest(Method.MCEM, Path("c.csv"), seed=-1)
        with self.assertRaises(ValueError):
            FitRequest("kalman", Path("c.csv"))

    def test_oracle_reads_events_without_a_bin_width(self):
        request = FitRequest("continuous-oracle", Path("events.csv"), from_events=True)

        self.assertIs(request.method, Method.CONTINUOUS_ORACLE)


class BenchTests(unittest.TestCase):
    def test_writes_outputs_and_reports(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            output_dir = Path(temp_dir) / "study"
            cfg = ExperimentConfig(FIG1, horizon=50.0, replicates=1, output_dir=output_dir)
            runner = ResultRunner([OK_RECORD])
            store = RecordingRecordStore()
            plots = RecordingPlots()
            application = HawkesAggApplication(runner, store, plots, SequenceFiles())
            written = []

            exit_code = application.bench(cfg, write=written.append)

            saved = json.loads((output_dir / "config.json").read_text(encoding="utf-8"))

        self.assertEqual(exit_code, 0)
        self.assertEqual(runner.calls, [cfg])
        self.assertEqual([call[0] for call in store.calls], ["records", "summary"])
        self.assertEqual(plots.calls[0][1], output_dir)
        self.assertEqual(saved["truth"]["kernel"]["type"], "exponential")
        self.assertEqual(written[0], "Replicate 1/1: done")
        report = written[-1]
        self.assertIn("Experiment result: completed", report)
        self.assertIn(f"  - {output_dir / 'records.csv'}", report)
        self.assertIn(f"  - {output_dir / 'config.json'}", report)

    def test_failure_fraction_above_threshold_exits_three(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            cfg = ExperimentConfig(
                FIG1,
                horizon=50.0,
                replicates=1,
                output_dir=Path(temp_dir),
                failure_threshold=0.25,
            )
            application = build_application(ResultRunner([OK_RECORD, FAILED_RECORD]))
            written = []

            exit_code = application.bench(cfg, write=written.append)

        self.assertEqual(exit_code, 3)
        self.assertIn("Experiment result: failed", written[-1])

    def test_runner_errors_are_fatal(self):
        cfg = ExperimentConfig(FIG1, horizon=50.0, replicates=1)
        for error, expected in ((ConfigError("bad"), 2), (RuntimeError("boom"), 1)):
            with self.subTest(error=error):
                written = []

                exit_code = build_application(FailingRunner(error)).bench(
                    cfg, write=written.append
                )

                self.assertEqual(exit_code, expected)
                self.assertIn(f"Fatal: {type(error).__name__}", written[0])


class SimulateTests(unittest.TestCase):
    def test_writes_events_and_counts(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            root = Path(temp_dir)
            written = []

            exit_code = build_application().simulate(
                FIG1,
                30.5,
                4,
                root / "events.csv",
                delta=1.0,
                counts_output=root / "counts.json",
                write=written.append,
            )

            files = SequenceFiles()
            events = files.read_events(root / "events.csv")
            counts = files.read_counts(root / "counts.json")

        self.assertEqual(exit_code, 0)
        self.assertEqual(events.window_end, 30.5)
        self.assertEqual(counts.spec, BinSpec.covering(30.5, 1.0))
        self.assertEqual(counts.total, len(events.before(30.0)))
        report = written[0]
        self.assertIn("Simulation result: completed", report)
        self.assertIn(f"Events: {len(events)}", report)

    def test_counts_need_both_width_and_path(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            written = []

            exit_code = build_application().simulate(
                FIG1, 10.0, 0, Path(temp_dir) / "events.csv", delta=1.0, write=written.append
            )

        self.assertEqual(exit_code, 1)
        self.assertIn("Fatal: InvalidParameterError", written[0])


class FitTests(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.root = Path(self.temp_dir.name)
        self.application = build_application()
        self.application.simulate(
            FIG1,
            60.0,
            2,
            self.root / "events.csv",
            delta=1.0,
            counts_output=self.root / "counts.csv",
            write=lambda _: None,
        )

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_binned_fit_writes_outcome_json(self):
        written = []
        request = FitRequest(
            Method.BINNED,
            self.root / "counts.csv",
            binned=BinnedConfig(starts=1),
            output=self.root / "fit.json",
        )

        exit_code = self.application.fit(request, write=written.append)

        payload = json.loads((self.root / "fit.json").read_text(encoding="utf-8"))
        has_estimate = RunStatus(payload["status"]).has_estimate
        self.assertEqual(exit_code, 0 if has_estimate else 1)
        self.assertEqual(payload["method"], "binned")
        self.assertIn("Method: binned", written[0])

    def test_mcem_fit_from_events_writes_trace(self):
        written = []
        request = FitRequest(
            Method.MCEM,
            self.root / "events.csv",
            delta=2.0,
            from_events=True,
            mcem=McemConfig(m=2, max_em_iters=2),
            trace_output=self.root / "trace.json",
        )

        self.application.fit(request, write=written.append)

        trace = json.loads((self.root / "trace.json").read_text(encoding="utf-8"))
        self.assertEqual(len(trace["iterates"]), len(trace["q_values"]) + 1)
        self.assertIn("EM iterations:", written[0])

    def test_oracle_fit_reads_event_times(self):
        written = []

        self.application.fit(
            FitRequest(
                Method.CONTINUOUS_ORACLE,
                self.root / "events.csv",
                binned=BinnedConfig(starts=1),
            ),
            write=written.append,
        )

        self.assertIn("Method: continuous-oracle", written[0])

    def test_unreadable_input_is_fatal(self):
        written = []

        exit_code = self.application.fit(
            FitRequest(Method.INAR, self.root / "missing.csv", delta=1.0),
            write=written.append,
        )

        self.assertEqual(exit_code, 1)
        self.assertIn(f"Fatal: {SequenceFormatError.__name__}", written[0])


class SummarizeTests(unittest.TestCase):
    def test_rebuilds_summary_from_records(self):
        store = RecordingRecordStore([OK_RECORD, FAILED_RECORD])
        application = build_application(records=store)
        written = []

        exit_code = application.summarize(
            Path("records.csv"), Path("out"), write=written.append
        )

        self.assertEqual(exit_code, 0)
        self.assertEqual(store.calls[0], ("read", Path("records.csv")))
        self.assertEqual(
            written[0].splitlines(),
            [
                "Summary result: completed",
                "Records: 2",
                "Outputs:",
                f"  - {Path('out') / 'summary.csv'}",
                f"  - {Path('out') / 'bias_vs_delta.svg'}",
            ],
        )

    def test_missing_records_are_fatal(self):
        written = []

        exit_code = build_application().summarize(
            Path("missing.json"), Path("out"), write=written.append
        )

        self.assertEqual(exit_code, 1)
        self.assertIn("Fatal: SummaryError", written[0])


if __name__ == "__main__":
    unittest.main()
