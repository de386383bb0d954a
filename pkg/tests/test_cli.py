import contextlib
import io
import os
from pathlib import Path
import subprocess
import sys
import tempfile
import unittest

from hawkes_agg.application import HawkesAggApplication
from hawkes_agg.bootstrap import (
    build_default_application,
    build_default_doctor_application,
)
from hawkes_agg.cli import main
from hawkes_agg.diagnostics import DoctorApplication
from hawkes_agg.models import HawkesParams, KernelFamily, Method, ProposalMode


PROJECT_ROOT = Path(__file__).resolve().parents[1]


class RecordingApplication:
    def __init__(self, exit_code=0):
        self.exit_code = exit_code
        self.calls = []

    def simulate(self, params, horizon, seed, output, *, delta, counts_output, write):
        self.calls.append(("simulate", params, horizon, seed, output, delta, counts_output))
        write("simulated")
        return self.exit_code

    def fit(self, request, *, write):
        self.calls.append(("fit", request))
        write("fitted")
        return self.exit_code

    def bench(self, cfg, *, write):
        self.calls.append(("bench", cfg))
        write("benched")
        return self.exit_code

    def summarize(self, records_path, output_dir, *, write):
        self.calls.append(("summarize", records_path, output_dir))
        write("summarized")
        return self.exit_code


class RecordingDoctor:
    def __init__(self, exit_code=0):
        self.exit_code = exit_code
        self.calls = []

    def run(self, *, write=print):
        self.calls.append(write)
        write("doctor ran")
        return self.exit_code


def never_build():
    raise AssertionError("application must not be built")


class CliTests(unittest.TestCase):
    def run_main(self, arguments, application):
        written = []
        exit_code = main(
            arguments,
            application_factory=lambda: application,
            write=written.append,
        )
        return exit_code, written

    def test_bench_applies_preset_and_overrides(self):
        application = RecordingApplication(exit_code=3)

        exit_code, written = self.run_main(
            [
                "bench",
                "--preset",
                "fig2",
                "--seed",
                "7",
                "--replicates",
                "3",
                "--workers",
                "2",
                "--out",
                "/tmp/study",
            ],
            application,
        )

        self.assertEqual(exit_code, 3)
        self.assertEqual(written, ["benched"])
        cfg = application.calls[0][1]
        self.assertEqual(cfg.truth, HawkesParams.exponential(0.2, 0.4, 0.9))
        self.assertEqual(
            (cfg.seed, cfg.replicates, cfg.workers, cfg.output_dir),
            (7, 3, 2, Path("/tmp/study")),
        )

    def test_bench_reads_json_configuration(self):
        application = RecordingApplication()
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "study.json"
            path.write_text(
                '{"truth": {"nu": 0.5, "kernel": {"type": "exponential", '
                '"alpha": 0.9, "beta": 2.0}}, "deltas": [0.5, 1.0], '
                '"replicates": 4, "output_dir": "out"}',
                encoding="utf-8",
            )

            exit_code, _ = self.run_main(["bench", "--config", str(path)], application)

        self.assertEqual(exit_code, 0)
        cfg = application.calls[0][1]
        self.assertEqual(cfg.deltas, (0.5, 1.0))
        self.assertEqual(cfg.replicates, 4)
        self.assertEqual(cfg.output_dir, Path(temp_dir) / "out")

    def test_configuration_errors_exit_with_two(self):
        for arguments in (
            ["bench", "--config", "/missing/study.json"],
            ["fit", "counts.csv", "--method", "inar", "--trace", "trace.json"],
            ["simulate", "--preset", "fig1", "--horizon", "0.5", "--out", "x.csv"],
        ):
            with self.subTest(arguments=arguments):
                exit_code, written = self.run_main(arguments, RecordingApplication())
                self.assertEqual(exit_code, 2)
                self.assertIn("Result: failed\nExit code: 2", written[0])
                self.assertIn("Fatal: ConfigError:", written[0])

    def test_fit_builds_request_from_options(self):
        application = RecordingApplication()

        exit_code, _ = self.run_main(
            [
                "fit",
                "counts.csv",
                "--method",
                "mcem",
                "--delta",
                "0.5",
                "--kernel",
                "powerlaw",
                "--seed",
                "11",
                "--m",
                "10",
                "--epsilon",
                "0.01",
                "--max-em-iters",
                "30",
                "--proposal",
                "uniform",
                "--resample-threshold",
                "0.25",
                "--trace",
                "trace.json",
                "--out",
                "fit.json",
            ],
            application,
        )

        self.assertEqual(exit_code, 0)
        request = application.calls[0][1]
        self.assertIs(request.method, Method.MCEM)
        self.assertEqual(request.input_path, Path("counts.csv"))
        self.assertEqual(request.delta, 0.5)
        self.assertEqual(request.seed, 11)
        self.assertEqual(
            (request.mcem.m, request.mcem.epsilon, request.mcem.max_em_iters),
            (10, 0.01, 30),
        )
        self.assertIs(request.mcem.proposal_mode, ProposalMode.UNIFORM)
        self.assertEqual(request.mcem.resample_threshold, 0.25)
        self.assertIs(request.mcem.kernel_family, KernelFamily.POWERLAW)
        self.assertIs(request.binned.kernel_family, KernelFamily.POWERLAW)
        self.assertEqual(request.trace_output, Path("trace.json"))
        self.assertEqual(request.output, Path("fit.json"))

    def test_fit_passes_inar_options(self):
        application = RecordingApplication()

        self.run_main(
            [
                "fit",
                "events.csv",
                "--method",
                "inar",
                "--from-events",
                "--delta",
                "0.25",
                "--support",
                "4",
                "--lag-placement",
                "midpoint",
            ],
            application,
        )

        request = application.calls[0][1]
        self.assertTrue(request.from_events)
        self.assertEqual(request.inar.support, 4.0)
        self.assertEqual(request.inar.lag_placement.value, "midpoint")

    def test_simulate_uses_preset_truth_with_overrides(self):
        application = RecordingApplication()

        self.run_main(
            [
                "simulate",
                "--preset",
                "fig3",
                "--seed",
                "5",
                "--horizon",
                "50",
                "--out",
                "events.csv",
                "--delta",
                "1",
                "--counts-out",
                "counts.csv",
            ],
            application,
        )

        _, params, horizon, seed, output, delta, counts_output = application.calls[0]
        self.assertEqual(params, HawkesParams.exponential(0.1, 0.6, 1.2))
        self.assertEqual((horizon, seed), (50.0, 5))
        self.assertEqual(output, Path("events.csv"))
        self.assertEqual((delta, counts_output), (1.0, Path("counts.csv")))

    def test_summarize_passes_paths(self):
        application = RecordingApplication()

        exit_code, written = self.run_main(
            ["summarize", "results/records.json", "--out", "summary"],
            application,
        )

        self.assertEqual(exit_code, 0)
        self.assertEqual(written, ["summarized"])
        self.assertEqual(
            application.calls,
            [("summarize", Path("results/records.json"), Path("summary"))],
        )

    def test_invalid_arguments_are_rejected_by_the_parser(self):
        for arguments in (
            ["fit", "counts.csv", "--method", "bogus"],
            ["fit", "counts.csv", "--method", "mcem", "--m", "0"],
            ["fit", "counts.csv", "--method", "mcem", "--resample-threshold", "2"],
            ["bench"],
            ["bench", "--preset", "fig1", "--config", "x.json"],
            ["bench", "--preset", "fig1", "--seed", "-1"],
        ):
            with self.subTest(arguments=arguments):
                with contextlib.redirect_stderr(io.StringIO()):
                    with self.assertRaises(SystemExit) as raised:
                        main(arguments, application_factory=never_build)
                self.assertEqual(raised.exception.code, 2)

    def test_reports_application_construction_failure(self):
        def fail():
            raise RuntimeError("cannot compose application")

        written = []

        exit_code = main(
            ["summarize", "records.csv", "--out", "summary"],
            application_factory=fail,
            write=written.append,
        )

        self.assertEqual(exit_code, 1)
        self.assertIn("RuntimeError: cannot compose application", written[0])

    def test_doctor_uses_separate_factory_without_application(self):
        doctor = RecordingDoctor(exit_code=1)
        written = []

        exit_code = main(
            ["doctor"],
            application_factory=never_build,
            doctor_factory=lambda: doctor,
            write=written.append,
        )

        self.assertEqual(exit_code, 1)
        self.assertEqual(written, ["doctor ran"])
        self.assertEqual(len(doctor.calls), 1)

    def test_default_composition(self):
        self.assertIsInstance(build_default_application(), HawkesAggApplication)
        self.assertIsInstance(build_default_doctor_application(), DoctorApplication)

    def test_direct_and_module_launchers_share_the_cli(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            caller = Path(temp_dir)
            missing = caller / "missing.json"
            direct = subprocess.run(
                [
                    sys.executable,
                    str(PROJECT_ROOT / "hawkes_agg_cli.py"),
                    "bench",
                    "--config",
                    str(missing),
                ],
                cwd=caller,
                text=True,
                capture_output=True,
                env=os.environ.copy(),
                timeout=60,
                check=False,
            )
            module = subprocess.run(
                [
                    sys.executable,
                    "-m",
                    "hawkes_agg",
                    "bench",
                    "--config",
                    str(missing),
                ],
                cwd=PROJECT_ROOT,
                text=True,
                capture_output=True,
                env=os.environ.copy(),
                timeout=60,
                check=False,
            )

        for completed in (direct, module):
            self.assertEqual(completed.returncode, 2, completed.stderr)
            self.assertIn("Fatal: ConfigError", completed.stdout)
            self.assertIn(str(missing), completed.stdout)
            self.assertNotIn("Traceback", completed.stderr)


if __name__ == "__main__":
    unittest.main()
