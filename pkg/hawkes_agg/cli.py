"""Command-line boundary for simulation, fitting and benchmarking."""

from __future__ import annotations

import argparse
from collections.abc import Callable, Sequence
from dataclasses import replace
from pathlib import Path
from typing import Any

from .application import (
    FitRequest,
    HawkesAggApplication,
    Writer,
    exit_code_for,
    format_fatal_result,
)
from .binned_mle import BinnedConfig
from .bootstrap import build_default_application, build_default_doctor_application
from .config import PRESETS, ExperimentConfig, load_experiment_config, preset_config
from .diagnostics import DoctorApplication, format_diagnostic_fatal
from .errors import ConfigError, HawkesAggError
from .inar import InarConfig, LagPlacement
from .mcem import McemConfig
from .models import KernelFamily, Method, ProposalMode


ApplicationFactory = Callable[[], HawkesAggApplication]
DoctorFactory = Callable[[], DoctorApplication]


def _positive_float(value: str) -> float:
    try:
        number = float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{value!r} is not a number") from exc
    if not number > 0:
        raise argparse.ArgumentTypeError("value must be positive")
    return number


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer") from exc
    if number < 1:
        raise argparse.ArgumentTypeError("value must be at least 1")
    return number


def _fraction(value: str) -> float:
    try:
        number = float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{value!r} is not a number") from exc
    if not 0 <= number <= 1:
        raise argparse.ArgumentTypeError("value must lie in [0, 1]")
    return number


def _seed(value: str) -> int:
    try:
        number = int(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer") from exc
    if number < 0:
        raise argparse.ArgumentTypeError("seed cannot be negative")
    return number


def _choices(enum: type) -> list[str]:
    return [item.value for item in enum]


def _add_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument(
        "--config",
        type=Path,
        metavar="PATH",
        help="JSON experiment configuration",
    )
    source.add_argument(
        "--preset",
        choices=PRESETS,
        help="built-in study parameters",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hawkes-agg",
        description=(
            "Simulate Hawkes processes, aggregate them into bin counts and "
            "estimate their parameters from the counts alone."
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser(
        "simulate", help="simulate one event sequence from a configured truth"
    )
    _add_source(simulate)
    simulate.add_argument("--seed", type=_seed, help="override the configured seed")
    simulate.add_argument(
        "--horizon", type=_positive_float, help="override the simulation horizon"
    )
    simulate.add_argument(
        "--out", type=Path, required=True, metavar="PATH", help="event file (.csv/.json)"
    )
    simulate.add_argument(
        "--delta", type=_positive_float, help="bin width used for --counts-out"
    )
    simulate.add_argument(
        "--counts-out", type=Path, metavar="PATH", help="also write binned counts"
    )

    fit = commands.add_parser("fit", help="fit one estimator to a count or event file")
    fit.add_argument("input", type=Path, metavar="INPUT", help="count or event file")
    fit.add_argument(
        "--method", required=True, choices=_choices(Method), help="estimator to run"
    )
    fit.add_argument(
        "--delta",
        type=_positive_float,
        help="bin width for a single-column count file or for --from-events",
    )
    fit.add_argument(
        "--from-events",
        action="store_true",
        help="treat INPUT as event times and aggregate them with --delta",
    )
    fit.add_argument(
        "--kernel",
        choices=_choices(KernelFamily),
        default=KernelFamily.EXPONENTIAL.value,
        help="kernel family for likelihood-based methods (default: exponential)",
    )
    fit.add_argument("--seed", type=_seed, default=0, help="random seed (default: 0)")
    fit.add_argument("--m", type=_positive_int, help="MC-EM samples per E-step")
    fit.add_argument("--epsilon", type=_positive_float, help="MC-EM stopping tolerance")
    fit.add_argument(
        "--max-em-iters", type=_positive_int, help="MC-EM iteration limit"
    )
    fit.add_argument(
        "--proposal", choices=_choices(ProposalMode), help="MC-EM proposal mode"
    )
    fit.add_argument(
        "--resample-threshold",
        type=_fraction,
        help="resample MC-EM particles when ESS falls below this fraction of m",
    )
    fit.add_argument("--support", type=_positive_float, help="INAR kernel support s")
    fit.add_argument(
        "--lag-placement", choices=_choices(LagPlacement), help="INAR lag placement"
    )
    fit.add_argument("--starts", type=_positive_int, help="binned MLE start points")
    fit.add_argument("--out", type=Path, metavar="PATH", help="write the outcome as JSON")
    fit.add_argument(
        "--trace", type=Path, metavar="PATH", help="write the MC-EM trace as JSON"
    )

    bench = commands.add_parser("bench", help="run a configured benchmark study")
    _add_source(bench)
    bench.add_argument("--seed", type=_seed, help="override the configured seed")
    bench.add_argument("--out", type=Path, metavar="DIR", help="override output_dir")
    bench.add_argument("--workers", type=_positive_int, help="parallel replicates")
    bench.add_argument(
        "--replicates", type=_positive_int, help="override the replicate count"
    )

    summarize = commands.add_parser(
        "summarize", help="rebuild summaries and plots from stored records"
    )
    summarize.add_argument(
        "records", type=Path, metavar="RECORDS", help="records.csv, records.json or a directory"
    )
    summarize.add_argument(
        "--out", type=Path, required=True, metavar="DIR", help="output directory"
    )

    commands.add_parser("doctor", help="check the local runtime")
    return parser


def _experiment(arguments: argparse.Namespace) -> ExperimentConfig:
    if arguments.config is not None:
        cfg = load_experiment_config(arguments.config)
    else:
        cfg = preset_config(arguments.preset)
    overrides: dict[str, Any] = {}
    for name in ("seed", "horizon", "workers", "replicates"):
        value = getattr(arguments, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(arguments, "out", None) is not None and arguments.command == "bench":
        overrides["output_dir"] = arguments.out
    return replace(cfg, **overrides) if overrides else cfg


def _fit_request(arguments: argparse.Namespace) -> FitRequest:
    family = KernelFamily(arguments.kernel)
    mcem: dict[str, Any] = {"kernel_family": family}
    if arguments.m is not None:
        mcem["m"] = arguments.m
    if arguments.epsilon is not None:
        mcem["epsilon"] = arguments.epsilon
    if arguments.max_em_iters is not None:
        mcem["max_em_iters"] = arguments.max_em_iters
    if arguments.proposal is not None:
        mcem["proposal_mode"] = ProposalMode(arguments.proposal)
    if arguments.resample_threshold is not None:
        mcem["resample_threshold"] = arguments.resample_threshold
    inar: dict[str, Any] = {}
    if arguments.support is not None:
        inar["support"] = arguments.support
    if arguments.lag_placement is not None:
        inar["lag_placement"] = LagPlacement(arguments.lag_placement)
    binned: dict[str, Any] = {"kernel_family": family}
    if arguments.starts is not None:
        binned["starts"] = arguments.starts
    return FitRequest(
        method=Method(arguments.method),
        input_path=arguments.input,
        delta=arguments.delta,
        from_events=arguments.from_events,
        seed=arguments.seed,
        inar=InarConfig(**inar),
        binned=BinnedConfig(**binned),
        mcem=McemConfig(**mcem),
        output=arguments.out,
        trace_output=arguments.trace,
    )


def _prepare(arguments: argparse.Namespace) -> ExperimentConfig | FitRequest | None:
    try:
        if arguments.command in ("simulate", "bench"):
            return _experiment(arguments)
        if arguments.command == "fit":
            return _fit_request(arguments)
    except ConfigError:
        raise
    except HawkesAggError as exc:
        raise ConfigError(str(exc)) from exc
    return None


def main(
    argv: Sequence[str] | None = None,
    *,
    application_factory: ApplicationFactory = build_default_application,
    doctor_factory: DoctorFactory = build_default_doctor_application,
    write: Writer = print,
) -> int:
    arguments = build_parser().parse_args(argv)
    if arguments.command == "doctor":
        try:
            doctor = doctor_factory()
        except Exception as exc:
            write(format_diagnostic_fatal(exc))
            return 1
        return doctor.run(write=write)
    try:
        prepared = _prepare(arguments)
        application = application_factory()
    except Exception as exc:
        write(format_fatal_result(exc))
        return exit_code_for(exc)
    if arguments.command == "simulate":
        return application.simulate(
            prepared.truth,
            prepared.horizon,
            prepared.seed,
            arguments.out,
            delta=arguments.delta,
            counts_output=arguments.counts_out,
            write=write,
        )
    if arguments.command == "fit":
        return application.fit(prepared, write=write)
    if arguments.command == "bench":
        return application.bench(prepared, write=write)
    return application.summarize(arguments.records, arguments.out, write=write)
