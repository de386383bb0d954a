"""CLI-facing application flows without argument or process ownership."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
import json
from pathlib import Path
from typing import Any, Protocol

from .binned_mle import BinnedConfig, BinnedEstimator, ContinuousOracleEstimator
from .config import ExperimentConfig, config_to_dict
from .errors import ConfigError, HawkesAggError, InvalidParameterError
from .experiment import ExperimentResult
from .inar import InarConfig, InarEstimator
from .kernels import params_to_dict
from .mcem import McemConfig, McemEstimator, McemTrace
from .models import BinSpec, EventSequence, HawkesParams, Method, MethodOutcome
from .ports import PlotRenderer, RecordStore, SequenceStore
from .process import aggregate
from .simulate import SimConfig, simulate
from .summary import (
    format_experiment_report,
    format_fit_report,
    format_simulation_report,
    summarize,
)


Writer = Callable[[str], None]

CONFIG_EXIT_CODE = 2
CONFIG_FILE = "config.json"


class ExperimentRunning(Protocol):
    def run(
        self,
        cfg: ExperimentConfig,
        *,
        progress: Writer | None = None,
    ) -> ExperimentResult: ...


def exit_code_for(error: Exception) -> int:
    return CONFIG_EXIT_CODE if isinstance(error, ConfigError) else 1


def format_fatal_result(error: Exception) -> str:
    message = str(error).strip() or repr(error)
    return "\n".join(
        (
            "Result: failed",
            f"Exit code: {exit_code_for(error)}",
            f"Fatal: {type(error).__name__}: {message}",
        )
    )


@dataclass(frozen=True, slots=True)
class FitRequest:
    """One estimator applied to one count or event file."""

    method: Method
    input_path: Path
    delta: float | None = None
    from_events: bool = False
    seed: int = 0
    inar: InarConfig = field(default_factory=InarConfig)
    binned: BinnedConfig = field(default_factory=BinnedConfig)
    mcem: McemConfig = field(default_factory=McemConfig)
    output: Path | None = None
    trace_output: Path | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        if self.seed < 0:
            raise InvalidParameterError("Fit seed cannot be negative")
        if self.from_events and self.method is not Method.CONTINUOUS_ORACLE:
            if self.delta is None:
                raise InvalidParameterError(
                    "Aggregating an event file requires a bin width"
                )
        if self.trace_output is not None and self.method is not Method.MCEM:
            raise InvalidParameterError("Only the mcem method produces a trace")


def _write_json(path: Path, payload: Any) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise HawkesAggError(f"Cannot write {path}: {exc}") from exc
    return path


def outcome_to_dict(method: Method, outcome: MethodOutcome) -> dict[str, Any]:
    return {
        "method": method.value,
        "status": outcome.status.value,
        "message": outcome.message,
        "params": None if outcome.params is None else params_to_dict(outcome.params),
    }


class HawkesAggApplication:
    def __init__(
        self,
        runner: ExperimentRunning,
        records: RecordStore,
        plots: PlotRenderer,
        sequences: SequenceStore,
    ) -> None:
        self.runner = runner
        self.records = records
        self.plots = plots
        self.sequences = sequences

    def simulate(
        self,
        params: HawkesParams,
        horizon: float,
        seed: int,
        output: Path,
        *,
        delta: float | None = None,
        counts_output: Path | None = None,
        write: Writer = print,
    ) -> int:
        try:
            if (delta is None) != (counts_output is None):
                raise InvalidParameterError(
                    "Writing counts requires both a bin width and a counts path"
                )
            events = simulate(SimConfig(params, horizon, seed))
            written = [self.sequences.write_events(events, output)]
            if delta is not None and counts_output is not None:
                spec = BinSpec.covering(horizon, delta)
                observed = EventSequence(events.before(spec.end).times, spec.end)
                written.append(
                    self.sequences.write_counts(aggregate(observed, spec), counts_output)
                )
        except Exception as exc:
            write(format_fatal_result(exc))
            return exit_code_for(exc)
        write(format_simulation_report(params, horizon, seed, len(events), written))
        return 0

    def fit(self, request: FitRequest, *, write: Writer = print) -> int:
        try:
            outcome, trace = self._fit(request)
            if request.output is not None:
                _write_json(request.output, outcome_to_dict(request.method, outcome))
            if request.trace_output is not None and trace is not None:
                _write_json(request.trace_output, trace.to_dict())
        except Exception as exc:
            write(format_fatal_result(exc))
            return exit_code_for(exc)
        write(format_fit_report(request.method, outcome, trace=trace))
        return 0 if outcome.status.has_estimate else 1

    def _fit(self, request: FitRequest) -> tuple[MethodOutcome, McemTrace | None]:
        if request.method is Method.CONTINUOUS_ORACLE:
            events = self.sequences.read_events(request.input_path)
            oracle = ContinuousOracleEstimator(request.binned)
            return oracle.fit(events, seed=request.seed), None
        if request.from_events:
            events = self.sequences.read_events(request.input_path)
            spec = BinSpec.covering(events.window_end, request.delta)
            observed = EventSequence(events.before(spec.end).times, spec.end)
            counts = aggregate(observed, spec)
        else:
            counts = self.sequences.read_counts(request.input_path, delta=request.delta)
        if request.method is Method.INAR:
            return InarEstimator(request.inar).fit(counts, seed=request.seed), None
        if request.method is Method.BINNED:
            return BinnedEstimator(request.binned).fit(counts, seed=request.seed), None
        estimator = McemEstimator(request.mcem)
        outcome = estimator.fit(counts, seed=request.seed)
        return outcome, estimator.last_trace

    def bench(self, cfg: ExperimentConfig, *, write: Writer = print) -> int:
        try:
            result = self.runner.run(cfg, progress=write)
            summary = summarize(result.records)
            written = [
                *self.records.write_records(result.records, cfg.output_dir),
                *self.records.write_summary(summary, cfg.output_dir),
                *self.plots.render(summary, cfg.output_dir),
                _write_json(cfg.output_dir / CONFIG_FILE, config_to_dict(cfg)),
            ]
        except Exception as exc:
            write(format_fatal_result(exc))
            return exit_code_for(exc)
        write(format_experiment_report(result, summary, written))
        return result.exit_code

    def summarize(
        self,
        records_path: Path,
        output_dir: Path,
        *,
        write: Writer = print,
    ) -> int:
        try:
            records = self.records.read_records(records_path)
            summary = summarize(records)
            written = [
                *self.records.write_summary(summary, output_dir),
                *self.plots.render(summary, output_dir),
            ]
        except Exception as exc:
            write(format_fatal_result(exc))
            return exit_code_for(exc)
        lines = [
            "Summary result: completed",
            f"Records: {len(records)}",
            "Outputs:",
            *(f"  - {path}" for path in written),
        ]
        write("\n".join(lines))
        return 0
