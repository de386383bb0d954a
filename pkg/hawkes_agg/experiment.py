"""Replicate fan-out: simulate once, aggregate per bin width, fit every method."""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping, Sequence
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field
import math
import time
from typing import Any

from .binned_mle import BinnedEstimator, ContinuousOracleEstimator
from .config import ExperimentConfig
from .errors import HawkesAggError
from .inar import InarEstimator
from .mcem import McemEstimator
from .models import (
    BinSpec,
    EventSequence,
    HawkesParams,
    Method,
    MethodOutcome,
    RunStatus,
)
from .ports import CountEstimator, EventEstimator
from .process import aggregate
from .simulate import SimConfig, derive_seed, rng_stream, simulate


Writer = Callable[[str], None]
ExecutorFactory = Callable[[int], Executor]
EstimatorFactory = Callable[
    [ExperimentConfig], tuple[dict[Method, CountEstimator], EventEstimator]
]

PARAMETER_ORDER = ("nu", "alpha", "beta", "c", "n", "a", "b")
DELTA_KEY_SCALE = 1e6


def parameter_sort_key(name: str) -> tuple[int, str]:
    if name in PARAMETER_ORDER:
        return PARAMETER_ORDER.index(name), name
    return len(PARAMETER_ORDER), name


@dataclass(frozen=True, slots=True)
class RunRecord:
    """One method fitted to one replicate at one bin width."""

    method: Method
    delta: float
    replicate: int
    status: RunStatus
    estimates: tuple[tuple[str, float], ...] = ()
    bias: tuple[tuple[str, float], ...] = ()
    wall_seconds: float = field(default=0.0, compare=False)
    message: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "status", RunStatus(self.status))
        object.__setattr__(
            self,
            "estimates",
            tuple((str(name), float(value)) for name, value in self.estimates),
        )
        object.__setattr__(
            self,
            "bias",
            tuple((str(name), float(value)) for name, value in self.bias),
        )
        if self.replicate < 0:
            raise ValueError("Replicate index cannot be negative")
        if not self.delta > 0:
            raise ValueError("Record bin width must be positive")
        if self.status.has_estimate != bool(self.estimates):
            raise ValueError(
                f"A {self.status.value} record "
                + ("requires" if self.status.has_estimate else "cannot carry")
                + " estimates"
            )
        unknown = {name for name, _ in self.bias} - {name for name, _ in self.estimates}
        if unknown:
            raise ValueError(f"Bias without an estimate: {', '.join(sorted(unknown))}")

    @property
    def estimate_map(self) -> dict[str, float]:
        return dict(self.estimates)

    @property
    def bias_map(self) -> dict[str, float]:
        return dict(self.bias)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method.value,
            "delta": self.delta,
            "replicate": self.replicate,
            "status": self.status.value,
            "estimates": self.estimate_map,
            "bias": self.bias_map,
            "wall_seconds": self.wall_seconds,
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> RunRecord:
        return cls(
            Method(data["method"]),
            float(data["delta"]),
            int(data["replicate"]),
            RunStatus(data["status"]),
            tuple(dict(data.get("estimates") or {}).items()),
            tuple(dict(data.get("bias") or {}).items()),
            float(data.get("wall_seconds", 0.0)),
            str(data.get("message") or ""),
        )

    def to_row(self) -> dict[str, Any]:
        """Flat CSV row: ``est_<name>`` and ``bias_<name>`` columns."""
        row: dict[str, Any] = {
            "method": self.method.value,
            "delta": self.delta,
            "replicate": self.replicate,
            "status": self.status.value,
            "wall_seconds": self.wall_seconds,
            "message": self.message,
        }
        row.update({f"est_{name}": value for name, value in self.estimates})
        row.update({f"bias_{name}": value for name, value in self.bias})
        return row

    @classmethod
    def from_row(cls, row: Mapping[str, Any]) -> RunRecord:
        def present(value: Any) -> bool:
            return value is not None and not (
                isinstance(value, float) and math.isnan(value)
            )

        estimates = [
            (key[4:], float(value))
            for key, value in row.items()
            if key.startswith("est_") and present(value)
        ]
        bias = [
            (key[5:], float(value))
            for key, value in row.items()
            if key.startswith("bias_") and present(value)
        ]
        message = row.get("message")
        return cls(
            Method(row["method"]),
            float(row["delta"]),
            int(row["replicate"]),
            RunStatus(row["status"]),
            tuple(sorted(estimates, key=lambda item: parameter_sort_key(item[0]))),
            tuple(sorted(bias, key=lambda item: parameter_sort_key(item[0]))),
            float(row.get("wall_seconds", 0.0)),
            str(message) if present(message) else "",
        )


def record_from_outcome(
    outcome: MethodOutcome,
    *,
    method: Method,
    delta: float,
    replicate: int,
    truth: HawkesParams,
    wall_seconds: float,
) -> RunRecord:
    """Bias covers the parameter names shared by the estimate and the truth."""
    if outcome.params is None:
        return RunRecord(
            method,
            delta,
            replicate,
            outcome.status,
            wall_seconds=wall_seconds,
            message=outcome.message,
        )
    estimates = outcome.params.as_dict()
    reference = truth.as_dict()
    bias = tuple(
        (name, value - reference[name])
        for name, value in estimates.items()
        if name in reference
    )
    return RunRecord(
        method,
        delta,
        replicate,
        outcome.status,
        tuple(estimates.items()),
        bias,
        wall_seconds,
        outcome.message,
    )


def build_estimators(
    cfg: ExperimentConfig,
) -> tuple[dict[Method, CountEstimator], EventEstimator]:
    count_estimators: dict[Method, CountEstimator] = {
        Method.INAR: InarEstimator(cfg.inar),
        Method.BINNED: BinnedEstimator(cfg.binned),
        Method.MCEM: McemEstimator(cfg.mcem),
    }
    return count_estimators, ContinuousOracleEstimator(cfg.binned)


def _timed(fit: Callable[[], MethodOutcome]) -> tuple[MethodOutcome, float]:
    """Run one fit; any exception it raises becomes a failed outcome."""
    started = time.perf_counter()
    try:
        outcome = fit()
    except Exception as exc:
        outcome = MethodOutcome(RunStatus.FAILED, message=f"{type(exc).__name__}: {exc}")
    return outcome, time.perf_counter() - started


def fit_seed(cfg: ExperimentConfig, replicate: int, delta: float, method: Method) -> int:
    method_index = tuple(Method).index(method)
    return derive_seed(
        cfg.seed, replicate, int(round(delta * DELTA_KEY_SCALE)), method_index
    )


def run_replicate(
    cfg: ExperimentConfig,
    replicate: int,
    *,
    estimators: EstimatorFactory = build_estimators,
) -> list[RunRecord]:
    """All records of one replicate; its simulation depends only on (seed, replicate)."""
    methods = cfg.ordered_methods
    try:
        latent = simulate(
            SimConfig(cfg.truth, cfg.horizon, cfg.seed),
            rng_stream(cfg.seed, replicate),
        )
    except HawkesAggError as exc:
        message = f"Simulation failed: {type(exc).__name__}: {exc}"
        return [
            RunRecord(method, delta, replicate, RunStatus.FAILED, message=message)
            for delta in cfg.deltas
            for method in methods
        ]

    count_estimators, oracle = estimators(cfg)
    oracle_result: tuple[MethodOutcome, float] | None = None
    if Method.CONTINUOUS_ORACLE in methods:
        oracle_seed = fit_seed(cfg, replicate, 0.0, Method.CONTINUOUS_ORACLE)
        oracle_result = _timed(lambda: oracle.fit(latent, seed=oracle_seed))

    records: list[RunRecord] = []
    for delta in cfg.deltas:
        spec = BinSpec.covering(cfg.horizon, delta)
        observed = EventSequence(latent.before(spec.end).times, spec.end)
        counts = aggregate(observed, spec)
        for method in methods:
            if method is Method.CONTINUOUS_ORACLE:
                assert oracle_result is not None
                outcome, seconds = oracle_result
            else:
                estimator = count_estimators[method]
                seed = fit_seed(cfg, replicate, delta, method)
                outcome, seconds = _timed(
                    lambda: estimator.fit(counts, seed=seed)
                )
            records.append(
                record_from_outcome(
                    outcome,
                    method=method,
                    delta=delta,
                    replicate=replicate,
                    truth=cfg.truth,
                    wall_seconds=seconds,
                )
            )
    return records


def _record_order(cfg: ExperimentConfig) -> Callable[[RunRecord], tuple[int, int, int]]:
    methods = tuple(Method)

    def key(record: RunRecord) -> tuple[int, int, int]:
        return (
            record.replicate,
            cfg.deltas.index(record.delta),
            methods.index(record.method),
        )

    return key


@dataclass(frozen=True, slots=True)
class ExperimentResult:
    config: ExperimentConfig
    records: tuple[RunRecord, ...]
    wall_seconds: float = field(default=0.0, compare=False)

    @property
    def failures(self) -> int:
        return sum(1 for record in self.records if not record.status.has_estimate)

    @property
    def failure_fraction(self) -> float:
        if not self.records:
            return 0.0
        return self.failures / len(self.records)

    @property
    def exit_code(self) -> int:
        return 3 if self.failure_fraction > self.config.failure_threshold else 0


def _process_pool(workers: int) -> Executor:
    return ProcessPoolExecutor(max_workers=workers)


class ExperimentRunner:
    def __init__(self, executor_factory: ExecutorFactory = _process_pool) -> None:
        self.executor_factory = executor_factory

    def run(
        self,
        cfg: ExperimentConfig,
        *,
        progress: Writer | None = None,
    ) -> ExperimentResult:
        started = time.perf_counter()
        replicates = range(cfg.replicates)
        batches: Iterable[list[RunRecord]]
        if cfg.workers == 1:
            batches = (run_replicate(cfg, replicate) for replicate in replicates)
            records = self._collect(batches, cfg, progress)
        else:
            with self.executor_factory(cfg.workers) as executor:
                batches = executor.map(
                    run_replicate, [cfg] * cfg.replicates, replicates
                )
                records = self._collect(batches, cfg, progress)
        records.sort(key=_record_order(cfg))
        return ExperimentResult(
            cfg, tuple(records), time.perf_counter() - started
        )

    @staticmethod
    def _collect(
        batches: Iterable[Sequence[RunRecord]],
        cfg: ExperimentConfig,
        progress: Writer | None,
    ) -> list[RunRecord]:
        records: list[RunRecord] = []
        for index, batch in enumerate(batches, start=1):
            records.extend(batch)
            if progress is not None:
                failed = sum(1 for record in batch if not record.status.has_estimate)
                progress(
                    f"Replicate {index}/{cfg.replicates}: "
                    f"{len(batch)} record(s), {failed} failure(s)"
                )
        return records


def run_experiment(cfg: ExperimentConfig) -> list[RunRecord]:
    return list(ExperimentRunner().run(cfg).records)
