"""Boxplot statistics per method, bin width and parameter, plus text reports."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
import math
from typing import TYPE_CHECKING, Any

import numpy as np
import pandas as pd

from .errors import SummaryError
from .experiment import RunRecord, parameter_sort_key
from .kernels import branching_ratio
from .models import HawkesParams, KernelFamily, Method, MethodOutcome, RunStatus

if TYPE_CHECKING:
    from .experiment import ExperimentResult
    from .mcem import McemTrace


QUANTILE_RULE = "linear interpolation between order statistics (type 7)"
WHISKER_SPAN = 1.5


@dataclass(frozen=True, slots=True)
class SummaryRow:
    method: Method
    delta: float
    parameter: str
    n: int
    mean: float
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]
    mean_bias: float
    mean_abs_bias: float
    ok: int = 0
    boundary: int = 0
    nonconverged: int = 0
    singular: int = 0
    failed: int = 0

    @property
    def failures(self) -> int:
        return self.singular + self.failed

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    def as_dict(self) -> dict[str, Any]:
        return {
            "method": self.method.value,
            "delta": self.delta,
            "parameter": self.parameter,
            "n": self.n,
            "mean": self.mean,
            "median": self.median,
            "q1": self.q1,
            "q3": self.q3,
            "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high,
            "outliers": list(self.outliers),
            "mean_bias": self.mean_bias,
            "mean_abs_bias": self.mean_abs_bias,
            "failures": self.failures,
            "ok": self.ok,
            "boundary": self.boundary,
            "nonconverged": self.nonconverged,
            "singular": self.singular,
            "failed": self.failed,
        }


@dataclass(frozen=True, slots=True)
class Summary:
    rows: tuple[SummaryRow, ...]
    quantile_rule: str = QUANTILE_RULE

    @property
    def parameters(self) -> tuple[str, ...]:
        return tuple(
            sorted({row.parameter for row in self.rows}, key=parameter_sort_key)
        )

    @property
    def methods(self) -> tuple[Method, ...]:
        present = {row.method for row in self.rows}
        return tuple(method for method in Method if method in present)

    @property
    def deltas(self) -> tuple[float, ...]:
        return tuple(sorted({row.delta for row in self.rows}))

    def rows_for(self, parameter: str) -> tuple[SummaryRow, ...]:
        return tuple(row for row in self.rows if row.parameter == parameter)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.as_dict() for row in self.rows])

    def to_dict(self) -> dict[str, Any]:
        return {
            "quantile_rule": self.quantile_rule,
            "rows": [row.as_dict() for row in self.rows],
        }


def box_statistics(values: Sequence[float]) -> dict[str, Any]:
    """Quartiles, 1.5 IQR whiskers and outliers of a non-empty sample."""
    data = np.sort(np.asarray(values, dtype=float))
    if data.size == 0:
        raise SummaryError("Box statistics need at least one value")
    q1, median, q3 = np.quantile(data, [0.25, 0.5, 0.75], method="linear")
    spread = WHISKER_SPAN * (q3 - q1)
    inside = data[(data >= q1 - spread) & (data <= q3 + spread)]
    outliers = data[(data < q1 - spread) | (data > q3 + spread)]
    return {
        "mean": float(data.mean()),
        "median": float(median),
        "q1": float(q1),
        "q3": float(q3),
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "outliers": tuple(float(value) for value in outliers),
    }


def _empty_statistics() -> dict[str, Any]:
    nan = math.nan
    return {
        "mean": nan,
        "median": nan,
        "q1": nan,
        "q3": nan,
        "whisker_low": nan,
        "whisker_high": nan,
        "outliers": (),
    }


def _group_parameters(
    group: Sequence[RunRecord],
    fallback: tuple[str, ...],
) -> tuple[str, ...]:
    names = {name for record in group for name, _ in record.estimates}
    return tuple(sorted(names, key=parameter_sort_key)) if names else fallback


def summarize(records: Sequence[RunRecord]) -> Summary:
    """Statistics over records with estimates; failed fits only count as failures."""
    if not records:
        raise SummaryError("Cannot summarize an empty record set")
    groups: dict[tuple[Method, float], list[RunRecord]] = {}
    for record in records:
        groups.setdefault((record.method, record.delta), []).append(record)
    all_names = tuple(
        sorted(
            {name for record in records for name, _ in record.estimates},
            key=parameter_sort_key,
        )
    ) or ("nu",)
    method_order = tuple(Method)
    rows: list[SummaryRow] = []
    for method, delta in sorted(
        groups, key=lambda key: (method_order.index(key[0]), key[1])
    ):
        group = groups[(method, delta)]
        statuses = {status: 0 for status in RunStatus}
        for record in group:
            statuses[record.status] += 1
        for parameter in _group_parameters(group, all_names):
            estimates = [
                record.estimate_map[parameter]
                for record in group
                if parameter in record.estimate_map
            ]
            biases = [
                record.bias_map[parameter]
                for record in group
                if parameter in record.bias_map
            ]
            stats = box_statistics(estimates) if estimates else _empty_statistics()
            rows.append(
                SummaryRow(
                    method,
                    delta,
                    parameter,
                    len(estimates),
                    mean_bias=float(np.mean(biases)) if biases else math.nan,
                    mean_abs_bias=(
                        float(np.mean(np.abs(biases))) if biases else math.nan
                    ),
                    ok=statuses[RunStatus.OK],
                    boundary=statuses[RunStatus.BOUNDARY],
                    nonconverged=statuses[RunStatus.NONCONVERGED],
                    singular=statuses[RunStatus.SINGULAR],
                    failed=statuses[RunStatus.FAILED],
                    **stats,
                )
            )
    return Summary(tuple(rows))


def _number(value: float) -> str:
    return "n/a" if math.isnan(value) else f"{value:.4g}"


def format_summary(summary: Summary) -> str:
    lines = [f"Quantiles: {summary.quantile_rule}"]
    for row in summary.rows:
        lines.append(
            f"  {row.method.value} delta={row.delta:g} {row.parameter}: "
            f"n={row.n} mean={_number(row.mean)} median={_number(row.median)} "
            f"bias={_number(row.mean_bias)} |bias|={_number(row.mean_abs_bias)} "
            f"failures={row.failures}"
        )
    return "\n".join(lines)


def format_experiment_report(
    result: ExperimentResult,
    summary: Summary,
    written: Sequence[Any] = (),
) -> str:
    statuses = ", ".join(
        f"{status.value}={sum(1 for record in result.records if record.status is status)}"
        for status in RunStatus
    )
    cfg = result.config
    lines = [
        f"Experiment result: {'failed' if result.exit_code else 'completed'}",
        f"Truth: {_format_params(cfg.truth)}",
        f"Replicates: {cfg.replicates}",
        f"Deltas: {', '.join(f'{delta:g}' for delta in cfg.deltas)}",
        f"Methods: {', '.join(method.value for method in cfg.ordered_methods)}",
        f"Records: {len(result.records)}",
        f"Counts: {statuses}",
        (
            f"Failure fraction: {result.failure_fraction:.3f} "
            f"(threshold {cfg.failure_threshold:.3f})"
        ),
        f"Wall time: {result.wall_seconds:.1f}s",
        f"Exit code: {result.exit_code}",
        format_summary(summary),
    ]
    if written:
        lines.append("Outputs:")
        lines.extend(f"  - {path}" for path in written)
    return "\n".join(lines)


RECTANGULAR_LAG_NOTE = (
    "a, b are the onset and offset lags (alpha, beta of the rectangular kernel)"
)


def _format_params(params: HawkesParams) -> str:
    values = ", ".join(f"{name}={value:.6g}" for name, value in params.as_dict().items())
    text = f"{params.family.value} ({values})"
    if params.family is KernelFamily.RECTANGULAR:
        text += f"; {RECTANGULAR_LAG_NOTE}"
    return text


def format_fit_report(
    method: Method,
    outcome: MethodOutcome,
    *,
    trace: McemTrace | None = None,
) -> str:
    lines = [f"Method: {method.value}", f"Status: {outcome.status.value}"]
    if outcome.params is not None:
        lines.append(f"Estimate: {_format_params(outcome.params)}")
        lines.append(f"Branching ratio: {branching_ratio(outcome.params.kernel):.6g}")
    if trace is not None:
        lines.append(
            f"EM iterations: {trace.iterations} "
            f"({'converged' if trace.converged else 'not converged'})"
        )
        if trace.ess:
            lines.append(f"Final ESS: {trace.ess[-1]:.3g}")
        if trace.low_ess_iterations:
            lines.append(f"Low-ESS iterations: {trace.low_ess_iterations}")
    if outcome.message:
        lines.append(f"Message: {outcome.message}")
    lines.append(f"Exit code: {0 if outcome.status.has_estimate else 1}")
    return "\n".join(lines)


def format_simulation_report(
    params: HawkesParams,
    horizon: float,
    seed: int,
    events: int,
    written: Sequence[Any] = (),
) -> str:
    lines = [
        "Simulation result: completed",
        f"Truth: {_format_params(params)}",
        f"Horizon: {horizon:g}",
        f"Seed: {seed}",
        f"Events: {events}",
    ]
    if written:
        lines.append("Outputs:")
        lines.extend(f"  - {path}" for path in written)
    return "\n".join(lines)
