"""Conditional intensity, compensator and aggregation of event times into bins."""

from __future__ import annotations

import numpy as np

from .errors import EventOutsideBins, InvalidParameterError
from .kernels import kernel_eval, kernel_integral
from .models import (
    BinnedCounts,
    BinSpec,
    EventSequence,
    ExponentialKernel,
    HawkesParams,
)


def decayed_sums(times: np.ndarray, beta: float) -> np.ndarray:
    """``A_i = sum_{j < i} exp(-beta * (t_i - t_j))`` along the last axis.

    Uses ``log sum_{j < i} exp(beta * t_j)`` accumulated by ``logaddexp`` so
    long sequences neither overflow nor underflow.
    """
    scaled = beta * np.asarray(times, dtype=float)
    result = np.zeros(scaled.shape, dtype=float)
    if scaled.shape[-1] < 2:
        return result
    accumulated = np.logaddexp.accumulate(scaled, axis=-1)
    result[..., 1:] = np.exp(accumulated[..., :-1] - scaled[..., 1:])
    return result


def cif_eval(params: HawkesParams, history: EventSequence, t: float) -> float:
    """``lambda*(t)``; events at exactly ``t`` are excluded (left limit)."""
    if t < 0:
        raise InvalidParameterError("Intensity time cannot be negative")
    times = history.array
    earlier = times[times < t]
    if earlier.size == 0:
        return float(params.nu)
    return float(params.nu + np.sum(kernel_eval(params.kernel, t - earlier)))


def compensator(
    params: HawkesParams,
    history: EventSequence,
    s: float,
    t: float,
) -> float:
    """Expected count ``integral of lambda* over [s, t]`` given ``history``.

    Events inside ``(s, t)`` contribute only the mass they add after their own
    time, so the value is additive over adjacent intervals.
    """
    if s < 0 or t < s:
        raise InvalidParameterError(f"Compensator interval is invalid: [{s}, {t}]")
    if t == s:
        return 0.0
    times = history.array
    relevant = times[times < t]
    background = params.nu * (t - s)
    if relevant.size == 0:
        return float(background)
    mass = kernel_integral(params.kernel, t - relevant) - kernel_integral(
        params.kernel, s - relevant
    )
    return float(background + np.sum(mass))


def aggregate(events: EventSequence, spec: BinSpec) -> BinnedCounts:
    """Count events per half-open bin ``[b_{j-1}, b_j)``."""
    times = events.array
    if times.size:
        outside = (times < spec.start) | (times >= spec.end)
        if np.any(outside):
            first = float(times[outside][0])
            raise EventOutsideBins(
                f"Event at {first} lies outside the bins [{spec.start}, {spec.end})"
            )
    indices = np.searchsorted(spec.array, times, side="right") - 1
    counts = np.bincount(indices, minlength=spec.n_bins)
    return BinnedCounts(spec, tuple(int(count) for count in counts))


def cumulative_compensator(params: HawkesParams, events: EventSequence) -> np.ndarray:
    """``Lambda(0, t_i)`` at every event time."""
    times = events.array
    if times.size == 0:
        return np.zeros(0)
    kernel = params.kernel
    if isinstance(kernel, ExponentialKernel):
        sums = decayed_sums(times, kernel.beta)
        earlier = np.arange(times.size, dtype=float)
        return params.nu * times + (kernel.alpha / kernel.beta) * (earlier - sums)
    result = np.empty(times.size)
    for index, time in enumerate(times):
        result[index] = params.nu * time + np.sum(
            kernel_integral(kernel, time - times[:index])
        )
    return result


def time_rescaled_residuals(
    params: HawkesParams,
    events: EventSequence,
) -> np.ndarray:
    """Compensator increments between consecutive events; Exp(1) under the model."""
    return np.diff(cumulative_compensator(params, events), prepend=0.0)
