"""Continuous and binned Hawkes log-likelihoods and conditional PDF/CDF terms."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidParameterError, NonFiniteLogLik
from .kernels import kernel_eval, kernel_integral
from .models import BinnedCounts, EventSequence, ExponentialKernel, HawkesParams
from .process import cif_eval, compensator, decayed_sums


PAIRWISE_BLOCK_ROWS = 512


@dataclass(frozen=True, slots=True)
class LogLik:
    value: float
    finite: bool = True

    def __post_init__(self) -> None:
        if self.finite and not math.isfinite(self.value):
            raise ValueError("A finite log-likelihood requires a finite value")

    def require(self) -> float:
        if not self.finite:
            raise NonFiniteLogLik("Log-likelihood is not finite")
        return self.value

    @classmethod
    def from_value(cls, value: float) -> LogLik:
        value = float(value)
        if math.isfinite(value):
            return cls(value)
        return cls(-math.inf, finite=False)


@dataclass(frozen=True, slots=True)
class ExcitationState:
    """Running ``A`` of the exponential recursion, valid at ``last_time``."""

    A: float = 0.0
    last_time: float = 0.0

    def __post_init__(self) -> None:
        if self.A < 0:
            raise ValueError("Excitation state A cannot be negative")

    def decayed(self, beta: float, to: float) -> float:
        """``A`` carried forward to ``to`` without new events."""
        return self.A * math.exp(-beta * (to - self.last_time))

    def advance(self, beta: float, event_time: float) -> ExcitationState:
        """State right after an event at ``event_time``."""
        return ExcitationState(self.decayed(beta, event_time) + 1.0, event_time)


def _excitation_at_events(params: HawkesParams, times: np.ndarray) -> np.ndarray:
    """``sum_{j < i} g(t_i - t_j)`` for every event, by blocks of rows."""
    size = times.size
    result = np.zeros(size)
    for start in range(0, size, PAIRWISE_BLOCK_ROWS):
        stop = min(start + PAIRWISE_BLOCK_ROWS, size)
        rows = times[start:stop, None]
        elapsed = rows - times[None, :stop]
        earlier = np.arange(stop)[None, :] < np.arange(start, stop)[:, None]
        values = np.where(earlier, kernel_eval(params.kernel, elapsed), 0.0)
        result[start:stop] = values.sum(axis=1)
    return result


def _total_compensator(params: HawkesParams, events: EventSequence) -> float:
    times = events.array
    mass = kernel_integral(params.kernel, events.window_end - times)
    return float(params.nu * events.window_end + np.sum(mass))


def _assemble(intensities: np.ndarray, total: float) -> LogLik:
    with np.errstate(divide="ignore", invalid="ignore"):
        if np.any(~(intensities > 0)):
            return LogLik(-math.inf, finite=False)
        return LogLik.from_value(np.sum(np.log(intensities)) - total)


def loglik_direct(params: HawkesParams, events: EventSequence) -> LogLik:
    """``sum log lambda*(t_j) - integral of lambda* over [0, T]`` in O(N^2)."""
    times = events.array
    intensities = params.nu + _excitation_at_events(params, times)
    return _assemble(intensities, _total_compensator(params, events))


def loglik_exponential_recursive(
    params: HawkesParams,
    events: EventSequence,
) -> LogLik:
    kernel = params.kernel
    if not isinstance(kernel, ExponentialKernel):
        raise InvalidParameterError("Recursive log-likelihood needs an exponential kernel")
    times = events.array
    intensities = params.nu + kernel.alpha * decayed_sums(times, kernel.beta)
    return _assemble(intensities, _total_compensator(params, events))


def loglik_continuous(params: HawkesParams, events: EventSequence) -> LogLik:
    """Exact-time log-likelihood; linear time for the exponential kernel."""
    if isinstance(params.kernel, ExponentialKernel):
        return loglik_exponential_recursive(params, events)
    return loglik_direct(params, events)


def loglik_exponential_batch(
    params: HawkesParams,
    times: np.ndarray,
    window_end: float,
) -> np.ndarray:
    """Log-likelihoods of ``m`` sequences sharing an event count (rows of ``times``)."""
    kernel = params.kernel
    if not isinstance(kernel, ExponentialKernel):
        raise InvalidParameterError("Batch evaluation needs an exponential kernel")
    matrix = np.atleast_2d(np.asarray(times, dtype=float))
    intensities = params.nu + kernel.alpha * decayed_sums(matrix, kernel.beta)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_sum = np.log(intensities).sum(axis=1)
    tail = -np.expm1(-kernel.beta * (window_end - matrix)).sum(axis=1)
    values = log_sum - params.nu * window_end - (kernel.alpha / kernel.beta) * tail
    return np.where(np.isfinite(values), values, -np.inf)


def conditional_pdf_log(
    params: HawkesParams,
    history: EventSequence,
    t_prev: float,
    t: float,
) -> float:
    """``log f*(t) = log lambda*(t) - integral of lambda* over [t_prev, t]``."""
    _check_conditional(history, t_prev, t)
    return math.log(cif_eval(params, history, t)) - compensator(
        params, history, t_prev, t
    )


def conditional_cdf(
    params: HawkesParams,
    history: EventSequence,
    t_prev: float,
    t: float,
) -> float:
    _check_conditional(history, t_prev, t, strict=False)
    if t == t_prev:
        return 0.0
    return -math.expm1(-compensator(params, history, t_prev, t))


def _check_conditional(
    history: EventSequence,
    t_prev: float,
    t: float,
    *,
    strict: bool = True,
) -> None:
    if t < t_prev or (strict and t == t_prev):
        raise InvalidParameterError("The next event must come after t_prev")
    if history.times and history.times[-1] > t_prev:
        raise InvalidParameterError("History events cannot come after t_prev")


def binned_intensities(params: HawkesParams, counts: BinnedCounts) -> np.ndarray:
    """Piecewise-constant ``lambda_j`` per bin.

    Events of earlier bin ``i`` sit at its right edge; ``lambda_j`` is read at the
    right edge of bin ``j``, so adjacent bins are one width apart.
    """
    spec = counts.spec
    values = counts.array
    kernel = params.kernel
    width = spec.uniform_width
    if isinstance(kernel, ExponentialKernel):
        if width is not None:
            ratio = math.exp(-kernel.beta * width)
            sums = lfilter([0.0, ratio], [1.0, -ratio], values)
        else:
            sums = np.zeros(values.size)
            upper = spec.upper
            for index in range(1, values.size):
                sums[index] = math.exp(-kernel.beta * (upper[index] - upper[index - 1])) * (
                    sums[index - 1] + values[index - 1]
                )
        return params.nu + kernel.alpha * sums
    if width is not None:
        lags = kernel_eval(kernel, width * np.arange(values.size))
        lags[0] = 0.0
        return params.nu + np.convolve(values, lags)[: values.size]
    return params.nu + _excitation_at_bins(params, spec.upper, values)


def _excitation_at_bins(
    params: HawkesParams,
    upper: np.ndarray,
    values: np.ndarray,
) -> np.ndarray:
    size = upper.size
    result = np.zeros(size)
    for start in range(0, size, PAIRWISE_BLOCK_ROWS):
        stop = min(start + PAIRWISE_BLOCK_ROWS, size)
        elapsed = upper[start:stop, None] - upper[None, :stop]
        earlier = np.arange(stop)[None, :] < np.arange(start, stop)[:, None]
        kernel_values = np.where(earlier, kernel_eval(params.kernel, elapsed), 0.0)
        result[start:stop] = kernel_values @ values[:stop]
    return result


def binned_loglik(params: HawkesParams, counts: BinnedCounts) -> LogLik:
    """``sum_j N_j log(width_j * lambda_j) - width_j * lambda_j``."""
    widths = counts.spec.widths
    values = counts.array
    rates = widths * binned_intensities(params, counts)
    occupied = values > 0
    if np.any(~np.isfinite(rates)) or np.any(rates[occupied] <= 0):
        return LogLik(-math.inf, finite=False)
    terms = np.sum(values[occupied] * np.log(rates[occupied]))
    return LogLik.from_value(terms - np.sum(rates))
