"""Maximum likelihood on bin counts, and on exact times as the reference fit."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import AllZeroCounts, HawkesAggError, InvalidParameterError
from .likelihood import binned_loglik, loglik_continuous
from .models import (
    BinnedCounts,
    EventSequence,
    ExponentialKernel,
    HawkesParams,
    KernelFamily,
    MethodOutcome,
    PowerLawKernel,
    RectangularKernel,
    RunStatus,
)
from .optimize import (
    DEFAULT_MAX_ITERS,
    DEFAULT_STARTS,
    DEFAULT_TOLERANCE,
    OptResult,
    jittered_starts,
    multi_start_maximize,
)
from .simulate import rng_stream


START_GAMMA = 0.5
START_DECAYS = (0.5, 1.0, 2.0)


@dataclass(frozen=True, slots=True)
class BinnedConfig:
    kernel_family: KernelFamily = KernelFamily.EXPONENTIAL
    starts: int = DEFAULT_STARTS
    tolerance: float = DEFAULT_TOLERANCE
    max_iters: int = DEFAULT_MAX_ITERS

    def __post_init__(self) -> None:
        object.__setattr__(self, "kernel_family", KernelFamily(self.kernel_family))
        if self.starts < 1:
            raise InvalidParameterError("Binned MLE needs at least one start point")
        if not self.tolerance > 0:
            raise InvalidParameterError("Binned MLE tolerance must be positive")
        if self.max_iters < 1:
            raise InvalidParameterError("Binned MLE iteration limit must be positive")


@dataclass(frozen=True, slots=True)
class BinnedMleResult:
    """Result of a likelihood maximization; also used for exact-time fits."""

    params: HawkesParams
    loglik: float
    converged: bool
    boundary: bool

    @classmethod
    def from_opt(cls, result: OptResult) -> BinnedMleResult:
        return cls(
            result.params,
            result.objective_value,
            result.converged,
            result.boundary,
        )

    def outcome(self) -> MethodOutcome:
        if not self.converged:
            return MethodOutcome(
                RunStatus.NONCONVERGED,
                self.params,
                "Optimizer reached its iteration limit",
            )
        if self.boundary:
            return MethodOutcome(
                RunStatus.BOUNDARY,
                self.params,
                "Estimate sits on the edge of the feasible region",
            )
        return MethodOutcome(RunStatus.OK, self.params)


def _moment_start(
    family: KernelFamily,
    rate: float,
    decay: float,
) -> HawkesParams:
    nu = max(rate * (1.0 - START_GAMMA), 1e-6)
    if family is KernelFamily.EXPONENTIAL:
        return HawkesParams(nu, ExponentialKernel(START_GAMMA * decay, decay))
    if family is KernelFamily.POWERLAW:
        return HawkesParams(nu, PowerLawKernel(START_GAMMA, decay, 1.0))
    return HawkesParams(nu, RectangularKernel(START_GAMMA, 0.0, 1.0 / decay))


def start_points(
    family: KernelFamily,
    rate: float,
    count: int,
    rng: np.random.Generator,
) -> tuple[HawkesParams, ...]:
    """Moment-matched starts over the decay grid, then jittered copies of them."""
    bases = [_moment_start(family, rate, decay) for decay in START_DECAYS]
    starts = list(bases[:count])
    extra = count - len(starts)
    for index in range(extra):
        base = bases[index % len(bases)]
        starts.append(jittered_starts(base, 2, rng)[1])
    return tuple(starts)


def binned_mle(
    counts: BinnedCounts,
    kernel_family: KernelFamily = KernelFamily.EXPONENTIAL,
    opts: BinnedConfig | None = None,
    *,
    seed: int = 0,
) -> BinnedMleResult:
    """Maximize the piecewise-constant-intensity likelihood subject to ``gamma < 1``."""
    cfg = opts or BinnedConfig(kernel_family=kernel_family)
    family = KernelFamily(kernel_family)
    if counts.is_all_zero:
        raise AllZeroCounts("Every bin is empty; the background rate is not identified")
    rate = counts.total / (counts.spec.end - counts.spec.start)
    starts = start_points(family, rate, cfg.starts, rng_stream(seed))

    def objective(params: HawkesParams) -> float:
        return binned_loglik(params, counts).value

    return BinnedMleResult.from_opt(
        multi_start_maximize(
            objective,
            starts,
            tolerance=cfg.tolerance,
            max_iters=cfg.max_iters,
        )
    )


def continuous_mle(
    events: EventSequence,
    kernel_family: KernelFamily = KernelFamily.EXPONENTIAL,
    opts: BinnedConfig | None = None,
    *,
    seed: int = 0,
) -> BinnedMleResult:
    """Exact-time maximum likelihood from the same start rule as ``binned_mle``."""
    cfg = opts or BinnedConfig(kernel_family=kernel_family)
    family = KernelFamily(kernel_family)
    if not len(events):
        raise AllZeroCounts("The sequence has no events; nu is not identified")
    starts = start_points(
        family, len(events) / events.window_end, cfg.starts, rng_stream(seed)
    )

    def objective(params: HawkesParams) -> float:
        return loglik_continuous(params, events).value

    return BinnedMleResult.from_opt(
        multi_start_maximize(
            objective,
            starts,
            tolerance=cfg.tolerance,
            max_iters=cfg.max_iters,
        )
    )


def _failure(exc: HawkesAggError) -> MethodOutcome:
    return MethodOutcome(RunStatus.FAILED, message=f"{type(exc).__name__}: {exc}")


class BinnedEstimator:
    def __init__(self, config: BinnedConfig | None = None) -> None:
        self.config = config or BinnedConfig()

    def fit(self, counts: BinnedCounts, *, seed: int = 0) -> MethodOutcome:
        try:
            result = binned_mle(
                counts, self.config.kernel_family, self.config, seed=seed
            )
        except HawkesAggError as exc:
            return _failure(exc)
        return result.outcome()


class ContinuousOracleEstimator:
    """Fits the latent exact times that the count estimators never see."""

    def __init__(self, config: BinnedConfig | None = None) -> None:
        self.config = config or BinnedConfig()

    def fit(self, events: EventSequence, *, seed: int = 0) -> MethodOutcome:
        try:
            result = continuous_mle(
                events, self.config.kernel_family, self.config, seed=seed
            )
        except HawkesAggError as exc:
            return _failure(exc)
        if not math.isfinite(result.loglik):
            return MethodOutcome(
                RunStatus.FAILED, message="Log-likelihood is not finite at the estimate"
            )
        return result.outcome()
