"""INAR(p) conditional least squares on bin counts and an exponential kernel fit."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import (
    FitFailure,
    HawkesAggError,
    InvalidParameterError,
    SingularDesign,
    TooFewBins,
)
from .kernels import branching_ratio
from .models import (
    BinnedCounts,
    ExponentialKernel,
    HawkesParams,
    MethodOutcome,
    RunStatus,
)
from .optimize import VANISHING, nelder_mead


CONDITION_LIMIT = 1e12
MAX_DEFAULT_LAG = 20
ALPHA_FLOOR = 1e-12
DEFAULT_FIT_TOLERANCE = 1e-8


class LagPlacement(str, Enum):
    RIGHT = "right"
    MIDPOINT = "midpoint"


@dataclass(frozen=True, slots=True)
class InarConfig:
    """``support`` is ``s``; ``None`` picks ``p = min(20, K // 5)``."""

    bin_width: float | None = None
    support: float | None = None
    lag_placement: LagPlacement = LagPlacement.RIGHT
    tolerance: float = DEFAULT_FIT_TOLERANCE
    max_iters: int = 5000

    def __post_init__(self) -> None:
        object.__setattr__(self, "lag_placement", LagPlacement(self.lag_placement))
        if self.bin_width is not None and not self.bin_width > 0:
            raise InvalidParameterError("INAR bin width must be positive")
        if self.support is not None:
            if not self.support > 0:
                raise InvalidParameterError("INAR support must be positive")
            if self.bin_width is not None and not self.support > self.bin_width:
                raise InvalidParameterError("INAR support must exceed the bin width")

    def lag_for(self, n_bins: int, bin_width: float) -> int:
        if self.support is None:
            return max(1, min(MAX_DEFAULT_LAG, n_bins // 5))
        if not self.support > bin_width:
            raise InvalidParameterError("INAR support must exceed the bin width")
        return max(1, math.ceil(self.support / bin_width - 1e-12))


@dataclass(frozen=True, slots=True)
class InarRaw:
    g_points: tuple[float, ...]
    nu_hat: float
    lag_times: tuple[float, ...]
    condition: float = 1.0

    def __post_init__(self) -> None:
        if len(self.g_points) != len(self.lag_times):
            raise ValueError("Each kernel estimate needs one lag time")
        if not self.g_points:
            raise ValueError("INAR estimates need at least one lag")

    @property
    def lag(self) -> int:
        return len(self.g_points)


@dataclass(frozen=True, slots=True)
class InarFit:
    params: HawkesParams
    boundary: bool
    residual: float
    converged: bool = True

    @property
    def stationary(self) -> bool:
        return branching_ratio(self.params.kernel) < 1


def build_design(counts: BinnedCounts, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Design ``Z`` of shape ``(p + 1, K - p)`` and response ``Y`` of length ``K - p``.

    Row ``r`` (1-based, ``r <= p``) holds ``N_{p+1-r} ... N_{K-r}``; the last row is ones.
    """
    if p < 1:
        raise InvalidParameterError("INAR lag must be at least 1")
    values = counts.array
    size = values.size
    if size <= p + 1:
        raise TooFewBins(f"{size} bins cannot support lag {p}; need more than {p + 1}")
    rows = [values[p - r : size - r] for r in range(1, p + 1)]
    rows.append(np.ones(size - p))
    return np.vstack(rows), values[p:].copy()


def _bin_width(counts: BinnedCounts, cfg: InarConfig) -> float:
    width = counts.spec.uniform_width
    if width is None:
        raise InvalidParameterError("INAR estimation requires equal bin widths")
    if cfg.bin_width is not None and not math.isclose(
        width, cfg.bin_width, rel_tol=1e-9
    ):
        raise InvalidParameterError(
            f"Counts use bin width {width}, configuration expects {cfg.bin_width}"
        )
    return width


def cls_estimate(counts: BinnedCounts, cfg: InarConfig) -> InarRaw:
    """``(1 / width) * Y Z^T (Z Z^T)^-1``, applied to every coordinate."""
    width = _bin_width(counts, cfg)
    p = cfg.lag_for(counts.spec.n_bins, width)
    design, response = build_design(counts, p)
    normal = design @ design.T
    condition = float(np.linalg.cond(normal, 1))
    if not math.isfinite(condition) or condition > CONDITION_LIMIT:
        raise SingularDesign(
            f"INAR normal matrix is singular (condition number {condition:.3g})"
        )
    solution = lu_solve(lu_factor(normal), design @ response) / width
    offsets = np.arange(1, p + 1, dtype=float)
    if cfg.lag_placement is LagPlacement.MIDPOINT:
        offsets -= 0.5
    return InarRaw(
        tuple(float(value) for value in solution[:p]),
        float(solution[p]),
        tuple(float(value) for value in offsets * width),
        condition,
    )


def _initial_guess(points: np.ndarray, lags: np.ndarray) -> tuple[float, float]:
    positive = points > 0
    if np.count_nonzero(positive) >= 2:
        slope, intercept = np.polyfit(lags[positive], np.log(points[positive]), 1)
        if slope < 0:
            return float(np.exp(intercept)), float(-slope)
    return float(points[positive].max()), 1.0 / float(lags.mean())


def fit_exponential(
    raw: InarRaw,
    *,
    tolerance: float = DEFAULT_FIT_TOLERANCE,
    max_iters: int = 5000,
) -> InarFit:
    """Least-squares ``alpha * exp(-beta * tau_k)`` through the kernel estimates.

    The result is not constrained to be stationary. When the simplex runs out
    of iterations the best point seen is returned with ``converged=False``.
    """
    if raw.lag < 2:
        raise FitFailure("An exponential fit needs at least two kernel estimates")
    if not raw.nu_hat > 0:
        raise FitFailure(f"Background estimate {raw.nu_hat:.6g} is not positive")
    points = np.asarray(raw.g_points)
    lags = np.asarray(raw.lag_times)
    if not np.any(points > 0):
        params = HawkesParams(
            raw.nu_hat, ExponentialKernel(ALPHA_FLOOR, 1.0 / float(lags[0]))
        )
        return InarFit(params, True, float(np.sum(points**2)))

    def squared_error(x: np.ndarray) -> float:
        curve = math.exp(min(x[0], 700.0)) * np.exp(-math.exp(min(x[1], 700.0)) * lags)
        return float(np.sum((points - curve) ** 2))

    alpha0, beta0 = _initial_guess(points, lags)
    result = nelder_mead(
        squared_error,
        [math.log(alpha0), math.log(beta0)],
        tolerance=tolerance,
        max_iters=max_iters,
    )
    alpha = max(math.exp(result.x[0]), ALPHA_FLOOR)
    beta = math.exp(result.x[1])
    params = HawkesParams(raw.nu_hat, ExponentialKernel(alpha, beta))
    return InarFit(params, alpha < VANISHING, result.value, result.converged)


class InarEstimator:
    def __init__(self, config: InarConfig | None = None) -> None:
        self.config = config or InarConfig()

    def fit(self, counts: BinnedCounts, *, seed: int = 0) -> MethodOutcome:
        try:
            raw = cls_estimate(counts, self.config)
            fit = fit_exponential(
                raw,
                tolerance=self.config.tolerance,
                max_iters=self.config.max_iters,
            )
        except SingularDesign as exc:
            return MethodOutcome(RunStatus.SINGULAR, message=str(exc))
        except HawkesAggError as exc:
            return MethodOutcome(
                RunStatus.FAILED, message=f"{type(exc).__name__}: {exc}"
            )
        if not fit.converged:
            return MethodOutcome(
                RunStatus.NONCONVERGED,
                fit.params,
                f"Exponential kernel fit stopped after {self.config.max_iters} iterations",
            )
        if fit.boundary:
            return MethodOutcome(
                RunStatus.BOUNDARY, fit.params, "Kernel amplitude collapsed to zero"
            )
        message = "" if fit.stationary else (
            f"Non-stationary estimate (branching ratio "
            f"{branching_ratio(fit.params.kernel):.4g})"
        )
        return MethodOutcome(RunStatus.OK, fit.params, message)
