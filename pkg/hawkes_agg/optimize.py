"""Derivative-free maximization over Hawkes parameters under stationarity.

Every search runs in an unconstrained space whose decoded points satisfy
``nu > 0`` and a branching ratio below one by construction.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .errors import InvalidParameterError, ObjectiveNonFinite
from .kernels import branching_ratio
from .models import (
    ExponentialKernel,
    HawkesParams,
    KernelFamily,
    PowerLawKernel,
    RectangularKernel,
)


DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_ITERS = 5000
DEFAULT_STARTS = 5
GAMMA_CAP = 1.0 - 1e-12
BOUNDARY_MARGIN = 1e-6
VANISHING = 1e-8
LAG_FLOOR = 1e-12
SIMPLEX_STEP = 0.1

Objective = Callable[[HawkesParams], float]


@dataclass(frozen=True, slots=True)
class SimplexResult:
    x: np.ndarray
    value: float
    converged: bool
    iters: int
    evaluations: int


def nelder_mead(
    fun: Callable[[np.ndarray], float],
    x0: Sequence[float],
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iters: int = DEFAULT_MAX_ITERS,
    step: float = SIMPLEX_STEP,
) -> SimplexResult:
    """Minimize ``fun`` with the standard simplex coefficients (1, 2, 0.5, 0.5).

    The reported point is the best one ever evaluated.
    """
    start = np.asarray(x0, dtype=float)
    best = {"x": start.copy(), "value": math.inf}

    def tracked(x: np.ndarray) -> float:
        value = float(fun(x))
        if not math.isfinite(value):
            value = math.inf
        if value < best["value"]:
            best["value"] = value
            best["x"] = np.array(x, dtype=float)
        return value

    simplex = np.vstack([start, start + step * np.eye(start.size)])
    result = minimize(
        tracked,
        start,
        method="Nelder-Mead",
        options={
            "xatol": tolerance,
            "fatol": tolerance,
            "maxiter": max_iters,
            "initial_simplex": simplex,
            "adaptive": False,
        },
    )
    return SimplexResult(
        best["x"],
        best["value"],
        bool(result.success),
        int(result.nit),
        int(result.nfev),
    )


def _positive(value: float) -> float:
    return math.exp(min(value, 700.0))


class ParameterCodec:
    """Maps Hawkes parameters to and from the unconstrained search space.

    Coordinates: exponential ``(log nu, logit gamma, log beta)``; power-law
    ``(log nu, logit gamma, log beta, log c)``; rectangular
    ``(log nu, logit n, log a, log(b - a))``.
    """

    def __init__(self, family: KernelFamily) -> None:
        self.family = KernelFamily(family)

    def encode(self, params: HawkesParams) -> np.ndarray:
        if params.family is not self.family:
            raise InvalidParameterError(
                f"Expected {self.family.value} parameters, got {params.family.value}"
            )
        gamma = branching_ratio(params.kernel)
        if not 0 < gamma < 1:
            raise InvalidParameterError(
                f"Start point must be stationary; branching ratio is {gamma:.6g}"
            )
        kernel = params.kernel
        head = [math.log(params.nu), float(logit(gamma))]
        match kernel:
            case ExponentialKernel(beta=beta):
                return np.array([*head, math.log(beta)])
            case PowerLawKernel(beta=beta, c=c):
                return np.array([*head, math.log(beta), math.log(c)])
            case RectangularKernel(a=a, b=b):
                return np.array([*head, math.log(max(a, LAG_FLOOR)), math.log(b - a)])
        raise InvalidParameterError(f"Unsupported kernel: {kernel!r}")

    def decode(self, x: Sequence[float]) -> HawkesParams:
        nu = _positive(x[0])
        gamma = min(float(expit(x[1])), GAMMA_CAP)
        if self.family is KernelFamily.EXPONENTIAL:
            beta = _positive(x[2])
            return HawkesParams(nu, ExponentialKernel(beta * gamma, beta))
        if self.family is KernelFamily.POWERLAW:
            c = _positive(x[3])
            return HawkesParams(nu, PowerLawKernel(c * gamma, _positive(x[2]), c))
        onset = _positive(x[2])
        return HawkesParams(nu, RectangularKernel(gamma, onset, onset + _positive(x[3])))

    def coordinate(self, name: str) -> int:
        names = ("nu", *self.family.parameter_names)
        if name not in names:
            raise InvalidParameterError(
                f"{self.family.value} parameters have no {name!r}"
            )
        return names.index(name)


@dataclass(frozen=True, slots=True)
class OptProblem:
    """A maximization target.

    ``fixed`` names parameters whose search coordinate stays at the start
    value; for the kernel amplitude that coordinate is the branching ratio.
    """

    objective: Objective
    kernel_family: KernelFamily
    start: HawkesParams
    tolerance: float = DEFAULT_TOLERANCE
    max_iters: int = DEFAULT_MAX_ITERS
    fixed: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise InvalidParameterError("Optimizer tolerance must be positive")
        if self.max_iters < 1:
            raise InvalidParameterError("Optimizer iteration limit must be positive")
        if self.start.family is not KernelFamily(self.kernel_family):
            raise InvalidParameterError("Start point does not match the kernel family")
        if not branching_ratio(self.start.kernel) < 1:
            raise InvalidParameterError("Start point must satisfy stationarity strictly")


@dataclass(frozen=True, slots=True)
class OptResult:
    params: HawkesParams
    objective_value: float
    converged: bool
    iters: int
    boundary: bool = False
    evaluations: int = 0

    def __post_init__(self) -> None:
        if not branching_ratio(self.params.kernel) < 1:
            raise ValueError("Optimizer results must be stationary")


def at_boundary(params: HawkesParams) -> bool:
    """Whether an estimate sits at the edge of the feasible region."""
    if branching_ratio(params.kernel) >= 1.0 - BOUNDARY_MARGIN:
        return True
    return params.nu < VANISHING or params.kernel.values[0] < VANISHING


def maximize(problem: OptProblem) -> OptResult:
    codec = ParameterCodec(problem.kernel_family)
    start = codec.encode(problem.start)
    start_value = float(problem.objective(problem.start))
    if not math.isfinite(start_value):
        raise ObjectiveNonFinite(
            f"Objective is not finite at the start point {problem.start.values}"
        )
    held = {codec.coordinate(name) for name in problem.fixed}
    free = [index for index in range(start.size) if index not in held]
    if not free:
        return OptResult(problem.start, start_value, True, 0, at_boundary(problem.start))

    def expand(free_x: np.ndarray) -> np.ndarray:
        full = start.copy()
        full[free] = free_x
        return full

    def negative(free_x: np.ndarray) -> float:
        try:
            value = problem.objective(codec.decode(expand(free_x)))
        except (InvalidParameterError, OverflowError, FloatingPointError):
            return math.inf
        return -float(value)

    simplex = nelder_mead(
        negative,
        start[free],
        tolerance=problem.tolerance,
        max_iters=problem.max_iters,
    )
    if simplex.value <= -start_value:
        params = codec.decode(expand(simplex.x))
        value = -simplex.value
    else:
        params, value = problem.start, start_value
    return OptResult(
        params,
        value,
        simplex.converged,
        simplex.iters,
        at_boundary(params),
        simplex.evaluations,
    )


def jittered_starts(
    base: HawkesParams,
    count: int,
    rng: np.random.Generator,
    *,
    scale: float = 0.3,
) -> tuple[HawkesParams, ...]:
    """``base`` followed by ``count - 1`` perturbations in the search space."""
    codec = ParameterCodec(base.family)
    center = codec.encode(base)
    starts = [base]
    for _ in range(max(count, 1) - 1):
        starts.append(codec.decode(center + rng.normal(0.0, scale, center.size)))
    return tuple(starts)


def multi_start_maximize(
    objective: Objective,
    starts: Sequence[HawkesParams],
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> OptResult:
    """Best local maximum over several starts; non-finite starts are skipped."""
    best: OptResult | None = None
    for start in starts:
        try:
            result = maximize(
                OptProblem(objective, start.family, start, tolerance, max_iters)
            )
        except ObjectiveNonFinite:
            continue
        if best is None or result.objective_value > best.objective_value:
            best = result
    if best is None:
        raise ObjectiveNonFinite("Objective is not finite at any start point")
    return best
