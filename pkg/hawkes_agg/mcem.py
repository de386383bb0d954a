"""Monte Carlo EM for Hawkes parameters from bin counts.

Each E-step moves ``m`` particles through the bins in time order. Inside a
bin the next event is drawn given how many events the bin still has to
hold; between bins the particles are reweighted by ``p / q`` and resampled
when their effective sample size drops. The M-step maximizes the
self-normalized weighted complete-data log-likelihood under ``gamma < 1``.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
import math
from typing import Any, Protocol

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import gammainc, gammaincinv, gammaln, logsumexp

from .errors import (
    AllZeroCounts,
    DegenerateWeights,
    HawkesAggError,
    InvalidParameterError,
    RootFindFailure,
)
from .kernels import branching_ratio, kernel_eval, kernel_integral, params_to_dict
from .likelihood import loglik_continuous, loglik_exponential_batch
from .models import (
    BinnedCounts,
    BinSpec,
    EventSequence,
    ExponentialKernel,
    HawkesParams,
    KernelFamily,
    MethodOutcome,
    PowerLawKernel,
    ProposalMode,
    RectangularKernel,
    RunStatus,
)
from .optimize import OptProblem, at_boundary, maximize
from .process import aggregate, decayed_sums
from .simulate import rng_stream


DEFAULT_SAMPLES = 50
DEFAULT_EPSILON = 1e-3
DEFAULT_EM_ITERS = 100
DEFAULT_RESAMPLE_THRESHOLD = 0.5
LOW_ESS_FRACTION = 0.1
DEGENERATE_ESS = 1.0 + 1e-9
DEGENERATE_PATIENCE = 5
ROOT_TOLERANCE = 1e-12
NEWTON_STEPS = 60
INIT_LOW = 1.0
INIT_HIGH = 3.0
# Below this, regularized gamma values are replaced by their small-x expansion.
TAIL_FLOOR = 1e-290


@dataclass(frozen=True, slots=True)
class McemConfig:
    """MC-EM settings.

    ``start`` replaces the random initialization; ``kernel_family`` selects the
    fitted family when no start is given. Particles are resampled after a bin
    when their ESS falls below ``resample_threshold * m``; zero disables it.
    """

    m: int = DEFAULT_SAMPLES
    epsilon: float = DEFAULT_EPSILON
    max_em_iters: int = DEFAULT_EM_ITERS
    seed: int = 0
    proposal_mode: ProposalMode = ProposalMode.SEQUENTIAL
    kernel_family: KernelFamily = KernelFamily.EXPONENTIAL
    start: HawkesParams | None = None
    m_step_tolerance: float = 1e-6
    m_step_max_iters: int = 2000
    resample_threshold: float = DEFAULT_RESAMPLE_THRESHOLD

    def __post_init__(self) -> None:
        object.__setattr__(self, "proposal_mode", ProposalMode(self.proposal_mode))
        object.__setattr__(self, "kernel_family", KernelFamily(self.kernel_family))
        if self.m < 1:
            raise InvalidParameterError("MC-EM needs at least one sample per E-step")
        if not self.epsilon > 0:
            raise InvalidParameterError("MC-EM epsilon must be positive")
        if self.max_em_iters < 1:
            raise InvalidParameterError("MC-EM iteration limit must be positive")
        if self.seed < 0:
            raise InvalidParameterError("MC-EM seed cannot be negative")
        if not self.m_step_tolerance > 0 or self.m_step_max_iters < 1:
            raise InvalidParameterError("M-step optimizer settings must be positive")
        if not 0.0 <= self.resample_threshold <= 1.0:
            raise InvalidParameterError("Resample threshold must lie in [0, 1]")
        if self.start is not None:
            if self.start.family is not self.kernel_family:
                raise InvalidParameterError(
                    "MC-EM start does not match the configured kernel family"
                )
            if not branching_ratio(self.start.kernel) < 1:
                raise InvalidParameterError("MC-EM start must be stationary")


@dataclass(frozen=True, slots=True)
class WeightedSample:
    """A legal latent event set and its log importance weight."""

    times: EventSequence
    log_w: float
    log_q: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.log_w):
            raise ValueError("Importance log-weight must be finite")


@dataclass(frozen=True, slots=True)
class McemTrace:
    iterates: tuple[HawkesParams, ...]
    q_values: tuple[float, ...] = ()
    ess: tuple[float, ...] = ()
    converged: bool = False
    degenerate_iterations: int = 0
    resamples: tuple[int, ...] = ()
    low_ess_iterations: int = 0

    def __post_init__(self) -> None:
        if not self.iterates:
            raise ValueError("An MC-EM trace needs at least the initial iterate")

    @property
    def iterations(self) -> int:
        return len(self.q_values)

    def to_dict(self) -> dict[str, Any]:
        return {
            "iterates": [params_to_dict(params) for params in self.iterates],
            "q_values": list(self.q_values),
            "ess": list(self.ess),
            "resamples": list(self.resamples),
            "converged": self.converged,
            "degenerate_iterations": self.degenerate_iterations,
            "low_ess_iterations": self.low_ess_iterations,
        }


IterationCallback = Callable[[int, HawkesParams, float, float], None]


class _Swarm(Protocol):
    """Intensity state of ``size`` particles, each with its own clock."""

    size: int
    clock: np.ndarray

    def mass(self, t: float | np.ndarray) -> np.ndarray:
        ...

    def intensity(self, t: float | np.ndarray) -> np.ndarray:
        ...

    def solve(self, target: np.ndarray, upper: float) -> np.ndarray:
        ...

    def move(self, t: float | np.ndarray) -> None:
        ...

    def add(self, t: np.ndarray) -> None:
        ...

    def take(self, index: np.ndarray) -> None:
        ...


def _bracketed_root(
    mass: Callable[[float], float],
    lower: float,
    upper: float,
    target: float,
) -> float:
    try:
        return float(
            brentq(
                lambda t: mass(t) - target,
                lower,
                upper,
                xtol=ROOT_TOLERANCE,
                rtol=4 * np.finfo(float).eps,
            )
        )
    except ValueError as exc:
        raise RootFindFailure(
            f"Cannot bracket the conditional CDF on [{lower}, {upper}]"
        ) from exc


class _ExponentialSwarm:
    """Exponential-kernel particles advanced together in O(size) per step.

    ``excitation`` holds ``sum exp(-beta * (clock - t_j))`` over each
    particle's events up to and including its clock.
    """

    def __init__(self, params: HawkesParams, history: np.ndarray, size: int) -> None:
        self.nu = params.nu
        self.alpha = params.kernel.alpha
        self.beta = params.kernel.beta
        self.size = size
        start, carried = 0.0, 0.0
        if history.size:
            start = float(history[-1])
            carried = float(decayed_sums(history, self.beta)[-1]) + 1.0
        self.clock = np.full(size, start)
        self.excitation = np.full(size, carried)

    def _carried(self, t: float | np.ndarray) -> np.ndarray:
        return self.excitation * np.exp(-self.beta * (t - self.clock))

    def mass(self, t: float | np.ndarray) -> np.ndarray:
        span = t - self.clock
        return self.nu * span + (self.alpha / self.beta) * self.excitation * -np.expm1(
            -self.beta * span
        )

    def intensity(self, t: float | np.ndarray) -> np.ndarray:
        return self.nu + self.alpha * self._carried(t)

    def solve(self, target: np.ndarray, upper: float) -> np.ndarray:
        # The compensator is increasing and concave in t, so Newton from the
        # clock approaches the root monotonically.
        scale = (self.alpha / self.beta) * self.excitation
        limit = upper - self.clock
        span = np.zeros(self.size)
        active = np.ones(self.size, dtype=bool)
        for _ in range(NEWTON_STEPS):
            decay = np.exp(-self.beta * span)
            value = self.nu * span + scale * (1.0 - decay) - target
            step = -value / (self.nu + self.beta * scale * decay)
            span = np.where(active, np.minimum(span + step, limit), span)
            active &= np.abs(step) > ROOT_TOLERANCE * np.maximum(1.0, span)
            if not active.any():
                return self.clock + span
        for index in np.flatnonzero(active):
            lower = float(self.clock[index])
            carried = float(self.excitation[index])

            def mass(t: float, lower: float = lower, carried: float = carried) -> float:
                return self.nu * (t - lower) + (
                    self.alpha / self.beta
                ) * carried * -math.expm1(-self.beta * (t - lower))

            span[index] = _bracketed_root(mass, lower, upper, float(target[index])) - lower
        return self.clock + span

    def move(self, t: float | np.ndarray) -> None:
        self.excitation = self._carried(t)
        self.clock = np.broadcast_to(np.asarray(t, dtype=float), (self.size,)).copy()

    def add(self, t: np.ndarray) -> None:
        self.move(t)
        self.excitation = self.excitation + 1.0

    def take(self, index: np.ndarray) -> None:
        self.clock = self.clock[index]
        self.excitation = self.excitation[index]


class _HistorySwarm:
    """Particles for kernels without a recursion; each keeps its full history."""

    def __init__(self, params: HawkesParams, history: np.ndarray, size: int) -> None:
        self.params = params
        self.size = size
        self.histories = [np.array(history, dtype=float) for _ in range(size)]
        start = float(history[-1]) if history.size else 0.0
        self.clock = np.full(size, start)

    def _each(self, t: float | np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(t, dtype=float), (self.size,))

    def _mass_one(self, index: int, lower: float, t: float) -> float:
        kernel = self.params.kernel
        history = self.histories[index]
        gained = kernel_integral(kernel, t - history) - kernel_integral(
            kernel, lower - history
        )
        return self.params.nu * (t - lower) + float(np.sum(gained))

    def mass(self, t: float | np.ndarray) -> np.ndarray:
        times = self._each(t)
        return np.array(
            [
                self._mass_one(index, float(self.clock[index]), float(times[index]))
                for index in range(self.size)
            ]
        )

    def intensity(self, t: float | np.ndarray) -> np.ndarray:
        times = self._each(t)
        values = np.empty(self.size)
        for index, history in enumerate(self.histories):
            earlier = history[history < times[index]]
            values[index] = self.params.nu + float(
                np.sum(kernel_eval(self.params.kernel, times[index] - earlier))
            )
        return values

    def solve(self, target: np.ndarray, upper: float) -> np.ndarray:
        roots = np.empty(self.size)
        for index in range(self.size):
            lower = float(self.clock[index])
            roots[index] = _bracketed_root(
                lambda t: self._mass_one(index, lower, t), lower, upper, float(target[index])
            )
        return roots

    def move(self, t: float | np.ndarray) -> None:
        self.clock = self._each(t).copy()

    def add(self, t: np.ndarray) -> None:
        times = self._each(t)
        self.histories = [
            np.append(history, times[index]) for index, history in enumerate(self.histories)
        ]
        self.move(times)

    def take(self, index: np.ndarray) -> None:
        self.histories = [self.histories[int(source)] for source in index]
        self.clock = self.clock[index]


def _swarm(params: HawkesParams, history: np.ndarray, size: int) -> _Swarm:
    if isinstance(params.kernel, ExponentialKernel):
        return _ExponentialSwarm(params, history, size)
    return _HistorySwarm(params, history, size)


def log_poisson_tail(k: int, x: float | np.ndarray) -> np.ndarray:
    """``log P(N >= k)`` for ``N ~ Poisson(x)``, accurate when it underflows."""
    x = np.asarray(x, dtype=float)
    if k <= 0:
        return np.zeros_like(x)
    with np.errstate(divide="ignore"):
        tail = gammainc(k, x)
        direct = np.log(tail)
        expansion = k * np.log(x) - x - gammaln(k + 1) + np.log1p(x / (k + 1))
    return np.where(tail > TAIL_FLOOR, direct, expansion)


def _first_arrival(total: np.ndarray, remaining: int, rng: np.random.Generator) -> np.ndarray:
    """First of at least ``remaining`` unit-rate arrivals on ``[0, total)``.

    With one event left this is an exponential truncated to ``[0, total)``.
    Otherwise the ``remaining``-th arrival is a gamma variate truncated below
    ``total`` and the earlier ones are uniform order statistics beneath it.
    """
    size = total.shape
    w = rng.random(size)
    v = rng.random(size)
    if remaining == 1:
        return -np.log1p(-w * -np.expm1(-total))
    below = gammainc(remaining, total)
    with np.errstate(divide="ignore", invalid="ignore"):
        last = np.where(
            below > TAIL_FLOOR,
            gammaincinv(remaining, w * below),
            total * w ** (1.0 / remaining),
        )
    return last * -np.expm1(np.log1p(-v) / (remaining - 1))


def _log_first_arrival_density(
    spent: np.ndarray,
    total: np.ndarray,
    remaining: int,
) -> np.ndarray:
    left = np.maximum(total - spent, np.finfo(float).tiny)
    return -spent + log_poisson_tail(remaining - 1, left) - log_poisson_tail(remaining, total)


EventDraw = tuple[np.ndarray, np.ndarray, np.ndarray]


def _sequential_events(
    swarm: _Swarm,
    b_minus: float,
    b_plus: float,
    m_events: int,
    rng: np.random.Generator,
) -> EventDraw:
    times = np.empty((swarm.size, m_events))
    log_q = np.zeros(swarm.size)
    log_p = np.zeros(swarm.size)
    last_inside = math.nextafter(b_plus, -math.inf)
    for index in range(m_events):
        remaining = m_events - index
        lower = swarm.clock
        total = swarm.mass(b_plus)
        t = swarm.solve(_first_arrival(total, remaining, rng), b_plus)
        if index or b_minus <= 0:
            t = np.where(t > lower, t, np.nextafter(lower, math.inf))
        t = np.minimum(np.maximum(t, b_minus), last_inside)
        spent = swarm.mass(t)
        log_intensity = np.log(swarm.intensity(t))
        log_q += log_intensity + _log_first_arrival_density(spent, total, remaining)
        log_p += log_intensity - spent
        swarm.add(t)
        times[:, index] = t
    return times, log_q, log_p


def _uniform_events(
    swarm: _Swarm,
    b_minus: float,
    b_plus: float,
    m_events: int,
    rng: np.random.Generator,
) -> EventDraw:
    shape = (swarm.size, m_events)
    draws = np.sort(rng.uniform(b_minus, b_plus, shape), axis=1)
    while True:
        bad = (draws[:, 0] <= 0) | np.any(np.diff(draws, axis=1) <= 0, axis=1)
        if not bad.any():
            break
        draws[bad] = np.sort(
            rng.uniform(b_minus, b_plus, (int(bad.sum()), m_events)), axis=1
        )
    log_p = np.zeros(swarm.size)
    for index in range(m_events):
        t = draws[:, index]
        log_p += np.log(swarm.intensity(t)) - swarm.mass(t)
        swarm.add(t)
    log_q = np.full(
        swarm.size, float(gammaln(m_events + 1)) - m_events * math.log(b_plus - b_minus)
    )
    return draws, log_q, log_p


def _mode_events(
    swarm: _Swarm,
    b_minus: float,
    b_plus: float,
    m_events: int,
) -> EventDraw:
    """Coordinate-wise maximizer of the factorized truncated density."""
    times = np.empty((1, m_events))
    log_p = 0.0
    for index in range(m_events):
        lower = float(swarm.clock[0])
        left = float(np.nextafter(lower, math.inf)) if (index or lower <= 0) else lower

        def negative_log_density(t: float) -> float:
            return float(swarm.mass(t)[0]) - math.log(float(swarm.intensity(t)[0]))

        best = left
        if b_plus - left > ROOT_TOLERANCE:
            found = minimize_scalar(
                negative_log_density,
                bounds=(left, b_plus),
                method="bounded",
                options={"xatol": ROOT_TOLERANCE},
            )
            inside = min(float(found.x), math.nextafter(b_plus, -math.inf))
            if negative_log_density(inside) < negative_log_density(left):
                best = inside
        log_p -= negative_log_density(best)
        swarm.add(np.array([best]))
        times[0, index] = best
    return times, np.full(1, math.nan), np.full(1, log_p)


def _draw_events(
    swarm: _Swarm,
    b_minus: float,
    b_plus: float,
    m_events: int,
    rng: np.random.Generator,
    mode: ProposalMode,
) -> EventDraw:
    if mode is ProposalMode.SEQUENTIAL:
        return _sequential_events(swarm, b_minus, b_plus, m_events, rng)
    if mode is ProposalMode.UNIFORM:
        return _uniform_events(swarm, b_minus, b_plus, m_events, rng)
    return _mode_events(swarm, b_minus, b_plus, m_events)


def _check_bin(
    history: EventSequence,
    b_minus: float,
    b_plus: float,
    m_events: int,
) -> None:
    if not b_minus < b_plus:
        raise InvalidParameterError(f"Bin [{b_minus}, {b_plus}) is empty")
    if b_minus < 0:
        raise InvalidParameterError("Bins cannot start before time zero")
    if m_events < 1:
        raise InvalidParameterError("A sampled bin needs at least one event")
    if history.times and history.times[-1] > b_minus:
        raise InvalidParameterError("History events cannot come after the bin start")


def sample_bins(
    params: HawkesParams,
    history: EventSequence,
    b_minus: float,
    b_plus: float,
    m_events: int,
    rng: np.random.Generator,
    size: int = 1,
    mode: ProposalMode = ProposalMode.SEQUENTIAL,
) -> tuple[np.ndarray, np.ndarray]:
    """``size`` independent fillings of one bin: times ``(size, m_events)`` and ``log q``."""
    mode = ProposalMode(mode)
    _check_bin(history, b_minus, b_plus, m_events)
    if size < 1:
        raise InvalidParameterError("At least one bin sample is required")
    width = 1 if mode is ProposalMode.JOINT_MODE else size
    swarm = _swarm(params, history.array, width)
    swarm.move(b_minus)
    times, log_q, _ = _draw_events(swarm, b_minus, b_plus, m_events, rng, mode)
    if width != size:
        times = np.repeat(times, size, axis=0)
        log_q = np.repeat(log_q, size)
    return times, log_q


def sample_bin(
    params: HawkesParams,
    history: EventSequence,
    b_minus: float,
    b_plus: float,
    m_events: int,
    rng: np.random.Generator,
    mode: ProposalMode = ProposalMode.SEQUENTIAL,
) -> tuple[tuple[float, ...], float]:
    """Draw ``m_events`` ordered times in ``[b_minus, b_plus)`` and their ``log q``.

    Sequential mode draws each event from the conditional density truncated to
    ``[max(b_minus, previous), b_plus)`` and further conditioned on the bin
    still receiving the events left to place; the last event of a bin comes
    from the plain truncated conditional. Joint-mode returns ``log q = nan``.
    """
    times, log_q = sample_bins(params, history, b_minus, b_plus, m_events, rng, 1, mode)
    return tuple(float(t) for t in times[0]), float(log_q[0])


def sequential_log_density(
    params: HawkesParams,
    history: EventSequence,
    b_minus: float,
    b_plus: float,
    times: np.ndarray,
) -> np.ndarray:
    """Sequential-mode ``log q`` of each row of ``times``; ``-inf`` off the support."""
    rows = np.atleast_2d(np.asarray(times, dtype=float))
    m_events = rows.shape[1]
    _check_bin(history, b_minus, b_plus, m_events)
    supported = np.all((rows >= b_minus) & (rows < b_plus), axis=1)
    supported &= np.all(np.diff(rows, axis=1) > 0, axis=1)
    swarm = _swarm(params, history.array, rows.shape[0])
    swarm.move(b_minus)
    log_q = np.zeros(rows.shape[0])
    with np.errstate(all="ignore"):
        for index in range(m_events):
            t = rows[:, index]
            total = swarm.mass(b_plus)
            log_q += np.log(swarm.intensity(t)) + _log_first_arrival_density(
                swarm.mass(t), total, m_events - index
            )
            swarm.add(t)
    return np.where(supported & np.isfinite(log_q), log_q, -np.inf)


def systematic_resample(weights: np.ndarray, u: float) -> np.ndarray:
    """Ancestor indices from one uniform ``u`` and normalized ``weights``."""
    size = weights.size
    positions = (u + np.arange(size)) / size
    return np.minimum(np.searchsorted(np.cumsum(weights), positions), size - 1)


@dataclass(frozen=True, slots=True)
class ParticleSet:
    """One E-step: legal event sets as rows, with their log weights and ``log q``."""

    times: np.ndarray
    log_w: np.ndarray
    log_q: np.ndarray
    resamples: int = 0


def propose_particles(
    params: HawkesParams,
    counts: BinnedCounts,
    size: int,
    rng: np.random.Generator,
    mode: ProposalMode = ProposalMode.SEQUENTIAL,
    resample_threshold: float = DEFAULT_RESAMPLE_THRESHOLD,
) -> ParticleSet:
    """Walk ``size`` particles through the bins and return their full paths.

    Every occupied bin consumes the same number of uniforms whatever the
    parameters, so equal streams give comparable draws across E-steps.
    """
    mode = ProposalMode(mode)
    if mode is ProposalMode.JOINT_MODE and size != 1:
        raise InvalidParameterError("Joint-mode proposals are deterministic; use size 1")
    swarm = _swarm(params, np.empty(0), size)
    spec = counts.spec
    occupied = np.flatnonzero(counts.array)
    last_occupied = int(occupied[-1]) if occupied.size else -1
    swarm.move(spec.start)
    log_w = np.zeros(size)
    log_q = np.zeros(size)
    blocks: list[np.ndarray] = []
    parents: list[np.ndarray | None] = []
    resamples = 0
    for index, (lower, upper, count) in enumerate(
        zip(spec.lower, spec.upper, counts.counts)
    ):
        lower, upper = float(lower), float(upper)
        if count:
            times, bin_log_q, bin_log_p = _draw_events(swarm, lower, upper, count, rng, mode)
        else:
            bin_log_q = bin_log_p = np.zeros(size)
        bin_log_p = bin_log_p - swarm.mass(upper)
        swarm.move(upper)
        if mode is ProposalMode.JOINT_MODE:
            bin_log_q = np.zeros(size)
        log_w += bin_log_p - bin_log_q
        log_q += bin_log_q
        if not count:
            continue
        blocks.append(times)
        parent = None
        u = float(rng.random())
        if resample_threshold > 0 and size > 1 and index < last_occupied:
            weights = np.exp(log_w - logsumexp(log_w))
            if effective_sample_size(weights) < resample_threshold * size:
                parent = systematic_resample(weights, u)
                swarm.take(parent)
                log_q = log_q[parent]
                log_w = np.zeros(size)
                resamples += 1
        parents.append(parent)
    lineage = np.arange(size)
    columns: list[np.ndarray] = []
    for times, parent in zip(reversed(blocks), reversed(parents)):
        if parent is not None:
            lineage = parent[lineage]
        columns.append(times[lineage])
    paths = np.hstack(columns[::-1]) if columns else np.empty((size, 0))
    return ParticleSet(paths, log_w, log_q, resamples)


def _legal(events: EventSequence, counts: BinnedCounts) -> EventSequence:
    assert aggregate(events, counts.spec).counts == counts.counts
    return events


def propose_legal(
    params: HawkesParams,
    counts: BinnedCounts,
    rng: np.random.Generator,
    mode: ProposalMode = ProposalMode.SEQUENTIAL,
) -> WeightedSample:
    """One latent event set whose bin counts equal ``counts``.

    ``log_w`` is the continuous log-likelihood minus the proposal log-density.
    Joint-mode proposals are deterministic and get ``log_w = 0``.
    """
    mode = ProposalMode(mode)
    particles = propose_particles(params, counts, 1, rng, mode, 0.0)
    events = _legal(
        EventSequence(tuple(particles.times[0]), counts.window_end), counts
    )
    if mode is ProposalMode.JOINT_MODE:
        return WeightedSample(events, 0.0, math.nan)
    log_q = float(particles.log_q[0])
    log_p = loglik_continuous(params, events).value
    return WeightedSample(events, log_p - log_q, log_q)


def normalized_weights(samples: Sequence[WeightedSample]) -> np.ndarray:
    """Self-normalized importance weights by max-shifted log-sum-exp."""
    if not samples:
        raise InvalidParameterError("Importance weights need at least one sample")
    log_w = np.array([sample.log_w for sample in samples])
    return np.exp(log_w - logsumexp(log_w))


def effective_sample_size(weights: np.ndarray) -> float:
    """``(sum w)^2 / sum w^2``, between 1 and the number of samples."""
    weights = np.asarray(weights, dtype=float)
    return float(weights.sum() ** 2 / np.sum(weights**2))


def _complete_logliks(
    params: HawkesParams,
    samples: Sequence[WeightedSample],
) -> np.ndarray:
    sizes = {len(sample.times) for sample in samples}
    if isinstance(params.kernel, ExponentialKernel) and len(sizes) == 1:
        matrix = np.vstack([sample.times.array for sample in samples])
        return loglik_exponential_batch(params, matrix, samples[0].times.window_end)
    return np.array([loglik_continuous(params, sample.times).value for sample in samples])


def _q_value(
    params: HawkesParams,
    samples: Sequence[WeightedSample],
    weights: np.ndarray,
) -> float:
    used = weights > 0
    values = _complete_logliks(params, samples)
    if np.any(~np.isfinite(values[used])):
        return -math.inf
    return float(np.dot(weights[used], values[used]))


def weighted_q(params: HawkesParams, samples: Sequence[WeightedSample]) -> float:
    """Weighted mean of the complete-data log-likelihoods (flat prior)."""
    weights = normalized_weights(samples)
    if len(samples) > 1 and effective_sample_size(weights) < DEGENERATE_ESS:
        raise DegenerateWeights(
            f"All importance weight sits on one of {len(samples)} samples"
        )
    return _q_value(params, samples, weights)


def initial_params(family: KernelFamily, rng: np.random.Generator) -> HawkesParams:
    """Sorted ``Unif(1, 3)`` draws, so the kernel starts stationary."""
    family = KernelFamily(family)
    while True:
        if family is KernelFamily.EXPONENTIAL:
            nu, alpha, beta = np.sort(rng.uniform(INIT_LOW, INIT_HIGH, 3))
            params = HawkesParams(float(nu), ExponentialKernel(float(alpha), float(beta)))
        elif family is KernelFamily.POWERLAW:
            nu, alpha, beta, c = np.sort(rng.uniform(INIT_LOW, INIT_HIGH, 4))
            params = HawkesParams(
                float(nu), PowerLawKernel(float(alpha), float(beta), float(c))
            )
        else:
            nu, b = np.sort(rng.uniform(INIT_LOW, INIT_HIGH, 2))
            params = HawkesParams(float(nu), RectangularKernel(0.5, 0.0, float(b)))
        if branching_ratio(params.kernel) < 1:
            return params


def _anchored(counts: BinnedCounts) -> BinnedCounts:
    """Counts shifted so the first bin starts at time zero."""
    offset = counts.spec.start
    if offset == 0:
        return counts
    shifted = BinSpec(tuple(edge - offset for edge in counts.spec.edges))
    return BinnedCounts(shifted, counts.counts)


def _e_step(
    params: HawkesParams,
    counts: BinnedCounts,
    cfg: McemConfig,
) -> tuple[list[WeightedSample], int]:
    # Every E-step replays the same stream against the current iterate.
    rng = rng_stream(cfg.seed, 1)
    mode = cfg.proposal_mode
    if mode is ProposalMode.JOINT_MODE:
        return [propose_legal(params, counts, rng, mode)] * cfg.m, 0
    particles = propose_particles(
        params, counts, cfg.m, rng, mode, cfg.resample_threshold
    )
    window_end = counts.window_end
    samples = [
        WeightedSample(
            _legal(EventSequence(tuple(row), window_end), counts), float(log_w), float(log_q)
        )
        for row, log_w, log_q in zip(particles.times, particles.log_w, particles.log_q)
    ]
    return samples, particles.resamples


def mcem_fit(
    counts: BinnedCounts,
    cfg: McemConfig,
    *,
    on_iteration: IterationCallback | None = None,
) -> tuple[HawkesParams, McemTrace]:
    """Iterate E- and M-steps until ``||theta_next - theta|| <= epsilon``.

    Five consecutive E-steps whose weight sits on one sample abort with
    ``DegenerateWeights``; an ESS under ``LOW_ESS_FRACTION * m`` is counted
    in the trace.
    """
    if counts.is_all_zero:
        raise AllZeroCounts("Every bin is empty; the background rate is not identified")
    counts = _anchored(counts)
    family = cfg.start.family if cfg.start is not None else cfg.kernel_family
    theta = cfg.start or initial_params(family, rng_stream(cfg.seed, 0))
    iterates = [theta]
    q_values: list[float] = []
    ess_values: list[float] = []
    resample_counts: list[int] = []
    degenerate = 0
    low = 0
    streak = 0
    converged = False
    for iteration in range(1, cfg.max_em_iters + 1):
        samples, resamples = _e_step(theta, counts, cfg)
        weights = normalized_weights(samples)
        ess = min(max(effective_sample_size(weights), 1.0), float(cfg.m))
        ess_values.append(ess)
        resample_counts.append(resamples)
        if ess < LOW_ESS_FRACTION * cfg.m:
            low += 1
        if cfg.m > 1 and ess < DEGENERATE_ESS:
            degenerate += 1
            streak += 1
            if streak >= DEGENERATE_PATIENCE:
                raise DegenerateWeights(
                    f"Importance weights collapsed onto one sample for {streak} "
                    f"consecutive iterations (last iterate {theta.values})"
                )
        else:
            streak = 0

        def objective(candidate: HawkesParams) -> float:
            return _q_value(candidate, samples, weights)

        result = maximize(
            OptProblem(
                objective,
                family,
                theta,
                cfg.m_step_tolerance,
                cfg.m_step_max_iters,
            )
        )
        change = float(np.linalg.norm(result.params.vector() - theta.vector()))
        theta = result.params
        iterates.append(theta)
        q_values.append(result.objective_value)
        if on_iteration is not None:
            on_iteration(iteration, theta, result.objective_value, ess)
        if change <= cfg.epsilon:
            converged = True
            break
    trace = McemTrace(
        tuple(iterates),
        tuple(q_values),
        tuple(ess_values),
        converged,
        degenerate,
        tuple(resample_counts),
        low,
    )
    return theta, trace


def _ess_note(trace: McemTrace, m: int) -> str:
    if not trace.low_ess_iterations:
        return ""
    return (
        f"ESS below {LOW_ESS_FRACTION:.0%} of m={m} in "
        f"{trace.low_ess_iterations} of {trace.iterations} EM iterations"
    )


@dataclass(slots=True)
class McemEstimator:
    config: McemConfig = field(default_factory=McemConfig)
    last_trace: McemTrace | None = None

    def fit(self, counts: BinnedCounts, *, seed: int = 0) -> MethodOutcome:
        self.last_trace = None
        try:
            params, trace = mcem_fit(counts, replace(self.config, seed=seed))
        except HawkesAggError as exc:
            return MethodOutcome(
                RunStatus.FAILED, message=f"{type(exc).__name__}: {exc}"
            )
        self.last_trace = trace
        note = _ess_note(trace, self.config.m)
        if not trace.converged:
            message = f"No convergence after {trace.iterations} EM iterations"
            return MethodOutcome(
                RunStatus.NONCONVERGED,
                params,
                f"{message}; {note}" if note else message,
            )
        if at_boundary(params):
            message = "Estimate sits on the edge of the feasible region"
            return MethodOutcome(
                RunStatus.BOUNDARY,
                params,
                f"{message}; {note}" if note else message,
            )
        return MethodOutcome(RunStatus.OK, params, note)
