"""Exact Hawkes simulation on ``(0, T]`` by thinning with seedable streams."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import ExplosionGuard, InvalidParameterError
from .kernels import kernel_eval, kernel_right_limit, require_stationary
from .models import (
    EventSequence,
    ExponentialKernel,
    HawkesParams,
    PowerLawKernel,
    RectangularKernel,
)


DEFAULT_MAX_EVENTS = 10_000_000


def rng_stream(seed: int, *keys: int) -> np.random.Generator:
    """Deterministic generator addressed by ``seed`` and an index path.

    ``rng_stream(seed, r)`` is the stream of replicate ``r``; distinct paths
    give statistically independent streams.
    """
    if seed < 0:
        raise InvalidParameterError("Seeds must be non-negative integers")
    if any(key < 0 for key in keys):
        raise InvalidParameterError("Stream keys must be non-negative integers")
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(sequence))


def derive_seed(seed: int, *keys: int) -> int:
    """A 63-bit integer seed derived from ``seed`` and an index path."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True, slots=True)
class SimConfig:
    params: HawkesParams
    horizon: float
    seed: int
    max_events: int = DEFAULT_MAX_EVENTS

    def __post_init__(self) -> None:
        if not math.isfinite(self.horizon) or self.horizon <= 0:
            raise InvalidParameterError("Simulation horizon must be positive")
        if self.seed < 0:
            raise InvalidParameterError("Simulation seed cannot be negative")
        if self.max_events < 1:
            raise InvalidParameterError("Simulation event cap must be positive")
        require_stationary(self.params)


def simulate(cfg: SimConfig, rng: np.random.Generator | None = None) -> EventSequence:
    generator = rng if rng is not None else rng_stream(cfg.seed)
    if isinstance(cfg.params.kernel, ExponentialKernel):
        times = _thin_exponential(cfg, generator)
    else:
        times = _thin_generic(cfg, generator)
    return EventSequence(tuple(times), cfg.horizon)


def _guard(count: int, cfg: SimConfig) -> None:
    if count > cfg.max_events:
        raise ExplosionGuard(
            f"Simulation exceeded {cfg.max_events} events before T={cfg.horizon}"
        )


def _thin_exponential(cfg: SimConfig, rng: np.random.Generator) -> list[float]:
    nu = cfg.params.nu
    alpha = cfg.params.kernel.alpha
    beta = cfg.params.kernel.beta
    times: list[float] = []
    current = 0.0
    excitation = 0.0
    while True:
        bound = nu + excitation
        candidate = current + rng.exponential(1.0 / bound)
        if candidate > cfg.horizon:
            return times
        excitation *= math.exp(-beta * (candidate - current))
        current = candidate
        intensity = nu + excitation
        assert intensity <= bound * (1.0 + 1e-12)
        if rng.random() * bound <= intensity:
            if times and candidate <= times[-1]:
                continue
            times.append(candidate)
            excitation += alpha
            _guard(len(times), cfg)


def _dominating_rate(
    params: HawkesParams,
    times: list[float],
    current: float,
) -> float:
    kernel = params.kernel
    if not times:
        return params.nu
    history = np.asarray(times)
    if isinstance(kernel, RectangularKernel):
        active = np.count_nonzero(history >= current - kernel.b)
        return params.nu + kernel.height * active
    if isinstance(kernel, PowerLawKernel):
        return params.nu + float(np.sum(kernel_right_limit(kernel, current - history)))
    raise InvalidParameterError(f"Unsupported kernel: {kernel!r}")


def _intensity(params: HawkesParams, times: list[float], at: float) -> float:
    if not times:
        return params.nu
    history = np.asarray(times)
    return params.nu + float(np.sum(kernel_eval(params.kernel, at - history)))


def _thin_generic(cfg: SimConfig, rng: np.random.Generator) -> list[float]:
    params = cfg.params
    times: list[float] = []
    current = 0.0
    while True:
        bound = _dominating_rate(params, times, current)
        candidate = current + rng.exponential(1.0 / bound)
        if candidate > cfg.horizon:
            return times
        current = candidate
        intensity = _intensity(params, times, candidate)
        assert intensity <= bound * (1.0 + 1e-12)
        if rng.random() * bound <= intensity:
            if times and candidate <= times[-1]:
                continue
            times.append(candidate)
            _guard(len(times), cfg)
