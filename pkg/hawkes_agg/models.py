"""Immutable domain models shared by the estimators and the benchmark."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
import math
from numbers import Real

import numpy as np

from .errors import InvalidParameterError


class KernelFamily(str, Enum):
    EXPONENTIAL = "exponential"
    POWERLAW = "powerlaw"
    RECTANGULAR = "rectangular"

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return _KERNEL_PARAMETERS[self]


_KERNEL_PARAMETERS = {
    KernelFamily.EXPONENTIAL: ("alpha", "beta"),
    KernelFamily.POWERLAW: ("alpha", "beta", "c"),
    KernelFamily.RECTANGULAR: ("n", "a", "b"),
}


class ProposalMode(str, Enum):
    SEQUENTIAL = "sequential-sample"
    JOINT_MODE = "joint-mode"
    UNIFORM = "uniform"


class Method(str, Enum):
    INAR = "inar"
    BINNED = "binned"
    MCEM = "mcem"
    CONTINUOUS_ORACLE = "continuous-oracle"


class RunStatus(str, Enum):
    OK = "ok"
    SINGULAR = "singular"
    NONCONVERGED = "nonconverged"
    BOUNDARY = "boundary"
    FAILED = "failed"

    @property
    def has_estimate(self) -> bool:
        return self not in (RunStatus.SINGULAR, RunStatus.FAILED)


def _require_finite(name: str, value: float) -> None:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise InvalidParameterError(f"{name} must be a real number, got {value!r}")
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")


def _require_positive(name: str, value: float) -> None:
    _require_finite(name, value)
    if value <= 0:
        raise InvalidParameterError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True, slots=True)
class ExponentialKernel:
    """``g(u) = alpha * exp(-beta * u)`` for ``u > 0``."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        _require_positive("Exponential alpha", self.alpha)
        _require_positive("Exponential beta", self.beta)

    @property
    def family(self) -> KernelFamily:
        return KernelFamily.EXPONENTIAL

    @property
    def values(self) -> tuple[float, ...]:
        return (float(self.alpha), float(self.beta))


@dataclass(frozen=True, slots=True)
class PowerLawKernel:
    """``g(u) = alpha * beta * (1 + beta * u) ** -(1 + c)`` for ``u > 0``."""

    alpha: float
    beta: float
    c: float

    def __post_init__(self) -> None:
        _require_positive("Power-law alpha", self.alpha)
        _require_positive("Power-law beta", self.beta)
        _require_positive("Power-law c", self.c)

    @property
    def family(self) -> KernelFamily:
        return KernelFamily.POWERLAW

    @property
    def values(self) -> tuple[float, ...]:
        return (float(self.alpha), float(self.beta), float(self.c))


@dataclass(frozen=True, slots=True)
class RectangularKernel:
    """``g(u) = n / (b - a)`` on the closed lag window ``[a, b]``.

    ``a`` and ``b`` are the onset and offset lags that the rectangular-kernel
    formula writes as alpha and beta.
    """

    n: float
    a: float
    b: float

    def __post_init__(self) -> None:
        _require_positive("Rectangular n", self.n)
        _require_finite("Rectangular a", self.a)
        _require_finite("Rectangular b", self.b)
        if self.a < 0:
            raise InvalidParameterError("Rectangular onset lag a cannot be negative")
        if self.b <= self.a:
            raise InvalidParameterError(
                "Rectangular offset lag b must exceed onset lag a"
            )

    @property
    def family(self) -> KernelFamily:
        return KernelFamily.RECTANGULAR

    @property
    def values(self) -> tuple[float, ...]:
        return (float(self.n), float(self.a), float(self.b))

    @property
    def height(self) -> float:
        return self.n / (self.b - self.a)


Kernel = ExponentialKernel | PowerLawKernel | RectangularKernel


def build_kernel(family: KernelFamily, values: Sequence[float]) -> Kernel:
    family = KernelFamily(family)
    expected = len(family.parameter_names)
    if len(values) != expected:
        raise InvalidParameterError(
            f"{family.value} kernel requires {expected} values, got {len(values)}"
        )
    numbers = tuple(float(value) for value in values)
    if family is KernelFamily.EXPONENTIAL:
        return ExponentialKernel(*numbers)
    if family is KernelFamily.POWERLAW:
        return PowerLawKernel(*numbers)
    return RectangularKernel(*numbers)


@dataclass(frozen=True, slots=True)
class HawkesParams:
    """Background rate plus excitation kernel.

    Stationarity is not enforced here so that unconstrained estimates can be
    reported; estimators check it where they require it.
    """

    nu: float
    kernel: Kernel

    def __post_init__(self) -> None:
        _require_positive("Background rate nu", self.nu)
        if not isinstance(
            self.kernel, (ExponentialKernel, PowerLawKernel, RectangularKernel)
        ):
            raise InvalidParameterError(f"Unsupported kernel: {self.kernel!r}")

    @property
    def family(self) -> KernelFamily:
        return self.kernel.family

    @property
    def names(self) -> tuple[str, ...]:
        return ("nu", *self.family.parameter_names)

    @property
    def values(self) -> tuple[float, ...]:
        return (float(self.nu), *self.kernel.values)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def vector(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    @classmethod
    def from_values(
        cls,
        family: KernelFamily,
        values: Sequence[float],
    ) -> HawkesParams:
        if len(values) == 0:
            raise InvalidParameterError("Parameter values cannot be empty")
        return cls(float(values[0]), build_kernel(family, values[1:]))

    @classmethod
    def exponential(cls, nu: float, alpha: float, beta: float) -> HawkesParams:
        return cls(nu, ExponentialKernel(alpha, beta))


@dataclass(frozen=True, slots=True)
class EventSequence:
    """Strictly increasing event times on the observation window ``(0, T]``."""

    times: tuple[float, ...]
    window_end: float

    def __post_init__(self) -> None:
        times = tuple(float(time) for time in self.times)
        object.__setattr__(self, "times", times)
        _require_positive("Observation window end", self.window_end)
        if not times:
            return
        array = np.asarray(times)
        if not np.all(np.isfinite(array)):
            raise InvalidParameterError("Event times must be finite")
        if array[0] <= 0:
            raise InvalidParameterError("Event times must be strictly positive")
        if array[-1] > self.window_end:
            raise InvalidParameterError(
                "Event times cannot exceed the observation window end"
            )
        if array.size > 1 and np.any(np.diff(array) <= 0):
            raise InvalidParameterError("Event times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    def before(self, time: float) -> EventSequence:
        """Events strictly earlier than ``time`` on the same window."""
        cut = int(np.searchsorted(self.array, time, side="left"))
        return EventSequence(self.times[:cut], self.window_end)

    @classmethod
    def empty(cls, window_end: float) -> EventSequence:
        return cls((), window_end)


@dataclass(frozen=True, slots=True)
class BinSpec:
    """Ordered bin boundaries; bin ``j`` covers ``[edges[j], edges[j + 1])``."""

    edges: tuple[float, ...]

    def __post_init__(self) -> None:
        edges = tuple(float(edge) for edge in self.edges)
        object.__setattr__(self, "edges", edges)
        if len(edges) < 2:
            raise InvalidParameterError("A bin specification needs at least one bin")
        array = np.asarray(edges)
        if not np.all(np.isfinite(array)):
            raise InvalidParameterError("Bin edges must be finite")
        if np.any(np.diff(array) <= 0):
            raise InvalidParameterError(
                "Bin edges must be strictly increasing (zero-width bins are invalid)"
            )

    @property
    def n_bins(self) -> int:
        return len(self.edges) - 1

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.edges, dtype=float)

    @property
    def lower(self) -> np.ndarray:
        return self.array[:-1]

    @property
    def upper(self) -> np.ndarray:
        return self.array[1:]

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.array)

    @property
    def start(self) -> float:
        return self.edges[0]

    @property
    def end(self) -> float:
        return self.edges[-1]

    @property
    def uniform_width(self) -> float | None:
        """The common bin width, or ``None`` when widths vary."""
        widths = self.widths
        if np.allclose(widths, widths[0], rtol=1e-9, atol=0.0):
            return float(widths[0])
        return None

    @classmethod
    def uniform(cls, width: float, n_bins: int, start: float = 0.0) -> BinSpec:
        _require_positive("Bin width", width)
        if n_bins < 1:
            raise InvalidParameterError("A bin specification needs at least one bin")
        return cls(tuple(start + width * index for index in range(n_bins + 1)))

    @classmethod
    def covering(cls, horizon: float, width: float) -> BinSpec:
        """``floor(horizon / width)`` equal bins starting at zero."""
        _require_positive("Horizon", horizon)
        _require_positive("Bin width", width)
        n_bins = int(math.floor(horizon / width + 1e-9))
        if n_bins < 1:
            raise InvalidParameterError(
                f"Horizon {horizon} is shorter than the bin width {width}"
            )
        return cls.uniform(width, n_bins)


@dataclass(frozen=True, slots=True)
class BinnedCounts:
    spec: BinSpec
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        counts = tuple(self.counts)
        if len(counts) != self.spec.n_bins:
            raise InvalidParameterError(
                f"Expected {self.spec.n_bins} counts, got {len(counts)}"
            )
        for count in counts:
            if isinstance(count, bool) or int(count) != count:
                raise InvalidParameterError(f"Bin counts must be integers: {count!r}")
            if count < 0:
                raise InvalidParameterError("Bin counts cannot be negative")
        object.__setattr__(self, "counts", tuple(int(count) for count in counts))

    def __len__(self) -> int:
        return len(self.counts)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float)

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def is_all_zero(self) -> bool:
        return self.total == 0

    @property
    def window_end(self) -> float:
        return self.spec.end


@dataclass(frozen=True, slots=True)
class MethodOutcome:
    """What one estimator produced for one count sequence."""

    status: RunStatus
    params: HawkesParams | None = None
    message: str = ""

    def __post_init__(self) -> None:
        if self.status.has_estimate and self.params is None:
            raise ValueError(f"A {self.status.value} outcome requires parameters")
        if not self.status.has_estimate and self.params is not None:
            raise ValueError(f"A {self.status.value} outcome cannot carry parameters")
        if not self.status.has_estimate and not self.message.strip():
            raise ValueError("A failed outcome requires a message")
