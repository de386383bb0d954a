"""Excitation kernels: pointwise values, cumulative mass and branching ratios."""

from __future__ import annotations

from collections.abc import Mapping
from typing import Any

import numpy as np

from .errors import InvalidParameterError
from .models import (
    ExponentialKernel,
    HawkesParams,
    Kernel,
    KernelFamily,
    PowerLawKernel,
    RectangularKernel,
    build_kernel,
)


def _scalar_or_array(result: np.ndarray, original: Any) -> float | np.ndarray:
    if np.ndim(original) == 0:
        return float(result)
    return result


def kernel_eval(kernel: Kernel, u: float | np.ndarray) -> float | np.ndarray:
    """``g(u)``; zero for ``u <= 0`` and outside the rectangular lag window."""
    elapsed = np.asarray(u, dtype=float)
    match kernel:
        case ExponentialKernel(alpha=alpha, beta=beta):
            positive = elapsed > 0
            safe = np.where(positive, elapsed, 0.0)
            values = np.where(positive, alpha * np.exp(-beta * safe), 0.0)
        case PowerLawKernel(alpha=alpha, beta=beta, c=c):
            positive = elapsed > 0
            safe = np.where(positive, elapsed, 0.0)
            values = np.where(
                positive,
                alpha * beta * (1.0 + beta * safe) ** -(1.0 + c),
                0.0,
            )
        case RectangularKernel(a=a, b=b):
            inside = (elapsed >= a) & (elapsed <= b)
            values = np.where(inside, kernel.height, 0.0)
        case _:
            raise InvalidParameterError(f"Unsupported kernel: {kernel!r}")
    return _scalar_or_array(values, u)


def kernel_right_limit(kernel: Kernel, u: float | np.ndarray) -> float | np.ndarray:
    """``g(u+)``: equal to ``kernel_eval`` except at the origin of decaying kernels."""
    elapsed = np.asarray(u, dtype=float)
    match kernel:
        case ExponentialKernel(alpha=alpha):
            values = np.where(elapsed == 0, alpha, kernel_eval(kernel, elapsed))
        case PowerLawKernel(alpha=alpha, beta=beta):
            values = np.where(elapsed == 0, alpha * beta, kernel_eval(kernel, elapsed))
        case _:
            values = np.asarray(kernel_eval(kernel, elapsed))
    return _scalar_or_array(values, u)


def kernel_integral(kernel: Kernel, u: float | np.ndarray) -> float | np.ndarray:
    """Cumulative mass ``G(u) = integral of g over [0, u]``; zero for ``u <= 0``."""
    elapsed = np.asarray(u, dtype=float)
    safe = np.where(elapsed > 0, elapsed, 0.0)
    match kernel:
        case ExponentialKernel(alpha=alpha, beta=beta):
            values = (alpha / beta) * -np.expm1(-beta * safe)
        case PowerLawKernel(alpha=alpha, beta=beta, c=c):
            values = (alpha / c) * -np.expm1(-c * np.log1p(beta * safe))
        case RectangularKernel(n=n, a=a, b=b):
            values = n * np.clip((safe - a) / (b - a), 0.0, 1.0)
        case _:
            raise InvalidParameterError(f"Unsupported kernel: {kernel!r}")
    return _scalar_or_array(values, u)


def branching_ratio(kernel: Kernel) -> float:
    match kernel:
        case ExponentialKernel(alpha=alpha, beta=beta):
            return alpha / beta
        case PowerLawKernel(alpha=alpha, c=c):
            return alpha / c
        case RectangularKernel(n=n):
            return float(n)
    raise InvalidParameterError(f"Unsupported kernel: {kernel!r}")


def is_stationary(kernel: Kernel) -> bool:
    return branching_ratio(kernel) < 1.0


def require_stationary(params: HawkesParams) -> None:
    ratio = branching_ratio(params.kernel)
    if not ratio < 1.0:
        raise InvalidParameterError(
            f"Branching ratio {ratio:.6g} is not below 1; the process is not stationary"
        )


def kernel_scale(kernel: Kernel) -> float:
    """A characteristic decay time used for horizons and lookahead windows."""
    match kernel:
        case ExponentialKernel(beta=beta) | PowerLawKernel(beta=beta):
            return 1.0 / beta
        case RectangularKernel(b=b):
            return float(b)
    raise InvalidParameterError(f"Unsupported kernel: {kernel!r}")


def kernel_to_dict(kernel: Kernel) -> dict[str, Any]:
    return {"type": kernel.family.value, **dict(
        zip(kernel.family.parameter_names, kernel.values)
    )}


def kernel_from_dict(data: Mapping[str, Any]) -> Kernel:
    if not isinstance(data, Mapping):
        raise InvalidParameterError("Kernel must be a JSON object")
    try:
        family = KernelFamily(data.get("type"))
    except ValueError as exc:
        raise InvalidParameterError(
            f"Unknown kernel type {data.get('type')!r}; expected one of "
            + ", ".join(item.value for item in KernelFamily)
        ) from exc
    names = family.parameter_names
    unknown = sorted(set(data) - {"type", *names})
    if unknown:
        raise InvalidParameterError(
            f"Unknown {family.value} kernel fields: {', '.join(unknown)}"
        )
    missing = [name for name in names if name not in data]
    if missing:
        raise InvalidParameterError(
            f"Missing {family.value} kernel fields: {', '.join(missing)}"
        )
    return build_kernel(family, [data[name] for name in names])


def params_to_dict(params: HawkesParams) -> dict[str, Any]:
    return {"nu": float(params.nu), "kernel": kernel_to_dict(params.kernel)}


def params_from_dict(data: Mapping[str, Any]) -> HawkesParams:
    if not isinstance(data, Mapping):
        raise InvalidParameterError("Parameters must be a JSON object")
    unknown = sorted(set(data) - {"nu", "kernel"})
    if unknown:
        raise InvalidParameterError(f"Unknown parameter fields: {', '.join(unknown)}")
    if "nu" not in data or "kernel" not in data:
        raise InvalidParameterError("Parameters require 'nu' and 'kernel'")
    return HawkesParams(data["nu"], kernel_from_dict(data["kernel"]))
