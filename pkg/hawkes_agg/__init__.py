"""Hawkes process estimation from aggregated bin counts."""

from .binned_mle import binned_mle, continuous_mle
from .inar import cls_estimate, fit_exponential
from .mcem import mcem_fit, propose_legal, weighted_q
from .models import (
    BinnedCounts,
    BinSpec,
    EventSequence,
    ExponentialKernel,
    HawkesParams,
    KernelFamily,
    Method,
    MethodOutcome,
    PowerLawKernel,
    ProposalMode,
    RectangularKernel,
    RunStatus,
)
from .process import aggregate
from .simulate import SimConfig, simulate

__all__ = [
    "BinnedCounts",
    "BinSpec",
    "EventSequence",
    "ExponentialKernel",
    "HawkesParams",
    "KernelFamily",
    "Method",
    "MethodOutcome",
    "PowerLawKernel",
    "ProposalMode",
    "RectangularKernel",
    "RunStatus",
    "SimConfig",
    "aggregate",
    "binned_mle",
    "cls_estimate",
    "continuous_mle",
    "fit_exponential",
    "mcem_fit",
    "propose_legal",
    "simulate",
    "weighted_q",
]
