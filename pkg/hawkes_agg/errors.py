"""Project-specific errors that callers can present without a traceback."""


class HawkesAggError(Exception):
    """Base class for expected estimation and benchmark errors."""


class InvalidParameterError(HawkesAggError, ValueError):
    """A parameter set or configuration value violates its constraints."""


class EventOutsideBins(HawkesAggError):
    """An event time falls outside the half-open range covered by the bins."""


class SequenceFormatError(HawkesAggError):
    """An event or count file cannot be decoded into a valid value."""


class ExplosionGuard(HawkesAggError):
    """A simulation generated more events than its configured cap."""


class NonFiniteLogLik(HawkesAggError):
    """A log-likelihood evaluation overflowed or met a zero intensity."""


class NonConvergence(HawkesAggError):
    """An optimizer stopped at its iteration limit before converging."""


class ObjectiveNonFinite(HawkesAggError):
    """An objective is not finite at the optimizer's starting point."""


class TooFewBins(HawkesAggError):
    """The count sequence is too short for the requested lag."""


class SingularDesign(HawkesAggError):
    """The INAR normal matrix is singular or too badly conditioned."""


class FitFailure(HawkesAggError):
    """A kernel curve fit could not produce usable parameters."""


class AllZeroCounts(HawkesAggError):
    """No bin contains an event, so the background rate is not identified."""


class RootFindFailure(HawkesAggError):
    """Inverting a truncated conditional CDF failed to bracket a root."""


class DegenerateWeights(HawkesAggError):
    """Importance weights concentrated on a single sample for too long."""


class ConfigError(HawkesAggError):
    """An experiment configuration file is missing, malformed or invalid."""


class SummaryError(HawkesAggError):
    """Benchmark records cannot be summarized."""


class PlotError(HawkesAggError):
    """Summary plots could not be rendered or written."""
