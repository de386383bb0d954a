"""Experiment configuration: JSON loading, validation and built-in presets."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
import json
from pathlib import Path
from typing import Any

from .binned_mle import BinnedConfig
from .errors import ConfigError, HawkesAggError
from .inar import InarConfig, LagPlacement
from .kernels import branching_ratio, params_from_dict, params_to_dict
from .mcem import McemConfig
from .models import HawkesParams, Method, ProposalMode


DEFAULT_HORIZON = 1000.0
DEFAULT_REPLICATES = 20
DEFAULT_METHODS = (Method.INAR, Method.BINNED, Method.MCEM)
DEFAULT_OUTPUT_DIR = Path("results")
DEFAULT_FAILURE_THRESHOLD = 0.5
SWEEP_DELTAS = (0.1, 0.25, 0.5, 1.0, 1.25, 2.0)

_TOP_LEVEL_KEYS = {
    "truth",
    "horizon",
    "deltas",
    "replicates",
    "methods",
    "seed",
    "mcem",
    "inar",
    "binned",
    "output_dir",
    "workers",
    "failure_threshold",
}
_MCEM_KEYS = {"m", "epsilon", "max_em_iters", "proposal_mode", "resample_threshold"}
_INAR_KEYS = {"support", "lag_placement"}
_BINNED_KEYS = {"starts"}


@dataclass(frozen=True, slots=True)
class ExperimentConfig:
    truth: HawkesParams
    horizon: float = DEFAULT_HORIZON
    deltas: tuple[float, ...] = (1.0,)
    replicates: int = DEFAULT_REPLICATES
    methods: tuple[Method, ...] = DEFAULT_METHODS
    seed: int = 0
    mcem: McemConfig = field(default_factory=McemConfig)
    inar: InarConfig = field(default_factory=InarConfig)
    binned: BinnedConfig = field(default_factory=BinnedConfig)
    output_dir: Path = DEFAULT_OUTPUT_DIR
    workers: int = 1
    failure_threshold: float = DEFAULT_FAILURE_THRESHOLD

    def __post_init__(self) -> None:
        deltas = tuple(float(delta) for delta in self.deltas)
        methods = tuple(Method(method) for method in self.methods)
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if not branching_ratio(self.truth.kernel) < 1:
            raise ConfigError("Ground truth must be stationary (branching ratio < 1)")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if not deltas:
            raise ConfigError("deltas cannot be empty")
        if any(not delta > 0 for delta in deltas):
            raise ConfigError("Every bin width in deltas must be positive")
        if len(set(deltas)) != len(deltas):
            raise ConfigError("deltas cannot repeat a bin width")
        if not self.horizon > max(deltas):
            raise ConfigError("horizon must exceed the largest bin width")
        if not methods:
            raise ConfigError("methods cannot be empty")
        if len(set(methods)) != len(methods):
            raise ConfigError("methods cannot repeat an estimator")
        if self.seed < 0:
            raise ConfigError("seed cannot be negative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not 0 <= self.failure_threshold <= 1:
            raise ConfigError("failure_threshold must lie in [0, 1]")
        family = self.truth.family
        object.__setattr__(self, "mcem", replace(self.mcem, kernel_family=family))
        object.__setattr__(self, "binned", replace(self.binned, kernel_family=family))

    @property
    def ordered_methods(self) -> tuple[Method, ...]:
        """Configured methods in the fixed order used for seeds and records."""
        return tuple(method for method in Method if method in self.methods)


def _section(data: Mapping[str, Any], key: str, allowed: set[str]) -> dict[str, Any]:
    section = data.get(key) or {}
    if not isinstance(section, Mapping):
        raise ConfigError(f"{key!r} must be a JSON object")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"Unknown {key!r} keys: {', '.join(unknown)}")
    return dict(section)


def _number_list(value: Any, key: str) -> tuple[float, ...]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (float(value),)
    if not isinstance(value, Sequence) or isinstance(value, str):
        raise ConfigError(f"{key!r} must be a number or a list of numbers")
    return tuple(float(item) for item in value)


def config_from_dict(
    data: Mapping[str, Any],
    *,
    base_dir: Path | None = None,
) -> ExperimentConfig:
    """Build a validated configuration; relative ``output_dir`` resolves from ``base_dir``."""
    if not isinstance(data, Mapping):
        raise ConfigError("Experiment configuration must be a JSON object")
    unknown = sorted(set(data) - _TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")
    if "truth" not in data:
        raise ConfigError("Configuration requires 'truth'")
    mcem = _section(data, "mcem", _MCEM_KEYS)
    inar = _section(data, "inar", _INAR_KEYS)
    binned = _section(data, "binned", _BINNED_KEYS)
    try:
        truth = params_from_dict(data["truth"])
        output_dir = Path(data.get("output_dir", DEFAULT_OUTPUT_DIR))
        if base_dir is not None and not output_dir.is_absolute():
            output_dir = base_dir / output_dir
        if "proposal_mode" in mcem:
            mcem["proposal_mode"] = ProposalMode(mcem["proposal_mode"])
        if "lag_placement" in inar:
            inar["lag_placement"] = LagPlacement(inar["lag_placement"])
        return ExperimentConfig(
            truth=truth,
            horizon=float(data.get("horizon", DEFAULT_HORIZON)),
            deltas=_number_list(data.get("deltas", (1.0,)), "deltas"),
            replicates=int(data.get("replicates", DEFAULT_REPLICATES)),
            methods=tuple(Method(item) for item in data.get("methods", DEFAULT_METHODS)),
            seed=int(data.get("seed", 0)),
            mcem=McemConfig(**mcem),
            inar=InarConfig(**inar),
            binned=BinnedConfig(**binned),
            output_dir=output_dir,
            workers=int(data.get("workers", 1)),
            failure_threshold=float(
                data.get("failure_threshold", DEFAULT_FAILURE_THRESHOLD)
            ),
        )
    except ConfigError:
        raise
    except (HawkesAggError, ValueError, TypeError) as exc:
        raise ConfigError(f"Invalid configuration: {exc}") from exc


def load_experiment_config(path: Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Cannot read configuration {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Configuration {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data, base_dir=path.parent)


def config_to_dict(cfg: ExperimentConfig) -> dict[str, Any]:
    return {
        "truth": params_to_dict(cfg.truth),
        "horizon": cfg.horizon,
        "deltas": list(cfg.deltas),
        "replicates": cfg.replicates,
        "methods": [method.value for method in cfg.methods],
        "seed": cfg.seed,
        "mcem": {
            "m": cfg.mcem.m,
            "epsilon": cfg.mcem.epsilon,
            "max_em_iters": cfg.mcem.max_em_iters,
            "proposal_mode": cfg.mcem.proposal_mode.value,
            "resample_threshold": cfg.mcem.resample_threshold,
        },
        "inar": {
            "support": cfg.inar.support,
            "lag_placement": cfg.inar.lag_placement.value,
        },
        "binned": {"starts": cfg.binned.starts},
        "output_dir": str(cfg.output_dir),
        "workers": cfg.workers,
        "failure_threshold": cfg.failure_threshold,
    }


_PRESET_TRUTHS = {
    "fig1": (0.5, 0.9, 2.0),
    "fig2": (0.2, 0.4, 0.9),
    "fig3": (0.1, 0.6, 1.2),
    "fig4": (0.5, 0.4, 0.9),
    "fig5": (0.1, 0.7, 1.2),
    "fig6": (0.3, 0.8, 1.1),
}

PRESETS = (*_PRESET_TRUTHS, "fig9")


def preset_config(name: str, **overrides: Any) -> ExperimentConfig:
    """Built-in study: ``fig1`` to ``fig6`` at one bin width, ``fig9`` sweeps widths."""
    if name == "fig9":
        truth, deltas = HawkesParams.exponential(0.1, 0.7, 1.2), SWEEP_DELTAS
    elif name in _PRESET_TRUTHS:
        truth, deltas = HawkesParams.exponential(*_PRESET_TRUTHS[name]), (1.0,)
    else:
        raise ConfigError(
            f"Unknown preset {name!r}; expected one of {', '.join(PRESETS)}"
        )
    settings: dict[str, Any] = {
        "truth": truth,
        "deltas": deltas,
        "output_dir": DEFAULT_OUTPUT_DIR / name,
    }
    settings.update(overrides)
    return ExperimentConfig(**settings)
