"""Typed boundaries for estimators and filesystem side effects."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path
from typing import TYPE_CHECKING, Protocol, runtime_checkable

from .models import BinnedCounts, EventSequence, MethodOutcome

if TYPE_CHECKING:
    from .experiment import RunRecord
    from .summary import Summary


@runtime_checkable
class CountEstimator(Protocol):
    def fit(self, counts: BinnedCounts, *, seed: int = 0) -> MethodOutcome: ...


@runtime_checkable
class EventEstimator(Protocol):
    def fit(self, events: EventSequence, *, seed: int = 0) -> MethodOutcome: ...


@runtime_checkable
class RecordStore(Protocol):
    def write_records(
        self,
        records: Sequence[RunRecord],
        output_dir: Path,
    ) -> tuple[Path, ...]: ...

    def read_records(self, path: Path) -> tuple[RunRecord, ...]: ...

    def write_summary(self, summary: Summary, output_dir: Path) -> tuple[Path, ...]: ...


@runtime_checkable
class PlotRenderer(Protocol):
    def render(self, summary: Summary, output_dir: Path) -> tuple[Path, ...]: ...


@runtime_checkable
class SequenceStore(Protocol):
    def read_events(self, path: Path) -> EventSequence: ...

    def write_events(self, events: EventSequence, path: Path) -> Path: ...

    def read_counts(self, path: Path, *, delta: float | None = None) -> BinnedCounts: ...

    def write_counts(self, counts: BinnedCounts, path: Path) -> Path: ...
