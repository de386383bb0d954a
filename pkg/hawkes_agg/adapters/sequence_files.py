"""Event-time and bin-count files in CSV or JSON."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ..errors import HawkesAggError, SequenceFormatError
from ..models import BinnedCounts, BinSpec, EventSequence


WINDOW_PREFIX = "# window_end:"


def _suffix(path: Path) -> str:
    suffix = path.suffix.casefold()
    if suffix not in (".csv", ".json"):
        raise SequenceFormatError(f"Unsupported file type {path.suffix!r}: {path}")
    return suffix


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SequenceFormatError(f"Cannot read {path}: {exc}") from exc


def _read_frame(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, comment="#", float_precision="round_trip")
    except (OSError, ValueError, pd.errors.ParserError) as exc:
        raise SequenceFormatError(f"Cannot parse CSV {path}: {exc}") from exc


def _column(frame: pd.DataFrame, name: str, path: Path) -> np.ndarray:
    if name not in frame.columns:
        raise SequenceFormatError(f"{path} has no {name!r} column")
    values = pd.to_numeric(frame[name], errors="coerce").to_numpy(dtype=float)
    if np.any(np.isnan(values)):
        raise SequenceFormatError(f"{path} column {name!r} has non-numeric values")
    return values


def _write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise SequenceFormatError(f"Cannot write {path}: {exc}") from exc
    return path


class SequenceFiles:
    """Reads and writes the formats documented in README.md."""

    def read_events(self, path: Path) -> EventSequence:
        path = Path(path)
        try:
            if _suffix(path) == ".json":
                data = self._json(path)
                return EventSequence(tuple(data["times"]), float(data["window_end"]))
            first_line = _read_text(path).splitlines()[:1]
            if not first_line or not first_line[0].startswith(WINDOW_PREFIX):
                raise SequenceFormatError(
                    f"{path} must start with '{WINDOW_PREFIX} <T>'"
                )
            window_end = float(first_line[0][len(WINDOW_PREFIX):])
            times = _column(_read_frame(path), "time", path)
            return EventSequence(tuple(times), window_end)
        except SequenceFormatError:
            raise
        except (HawkesAggError, KeyError, TypeError, ValueError) as exc:
            raise SequenceFormatError(f"Invalid event file {path}: {exc}") from exc

    def write_events(self, events: EventSequence, path: Path) -> Path:
        path = Path(path)
        if _suffix(path) == ".json":
            payload = {"window_end": events.window_end, "times": list(events.times)}
            return _write_text(path, json.dumps(payload, indent=2) + "\n")
        body = pd.DataFrame({"time": events.array}).to_csv(index=False)
        return _write_text(path, f"{WINDOW_PREFIX} {events.window_end!r}\n{body}")

    def read_counts(self, path: Path, *, delta: float | None = None) -> BinnedCounts:
        """``delta`` turns a bare ``count`` column into bins ``[k delta, (k + 1) delta)``."""
        path = Path(path)
        try:
            if _suffix(path) == ".json":
                data = self._json(path)
                return BinnedCounts(BinSpec(tuple(data["edges"])), tuple(data["counts"]))
            frame = _read_frame(path)
            counts = _column(frame, "count", path)
            if {"lower", "upper"} <= set(frame.columns):
                lower = _column(frame, "lower", path)
                upper = _column(frame, "upper", path)
                if np.any(lower[1:] != upper[:-1]):
                    raise SequenceFormatError(f"{path} bins are not contiguous")
                spec = BinSpec((*lower, upper[-1])) if lower.size else None
            elif delta is not None:
                spec = BinSpec.uniform(delta, counts.size) if counts.size else None
            else:
                raise SequenceFormatError(
                    f"{path} needs 'lower' and 'upper' columns or an explicit bin width"
                )
            if spec is None:
                raise SequenceFormatError(f"{path} contains no bins")
            return BinnedCounts(spec, tuple(counts))
        except SequenceFormatError:
            raise
        except (HawkesAggError, KeyError, TypeError, ValueError) as exc:
            raise SequenceFormatError(f"Invalid count file {path}: {exc}") from exc

    def write_counts(self, counts: BinnedCounts, path: Path) -> Path:
        path = Path(path)
        if _suffix(path) == ".json":
            payload = {"edges": list(counts.spec.edges), "counts": list(counts.counts)}
            return _write_text(path, json.dumps(payload, indent=2) + "\n")
        frame = pd.DataFrame(
            {
                "lower": counts.spec.lower,
                "upper": counts.spec.upper,
                "count": np.asarray(counts.counts, dtype=int),
            }
        )
        return _write_text(path, frame.to_csv(index=False))

    @staticmethod
    def _json(path: Path) -> dict[str, Any]:
        try:
            data = json.loads(_read_text(path))
        except json.JSONDecodeError as exc:
            raise SequenceFormatError(f"{path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise SequenceFormatError(f"{path} must contain a JSON object")
        return data
