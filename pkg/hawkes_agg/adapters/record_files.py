"""Benchmark records and summaries as CSV and JSON files."""

from __future__ import annotations

from collections.abc import Sequence
import json
from pathlib import Path
from typing import Any

import pandas as pd

from ..errors import SummaryError
from ..experiment import RunRecord, parameter_sort_key
from ..summary import Summary


RECORDS_CSV = "records.csv"
RECORDS_JSON = "records.json"
SUMMARY_CSV = "summary.csv"
SUMMARY_JSON = "summary.json"
RECORD_COLUMNS = ("method", "delta", "replicate", "status", "wall_seconds", "message")


def _ensure_directory(output_dir: Path) -> Path:
    output_dir = Path(output_dir)
    if output_dir.exists() and not output_dir.is_dir():
        raise SummaryError(f"Output path is not a directory: {output_dir}")
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise SummaryError(f"Cannot create output directory {output_dir}: {exc}") from exc
    return output_dir


def _write(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise SummaryError(f"Cannot write {path}: {exc}") from exc
    return path


def _dump(payload: Any) -> str:
    return json.dumps(payload, indent=2, allow_nan=True) + "\n"


def records_frame(records: Sequence[RunRecord]) -> pd.DataFrame:
    names = sorted(
        {name for record in records for name, _ in record.estimates},
        key=parameter_sort_key,
    )
    columns = [
        *RECORD_COLUMNS,
        *(f"est_{name}" for name in names),
        *(f"bias_{name}" for name in names),
    ]
    return pd.DataFrame([record.to_row() for record in records], columns=columns)


class FilesystemRecordStore:
    def write_records(
        self,
        records: Sequence[RunRecord],
        output_dir: Path,
    ) -> tuple[Path, ...]:
        output_dir = _ensure_directory(output_dir)
        csv_path = _write(
            output_dir / RECORDS_CSV, records_frame(records).to_csv(index=False)
        )
        json_path = _write(
            output_dir / RECORDS_JSON,
            _dump([record.to_dict() for record in records]),
        )
        return csv_path, json_path

    def read_records(self, path: Path) -> tuple[RunRecord, ...]:
        path = Path(path)
        if path.is_dir():
            path = path / RECORDS_JSON
        try:
            if path.suffix.casefold() == ".json":
                data = json.loads(path.read_text(encoding="utf-8"))
                if not isinstance(data, list):
                    raise SummaryError(f"{path} must contain a JSON list of records")
                return tuple(RunRecord.from_dict(item) for item in data)
            frame = pd.read_csv(
                path,
                float_precision="round_trip",
                keep_default_na=False,
                na_values=[""],
            )
            return tuple(
                RunRecord.from_row(row) for row in frame.to_dict(orient="records")
            )
        except SummaryError:
            raise
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise SummaryError(f"Cannot read records from {path}: {exc}") from exc

    def write_summary(self, summary: Summary, output_dir: Path) -> tuple[Path, ...]:
        output_dir = _ensure_directory(output_dir)
        frame = summary.frame()
        frame["outliers"] = [
            ";".join(repr(value) for value in row.outliers) for row in summary.rows
        ]
        header = f"# quantiles: {summary.quantile_rule}\n"
        csv_path = _write(output_dir / SUMMARY_CSV, header + frame.to_csv(index=False))
        json_path = _write(output_dir / SUMMARY_JSON, _dump(summary.to_dict()))
        return csv_path, json_path
