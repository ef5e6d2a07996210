"""Flat-file outputs: CSV tables with fixed columns and the JSON run report."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np
from pydantic import BaseModel, Field


def format_value(value: Any) -> str:
    """Floats with 17 significant digits; everything else through ``str``."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if math.isnan(number):
            return "nan"
        if math.isinf(number):
            return "inf" if number > 0 else "-inf"
        return format(number, ".17g")
    if value is None:
        return ""
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write ``rows`` under a fixed header; each row must match the columns."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} values for {len(columns)} columns")
            writer.writerow([format_value(v) for v in row])
    return path


def _plain(value: Any) -> Any:
    """JSON-safe form: complex numbers as ``[re, im]``, non-finite floats as strings."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return [_plain(float(value.real)), _plain(float(value.imag))]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return number if math.isfinite(number) else format_value(number)
    return value


class RunReport(BaseModel):
    """Deterministic record of a run; wall times live in ``timings.json``."""

    command: str
    config: Dict[str, Any]
    validation: Dict[str, Any] = Field(default_factory=dict)
    results: Dict[str, Any] = Field(default_factory=dict)
    certificates: Dict[str, Any] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    exit_code: int = 0
    error: str | None = None

    def to_json(self) -> str:
        return json.dumps(_plain(self.model_dump()), sort_keys=True, indent=2) + "\n"


def write_report(out_dir: Path, report: RunReport) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "report.json"
    path.write_text(report.to_json(), encoding="utf-8")
    return path


def write_timings(out_dir: Path, timings: Dict[str, float]) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "timings.json"
    path.write_text(json.dumps(timings, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path
