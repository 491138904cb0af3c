"""Run-table CSV and summary JSON serialization.

Floats are written with 17 significant digits and '.' decimal separator so
identical runs produce byte-identical files on any locale.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

__all__ = ["RunResult", "CSV_COLUMNS", "write_runs_csv", "write_summary_json", "fmt_float"]

CSV_COLUMNS = (
    "run_id",
    "seed",
    "T",
    "variant",
    "sum_d",
    "sum_kappa",
    "c_t",
    "empirical_risk",
    "population_risk",
    "gap",
    "aux1",
    "aux2",
)


@dataclass(frozen=True)
class RunResult:
    run_id: str
    seed: int
    T: int
    variant: str
    sum_d: float
    sum_kappa: float
    c_t: float
    empirical_risk: float
    population_risk: float
    gap: float
    aux1: float = 0.0
    aux2: float = 0.0


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def write_runs_csv(path: str | Path, rows: Sequence[RunResult]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # rows sorted by run_id: aggregation order never leaks into the file
    ordered = sorted(rows, key=lambda r: r.run_id)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in ordered:
            writer.writerow(_cell(getattr(row, col)) for col in CSV_COLUMNS)


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_summary_json(path: str | Path, summary: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
        newline="\n",
    )
