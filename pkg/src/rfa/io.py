"""Panel CSV ingestion, standardisation and result writers."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import InputError


def load_panel_csv(path):
    """Read a ``T x N`` panel from a CSV whose first row holds unit names.

    Trailing blank lines are ignored. Returns ``(y, names)``.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    while rows and all(not cell.strip() for cell in rows[-1]):
        rows.pop()
    if not rows:
        raise InputError(f"{path}: file is empty")
    names = [c.strip() for c in rows[0]]
    n = len(names)
    if n == 0 or any(not c for c in names):
        raise InputError(f"{path}: header row must name every column")
    data = np.empty((len(rows) - 1, n))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != n:
            raise InputError(f"{path}: row {r} has {len(row)} fields, expected {n}")
        for c, cell in enumerate(row, start=1):
            try:
                value = float(cell)
            except ValueError:
                raise InputError(f"{path}: row {r}, column {c}: {cell!r} is not a number") from None
            if not math.isfinite(value):
                raise InputError(f"{path}: row {r}, column {c}: {cell!r} is not finite")
            data[r - 2, c - 1] = value
    if data.shape[0] < 2:
        raise InputError(f"{path}: need at least 2 data rows, got {data.shape[0]}")
    return data, names


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_matrix_csv(path, matrix, header=None):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in matrix:
            w.writerow([fmt(v) for v in row])


def write_panel_csv(path, y, names=None):
    y = np.asarray(y, dtype=float)
    if names is None:
        names = unit_names(y.shape[1])
    write_matrix_csv(path, y, names)


def write_rows_csv(path, header, rows):
    """Write rows of mixed values; floats use 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else fmt(v) if isinstance(v, (float, np.floating)) else v
                        for v in row])


def unit_names(n: int) -> list[str]:
    return [f"u{i}" for i in range(1, n + 1)]


def standardize(y, names=None) -> np.ndarray:
    """Column-wise ``(x - mean) / sd`` with the ``T - 1`` denominator."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[0] < 2:
        raise InputError(f"need a 2-D panel with at least 2 rows, got shape {y.shape}")
    sd = y.std(axis=0, ddof=1)
    bad = np.flatnonzero(~(sd > 0))
    if bad.size:
        j = int(bad[0])
        label = names[j] if names is not None else f"column {j + 1}"
        raise InputError(f"{label} has zero variance and cannot be standardised")
    return (y - y.mean(axis=0)) / sd


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path, doc):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(doc), indent=2) + "\n")
